"""Tests for eco-deflect."""
