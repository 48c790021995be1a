"""
eco-deflect: Optimal deflection of Earth-crossing objects.

This package computes continuous-thrust (laser ablation) control histories and
impulsive maneuvers that move an Earth-crossing object (ECO) off a collision
course onto a prescribed miss distance. Terminal conditions come from the
patched-conic model of the Earth encounter; the continuous problem is
transcribed by direct shooting and solved as a nonlinear program.
"""

__version__ = "0.1.0"
