import sys

from eco_deflect.cli import main

sys.exit(main())
