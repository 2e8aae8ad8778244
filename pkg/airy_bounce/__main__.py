import sys

from airy_bounce.cli import main

sys.exit(main())
