import sys

from wptopt.cli import main

sys.exit(main())
