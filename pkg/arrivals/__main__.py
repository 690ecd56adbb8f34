import sys

from arrivals.cli import main

sys.exit(main())
