import sys

from hconf.cli import main

sys.exit(main())
