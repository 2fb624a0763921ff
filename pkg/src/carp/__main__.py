import sys

from carp.cli import main

sys.exit(main())
