import sys

from ngdep.cli import main

sys.exit(main())
