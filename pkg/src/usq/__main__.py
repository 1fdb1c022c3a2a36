import sys

from usq.cli import main

sys.exit(main())
