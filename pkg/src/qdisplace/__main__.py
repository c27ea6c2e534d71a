import sys

from qdisplace.cli import main

sys.exit(main())
