import sys

from cuehoi.cli import main

sys.exit(main())
