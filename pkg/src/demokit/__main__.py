import sys

from demokit.cli import main

sys.exit(main())
