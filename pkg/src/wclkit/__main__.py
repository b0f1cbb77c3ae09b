import sys

from wclkit.cli import main

sys.exit(main())
