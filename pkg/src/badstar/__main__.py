import sys

from badstar.cli import main

sys.exit(main())
