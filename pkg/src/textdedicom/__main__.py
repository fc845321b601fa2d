import sys

from textdedicom.cli import main

sys.exit(main())
