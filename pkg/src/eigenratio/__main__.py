import sys

from .verify_cli import main

sys.exit(main())
