"""``python -m portdim`` dispatches to the command-line interface."""

import sys

from .harness import main

sys.exit(main())
