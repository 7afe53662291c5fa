# Entry point for `python3 -m dnflow`

# Copyright (c) 2026 dnflow developers.
#
# This is free software released under the MIT License.  See `LICENSE`
# for details.


import sys

from .cli import main


sys.exit(main())
