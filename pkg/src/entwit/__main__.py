import sys

from entwit.cli import main

sys.exit(main())
