import sys

from markovgof.cli import main

sys.exit(main())
