import sys

from subdiffusion.cli import main

sys.exit(main())
