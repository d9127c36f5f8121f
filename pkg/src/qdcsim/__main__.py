import sys

from qdcsim.cli import main

sys.exit(main())
