import sys

from fractel.cli import main

sys.exit(main())
