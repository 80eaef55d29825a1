from convexft.cli import main
import sys

sys.exit(main())
