import sys
from minent.cli import main
sys.exit(main())
