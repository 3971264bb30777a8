import sys
from figpipe.cli import main
sys.exit(main())
