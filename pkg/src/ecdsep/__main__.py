import sys

from ecdsep.harness.cli import main

sys.exit(main())
