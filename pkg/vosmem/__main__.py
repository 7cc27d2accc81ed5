import sys

from vosmem.main import main

sys.exit(main())
