import sys

from centrolab.main import main

sys.exit(main())
