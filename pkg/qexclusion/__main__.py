import sys

from qexclusion.main import main

sys.exit(main())
