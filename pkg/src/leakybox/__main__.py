import sys

from leakybox.cli import main

sys.exit(main())
