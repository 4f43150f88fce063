import sys

from cv2x_dcc.cli import main

sys.exit(main())
