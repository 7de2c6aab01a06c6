from __future__ import annotations

import sys

from specflow.experiment_cli import main


sys.exit(main())
