#!/usr/bin/env python3
"""
DESCENTLAB - MAIN
Entry point: python3 main.py <command> --spec <name> [options]
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from descentlab.cli import main


if __name__ == '__main__':
    sys.exit(main())
