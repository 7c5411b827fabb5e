"""Allow running as: python -m qlstm_multimic"""
import sys

from qlstm_multimic.cli import main

sys.exit(main())
