#!/usr/bin/env python3
"""
Sequential episodic memory experiments.

Thin wrapper around the seqmem command line, usable from a source checkout:

    python run_gsemm.py simulate --config configs/lisem7.cfg --out traj.csv
    python run_gsemm.py capacity --variant dsem --k 3..10 --trials 100 --seed 7
    python run_gsemm.py learn --config configs/learn4.cfg --out synapses.mat --snapshots snaps/
"""

import sys
from pathlib import Path

# Add the project root to Python path
sys.path.insert(0, str(Path(__file__).parent))

from seqmem.cli import main  # noqa: E402

if __name__ == "__main__":
    main()
