"""Second scan: high-mode sets, where node tears per period are dense."""
import time

import numpy as np

from scan_c3 import ratio_for

MODE_SETS = {
    "F": [9, 10, 11, 12, 13, 14, 15, 16],
    "G": [5, 7, 9, 11, 12, 14, 15, 16],
    "H": [3, 6, 8, 10, 12, 13, 15, 16],
    "I": [2, 4, 7, 9, 11, 13, 15, 16],
    "J": [1, 2, 3, 4, 5, 6, 7, 8],
}

for label, modes in MODE_SETS.items():
    for seed in range(1, 5):
        t0 = time.perf_counter()
        r, h0, n_up, worst = ratio_for(modes, seed)
        dt = time.perf_counter() - t0
        print(f"set {label} seed {seed}: ratio {r:.3f} H0 {h0:.3f} "
              f"ups {n_up} worst {worst:+.1%} ({dt:.0f}s)", flush=True)
