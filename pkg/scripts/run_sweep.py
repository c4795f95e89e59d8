"""Average utility, power and SINR versus K (the Monte Carlo sweep).

    python3 scripts/run_sweep.py [trials] [workers]

Each trial costs about 0.3 s summed over the five K values on one core, so 1000
trials take several minutes.
"""

import sys
import time
from pathlib import Path

from cdmapc.experiments import SWEEP_HEADER, format_csv, run_sweep, sweep_rows
from cdmapc.model import SystemConfig

OUT = Path(__file__).resolve().parent.parent / "results"


def main(trials=100, workers=1):
    t0 = time.perf_counter()
    res = run_sweep(SystemConfig(), [16, 32, 64, 96, 128], trials=trials, seed=0,
                    workers=workers)
    OUT.mkdir(exist_ok=True)
    (OUT / "sweep.csv").write_text(format_csv(SWEEP_HEADER, sweep_rows(res)))
    for r in res.rows:
        print(f"K={r['k']:3d} {r['algorithm']:22s} {r['receiver']:6s} "
              f"U={r['avg_utility']:10.4g} P={r['avg_power_w']:.4e} "
              f"SINR={r['avg_sinr']:.3f} n={r['trials']}")
    print(f"{len(res.failures)} failed runs, {time.perf_counter() - t0:.0f} s")


if __name__ == "__main__":
    args = [int(a) for a in sys.argv[1:3]]
    main(*args)
