"""Per-user transmit power and SINR for one draw of the default scenario."""

import sys
from pathlib import Path

import numpy as np

from cdmapc.experiments import PROFILE_HEADER, format_csv, run_power_profile
from cdmapc.model import SystemConfig, load_config

OUT = Path(__file__).resolve().parent.parent / "results"


def main(config=None):
    cfg, seed = load_config(config) if config else (SystemConfig(), 0)
    prof = run_power_profile(cfg, seed=seed or 0)
    OUT.mkdir(exist_ok=True)
    (OUT / "profile.csv").write_text(format_csv(PROFILE_HEADER, prof.rows()))
    print(f"{'algorithm':22s} {'receiver':8s} {'total W':>10s} {'saturated':>9s} "
          f"{'mean SINR (free)':>16s}")
    for r in prof.results:
        free = ~r.saturated
        print(f"{r.algorithm:22s} {r.receiver:8s} {r.transmit.sum():10.4e} "
              f"{r.saturated.sum():9d} {np.mean(r.sinr[free]):16.4f}")
    for f in prof.failures:
        print(f"failed: {f.algorithm}/{f.receiver}: {f.reason}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else None)
