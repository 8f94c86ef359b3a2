#!/usr/bin/env python3
"""Time the compiled kernels against the pure-Python twins.

Both backends must produce byte-identical reports; this script asserts
that before printing the speedup, so it doubles as an end-to-end
consistency check on a real workload.

Usage: python benchmarks/compare_backends.py [--config PATH] [--repeat N]
"""

import argparse
import json
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from nfslicer.sim import backend as backend_mod          # noqa: E402
from nfslicer.sim.config import SimConfig, load_config   # noqa: E402
from nfslicer.sim.runner import run                      # noqa: E402

DEFAULT_CONFIG = Path(__file__).resolve().parent.parent / "configs" \
    / "l2fwd_sliced_4mpps.toml"


def default_config():
    if DEFAULT_CONFIG.exists():
        return load_config(str(DEFAULT_CONFIG))
    cfg = SimConfig()
    cfg.sim.duration_s = 0.05
    cfg.slicing.mode = "full"
    return cfg.validate()


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="TOML config to benchmark")
    parser.add_argument("--repeat", type=int, default=3,
                        help="timed repetitions per backend (best wins)")
    args = parser.parse_args(argv)

    cfg = load_config(args.config) if args.config else default_config()
    names = backend_mod.available_backends()
    if "compiled" not in names:
        print("compiled backend not built; run pip install -e . first",
              file=sys.stderr)

    n_packets = int(round((cfg.load.rate_pps
                           + cfg.measuring.rate_pps * cfg.measuring.enabled)
                          * cfg.sim.duration_s))
    print(f"workload: {n_packets} packets over {cfg.sim.duration_s}s "
          f"simulated, slicing mode {cfg.slicing.mode!r}")

    results = {}
    reports = {}
    for name in names:
        kern = backend_mod.kernels(name)
        run(cfg, kernels=kern)  # warm up caches and JIT-free import paths
        best = min(
            _timed(cfg, kern, reports, name) for _ in range(args.repeat))
        results[name] = best
        rate = n_packets / best / 1e6
        print(f"{name:>9}: {best * 1e3:8.1f} ms  ({rate:6.2f} Mpkt/s)")

    if len(reports) == 2:
        a, b = (json.dumps(reports[n].to_dict(), sort_keys=True)
                for n in names)
        assert a == b, "backends disagree; kernel twin drifted"
        print("reports: byte-identical across backends")
        print(f"speedup: {results['python'] / results['compiled']:.1f}x")
    return 0


def _timed(cfg, kern, reports, name) -> float:
    start = time.perf_counter()
    reports[name] = run(cfg, kernels=kern)
    return time.perf_counter() - start


if __name__ == "__main__":
    sys.exit(main())
