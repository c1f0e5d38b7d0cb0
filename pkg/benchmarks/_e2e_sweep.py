"""Offline calibration for the directional end-to-end experiment."""
import os
import sys
import tempfile
import time

from cycletrees.cli import main

CONFIGS = {
    "exp_vol": dict(ar="1.35,-0.42", vol_mode="exp", vol_slope="0.6",
                    vintage_count=37, j=40, min_leaf=15),
    "exp_fast_cycle": dict(ar="0.9,-0.5", vol_mode="exp", vol_slope="0.6",
                           vintage_count=37, j=40, min_leaf=15),
    "thr_more_vintages": dict(ar="1.35,-0.42", vol_mode="threshold",
                              vol_high="3.0", vintage_count=49, j=40,
                              min_leaf=15),
}


def run(name, spec):
    t0 = time.time()
    with tempfile.TemporaryDirectory() as tmp:
        sim = os.path.join(tmp, "sim")
        cfg = os.path.join(tmp, "sim.cfg")
        with open(cfg, "w") as fh:
            fh.write(f"""
n = 3
p = 2
periods = 260
n_targets = 10
vintage_count = {spec['vintage_count']}
seed = 2024
ar = {spec['ar']}
idio_sd = 0.2
trend_sd = 0.02
vol_mode = {spec.get('vol_mode', 'threshold')}
vol_slope = {spec.get('vol_slope', '0.5')}
vol_low = 1.0
vol_high = {spec.get('vol_high', '4.0')}
vol_threshold = 0.0
out = {sim}
""")
        assert main(["simulate", "--config", cfg]) == 0
        ev = os.path.join(tmp, "ev")
        evcfg = os.path.join(tmp, "ev.cfg")
        targets = ",".join(f"T{k+1}" for k in range(10))
        with open(evcfg, "w") as fh:
            fh.write(f"""
vintages = {sim}/vintages
targets = {targets}
p = 2
lambda = 0.05
alpha = 0.5
j = {spec['j']}
min_leaf = {spec['min_leaf']}
max_iter = 300
seed = 99
schemes = pair,jackknife
out = {ev}
""")
        assert main(["evaluate", "--config", evcfg]) == 0
        rows = open(os.path.join(ev, "report.csv")).read().splitlines()[1:]
        rel = {}
        for line in rows:
            tid, scheme, variant, v = line.split(",")
            rel[(tid, scheme, variant)] = float(v)
        print(f"--- {name} ({time.time()-t0:.0f}s)")
        for scheme in ("pair", "jackknife"):
            margins = [round(rel[(f"T{k+1}", scheme, "autoregressive")] -
                             rel[(f"T{k+1}", scheme, "augmented")], 3)
                       for k in range(10)]
            print(f"{scheme}: wins={sum(m > 0 for m in margins)} {margins}")
        sys.stdout.flush()


if __name__ == "__main__":
    for name in sys.argv[1:] or CONFIGS:
        run(name, CONFIGS[name])
