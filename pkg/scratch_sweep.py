"""Scratch: sweep predictive-rule forms/gains against the paper targets."""
import sys
import time
from dataclasses import replace

from pplab import SimConfig, BatchSpec, StrategySet
from pplab.montecarlo import run_outcomes, aggregate

KAPPA = float(sys.argv[1]) if len(sys.argv) > 1 else 1.0
N = int(sys.argv[2]) if len(sys.argv) > 2 else 60
TICKS = int(sys.argv[3]) if len(sys.argv) > 3 else 3000


def sweep(name, strat):
    t0 = time.time()
    cfg = SimConfig(max_ticks=TICKS, strategies=strat)
    outs = run_outcomes(BatchSpec(config=cfg, n_runs=N, base_seed=11, parallelism=2))
    st = aggregate(outs)
    peak_sheep = max((max(t[1] for t in o.trajectory_summary) for o in outs))
    e3 = [o for o in outs if o.outcome.value == "E3"]
    at500 = None
    if e3:
        tot = [next((s + w for t, s, w in o.trajectory_summary if t == 500), None) for o in e3]
        tot = [x for x in tot if x is not None]
        at500 = round(sum(tot) / max(1, len(tot)))
    s3 = None if st.mean_final_sheep_e3 is None else round(st.mean_final_sheep_e3)
    w3 = None if st.mean_final_wolves_e3 is None else round(st.mean_final_wolves_e3)
    print(
        f"k={KAPPA:<4} {name:10s} E1={st.fraction_e1:.2f} E2={st.fraction_e2:.2f} "
        f"E3={st.fraction_e3:.2f}  E3means S={s3} W={w3} tot@500={at500} "
        f"peakS={peak_sheep}  {time.time()-t0:.0f}s"
    )


sweep("vi w-pred", StrategySet(wolves_predictive=True, predictive_scale=KAPPA))
sweep("vii s-pred", StrategySet(sheep_predictive=True, predictive_scale=KAPPA))
sweep("viii both", StrategySet(wolves_predictive=True, sheep_predictive=True, predictive_scale=KAPPA))
