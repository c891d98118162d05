"""A small two-dimensional convergence study.

Run with ``python3 demos/02_convergence_2d.py [levels]``. Solves the singular
vortex problem with the MINI element for two values of ``p`` up to a modest
refinement level (default 4, a few seconds) and prints the experimental
orders of the modular pressure error next to the predicted rate. The full
study up to level 6 is the CLI preset ``demos/configs/mini_case1.ini``.
"""
import sys

from pnse.experiment import RunConfig, run
from pnse.analysis import theory_rate

levels = int(sys.argv[1]) if len(sys.argv) > 1 else 4

for case in (1, 2):
    cfg = RunConfig(dim=2, element="mini", case=case, p_list=[2.5, 3.5], max_level=levels)
    result = run(cfg, write=False)
    print(f"\nCase {case}: EOC of the modular pressure error")
    print("  i   " + "   ".join(f"p={r.p:<4g}" for r in result.runs))
    cols = [r.eoc("e_q_modular") for r in result.runs]
    for i in range(1, levels + 1):
        print(f"  {i}   " + "   ".join(f"{c[i]:.3f} " for c in cols))
    print("  th  " + "   ".join(f"{theory_rate(r.p, case):.3f} " for r in result.runs))
    iters = [lv.report.iterations for lv in result.runs[-1].levels]
    print(f"  Newton iterations per level for p={result.runs[-1].p:g}: {iters}")
