"""
Relative energy under grid refinement
=====================================

Take one set of smooth data and resolve it on 16, 32 and 64 points per side.
The finer run plays the strong solution.  The relative energy of the coarser
run starts at the truncation error of the data and stays under the
Gronwall envelope; both shrink quickly as the grid is refined.
"""

from viscospec.integrator import IntegratorConfig, run
from viscospec.relative_energy import sup_norms, verify_uniqueness
from viscospec.scenarios import Scenario, make_initial

# kmax above the coarse bands: the coarse grids really do lose some data
sc = Scenario("smooth", "random_divfree", params={"seed": 3, "kmax": 21})
cfg = IntegratorConfig(4.5e-4, 0.5, adaptive=False)

runs = {n: run(make_initial(sc.with_(n=n)), cfg) for n in (16, 32, 64)}
print("sup norms of the n=64 data:", sup_norms(runs[64].states[0]))

for lo, hi in ((16, 32), (32, 64)):
    rep = verify_uniqueness(runs[lo], runs[hi], c=None)
    print(f"n={lo} vs {hi}: rel_energy(0)={rep.rel0:.3e}  sup={rep.sup_rel:.3e}  "
          f"fitted c={rep.c:.3g}  {'ok' if rep.passed else 'FAIL'}")

# with the default constant c = 1 the envelope is looser still
print("c = 1 passes:", verify_uniqueness(runs[32], runs[64]).passed)
