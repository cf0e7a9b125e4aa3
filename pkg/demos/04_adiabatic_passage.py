"""
Adiabatic passage
=================

Lower alpha1 while raising alpha2 and the ground state follows the
stronger field from l1 to l2.  The smallest gap sits at the crossing, and
the sweep must be slow on that scale.
"""
import numpy as np

from defectchain import ChainSpec, DefectConfig, make_schedule, propagate_time_dependent
from defectchain.green import find_bound_states

spec = ChainSpec(2.0, 201, "open")
deep = find_bound_states(DefectConfig(-2, 2, 5.0, 5.0))
print(f"Rabi half-period at alpha=5, d=4: {np.pi / (deep[1].energy - deep[0].energy):.1f}")

for shape in ("smoothstep", "linear"):
    for duration in (100, 400, 1600):
        res = propagate_time_dependent(spec, make_schedule(shape, duration=duration), dt=1.0,
                                       self_check=False)
        print(f"{shape:10s} T={duration:5d}  fidelity {res.fidelity:.4f}  "
              f"metric {res.max_adiabatic_param:.3f}  min gap {res.min_gap:.4f}")

fast = propagate_time_dependent(spec, make_schedule(duration=1600).compressed(100), dt=0.05,
                                self_check=False, metric_samples=None)
print(f"compressed x100: fidelity {fast.fidelity:.3f}")
