"""
Splitting versus distance
=========================

The two levels split by an amount that falls geometrically with the
defect distance, so the Rabi period grows exponentially with it.
"""
import numpy as np

from defectchain import gap_scaling

for alpha in (3.0, 4.0, 5.0):
    fit = gap_scaling(alpha, range(1, 7))
    print(f"alpha={alpha}: ln E21 slope {fit.slope:.3f} per site, R^2 {fit.r2:.5f}")
    print("   periods:", [round(float(2 * np.pi / g), 1) for g in fit.gaps])
