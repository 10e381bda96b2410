"""Quadrature solution of the L+(5) system against direct integration.

Run with ``python3 demos/closed_form_vs_numeric.py``.
"""
import numpy as np

from deformed_so5 import DeformationParams, LPlusPoint, integrate, solve_closed_form
from deformed_so5.numeric import ToleranceSpec

params = DeformationParams(lam=1.3, alpha=0.7, epsilon=0.4, gamma=0.8, nu=1.1)
times = np.linspace(0.0, 5.0, 11)
tight = ToleranceSpec(rtol=1e-12, atol=1e-14)

for label, a in (("a != 0", 0.6), ("a = 0", 0.0)):
    pt = LPlusPoint(a, [0.3, -0.8, 0.5], [1.1, 0.2, -0.4], [0.2, 0.9, -0.7])
    closed = solve_closed_form(pt, params, times)
    numeric = integrate(pt, (times[0], times[-1]), params, tol=tight, t_eval=times)
    gap = np.abs(closed.states - numeric.states).max(axis=1)
    print(f"\n{label}: method={closed.method}")
    print("   t     max |closed - numeric|")
    for t, g in zip(times, gap):
        print(f"{t:5.2f}   {g:.2e}")
    print("relative drift of the conserved quantities:")
    for name, value in sorted(closed.drift.items()):
        print(f"  {name:>3}: {value:.1e}")
