"""Geodesic flow on the quadric q.eta.q = const in closed form.

Compares the exponential-map solution with an RK integration and tracks the
quadric constraint. Run with ``python3 demos/geodesic_flow.py``.
"""
import numpy as np

from deformed_so5 import CotangentPoint, DeformationParams, geodesic_flow, momentum_I
from deformed_so5.lift_flow import geodesic_rhs
from deformed_so5.numeric import ToleranceSpec, ode_solve

tight = ToleranceSpec(rtol=1e-12, atol=1e-14)
q = np.array([0.5, 0.2, -0.3, 0.4, 0.1])
p = np.array([0.0, 0.3, 0.2, -0.1, 0.6])
p[0] = -(q[1:] @ p[1:]) / q[0]
pt = CotangentPoint(q, p)

for lam in (0.8, -0.8):
    params = DeformationParams(lam, 1.25, lam, 1.0, 0.3)
    d0 = momentum_I(pt, params)
    ref = ode_solve(lambda t, v: geodesic_rhs(v, params), pt.vector(), (0.0, 5.0), tight)
    print(f"\nlambda = {lam}: d1 = {d0.d1:.4f}, d2 = {d0.d2:.4f}, delta = {d0.delta:.4f}")
    print("   t     |closed - RK|   d1 drift   d3")
    for t in np.linspace(0.0, 5.0, 6):
        cur = geodesic_flow(pt, t, params)
        d = momentum_I(cur, params)
        gap = np.abs(cur.vector() - ref(t)).max()
        print(f"{t:5.2f}   {gap:.2e}      {abs(d.d1 - d0.d1):.1e}   {d.d3:+.1e}")
