"""Orbit labels of cotangent points for the three real forms.

The point ``(q, p)`` spans a plane whose restricted metric decides the orbit.
Run with ``python3 demos/orbit_classification.py``.
"""
import numpy as np

from deformed_so5 import CotangentPoint, DeformationParams, orbit_report

rng = np.random.default_rng(0)
groups = {"so(5)": DeformationParams(1.0, 1.0), "so(1,4)": DeformationParams(-1.0, -1.0),
          "so(2,3)": DeformationParams(-1.0, 2.0)}

for name, params in groups.items():
    eta = np.array([params.alpha * params.lam, params.lam, 1.0, 1.0, 1.0])
    counts = {}
    for _ in range(2000):
        pt = CotangentPoint(rng.normal(size=5), rng.normal(size=5))
        label = orbit_report(pt, params)["orbit_label"]
        counts[label] = counts.get(label, 0) + 1
    print(f"\n{name}: eta = {eta}")
    for label, n in sorted(counts.items()):
        print(f"  {label:<16} {n:5d}")

# a null plane only exists when the metric has two negative directions
params = groups["so(2,3)"]
u = np.array([1 / np.sqrt(2), 0, 1, 0, 0])
v = np.array([0, 1, 0, 1, 0])
eta = np.array([params.alpha * params.lam, params.lam, 1.0, 1.0, 1.0])
rep = orbit_report(CotangentPoint(u, eta * v), params)
print(f"\nnull plane in so(2,3): {rep['orbit_label']} (anti de Sitter only: {rep['anti_de_sitter_only']})")
