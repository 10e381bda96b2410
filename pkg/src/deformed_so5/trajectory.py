"""Trajectory container shared by the L+(5) and the cotangent-bundle solvers."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DRIFT_FLOOR = 1e-12


def max_relative_drift(series, floor: float = DRIFT_FLOOR) -> float:
    """``max_t |v(t) - v(0)| / max(|v(0)|, floor)`` for a 1-d series."""
    v = np.asarray(series, dtype=float)
    if v.size == 0:
        return 0.0
    return float(np.abs(v - v[0]).max() / max(abs(v[0]), floor))


@dataclass
class Trajectory:
    """Time series of states plus conserved quantities.

    Attributes
    ----------
    times : ndarray, shape (n,)
        Strictly increasing output times.
    states : ndarray, shape (n, d)
        Raw state vectors: 10 L+(5) coordinates, or ``(q, p)`` for a
        cotangent trajectory.
    kind : {"lplus", "cotangent"}
    conserved : dict of str -> ndarray
        One series per monitored quantity, aligned with ``times``.
    drift : dict of str -> float
        Maximum relative deviation of each conserved series from its
        initial value (see :func:`max_relative_drift`).
    method : str
        ``"numeric"``, ``"closed-form"`` or ``"numeric-only"`` (closed form
        requested but not applicable).
    meta : dict
        Solver specific extras such as step counts or quadrature constants.
    """

    times: np.ndarray
    states: np.ndarray
    kind: str = "lplus"
    conserved: dict = field(default_factory=dict)
    drift: dict = field(default_factory=dict)
    method: str = "numeric"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if self.states.ndim != 2 or self.states.shape[0] != self.times.size:
            raise ValueError("states must have one row per time")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        for name, series in self.conserved.items():
            if len(series) != self.times.size:
                raise ValueError(f"conserved series {name!r} has the wrong length")
        if not self.drift and self.conserved:
            self.drift = {k: max_relative_drift(v) for k, v in self.conserved.items()}

    def __len__(self):
        return self.times.size

    def points(self):
        """States as :class:`LPlusPoint` or :class:`CotangentPoint` objects."""
        if self.kind == "lplus":
            from .algebra import LPlusPoint
            return [LPlusPoint.from_vector(s) for s in self.states]
        from .lift import CotangentPoint
        return [CotangentPoint(s[:5], s[5:]) for s in self.states]

    def conserved_sets(self):
        """Per-time dictionaries of the conserved quantities."""
        names = list(self.conserved)
        return [{n: float(self.conserved[n][i]) for n in names} for i in range(len(self))]
