"""Discrete measures on the real line.

A :class:`DiscreteMeasure` is a finite sum of weighted point masses
``sum_i w_i * delta_{y_i}``. With unit weights it is a finite population;
with weights ``1/pi_i`` it is the Horvitz-Thompson empirical measure of a
sample. Atoms are kept sorted by value together with prefix sums of the
weights and of weight*value, so the primitive functionals

* ``mass``        N(M)   = sum of weights
* ``total``       T(M)   = sum of weight*value
* ``head_count``  H_y(M) = mass of atoms with value <= y
* ``upper_total`` K_y(M) = weight*value summed over atoms with value >= y

are answered in O(log m) for scalar ``y`` and vectorize over arrays of
query points.
"""

from __future__ import annotations

from typing import Iterable, Optional

import numpy as np
import numpy.typing as npt

from .errors import DomainError

ArrayLike = npt.ArrayLike


class DiscreteMeasure:
    """Immutable weighted point masses, sorted by value.

    Parameters
    ----------
    values : array_like
        Atom locations. Need not be distinct; must be finite.
    weights : array_like, optional
        Atom masses, strictly positive. Defaults to unit weights.

    Raises
    ------
    DomainError
        On an empty measure, non-finite values, or non-positive weights.
    """

    __slots__ = ("_values", "_weights", "_cw", "_cwv")

    def __init__(self, values: ArrayLike, weights: Optional[ArrayLike] = None):
        values = np.asarray(values, dtype=np.float64).ravel()
        if weights is None:
            weights = np.ones_like(values)
        else:
            weights = np.asarray(weights, dtype=np.float64).ravel()
        if values.size == 0:
            raise DomainError("a measure needs at least one atom")
        if weights.shape != values.shape:
            raise DomainError(
                f"{values.size} values but {weights.size} weights"
            )
        if not np.all(np.isfinite(values)):
            raise DomainError("atom values must be finite")
        if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
            raise DomainError("atom weights must be finite and > 0")
        order = np.argsort(values, kind="stable")
        self._set(values[order], weights[order])

    def _set(self, values: np.ndarray, weights: np.ndarray) -> None:
        values.flags.writeable = False
        weights.flags.writeable = False
        self._values = values
        self._weights = weights
        cw = np.concatenate(([0.0], np.cumsum(weights)))
        cwv = np.concatenate(([0.0], np.cumsum(weights * values)))
        cw.flags.writeable = False
        cwv.flags.writeable = False
        self._cw = cw
        self._cwv = cwv

    @classmethod
    def _unchecked(cls, values: np.ndarray, weights: np.ndarray) -> "DiscreteMeasure":
        # values must already be sorted; weights may carry a signed perturbation atom
        obj = cls.__new__(cls)
        obj._set(values, weights)
        return obj

    @classmethod
    def from_pairs(cls, atoms: Iterable[tuple[float, float]]) -> "DiscreteMeasure":
        """Build from an iterable of ``(value, weight)`` pairs."""
        pairs = list(atoms)
        if not pairs:
            raise DomainError("a measure needs at least one atom")
        values, weights = zip(*pairs)
        return cls(values, weights)

    @property
    def values(self) -> np.ndarray:
        """Sorted atom values (read-only view)."""
        return self._values

    @property
    def weights(self) -> np.ndarray:
        """Atom weights aligned with :attr:`values` (read-only view)."""
        return self._weights

    def __len__(self) -> int:
        return self._values.size

    def __repr__(self) -> str:
        return (
            f"DiscreteMeasure(atoms={len(self)}, mass={self.mass():.6g}, "
            f"total={self.total():.6g})"
        )

    # -- primitive functionals ------------------------------------------

    def mass(self) -> float:
        return float(self._cw[-1])

    def total(self) -> float:
        return float(self._cwv[-1])

    def head_count(self, y):
        """Mass of atoms with value <= y (ties included)."""
        idx = np.searchsorted(self._values, y, side="right")
        return self._cw[idx] if np.ndim(y) else float(self._cw[idx])

    def upper_total(self, y):
        """Sum of weight*value over atoms with value >= y (ties included)."""
        # T - (strict lower total) keeps K exactly T below the support and 0 above it
        return self.total() - self.lower_total(y)

    def lower_total(self, y):
        """Sum of weight*value over atoms with value < y."""
        idx = np.searchsorted(self._values, y, side="left")
        return self._cwv[idx] if np.ndim(y) else float(self._cwv[idx])

    def mean(self) -> float:
        return self.total() / self.mass()

    def moment(self, r: float) -> float:
        """Mass-weighted mean of ``y**r``.

        Non-integer ``r`` requires every value to be strictly positive.
        """
        if r == 0:
            return 1.0
        if float(r) != int(r) and self._values[0] <= 0:
            raise DomainError(
                f"moment of non-integer order {r} needs positive values"
            )
        return float(np.dot(self._weights, self._values**r) / self.mass())

    # -- transformations -------------------------------------------------

    def add_mass(self, u: float, t: float) -> "DiscreteMeasure":
        """Return ``M + t * delta_u`` as a new measure.

        ``t`` may be negative (used by central-difference derivatives), in
        which case the new atom carries a negative weight. Only the total
        mass is required to stay positive.
        """
        u = float(u)
        t = float(t)
        if not np.isfinite(u) or not np.isfinite(t):
            raise DomainError("perturbation location and size must be finite")
        if t == 0.0:
            return self
        if self.mass() + t <= 0:
            raise DomainError(
                f"adding mass {t} at {u} leaves a nonpositive total mass"
            )
        pos = int(np.searchsorted(self._values, u, side="right"))
        values = np.insert(self._values, pos, u)
        weights = np.insert(self._weights, pos, t)
        return DiscreteMeasure._unchecked(values, weights)

    def scale_weights(self, c: float) -> "DiscreteMeasure":
        """Return ``c * M``."""
        if not c > 0:
            raise DomainError("weight scale must be > 0")
        return DiscreteMeasure._unchecked(self._values.copy(), self._weights * c)

    def scale_values(self, lam: float) -> "DiscreteMeasure":
        """Return the image measure under ``y -> lam * y``."""
        if not lam > 0:
            raise DomainError("value scale must be > 0")
        return DiscreteMeasure._unchecked(self._values * lam, self._weights.copy())


def mass(m: DiscreteMeasure) -> float:
    return m.mass()


def total(m: DiscreteMeasure) -> float:
    return m.total()


def head_count(m: DiscreteMeasure, y):
    return m.head_count(y)


def upper_total(m: DiscreteMeasure, y):
    return m.upper_total(y)


def moment(m: DiscreteMeasure, r: float) -> float:
    return m.moment(r)


def add_mass(m: DiscreteMeasure, u: float, t: float) -> DiscreteMeasure:
    return m.add_mass(u, t)
