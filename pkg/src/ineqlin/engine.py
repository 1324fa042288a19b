"""Functionals of the form ``phi( integral psi_y(L_y(M)) dM(y) )``.

A :class:`ComposedFunctional` bundles

* ``components``: functionals ``L_{j,y}(M)``, possibly indexed by the
  integration variable ``y``, each with its own influence function;
* ``psi``: the integrand family ``psi_y(l)`` together with its gradient in
  ``l``;
* ``outer``: a smooth real map ``phi`` applied to the integral.

Its influence function is assembled from those pieces without any
numerical differentiation::

    IF(u; M) = phi'(F) * [ psi_u(L_u(M))
                           + sum_atoms w_y * grad psi_y(L_y(M)) . IF_{L_y}(u; M) ]

where ``F`` is the integral. Because the measure is discrete, the integral
is an exact weighted sum over atoms. :func:`gateaux_numeric` provides an
independent check by differencing ``F(M + t delta_u)`` directly.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .measure import DiscreteMeasure


@dataclass(frozen=True)
class ComponentFunctional:
    """One component ``L_{j,y}`` of the inner vector.

    ``eval(M, y)`` and ``influence(u, M, y)`` must accept an array ``y`` and
    return an array of the same shape.
    """

    label: str
    eval: Callable[[DiscreteMeasure, np.ndarray], np.ndarray]
    influence: Callable[[float, DiscreteMeasure, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class IntegrandFamily:
    """``psi_y(l)`` and its gradient with respect to ``l``.

    ``l`` is passed as an array of shape ``(k, m)`` aligned with ``y`` of
    shape ``(m,)``; ``eval`` returns shape ``(m,)`` and ``gradient`` returns
    shape ``(k, m)``.
    """

    eval: Callable[[np.ndarray, np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class OuterMap:
    eval: Callable[[float], float]
    derivative: Callable[[float], float]
    label: str = "phi"


IDENTITY = OuterMap(eval=lambda f: f, derivative=lambda f: 1.0, label="identity")


@dataclass(frozen=True)
class ComposedFunctional:
    """A functional ``phi(F(M))`` with ``F(M) = sum_y w_y psi_y(L_y(M))``.

    ``homogeneity_degree`` is the declared degree ``alpha`` of the full map
    ``phi o F`` under ``M -> cM``; it is metadata, checked by
    :func:`euler_residual`, never inferred.
    """

    components: tuple[ComponentFunctional, ...]
    psi: IntegrandFamily
    outer: OuterMap = IDENTITY
    homogeneity_degree: float = 0.0
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))

    @property
    def k(self) -> int:
        return len(self.components)

    def with_outer(self, outer: OuterMap) -> "ComposedFunctional":
        return dataclasses.replace(self, outer=outer)


# -- the four primitive components ------------------------------------------

def _mass_eval(m, y):
    return np.full(np.shape(y), m.mass())


def _total_eval(m, y):
    return np.full(np.shape(y), m.total())


MASS = ComponentFunctional(
    label="N",
    eval=_mass_eval,
    influence=lambda u, m, y: np.ones(np.shape(y)),
)

TOTAL = ComponentFunctional(
    label="T",
    eval=_total_eval,
    influence=lambda u, m, y: np.full(np.shape(y), float(u)),
)

# H_y: a unit mass at u is counted at y iff u <= y
HEAD_COUNT = ComponentFunctional(
    label="H",
    eval=lambda m, y: m.head_count(np.asarray(y, dtype=float)),
    influence=lambda u, m, y: (u <= np.asarray(y)).astype(float),
)

# K_y: a unit mass at u adds u to the upper total at y iff u >= y
UPPER_TOTAL = ComponentFunctional(
    label="K",
    eval=lambda m, y: m.upper_total(np.asarray(y, dtype=float)),
    influence=lambda u, m, y: np.where(u >= np.asarray(y), float(u), 0.0),
)


# -- operations -----------------------------------------------------------------

def _components_at(c: ComposedFunctional, m: DiscreteMeasure, y: np.ndarray) -> np.ndarray:
    if not c.components:
        return np.zeros((0, np.size(y)))
    return np.stack([comp.eval(m, y) for comp in c.components])


def inner_value(c: ComposedFunctional, m: DiscreteMeasure) -> float:
    """The integral ``F(M)`` before the outer map is applied."""
    y = m.values
    return float(np.dot(m.weights, c.psi.eval(y, _components_at(c, m, y))))


def evaluate(c: ComposedFunctional, m: DiscreteMeasure) -> float:
    return float(c.outer.eval(inner_value(c, m)))


def influence(c: ComposedFunctional, u: float, m: DiscreteMeasure) -> float:
    """Influence function of ``c`` at ``u``, assembled term by term."""
    u = float(u)
    y = m.values
    f = inner_value(c, m)

    uu = np.array([u])
    own = float(c.psi.eval(uu, _components_at(c, m, uu))[0])

    grad = c.psi.gradient(y, _components_at(c, m, y))
    if c.components:
        if_l = np.stack([comp.influence(u, m, y) for comp in c.components])
    else:
        if_l = np.zeros((0, y.size))
    if grad.shape != if_l.shape:
        raise ValueError(
            f"gradient shape {grad.shape} does not match {c.k} components"
        )
    spread = float(np.dot(m.weights, np.sum(grad * if_l, axis=0)))
    return float(c.outer.derivative(f)) * (own + spread)


def gateaux_numeric(
    c: ComposedFunctional,
    u: float,
    m: DiscreteMeasure,
    t: float | None = None,
    richardson: bool = True,
) -> float:
    """Central difference quotient of ``t -> evaluate(c, M + t delta_u)``.

    With ``richardson`` the estimates at steps ``t`` and ``t/2`` are
    combined as ``(4 D(t/2) - D(t)) / 3``. The default step is
    ``1e-5 * mass(M)``.
    """
    if t is None:
        t = 1e-5 * m.mass()
    if t == 0:
        raise ValueError("step must be nonzero")

    def quotient(h: float) -> float:
        up = evaluate(c, m.add_mass(u, h))
        down = evaluate(c, m.add_mass(u, -h))
        return (up - down) / (2.0 * h)

    d = quotient(t)
    if not richardson:
        return d
    return (4.0 * quotient(t / 2.0) - d) / 3.0


def euler_residual(c: ComposedFunctional, m: DiscreteMeasure) -> float:
    """``sum_atoms w * IF(value) - alpha * value`` for the declared degree alpha."""
    acc = sum(w * influence(c, v, m) for v, w in zip(m.values, m.weights))
    return float(acc - c.homogeneity_degree * evaluate(c, m))


def linear_functional(
    integrand: Callable[[np.ndarray], np.ndarray],
    label: str = "",
    homogeneity_degree: float = 1.0,
) -> ComposedFunctional:
    """``integral g(y) dM(y)`` as a composition with no inner components."""

    def psi(y, l):
        return np.asarray(integrand(y), dtype=float) * np.ones(np.shape(y))

    def grad(y, l):
        return np.zeros((0, np.size(y)))

    return ComposedFunctional(
        components=(),
        psi=IntegrandFamily(eval=psi, gradient=grad),
        homogeneity_degree=homogeneity_degree,
        label=label,
    )


def finite_difference_gradient(
    psi: IntegrandFamily, y: np.ndarray, l: np.ndarray, rel_step: float = 1e-6
) -> np.ndarray:
    """Central-difference gradient of ``psi.eval`` in ``l``; shape ``(k, m)``."""
    l = np.asarray(l, dtype=float)
    out = np.empty_like(l)
    for j in range(l.shape[0]):
        h = rel_step * np.maximum(np.abs(l[j]), 1.0)
        up = l.copy()
        down = l.copy()
        up[j] += h
        down[j] -= h
        out[j] = (psi.eval(y, up) - psi.eval(y, down)) / (2.0 * h)
    return out


def component_gateaux(
    comp: ComponentFunctional,
    u: float,
    m: DiscreteMeasure,
    y: np.ndarray,
    t: float = 1e-6,
) -> np.ndarray:
    """Central difference of ``L_{j,y}`` in direction ``delta_u``."""
    up = comp.eval(m.add_mass(u, t), y)
    down = comp.eval(m.add_mass(u, -t), y)
    return (up - down) / (2.0 * t)

