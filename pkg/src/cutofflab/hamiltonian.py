"""Time-dependent Hamiltonian families and their cut-off compressions.

A family is a finite sum ``H(t) = sum_m c_m(t) * O_m`` of fixed Hermitian
operator terms ``O_m`` (named element providers of a spectral model) with
real scalar coefficient functions ``c_m``.  This banded form gives exact
matrix elements, exact word operators, and exact cut-off boundary behavior.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .spectral_model import (
    CutoffSpace,
    ElementProvider,
    EmptySpaceError,
    ModelMismatchError,
    ScaleVector,
    SpectralModel,
    project,
)

__all__ = [
    "COEFFICIENTS",
    "HamiltonianFamily",
    "CutoffHamiltonian",
    "FamilyError",
    "assemble_family",
    "cutoff_matrix",
    "operator_norm_bound",
    "apply_family",
    "word_apply",
]

PERIOD_GRID = 32       # sample points for the periodicity guard
PERIOD_TOL = 1e-12

# registry of named coefficient functions available to experiment configs
COEFFICIENTS: Dict[str, Callable[[float], float]] = {
    "const": lambda t: 1.0,
    "sin_2pi": lambda t: math.sin(2.0 * math.pi * t),
    "cos_2pi": lambda t: math.cos(2.0 * math.pi * t),
    "ramp": lambda t: t,
}


class FamilyError(ValueError):
    """Raised for invalid family definitions or applications."""


@dataclass(frozen=True)
class HamiltonianFamily:
    """``H(t) = sum_m c_m(t) O_m`` over a spectral model.

    ``terms`` pairs element-provider names with real coefficient callables.
    ``period`` (if set) declares time-periodicity, checked on a fixed grid.
    ``loss_order`` is the declared derivative loss of ``H(t)`` relative to
    the reference operator; it is metadata, not inferred.
    """

    model: SpectralModel
    terms: Tuple[Tuple[str, Callable[[float], float]], ...]
    period: Optional[float] = None
    loss_order: float = 0.0

    @property
    def max_width(self) -> int:
        return max(
            (self.model.provider(name).width for name, _ in self.terms), default=0
        )

    def coefficient_values(self, t: float) -> List[float]:
        return [float(c(t)) for _, c in self.terms]


class CutoffHamiltonian:
    """``H_N(t) = P_N H(t) P_N`` with the term matrices precomputed."""

    def __init__(self, family: HamiltonianFamily, space: CutoffSpace):
        if space.model is not family.model:
            raise ModelMismatchError("space and family use different models")
        if space.dim == 0:
            raise EmptySpaceError("cut-off Hamiltonian on the zero space")
        self.family = family
        self.space = space
        self.term_matrices = [
            _term_matrix(family.model.provider(name), space) for name, _ in family.terms
        ]

    def matrix_at(self, t: float) -> np.ndarray:
        coeffs = self.family.coefficient_values(t)
        H = np.zeros((self.space.dim, self.space.dim), dtype=complex)
        for c, T in zip(coeffs, self.term_matrices):
            if c != 0.0:
                H += c * T
        return H


def _term_matrix(prov: ElementProvider, space: CutoffSpace) -> np.ndarray:
    d = space.dim
    T = np.zeros((d, d), dtype=complex)
    for p, j in enumerate(space.indices):
        lo = max(0, p - prov.width)
        for q in range(lo, min(d, p + prov.width + 1)):
            T[p, q] = prov.elem(j, space.indices[q])
    defect = np.max(np.abs(T - T.conj().T)) if d else 0.0
    scale = max(np.max(np.abs(T)), 1.0)
    if defect > 1e-13 * scale:
        raise FamilyError(f"term matrix not Hermitian (defect {defect:.2e})")
    return T


def assemble_family(
    model: SpectralModel,
    terms: Sequence[Tuple[str, Callable[[float], float]]],
    period: Optional[float] = None,
    loss_order: float = 0.0,
) -> HamiltonianFamily:
    """Build a Hamiltonian family, resolving every term name in the model.

    If ``period`` is given, each coefficient is checked for periodicity on a
    32-point grid (cheap guard against configuration mistakes).
    """
    for name, c in terms:
        model.provider(name)  # raises KeyError on unresolved names
        if not callable(c):
            raise FamilyError(f"coefficient of term {name!r} is not callable")
    if period is not None:
        if period <= 0:
            raise FamilyError("period must be positive")
        for name, c in terms:
            for i in range(PERIOD_GRID):
                t = i / PERIOD_GRID
                if abs(c(t + period) - c(t)) > PERIOD_TOL * max(1.0, abs(c(t))):
                    raise FamilyError(
                        f"coefficient of term {name!r} is not {period}-periodic "
                        f"at t={t}"
                    )
    return HamiltonianFamily(model, tuple((n, c) for n, c in terms), period, loss_order)


def cutoff_matrix(family: HamiltonianFamily, space: CutoffSpace, t: float) -> np.ndarray:
    """Hermitian matrix of ``P_N H(t) P_N`` on the cut-off space."""
    return CutoffHamiltonian(family, space).matrix_at(t)


def operator_norm_bound(
    family: HamiltonianFamily, space: CutoffSpace, grid_points: int = 64
) -> float:
    """Max spectral norm of ``H_N`` over a uniform grid on one period.

    A lower estimate of ``sup_t ||H_N(t)||`` (grid maximum only).
    """
    if family.period is None:
        raise FamilyError("operator norm bound requires a periodic family")
    if grid_points < 2:
        raise ValueError("grid_points must be at least 2")
    hn = CutoffHamiltonian(family, space)
    best = 0.0
    for i in range(grid_points):
        t = family.period * i / grid_points
        w = np.linalg.eigvalsh(hn.matrix_at(t))
        best = max(best, float(np.max(np.abs(w))))
    return best


def apply_family(
    family: HamiltonianFamily,
    t: float,
    u: ScaleVector,
    band: Optional[int] = None,
) -> ScaleVector:
    """Apply ``H(t)`` exactly to a finitely supported vector.

    The output support widens by at most the coupling width of each term.
    ``band`` is a guard: it must dominate the maximal term width.
    """
    if u.model is not family.model:
        raise ModelMismatchError("vector belongs to a different model")
    if band is None:
        band = family.max_width
    if band < family.max_width:
        raise FamilyError(
            f"band {band} below the maximal term coupling width {family.max_width}"
        )
    out: Dict[int, complex] = {}
    coeffs = family.coefficient_values(t)
    for (name, _), c in zip(family.terms, coeffs):
        if c == 0.0:
            continue
        prov = family.model.provider(name)
        for j, uj in u.coefficients.items():
            for i in range(max(1, j - prov.width), j + prov.width + 1):
                v = prov.elem(i, j)
                if v != 0:
                    out[i] = out.get(i, 0) + c * v * uj
    return ScaleVector(family.model, out)


def word_apply(
    family: HamiltonianFamily,
    times: Sequence[float],
    u: ScaleVector,
    space: Optional[CutoffSpace] = None,
) -> ScaleVector:
    """Apply the word ``H(t_m) ... H(t_1)`` to ``u``.

    With ``space`` given, every factor is compressed by the projection:
    ``P_N H(t_m) P_N ... P_N H(t_1) P_N u``.  An empty word applies the
    projection alone (or nothing, without a space).
    """
    v = project(space, u) if space is not None else u
    for t in times:
        v = apply_family(family, t, v)
        if space is not None:
            v = project(space, v)
    return v
