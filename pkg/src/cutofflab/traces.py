"""Cut-off traces, heat-regularized finite parts, zeta values, trace defects,
and the heat-regularized real-time amplitude.

For a reference operator with eigenvalues ``lambda_j`` and a bounded
operator ``A``, the cut-off trace at level N sums the retained diagonal,
and the heat-regularized trace is ``sum_j exp(-eps lambda_j) A_jj``.  The
finite part is the constant coefficient of a declared small-eps expansion
``sum_j a_j eps^{-beta_j} + a_log log(eps) + a_0``, extracted by linear
least squares on a decreasing eps grid; exponents are never inferred from
data.  Zeta values are continued by Euler-Maclaurin summation, restricted
to the linearly growing solvable track ``lambda_j = j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from .hamiltonian import HamiltonianFamily
from .propagator import cutoff_propagator
from .spectral_model import CutoffSpace, SpectralModel, cutoff_space

__all__ = [
    "BandedOperator",
    "PowerDiagonal",
    "TraceFit",
    "TailBoundError",
    "IllConditionedFitError",
    "UnsupportedZetaError",
    "TruncationBiasError",
    "cutoff_trace",
    "heat_trace",
    "fit_finite_part",
    "zeta_value",
    "trace_defect",
    "regularized_amplitude",
]

COND_LIMIT = 1e12

# Bernoulli numbers B_2, B_4, ... for the Euler-Maclaurin correction
_B2K = (1.0 / 6, -1.0 / 30, 1.0 / 42, -1.0 / 30, 5.0 / 66, -691.0 / 2730, 7.0 / 6)


class TailBoundError(RuntimeError):
    """The declared eigenvalue growth admits no geometric tail bound."""


class IllConditionedFitError(RuntimeError):
    """The finite-part design matrix is numerically rank-deficient."""


class UnsupportedZetaError(ValueError):
    """Zeta continuation requested outside the solvable track."""


class TruncationBiasError(RuntimeError):
    """The amplitude truncation bias exceeds its tolerance."""


@dataclass(frozen=True)
class BandedOperator:
    """A (not necessarily Hermitian) operator with banded matrix elements.

    ``elem(j, k)`` takes 1-based mode indices and vanishes when
    ``|j - k| > width``.
    """

    elem: Callable[[int, int], complex]
    width: int

    def compress(self, space: CutoffSpace) -> np.ndarray:
        d = space.dim
        M = np.zeros((d, d), dtype=complex)
        for p, j in enumerate(space.indices):
            for q in range(max(0, p - self.width), min(d, p + self.width + 1)):
                M[p, q] = self.elem(j, space.indices[q])
        return M


@dataclass(frozen=True)
class PowerDiagonal:
    """The diagonal operator ``A = diag(lambda_j ** -exponent)``."""

    exponent: float


@dataclass(frozen=True)
class TraceFit:
    """Fitted small-parameter expansion of a regularized trace."""

    grid: Tuple[float, ...]
    values: Tuple[complex, ...]
    betas: Tuple[float, ...]
    include_log: bool
    coefficients: Tuple[complex, ...]  # ordered as (a_beta..., [a_log], a_0)
    residual: float
    condition_number: float
    truncation_bias: Optional[float] = None

    @property
    def finite_part(self) -> complex:
        return self.coefficients[-1]

    @property
    def log_coefficient(self) -> Optional[complex]:
        return self.coefficients[-2] if self.include_log else None


def cutoff_trace(space: CutoffSpace, A: Union[np.ndarray, BandedOperator]) -> complex:
    """``Tr(P_N A P_N)``: the retained diagonal of ``A``."""
    if isinstance(A, BandedOperator):
        return complex(sum(A.elem(j, j) for j in space.indices))
    A = np.asarray(A)
    if A.shape != (space.dim, space.dim):
        raise ValueError("matrix shape does not match the cut-off space")
    return complex(np.trace(A))


def heat_trace(
    model: SpectralModel,
    eps: float,
    diag: Optional[Callable[[int], complex]] = None,
    diag_bound: Optional[float] = None,
    tail_tol: float = 1e-12,
    return_terms: bool = False,
):
    """``sum_j exp(-eps lambda_j) A_jj`` with a rigorous geometric tail bound.

    ``diag`` gives the diagonal of ``A`` (absent means the identity);
    ``diag_bound`` must dominate ``sup_k |A_kk|``.  Truncation stops once
    ``tail_mult * exp(-eps lambda_{J+1}) / (1 - exp(-eps gap)) * diag_bound``
    drops below ``tail_tol``; models without a declared at-least-linear
    growth gap are rejected.  With ``return_terms`` the truncation index is
    returned alongside the value.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if model.tail_gap is None or model.tail_gap <= 0:
        raise TailBoundError(
            "model declares no eigenvalue growth gap; geometric tail bound "
            "unreachable (sub-linear growth)"
        )
    if diag is None:
        diag = lambda j: 1.0
        diag_bound = 1.0
    if diag_bound is None:
        raise ValueError("diag_bound is required alongside a custom diagonal")
    if diag_bound == 0.0:
        return (0.0 + 0.0j, 0) if return_terms else 0.0 + 0.0j
    denom = -math.expm1(-eps * model.tail_gap)  # 1 - exp(-eps*gap) > 0
    total = 0.0 + 0.0j
    j = 1
    while True:
        lam_next = model.eigenvalue(j)
        tail = model.tail_mult * math.exp(-eps * lam_next) / denom * diag_bound
        if tail < tail_tol:
            break
        total += math.exp(-eps * lam_next) * complex(diag(j))
        j += 1
        if j > 10_000_000:
            raise TailBoundError("tail bound not reached within 1e7 terms")
    return (total, j - 1) if return_terms else total


def fit_finite_part(
    grid: Sequence[float],
    values: Sequence[complex],
    betas: Sequence[float],
    include_log: bool = False,
) -> TraceFit:
    """Least-squares fit of trace values against ``{eps^-beta, [log eps], 1}``.

    The exponent basis is declared by the caller, never inferred.  Requires
    at least ``len(basis) + 2`` grid points on a strictly decreasing grid.
    """
    grid = [float(e) for e in grid]
    if any(b <= 0 for b in betas):
        raise ValueError("declared exponents must be positive")
    if any(e2 >= e1 for e1, e2 in zip(grid[:-1], grid[1:])):
        raise ValueError("grid must be strictly decreasing")
    nbasis = len(betas) + (1 if include_log else 0) + 1
    if len(grid) < nbasis + 2:
        raise ValueError(f"need at least {nbasis + 2} grid points, got {len(grid)}")
    eps = np.array(grid)
    cols = [eps ** (-b) for b in betas]
    if include_log:
        cols.append(np.log(eps))
    cols.append(np.ones_like(eps))
    design = np.column_stack(cols)
    cond = float(np.linalg.cond(design))
    if cond > COND_LIMIT:
        raise IllConditionedFitError(
            f"design matrix condition number {cond:.3e} exceeds {COND_LIMIT:.0e}"
        )
    y = np.array([complex(v) for v in values])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    rms = float(np.sqrt(np.mean(np.abs(resid) ** 2)))
    return TraceFit(
        tuple(grid),
        tuple(complex(v) for v in y),
        tuple(float(b) for b in betas),
        include_log,
        tuple(complex(c) for c in coef),
        rms,
        cond,
    )


def _is_linear_track(model: SpectralModel, window: int = 32) -> bool:
    return all(model.eigenvalue(j) == float(j) for j in range(1, window + 1))


def _zeta_em(z: complex, n: int = 50, order: int = 4) -> complex:
    """Euler-Maclaurin value of ``sum_{j>=1} j^-z`` (continuation past Re z > 1)."""
    if order < 1 or order > len(_B2K):
        raise ValueError(f"order must be between 1 and {len(_B2K)}")
    if abs(z - 1.0) < 1e-12:
        raise ValueError("pole at z = 1")
    z = complex(z)
    s = sum(j ** (-z) for j in range(1, n))
    s += 0.5 * n ** (-z)
    s += n ** (1.0 - z) / (z - 1.0)
    for k in range(1, order + 1):
        poch = 1.0 + 0.0j
        for i in range(2 * k - 1):
            poch *= z + i
        s += _B2K[k - 1] / math.factorial(2 * k) * poch * n ** (-z - 2 * k + 1)
    return s


def zeta_value(
    model: SpectralModel,
    A: Union[None, PowerDiagonal, Callable[[int], complex]],
    z: complex,
    order: int = 4,
    tol: float = 1e-10,
) -> complex:
    """``Tr(A H0^-z)`` for diagonal ``A`` commuting with the reference operator.

    On the solvable track ``lambda_j = j`` with ``A = diag(lambda_j^-p)``
    (identity for ``A`` absent), the value is the Euler-Maclaurin
    continuation of the shifted series at ``z + p``, valid near ``z = 0``.
    A generic diagonal is summed directly with an integral tail bound and
    requires ``Re z > 1``; anything else is unsupported.
    """
    if not _is_linear_track(model):
        raise UnsupportedZetaError(
            "zeta continuation restricted to the lambda_j = j track"
        )
    if A is None:
        A = PowerDiagonal(0.0)
    if isinstance(A, PowerDiagonal):
        return _zeta_em(complex(z) + A.exponent, order=order)
    if not callable(A):
        raise UnsupportedZetaError("A must be absent, a PowerDiagonal, or a diagonal")
    x = complex(z).real
    if x <= 1.0:
        raise UnsupportedZetaError(
            "direct summation of a generic diagonal requires Re z > 1"
        )
    total = 0.0 + 0.0j
    j = 1
    bound = max(abs(complex(A(k))) for k in range(1, 17))
    while True:
        total += complex(A(j)) * j ** (-complex(z))
        # integral-test tail: sum_{k>j} k^-x <= j^(1-x)/(x-1)
        if bound * j ** (1.0 - x) / (x - 1.0) < tol:
            return total
        j += 1
        if j > 10_000_000:
            raise UnsupportedZetaError("series converges too slowly for Re z")


def trace_defect(
    space: CutoffSpace, A: BandedOperator, B: BandedOperator
) -> Tuple[complex, complex]:
    """Cut-off trace of ``[A, B]`` versus the trace of the cut-off commutator.

    The first value compresses the full-operator commutator (its products
    reach outside the cut-off window); the second is the trace of the
    commutator of the compressions, identically zero in exact arithmetic
    and reported for contrast.
    """
    first = 0.0 + 0.0j
    for j in space.indices:
        lo = max(1, j - A.width - B.width)
        hi = j + A.width + B.width
        for l in range(lo, hi + 1):
            first += A.elem(j, l) * B.elem(l, j) - B.elem(j, l) * A.elem(l, j)
    An = A.compress(space)
    Bn = B.compress(space)
    second = complex(np.trace(An @ Bn - Bn @ An))
    return first, second


def regularized_amplitude(
    family: HamiltonianFamily,
    model: SpectralModel,
    N_ref: float,
    t: float,
    eps_grid: Sequence[float],
    betas: Sequence[float],
    include_log: bool = False,
    tol: float = 1e-10,
    bias_rel_tol: float = 1e-3,
) -> TraceFit:
    """Heat-damped real-time amplitude ``sum_j exp(-eps lambda_j) U_jj``
    over the reference cut-off, fitted for its finite part.

    The truncation bias obeys ``|sum_{lambda_j > N_ref} exp(-eps lambda_j)
    U_jj| <= sum tail exp(-eps lambda_j)`` since the propagator diagonal is
    bounded by one; the bound at the smallest eps is recorded and must stay
    below ``bias_rel_tol`` times the leading value.
    """
    eps_grid = [float(e) for e in eps_grid]
    space = cutoff_space(model, N_ref)
    if t == 0.0:
        diag = np.ones(space.dim, dtype=complex)  # propagator diagonal at t = s
    else:
        U = cutoff_propagator(family, space, 0.0, t, tol)
        diag = np.diag(U.matrix)
    lam = space.eigvals
    values = [complex(np.sum(np.exp(-e * lam) * diag)) for e in eps_grid]
    eps_min = min(eps_grid)
    retained = float(np.sum(np.exp(-eps_min * lam)))
    bias = float(abs(heat_trace(model, eps_min) - retained))
    leading = abs(values[eps_grid.index(eps_min)])
    if leading > 0 and bias > bias_rel_tol * leading:
        raise TruncationBiasError(
            f"truncation bias {bias:.3e} exceeds {bias_rel_tol:.0e} of the "
            f"leading value {leading:.3e}; increase N_ref"
        )
    fit = fit_finite_part(eps_grid, values, betas, include_log)
    return TraceFit(
        fit.grid,
        fit.values,
        fit.betas,
        fit.include_log,
        fit.coefficients,
        fit.residual,
        fit.condition_number,
        truncation_bias=bias,
    )
