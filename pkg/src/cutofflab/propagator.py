"""Time-sliced cut-off propagators and convergence/stability diagnostics.

The product-formula propagator multiplies left-endpoint exponentials
``exp(-i dt_j H_N(t_j))`` right-to-left in increasing time.  The converged
propagator ``U_N(t, s)`` is obtained by dyadic mesh refinement; the internal
refinement stepper defaults to a fourth-order commutator-free scheme, whose
limit is the same operator (stepper choice affects only the cost of reaching
a given tolerance, not the limit).  The exact flow is operationalized as a
large-cut-off reference solution with a doubling self-check.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ._quad import composite_gl_nodes, loglog_fit
from .hamiltonian import CutoffHamiltonian, HamiltonianFamily, apply_family
from .spectral_model import (
    CutoffSpace,
    ScaleVector,
    SpectralModel,
    cutoff_space,
    project,
    scale_weights,
)

__all__ = [
    "Partition",
    "PropagatorMatrix",
    "SlicingFit",
    "UnitarityError",
    "RefinementLimitError",
    "SupportError",
    "OracleSelfCheckError",
    "expm_step",
    "time_sliced_propagator",
    "cutoff_propagator",
    "reference_solution",
    "reference_with_self_check",
    "duhamel_bound",
    "commutator_constant",
    "energy_stability_check",
    "convergence_sweep_N",
    "slicing_order_sweep",
]

UNITARITY_TOL = 1e-10
REFINE_LIMIT = 2**20

_SQ3 = np.sqrt(3.0)
_CF4_C1 = 0.5 - _SQ3 / 6.0
_CF4_C2 = 0.5 + _SQ3 / 6.0
_CF4_A1 = 0.25 + _SQ3 / 6.0
_CF4_A2 = 0.25 - _SQ3 / 6.0


class UnitarityError(RuntimeError):
    """A computed propagator failed the unitarity defect bound."""


class RefinementLimitError(RuntimeError):
    """Mesh refinement exceeded the slice limit without converging."""


class SupportError(ValueError):
    """Initial datum supported too close to the reference cut-off."""


class OracleSelfCheckError(RuntimeError):
    """Doubling the reference cut-off moved the oracle by more than allowed."""


@dataclass(frozen=True)
class Partition:
    """Strictly increasing time nodes ``s = t_0 < ... < t_M = t``."""

    nodes: Tuple[float, ...]

    def __post_init__(self):
        if len(self.nodes) < 2:
            raise ValueError("a partition needs at least two nodes")
        diffs = np.diff(self.nodes)
        if np.any(diffs <= 0):
            raise ValueError("partition nodes must be strictly increasing")

    @classmethod
    def uniform(cls, s: float, t: float, M: int) -> "Partition":
        if M < 1:
            raise ValueError("M must be at least 1")
        return cls(tuple(np.linspace(s, t, M + 1)))

    @property
    def M(self) -> int:
        return len(self.nodes) - 1

    @property
    def mesh(self) -> float:
        return float(np.max(np.diff(self.nodes)))


@dataclass(frozen=True)
class PropagatorMatrix:
    """Unitary propagator on a cut-off space with provenance metadata."""

    matrix: np.ndarray
    space: CutoffSpace
    interval: Tuple[float, float]
    method: str  # "sliced(M)" or "reference"
    unitarity_defect: float
    steps: Optional[int] = None

    def __post_init__(self):
        if self.unitarity_defect > UNITARITY_TOL:
            raise UnitarityError(
                f"unitarity defect {self.unitarity_defect:.3e} exceeds "
                f"{UNITARITY_TOL:.0e}"
            )

    def apply(self, u: ScaleVector) -> ScaleVector:
        """Apply to the projection of ``u`` onto the space."""
        v = self.space.to_dense(u)
        return self.space.from_dense(self.matrix @ v)


def _unitarity_defect(U: np.ndarray) -> float:
    d = U.shape[0]
    return float(np.linalg.norm(U.conj().T @ U - np.eye(d), 2))


def expm_step(H: np.ndarray, dt: float) -> np.ndarray:
    """``exp(-i dt H)`` for Hermitian ``H`` via eigendecomposition.

    Exactly unitary up to eigensolver rounding, which the unitarity
    invariants downstream rely on.
    """
    H = np.asarray(H, dtype=complex)
    scale = max(float(np.max(np.abs(H))), 1.0) if H.size else 1.0
    defect = float(np.max(np.abs(H - H.conj().T))) if H.size else 0.0
    if defect > 1e-12 * scale:
        raise ValueError(f"matrix not Hermitian (defect {defect:.3e})")
    if dt == 0.0:
        return np.eye(H.shape[0], dtype=complex)
    lam, V = np.linalg.eigh(H)
    return (V * np.exp(-1j * dt * lam)) @ V.conj().T


def _leftpoint_product(hn: CutoffHamiltonian, nodes: Sequence[float]) -> np.ndarray:
    U = np.eye(hn.space.dim, dtype=complex)
    for j in range(len(nodes) - 1):
        dt = nodes[j + 1] - nodes[j]
        U = expm_step(hn.matrix_at(nodes[j]), dt) @ U
    return U


def _cf4_step(hn: CutoffHamiltonian, t: float, h: float) -> np.ndarray:
    H1 = hn.matrix_at(t + _CF4_C1 * h)
    H2 = hn.matrix_at(t + _CF4_C2 * h)
    right = expm_step(_CF4_A1 * H1 + _CF4_A2 * H2, h)
    left = expm_step(_CF4_A2 * H1 + _CF4_A1 * H2, h)
    return left @ right


def _cf4_product(hn: CutoffHamiltonian, s: float, t: float, M: int) -> np.ndarray:
    U = np.eye(hn.space.dim, dtype=complex)
    h = (t - s) / M
    for j in range(M):
        U = _cf4_step(hn, s + j * h, h) @ U
    return U


def time_sliced_propagator(
    family: HamiltonianFamily, space: CutoffSpace, partition: Partition
) -> PropagatorMatrix:
    """Ordered product of left-endpoint exponentials over the partition."""
    hn = CutoffHamiltonian(family, space)
    U = _leftpoint_product(hn, partition.nodes)
    return PropagatorMatrix(
        U,
        space,
        (partition.nodes[0], partition.nodes[-1]),
        f"sliced({partition.M})",
        _unitarity_defect(U),
        steps=partition.M,
    )


def cutoff_propagator(
    family: HamiltonianFamily,
    space: CutoffSpace,
    s: float,
    t: float,
    tol: float = 1e-10,
    stepper: str = "cf4",
    m0: int = 16,
) -> PropagatorMatrix:
    """Converged propagator ``U_N(t, s)`` by dyadic mesh refinement.

    Uniform meshes are refined ``M -> 2M`` until successive products differ
    by less than ``tol`` in spectral norm; the final ``M`` is recorded in
    ``steps``.  Raises ``RefinementLimitError`` beyond ``2**20`` slices.
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    if t == s:
        return PropagatorMatrix(
            np.eye(space.dim, dtype=complex), space, (s, t), "reference", 0.0, steps=0
        )
    reverse = t < s
    if reverse:
        s, t = t, s
    hn = CutoffHamiltonian(family, space)
    if stepper == "cf4":
        advance = lambda M: _cf4_product(hn, s, t, M)
    elif stepper == "leftpoint":
        advance = lambda M: _leftpoint_product(hn, np.linspace(s, t, M + 1))
    else:
        raise ValueError(f"unknown stepper {stepper!r}")
    M = m0
    U_prev = advance(M)
    while True:
        M *= 2
        if M > REFINE_LIMIT:
            raise RefinementLimitError(
                f"no convergence at tol {tol:.1e} within {REFINE_LIMIT} slices"
            )
        U = advance(M)
        if np.linalg.norm(U - U_prev, 2) < tol:
            break
        U_prev = U
    if reverse:
        U = U.conj().T
        s, t = t, s
    return PropagatorMatrix(
        U, space, (s, t), "reference", _unitarity_defect(U), steps=M
    )


def reference_solution(
    family: HamiltonianFamily,
    N_ref: float,
    s: float,
    t: float,
    u: ScaleVector,
    tol: float = 1e-10,
    self_check: bool = False,
) -> ScaleVector:
    """Large-cut-off stand-in for the exact flow: ``U_{N_ref}(t,s) P_{N_ref} u``.

    The initial datum must sit well inside the cut-off (max retained
    eigenvalue at most ``N_ref / 4``).  With ``self_check`` the cut-off is
    doubled and the two results must agree within ``10 * tol``.
    """
    if u.max_eigenvalue() > N_ref / 4.0:
        raise SupportError(
            f"support reaches eigenvalue {u.max_eigenvalue():g} > N_ref/4 = "
            f"{N_ref / 4.0:g}"
        )
    space = cutoff_space(family.model, N_ref)
    U = cutoff_propagator(family, space, s, t, tol)
    result = U.apply(u)
    if self_check:
        _, delta = reference_with_self_check(family, N_ref, s, t, u, tol, _base=result)
        if delta > 10.0 * tol:
            raise OracleSelfCheckError(
                f"doubling N_ref moved the oracle by {delta:.3e} > 10*tol"
            )
    return result


def reference_with_self_check(
    family: HamiltonianFamily,
    N_ref: float,
    s: float,
    t: float,
    u: ScaleVector,
    tol: float = 1e-10,
    _base: Optional[ScaleVector] = None,
) -> Tuple[ScaleVector, float]:
    """Reference solution together with the N_ref-doubling delta."""
    base = _base if _base is not None else reference_solution(family, N_ref, s, t, u, tol)
    space2 = cutoff_space(family.model, 2.0 * N_ref)
    U2 = cutoff_propagator(family, space2, s, t, tol)
    doubled = U2.apply(u)
    delta = doubled.sub(base).norm()
    return base, delta


def _integrand_tail_h_norm(
    family: HamiltonianFamily, N: float, tau: float, u_ref: ScaleVector
) -> float:
    """``|| H(tau) (I - P_N) u_ref ||_0`` computed exactly on the support."""
    model = family.model
    tail = ScaleVector(
        model,
        {j: c for j, c in u_ref.coefficients.items() if model.eigenvalue(j) > N},
    )
    if not tail.coefficients:
        return 0.0
    return apply_family(family, tau, tail).norm()


def duhamel_bound(
    family: HamiltonianFamily,
    model: SpectralModel,
    N: float,
    N_ref: float,
    u: ScaleVector,
    s: float,
    t: float,
    quad_points: int = 8,
    tol: float = 1e-10,
    quad_tol: float = 1e-8,
    max_panels: int = 64,
) -> Tuple[float, float]:
    """Cut-off error and its integral bound from the comparison identity.

    error  = ``|| P_N U(t,s) u - U_N(t,s) P_N u ||``
    bound  = integral over [s, t] of ``|| H(tau) (I - P_N) U(tau,s) u ||``,
    by composite Gauss-Legendre with panel doubling until the bound moves
    by less than ``quad_tol``.
    """
    if not N < N_ref / 4.0:
        raise ValueError("requires N < N_ref / 4")
    space_n = cutoff_space(model, N)
    ref_t = reference_solution(family, N_ref, s, t, u, tol)
    lhs = project(space_n, ref_t)
    U_n = cutoff_propagator(family, space_n, s, t, tol)
    rhs = U_n.apply(u)
    error = lhs.sub(rhs).norm()

    ref_space = cutoff_space(model, N_ref)
    u0 = project(ref_space, u)

    def bound_at(panels: int) -> float:
        taus, ws = composite_gl_nodes(s, t, panels, quad_points)
        total = 0.0
        cur = u0
        t_prev = s
        for tau, w in zip(taus, ws):
            seg = cutoff_propagator(family, ref_space, t_prev, tau, tol, m0=4)
            cur = seg.apply(cur)
            t_prev = tau
            total += w * _integrand_tail_h_norm(family, N, tau, cur)
        return total

    panels = 1
    bound = bound_at(panels)
    while panels < max_panels:
        panels *= 2
        refined = bound_at(panels)
        if abs(refined - bound) < quad_tol:
            bound = refined
            break
        bound = refined
    return error, bound


def commutator_constant(
    model: SpectralModel,
    family: HamiltonianFamily,
    space: CutoffSpace,
    r: float,
    grid_points: int = 101,
    interval: Optional[Tuple[float, float]] = None,
) -> float:
    """Best constant in the weighted commutator bound on the cut-off space.

    Returns ``max_t || W^-r [W^2r, H_N(t)] W^-r ||`` with ``W`` the diagonal
    scale weights ``1 + lambda_j``; this is the sharpest ``C`` with
    ``|<[W^2r, H_N(t)] v, v>| <= C ||v||_r^2`` at each grid time.
    """
    if r < 0:
        raise ValueError("r must be nonnegative")
    if space.dim == 0:
        raise ValueError("empty cut-off space")
    if interval is None:
        interval = (0.0, family.period if family.period is not None else 1.0)
    hn = CutoffHamiltonian(family, space)
    w = scale_weights(space, 1.0)
    w2r = w ** (2.0 * r)
    wmr = w ** (-r)
    best = 0.0
    for tt in np.linspace(interval[0], interval[1], grid_points):
        H = hn.matrix_at(tt)
        K = (w2r[:, None] - w2r[None, :]) * H
        K = (wmr[:, None] * wmr[None, :]) * K
        best = max(best, float(np.linalg.norm(K, 2)))
    return best


def energy_stability_check(
    family: HamiltonianFamily,
    space: CutoffSpace,
    r: float,
    s: float,
    t: float,
    C: float,
    tol: float = 1e-10,
) -> Tuple[float, float]:
    """Largest r-norm amplification over the basis against the Gronwall bound.

    Returns ``(max_ratio, exp(C |t-s| / 2))``; the caller asserts
    ``max_ratio <= bound * (1 + 1e-8)``.
    """
    U = cutoff_propagator(family, space, s, t, tol)
    wr = scale_weights(space, r)
    ratios = np.linalg.norm(wr[:, None] * U.matrix, axis=0) / wr
    bound = float(np.exp(0.5 * C * abs(t - s)))
    return float(np.max(ratios)), bound


def convergence_sweep_N(
    family: HamiltonianFamily,
    u: ScaleVector,
    s: float,
    t: float,
    Ns: Sequence[float],
    N_ref: float,
    tol: float = 1e-10,
) -> List[Tuple[float, float]]:
    """Errors ``|| U_N(t,s) P_N u - u_ref ||`` over the cut-off sweep."""
    if max(Ns) > N_ref / 4.0:
        raise ValueError("requires max(Ns) <= N_ref / 4")
    ref = reference_solution(family, N_ref, s, t, u, tol)
    out = []
    for N in Ns:
        space = cutoff_space(family.model, N)
        U = cutoff_propagator(family, space, s, t, tol)
        err = U.apply(u).sub(ref).norm()
        out.append((float(N), err))
    return out


@dataclass(frozen=True)
class SlicingFit:
    """Result of the mesh-refinement order fit."""

    slope: Optional[float]
    residual: float
    errors: Tuple[Tuple[int, float], ...]
    degenerate: bool  # all differences below 1e-13 (autonomous/commuting)


def slicing_order_sweep(
    family: HamiltonianFamily,
    space: CutoffSpace,
    s: float,
    t: float,
    Ms: Sequence[int],
) -> SlicingFit:
    """Order of the left-endpoint product formula by dyadic refinement.

    For each ``M`` the error proxy is the distance to the own refinement
    ``|| U_{N,M} - U_{N,2M} ||``; the slope of log error against log(1/M)
    is fitted by least squares.  A degenerate fit (all differences below
    1e-13) signals an autonomous or commuting family and is reported, not
    failed.
    """
    Ms = list(Ms)
    if len(Ms) < 4:
        raise ValueError("need at least 4 dyadic mesh sizes")
    for a, b in zip(Ms[:-1], Ms[1:]):
        if b != 2 * a:
            raise ValueError("mesh sizes must be dyadic (each twice the previous)")
    hn = CutoffHamiltonian(family, space)
    products = {M: _leftpoint_product(hn, np.linspace(s, t, M + 1)) for M in Ms}
    products[2 * Ms[-1]] = _leftpoint_product(hn, np.linspace(s, t, 2 * Ms[-1] + 1))
    errors = tuple(
        (M, float(np.linalg.norm(products[M] - products[2 * M], 2))) for M in Ms
    )
    if all(e < 1e-13 for _, e in errors):
        return SlicingFit(None, 0.0, errors, True)
    slope, _, resid = loglog_fit([1.0 / M for M, _ in errors], [e for _, e in errors])
    return SlicingFit(slope, resid, errors, False)
