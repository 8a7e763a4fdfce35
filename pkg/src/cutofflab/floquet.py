"""Periodic rescaling, monodromy, and Floquet-Magnus effective Hamiltonians.

A 1-periodic family ``H`` is rescaled to period ``T`` via
``H^(T)(t) = H(t/T)``.  The monodromy is the one-period propagator; its
Hermitian logarithm on the principal branch is the Floquet Hamiltonian.
Effective Hamiltonians truncate the expansion ``(i/T) log U^(T)(T,0) ~
sum_l T^l K[l]``, whose coefficients are iterated simplex integrals of
nested commutators:

    K[0] =  int_0^1 H_N(t1) dt1
    K[1] = -(i/2) int_0^1 int_0^t1 [H_N(t1), H_N(t2)] dt2 dt1
    K[2] = -(1/6) int_0^1 int_0^t1 int_0^t2 ([H_N(t1), [H_N(t2), H_N(t3)]]
                + [H_N(t3), [H_N(t2), H_N(t1)]]) dt3 dt2 dt1

The sign of K[1] is fixed by the small-period expansion of the monodromy
itself (so that the stroboscopic error at order L scales as T^(L+2));
conventions differing by the order of the commutator arguments appear in
the literature.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Sequence, Tuple

import numpy as np
import scipy.linalg

from ._quad import gl_nodes
from .hamiltonian import CutoffHamiltonian, HamiltonianFamily, FamilyError
from .propagator import PropagatorMatrix, cutoff_propagator, expm_step
from .spectral_model import CutoffSpace, ScaleVector, SpectralModel, cutoff_space

__all__ = [
    "FMExpansion",
    "FloquetResult",
    "QuadratureError",
    "rescaled_family",
    "monodromy",
    "fm_coefficient",
    "effective_hamiltonian",
    "stroboscopic_error",
    "fm_convergence_sweep",
    "effective_group_convergence",
]

BRANCH_CUT_TOL = 1e-10
RECONSTRUCTION_TOL = 1e-10
MAX_QUAD_PANELS = 64


class QuadratureError(RuntimeError):
    """Iterated quadrature failed to converge within the panel limit."""


@dataclass(frozen=True)
class FMExpansion:
    """Coefficients K[0..L] of the effective-Hamiltonian expansion in T."""

    space: CutoffSpace
    coefficients: Tuple[np.ndarray, ...]

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    def at_period(self, T: float) -> np.ndarray:
        H = np.zeros_like(self.coefficients[0])
        for ell, K in enumerate(self.coefficients):
            H += (T**ell) * K
        return H


@dataclass(frozen=True)
class FloquetResult:
    """Monodromy together with its principal-branch Floquet Hamiltonian."""

    monodromy: PropagatorMatrix
    floquet_hamiltonian: np.ndarray
    period: float
    space: CutoffSpace
    branch_ambiguous: bool  # an eigenphase sat within 1e-10 of the cut


def rescaled_family(family: HamiltonianFamily, T: float) -> HamiltonianFamily:
    """Period-T rescaling ``t -> H(t/T)`` of a 1-periodic family."""
    if family.period is None:
        raise FamilyError("rescaling requires a periodic family")
    if abs(family.period - 1.0) > 1e-12:
        raise FamilyError("rescaling expects the unit-period normalization")
    if T <= 0:
        raise ValueError("period must be positive")

    def substitute(c: Callable[[float], float]) -> Callable[[float], float]:
        return lambda t: c(t / T)

    terms = tuple((name, substitute(c)) for name, c in family.terms)
    return HamiltonianFamily(family.model, terms, float(T), family.loss_order)


def monodromy(
    family: HamiltonianFamily,
    space: CutoffSpace,
    T: float,
    tol: float = 1e-10,
) -> FloquetResult:
    """One-period propagator of the rescaled family and its Hermitian log.

    The principal branch keeps eigenphases of ``exp(-i T H_F)`` in
    (-pi, pi]; eigenphases within 1e-10 of the cut are flagged as
    branch-ambiguous and pinned to pi.
    """
    rf = rescaled_family(family, T)
    U = cutoff_propagator(rf, space, 0.0, T, tol)
    # unitary Schur form: orthonormal eigenbasis even for clustered phases
    Tm, V = scipy.linalg.schur(U.matrix, output="complex")
    phases = np.angle(np.diag(Tm))  # in (-pi, pi]
    theta = -phases  # U = exp(-i T H_F) with eigenvalues exp(-i theta)
    ambiguous = bool(np.any(np.abs(np.abs(phases) - np.pi) < BRANCH_CUT_TOL))
    theta = np.where(np.abs(np.abs(phases) - np.pi) < BRANCH_CUT_TOL, np.pi, theta)
    HF = (V * (theta / T)) @ V.conj().T
    HF = 0.5 * (HF + HF.conj().T)
    recon = expm_step(HF, T)
    defect = float(np.linalg.norm(recon - U.matrix, 2))
    if defect > RECONSTRUCTION_TOL:
        raise RuntimeError(
            f"monodromy log reconstruction defect {defect:.3e} exceeds "
            f"{RECONSTRUCTION_TOL:.0e}"
        )
    return FloquetResult(U, HF, float(T), space, ambiguous)


# ---------------------------------------------------------------------------
# iterated simplex quadrature of the scalar coefficient products
#
# For banded families H(t) = sum_m c_m(t) O_m, the commutator integrals
# factor into scalar simplex integrals times fixed matrix brackets, which
# keeps the iterated quadrature exact in the matrix structure.


def _simplex_nodes_1(panels: int, n: int) -> Tuple[np.ndarray, np.ndarray]:
    xs, ws = [], []
    edges = np.linspace(0.0, 1.0, panels + 1)
    for lo, hi in zip(edges[:-1], edges[1:]):
        x, w = gl_nodes(lo, hi, n)
        xs.append(x)
        ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


def _eval(c: Callable[[float], float], xs: np.ndarray) -> np.ndarray:
    return np.array([c(float(x)) for x in xs.ravel()]).reshape(xs.shape)


def _double_simplex(
    cm: Callable[[float], float],
    cn: Callable[[float], float],
    panels: int,
    n: int = 8,
) -> float:
    """``int_0^1 dt1 int_0^t1 dt2  cm(t1) cn(t2)``."""
    x1, w1 = _simplex_nodes_1(panels, n)
    xr, wr = _simplex_nodes_1(panels, n)  # reference nodes on [0, 1]
    t2 = x1[:, None] * xr[None, :]
    w2 = x1[:, None] * wr[None, :]
    vals_outer = _eval(cm, x1)
    vals_inner = _eval(cn, t2)
    inner = np.sum(vals_inner * w2, axis=1)
    return float(np.sum(w1 * vals_outer * inner))


def _triple_simplex(
    cm: Callable[[float], float],
    cn: Callable[[float], float],
    cp: Callable[[float], float],
    panels: int,
    n: int = 8,
) -> float:
    """``int c_m(t1) c_n(t2) c_p(t3)`` over ``0 < t3 < t2 < t1 < 1``."""
    x1, w1 = _simplex_nodes_1(panels, n)
    xr, wr = _simplex_nodes_1(panels, n)
    t2 = x1[:, None] * xr[None, :]
    w2 = x1[:, None] * wr[None, :]
    t3 = t2[:, :, None] * xr[None, None, :]
    w3 = t2[:, :, None] * wr[None, None, :]
    v1 = _eval(cm, x1)
    v2 = _eval(cn, t2)
    v3 = _eval(cp, t3)
    inner3 = np.sum(v3 * w3, axis=2)
    inner2 = np.sum(v2 * inner3 * w2, axis=1)
    return float(np.sum(w1 * v1 * inner2))


def _comm(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return A @ B - B @ A


def _fm_matrix_at_panels(
    family: HamiltonianFamily, mats: List[np.ndarray], ell: int, panels: int
) -> np.ndarray:
    coeffs = [c for _, c in family.terms]
    m = len(coeffs)
    d = mats[0].shape[0]
    out = np.zeros((d, d), dtype=complex)
    if ell == 0:
        x, w = _simplex_nodes_1(panels, 8)
        for i in range(m):
            out += float(np.sum(w * _eval(coeffs[i], x))) * mats[i]
        return out
    if ell == 1:
        for i in range(m):
            for j in range(m):
                if i == j:
                    continue
                I_ij = _double_simplex(coeffs[i], coeffs[j], panels)
                out += I_ij * _comm(mats[i], mats[j])
        return -(0.5j) * out
    if ell == 2:
        for i in range(m):
            for j in range(m):
                for k in range(m):
                    J = _triple_simplex(coeffs[i], coeffs[j], coeffs[k], panels)
                    if J == 0.0:
                        continue
                    out += J * (
                        _comm(mats[i], _comm(mats[j], mats[k]))
                        + _comm(mats[k], _comm(mats[j], mats[i]))
                    )
        return -(1.0 / 6.0) * out
    raise ValueError("expansion coefficients implemented for orders 0, 1, 2")


def fm_coefficient(
    family: HamiltonianFamily,
    space: CutoffSpace,
    ell: int,
    quad_tol: float = 1e-10,
) -> np.ndarray:
    """Expansion coefficient K[ell] on the cut-off space, ell in {0, 1, 2}.

    Quadrature panels are doubled until the assembled matrix changes by less
    than ``quad_tol``; the result is symmetrized, with the pre-symmetrization
    defect required below ``10 * quad_tol``.
    """
    if family.period is None or abs(family.period - 1.0) > 1e-12:
        raise FamilyError("expansion coefficients require the unit-period family")
    if ell not in (0, 1, 2):
        raise ValueError("ell must be 0, 1, or 2")
    hn = CutoffHamiltonian(family, space)
    mats = hn.term_matrices
    panels = 1
    prev = _fm_matrix_at_panels(family, mats, ell, panels)
    while panels <= MAX_QUAD_PANELS:
        panels *= 2
        cur = _fm_matrix_at_panels(family, mats, ell, panels)
        if np.linalg.norm(cur - prev, 2) < quad_tol:
            break
        prev = cur
    else:
        raise QuadratureError(
            f"coefficient quadrature did not converge at tol {quad_tol:.1e}"
        )
    defect = float(np.linalg.norm(cur - cur.conj().T, 2))
    if defect > 10.0 * quad_tol:
        raise QuadratureError(
            f"pre-symmetrization Hermiticity defect {defect:.3e} exceeds "
            f"10 * quad_tol"
        )
    return 0.5 * (cur + cur.conj().T)


def effective_hamiltonian(
    family: HamiltonianFamily,
    space: CutoffSpace,
    L: int,
    T: float,
    quad_tol: float = 1e-10,
) -> np.ndarray:
    """Order-L effective Hamiltonian ``sum_{l<=L} T^l K[l]``."""
    if L not in (0, 1, 2):
        raise ValueError("L must be 0, 1, or 2")
    H = np.zeros((space.dim, space.dim), dtype=complex)
    for ell in range(L + 1):
        H += (T**ell) * fm_coefficient(family, space, ell, quad_tol)
    return H


def fm_expansion(
    family: HamiltonianFamily,
    space: CutoffSpace,
    L: int,
    quad_tol: float = 1e-10,
) -> FMExpansion:
    """All coefficients up to order L as one expansion object."""
    return FMExpansion(
        space,
        tuple(fm_coefficient(family, space, ell, quad_tol) for ell in range(L + 1)),
    )


def stroboscopic_error(
    family: HamiltonianFamily,
    space: CutoffSpace,
    L: int,
    T: float,
    q: int = 1,
    tol: float = 1e-10,
    quad_tol: float = 1e-10,
) -> float:
    """``|| U^(T)(qT, 0) - exp(-i q T H_eff,L) ||`` at a stroboscopic time.

    Periodicity identifies ``U^(T)(qT, 0)`` with the q-th power of the
    monodromy.
    """
    if q == 0:
        raise ValueError("q must be nonzero")
    res = monodromy(family, space, T, tol)
    Uq = np.linalg.matrix_power(res.monodromy.matrix, q)
    Heff = effective_hamiltonian(family, space, L, T, quad_tol)
    Bq = expm_step(Heff, q * T)
    return float(np.linalg.norm(Uq - Bq, 2))


def fm_convergence_sweep(
    family: HamiltonianFamily,
    model: SpectralModel,
    ell: int,
    u: ScaleVector,
    Ns: Sequence[float],
    N_ref: float,
    quad_tol: float = 1e-10,
) -> List[Tuple[float, float]]:
    """Deviation of K[ell]_N P_N u from the large-cut-off coefficient.

    The N_ref coefficient stands in for the formal unbounded coefficient.
    """
    if max(Ns) > N_ref:
        raise ValueError("requires max(Ns) <= N_ref")
    space_ref = cutoff_space(model, N_ref)
    K_ref = fm_coefficient(family, space_ref, ell, quad_tol)
    v_ref = space_ref.from_dense(K_ref @ space_ref.to_dense(u))
    out = []
    for N in Ns:
        space = cutoff_space(model, N)
        K = fm_coefficient(family, space, ell, quad_tol)
        v = space.from_dense(K @ space.to_dense(u))
        out.append((float(N), v.sub(v_ref).norm()))
    return out


def effective_group_convergence(
    family: HamiltonianFamily,
    model: SpectralModel,
    L: int,
    T: float,
    t: float,
    u: ScaleVector,
    Ns: Sequence[float],
    N_ref: float,
    quad_tol: float = 1e-10,
) -> List[Tuple[float, float]]:
    """Deviation of ``exp(-i t H_eff,L,N) P_N u`` from the N_ref evolution.

    Numerical proxy for strong convergence of the effective groups; the
    N_ref group stands in for the limiting unitary group.
    """
    if max(Ns) > N_ref:
        raise ValueError("requires max(Ns) <= N_ref")
    space_ref = cutoff_space(model, N_ref)
    H_ref = effective_hamiltonian(family, space_ref, L, T, quad_tol)
    v_ref = space_ref.from_dense(expm_step(H_ref, t) @ space_ref.to_dense(u))
    out = []
    for N in Ns:
        space = cutoff_space(model, N)
        H = effective_hamiltonian(family, space, L, T, quad_tol)
        v = space.from_dense(expm_step(H, t) @ space.to_dense(u))
        out.append((float(N), v.sub(v_ref).norm()))
    return out
