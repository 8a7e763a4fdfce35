"""Reference operators with explicit spectral decompositions.

A reference operator is described by its nondecreasing eigenvalue sequence
``lambda_1 <= lambda_2 <= ...`` (diverging to infinity), a matching sequence
of integer mode labels, and a set of named Hermitian operator terms given by
their matrix elements in the eigenbasis.  Mode indices are 1-based
throughout.  Cut-off subspaces retain the modes with ``lambda_j <= N``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Mapping, Optional, Tuple

import numpy as np

__all__ = [
    "ElementProvider",
    "SpectralModel",
    "CutoffSpace",
    "ScaleVector",
    "InvalidModelError",
    "ModelMismatchError",
    "EmptySpaceError",
    "build_model",
    "cutoff_space",
    "project",
    "sobolev_norm",
    "tail_norm",
    "scale_weights",
]

HERMITICITY_WINDOW = 64  # index window on which user terms are checked


class InvalidModelError(ValueError):
    """Raised for invalid model parameters (non-monotone eigenvalues,
    non-Hermitian terms detected on the sampled index window)."""


class ModelMismatchError(ValueError):
    """Raised when a vector or space is used with a foreign model."""


class EmptySpaceError(ValueError):
    """Raised by operations that require a nonempty cut-off space."""


@dataclass(frozen=True)
class ElementProvider:
    """Matrix elements ``<e_j, O e_k>`` of a Hermitian operator term.

    ``elem(j, k)`` takes 1-based mode indices; entries vanish whenever
    ``|j - k| > width`` (the coupling width in index space).
    """

    elem: Callable[[int, int], complex]
    width: int

    def __call__(self, j: int, k: int) -> complex:
        return self.elem(j, k)


class SpectralModel:
    """A positive reference operator with compact resolvent.

    Eigenvalues are generated lazily and cached; ``eigenvalue(j)`` and
    ``label(j)`` accept any 1-based index.  ``tail_gap``/``tail_mult``
    parameterize the rigorous geometric bound on heat-kernel tails:
    ``sum_{j>J} exp(-eps*lambda_j) <= tail_mult *
    exp(-eps*lambda_{J+1}) / (1 - exp(-eps*tail_gap))``.
    """

    def __init__(
        self,
        kind: str,
        eigenvalue_fn: Callable[[int], float],
        label_fn: Callable[[int], int],
        providers: Mapping[str, ElementProvider],
        tail_gap: Optional[float] = None,
        tail_mult: float = 1.0,
    ):
        self.kind = kind
        self._eig_fn = eigenvalue_fn
        self._label_fn = label_fn
        self.element_providers: Dict[str, ElementProvider] = dict(providers)
        self.tail_gap = tail_gap
        self.tail_mult = tail_mult
        self._eig_cache: list[float] = []

    def eigenvalue(self, j: int) -> float:
        if j < 1:
            raise IndexError("mode indices are 1-based")
        while len(self._eig_cache) < j:
            jj = len(self._eig_cache) + 1
            lam = float(self._eig_fn(jj))
            if self._eig_cache and lam < self._eig_cache[-1]:
                raise InvalidModelError(
                    f"eigenvalue sequence decreases at j={jj}: "
                    f"{self._eig_cache[-1]} -> {lam}"
                )
            if lam < 0:
                raise InvalidModelError(f"negative eigenvalue at j={jj}: {lam}")
            self._eig_cache.append(lam)
        return self._eig_cache[j - 1]

    def eigenvalues(self, n: int) -> np.ndarray:
        """First ``n`` eigenvalues as an array."""
        self.eigenvalue(n)
        return np.array(self._eig_cache[:n])

    def label(self, j: int) -> int:
        if j < 1:
            raise IndexError("mode indices are 1-based")
        return int(self._label_fn(j))

    def provider(self, name: str) -> ElementProvider:
        try:
            return self.element_providers[name]
        except KeyError:
            raise KeyError(
                f"unknown operator term {name!r}; available: "
                f"{sorted(self.element_providers)}"
            ) from None

    def max_index_below(self, N: float) -> int:
        """Largest j with ``lambda_j <= N`` (0 if none)."""
        if N < self.eigenvalue(1):
            return 0
        j = 1
        # grow geometrically, then binary-search the boundary
        while self.eigenvalue(2 * j) <= N:
            j *= 2
        lo, hi = j, 2 * j  # lambda_lo <= N < lambda_hi
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.eigenvalue(mid) <= N:
                lo = mid
            else:
                hi = mid
        return lo

    def basis_vector(self, j: int) -> "ScaleVector":
        return ScaleVector(self, {j: 1.0 + 0.0j})

    def __repr__(self) -> str:
        return f"SpectralModel(kind={self.kind!r})"


@dataclass(frozen=True)
class CutoffSpace:
    """The span of the eigenmodes with ``lambda_j <= N``."""

    model: SpectralModel
    cutoff: float
    indices: Tuple[int, ...]

    @property
    def dim(self) -> int:
        return len(self.indices)

    @property
    def eigvals(self) -> np.ndarray:
        return np.array([self.model.eigenvalue(j) for j in self.indices])

    def position(self, j: int) -> Optional[int]:
        """Dense position of mode ``j`` in this space, or None."""
        if 1 <= j <= len(self.indices):
            # indices are always 1..d_N in increasing order
            return j - 1
        return None

    def contains(self, j: int) -> bool:
        return self.position(j) is not None

    def to_dense(self, u: "ScaleVector") -> np.ndarray:
        """Coefficients of ``P_N u`` as a dense vector over this space."""
        if u.model is not self.model:
            raise ModelMismatchError("vector belongs to a different model")
        out = np.zeros(self.dim, dtype=complex)
        for j, c in u.coefficients.items():
            p = self.position(j)
            if p is not None:
                out[p] = c
        return out

    def from_dense(self, v: np.ndarray) -> "ScaleVector":
        if len(v) != self.dim:
            raise ValueError("dense vector does not match space dimension")
        return ScaleVector(
            self.model, {j: complex(v[p]) for p, j in enumerate(self.indices)}
        )


@dataclass(frozen=True)
class ScaleVector:
    """Finitely supported vector in the eigenbasis, as index -> coefficient."""

    model: SpectralModel
    coefficients: Dict[int, complex] = field(default_factory=dict)

    def __post_init__(self):
        cleaned = {int(j): complex(c) for j, c in self.coefficients.items() if c != 0}
        object.__setattr__(self, "coefficients", cleaned)

    @property
    def support(self) -> Tuple[int, ...]:
        return tuple(sorted(self.coefficients))

    def max_eigenvalue(self) -> float:
        """Largest lambda_j on the support (0 for the zero vector)."""
        if not self.coefficients:
            return 0.0
        return max(self.model.eigenvalue(j) for j in self.coefficients)

    def add(self, other: "ScaleVector") -> "ScaleVector":
        self._check(other)
        out = dict(self.coefficients)
        for j, c in other.coefficients.items():
            out[j] = out.get(j, 0) + c
        return ScaleVector(self.model, out)

    def sub(self, other: "ScaleVector") -> "ScaleVector":
        return self.add(other.scale(-1.0))

    def scale(self, a: complex) -> "ScaleVector":
        return ScaleVector(self.model, {j: a * c for j, c in self.coefficients.items()})

    def norm(self, s: float = 0.0) -> float:
        return sobolev_norm(self.model, self, s)

    def _check(self, other: "ScaleVector") -> None:
        if other.model is not self.model:
            raise ModelMismatchError("vectors belong to different models")


# ---------------------------------------------------------------------------
# built-in model kinds


def _fourier_label(j: int) -> int:
    # interleaved 0, +1, -1, +2, -2, ...; ties (k, -k) broken positive-first
    if j == 1:
        return 0
    k = j // 2
    return k if j % 2 == 0 else -k


def _fourier_circle() -> SpectralModel:
    def eig(j: int) -> float:
        k = _fourier_label(j)
        return 1.0 + k * k

    def lap_elem(j: int, k: int) -> complex:
        if j != k:
            return 0.0
        lbl = _fourier_label(j)
        return complex(lbl * lbl)

    def cos_elem(j: int, k: int) -> complex:
        return 0.5 if abs(_fourier_label(j) - _fourier_label(k)) == 1 else 0.0

    providers = {
        "laplacian": ElementProvider(lap_elem, width=0),
        # label k couples to k +/- 1, which sit at most 2 index slots away
        "cos_x": ElementProvider(cos_elem, width=2),
    }
    return SpectralModel(
        "fourier_circle", eig, _fourier_label, providers, tail_gap=1.0, tail_mult=2.0
    )


def _hermite_line() -> SpectralModel:
    def eig(j: int) -> float:
        return 2.0 * (j - 1) + 2.0  # level n = j - 1

    def osc_elem(j: int, k: int) -> complex:
        return complex(2 * (j - 1) + 1) if j == k else 0.0

    def pos_elem(j: int, k: int) -> complex:
        n = min(j, k) - 1
        return math.sqrt((n + 1) / 2.0) if abs(j - k) == 1 else 0.0

    providers = {
        "oscillator": ElementProvider(osc_elem, width=0),
        "position": ElementProvider(pos_elem, width=1),
    }
    return SpectralModel(
        "hermite_line", eig, lambda j: j - 1, providers, tail_gap=2.0, tail_mult=1.0
    )


def _check_hermitian_window(name: str, prov: ElementProvider, n: int) -> None:
    for j in range(1, n + 1):
        for k in range(j, min(j + prov.width, n) + 1):
            if prov.elem(j, k) != np.conj(prov.elem(k, j)):
                raise InvalidModelError(
                    f"term {name!r} is not Hermitian at (j,k)=({j},{k})"
                )


def _explicit_diagonal(params: Mapping) -> SpectralModel:
    eig_fn = params.get("eigenvalues")
    if eig_fn is None:
        raise InvalidModelError("explicit_diagonal requires an eigenvalue generator")
    seq_len = None
    if not callable(eig_fn):
        seq = [float(x) for x in eig_fn]
        seq_len = len(seq)
        if seq_len == 0:
            raise InvalidModelError("empty eigenvalue sequence")

        def eig_from_seq(j: int, _seq=seq) -> float:
            if j > len(_seq):
                raise InvalidModelError(
                    f"eigenvalue sequence of length {len(_seq)} exhausted at j={j}; "
                    "pass a callable generator for an unbounded model"
                )
            return _seq[j - 1]

        eig = eig_from_seq
    else:
        eig = eig_fn

    def h0_elem(j: int, k: int) -> complex:
        return complex(model.eigenvalue(j)) if j == k else 0.0

    providers = {"h0_diag": ElementProvider(h0_elem, width=0)}
    for name, prov in dict(params.get("terms", {})).items():
        if not isinstance(prov, ElementProvider):
            raise InvalidModelError(
                f"user term {name!r} must be an ElementProvider (elem, width)"
            )
        providers[name] = prov

    model = SpectralModel(
        "explicit_diagonal",
        eig,
        lambda j: j,
        providers,
        tail_gap=params.get("tail_gap"),
        tail_mult=params.get("tail_mult", 1.0),
    )
    # validate monotonicity on a sampled window (raises on violation)
    window = int(params.get("sample_window", HERMITICITY_WINDOW))
    if seq_len is not None:
        window = min(window, seq_len)
    model.eigenvalue(window)
    for name, prov in providers.items():
        if name != "h0_diag":
            _check_hermitian_window(name, prov, 16)
    return model


def build_model(kind: str, params: Optional[Mapping] = None) -> SpectralModel:
    """Construct a built-in reference operator.

    Kinds: ``fourier_circle`` (lambda = 1 + k^2, labels 0, +1, -1, ...;
    terms ``laplacian``, ``cos_x``), ``hermite_line`` (lambda = 2n + 2;
    terms ``oscillator``, ``position``), ``explicit_diagonal`` (requires an
    ``eigenvalues`` generator in ``params``; provides ``h0_diag`` plus any
    user terms).
    """
    params = params or {}
    if kind == "fourier_circle":
        return _fourier_circle()
    if kind == "hermite_line":
        return _hermite_line()
    if kind == "explicit_diagonal":
        return _explicit_diagonal(params)
    raise InvalidModelError(f"unknown model kind {kind!r}")


# ---------------------------------------------------------------------------
# operations


def cutoff_space(model: SpectralModel, N: float) -> CutoffSpace:
    """Spectral cut-off at level ``N``: retain the modes with lambda_j <= N.

    ``N`` below the first eigenvalue yields the zero-dimensional space.
    """
    if N < 0:
        raise ValueError("cut-off level must be nonnegative")
    d = model.max_index_below(N)
    return CutoffSpace(model, float(N), tuple(range(1, d + 1)))


def project(space: CutoffSpace, u: ScaleVector) -> ScaleVector:
    """Orthogonal projection of ``u`` onto the cut-off space."""
    if u.model is not space.model:
        raise ModelMismatchError("vector belongs to a different model")
    kept = {j: c for j, c in u.coefficients.items() if space.contains(j)}
    return ScaleVector(u.model, kept)


def sobolev_norm(model: SpectralModel, u: ScaleVector, s: float = 0.0) -> float:
    """Hilbert-scale norm ``(sum_j (1+lambda_j)^{2s} |u_j|^2)^{1/2}``."""
    if u.model is not model:
        raise ModelMismatchError("vector belongs to a different model")
    total = 0.0
    for j, c in u.coefficients.items():
        w = (1.0 + model.eigenvalue(j)) ** (2.0 * s) if s != 0.0 else 1.0
        total += w * abs(c) ** 2
    return math.sqrt(total)


def tail_norm(model: SpectralModel, u: ScaleVector, N: float, s: float = 0.0) -> float:
    """Norm of the high-energy tail ``(I - P_N) u`` in the s-scale."""
    if u.model is not model:
        raise ModelMismatchError("vector belongs to a different model")
    tail = {j: c for j, c in u.coefficients.items() if model.eigenvalue(j) > N}
    return sobolev_norm(model, ScaleVector(model, tail), s)


def scale_weights(space: CutoffSpace, r: float) -> np.ndarray:
    """Diagonal weights ``(1 + lambda_j)^r`` over the cut-off space."""
    if space.dim == 0:
        raise EmptySpaceError("scale weights of the zero-dimensional space")
    return (1.0 + space.eigvals) ** r
