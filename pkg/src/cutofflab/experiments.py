"""Config-driven experiment runner.

Experiments are described by strict JSON configs (unknown keys rejected)
naming a model, a Hamiltonian family from the coefficient registry, numeric
sweep parameters, and optional pass/fail criteria.  Each run writes
``results.csv`` (fixed per-experiment schema, floats at 17 significant
digits) and ``summary.json`` and is deterministic for a fixed config and
seed; sweep points are evaluated concurrently up to a worker count but
written in input order.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from . import floquet
from .hamiltonian import COEFFICIENTS, HamiltonianFamily, assemble_family
from .propagator import (
    commutator_constant,
    cutoff_propagator,
    duhamel_bound,
    energy_stability_check,
    reference_with_self_check,
    slicing_order_sweep,
)
from .spectral_model import (
    ElementProvider,
    ScaleVector,
    SpectralModel,
    build_model,
    cutoff_space,
)
from .traces import (
    BandedOperator,
    fit_finite_part,
    heat_trace,
    regularized_amplitude,
    trace_defect,
    zeta_value,
)

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ExperimentReport",
    "list_experiments",
    "validate_config",
    "load_config",
    "run_experiment",
]

FLOAT_FMT = "%.17g"


class ConfigError(ValueError):
    """Invalid experiment configuration."""


def _fmt(x: Any) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return FLOAT_FMT % float(x)
    return str(x)


# ---------------------------------------------------------------------------
# config model


_MODEL_KEYS = {"kind", "eigenvalues"}
_FAMILY_KEYS = {"terms", "period", "loss_order"}
_TERM_KEYS = {"operator", "coefficient", "amplitude"}
_TOP_KEYS = {"experiment", "model", "family", "params", "criteria", "seed", "out_dir"}

# extra named terms available on the linear diagonal model for configs
_TWO_LEVEL_TERMS = {
    "two_level_z": ElementProvider(
        lambda j, k: (0.5 if j == 1 else -0.5) if (j == k and j <= 2) else 0.0, width=0
    ),
    "two_level_x": ElementProvider(
        lambda j, k: 1.0 if {j, k} == {1, 2} else 0.0, width=1
    ),
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    model: Dict[str, Any]
    family: Dict[str, Any]
    params: Dict[str, Any]
    criteria: Dict[str, Any] = field(default_factory=dict)
    seed: int = 0

    def canonical_json(self) -> str:
        payload = {
            "experiment": self.experiment,
            "model": self.model,
            "family": self.family,
            "params": self.params,
            "criteria": self.criteria,
            "seed": self.seed,
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()[:16]


@dataclass
class ExperimentReport:
    experiment: str
    config_hash: str
    header: Tuple[str, ...]
    rows: List[Tuple[Any, ...]]
    summary: Dict[str, Any]

    def csv_text(self) -> str:
        lines = [",".join(self.header)]
        for row in self.rows:
            lines.append(",".join(_fmt(x) for x in row))
        return "\n".join(lines) + "\n"

    def write(self, out_dir: Path) -> None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "results.csv").write_text(self.csv_text())
        (out_dir / "summary.json").write_text(
            json.dumps(self.summary, indent=2, sort_keys=True) + "\n"
        )


def _build_model_from_config(spec: Dict[str, Any]) -> SpectralModel:
    kind = spec.get("kind")
    if kind in ("fourier_circle", "hermite_line"):
        return build_model(kind, {})
    if kind == "explicit_diagonal":
        eig = spec.get("eigenvalues", "linear")
        if eig != "linear":
            raise ConfigError("configs support only the linear diagonal model")
        return build_model(
            "explicit_diagonal",
            {"eigenvalues": lambda j: float(j), "terms": _TWO_LEVEL_TERMS,
             "tail_gap": 1.0},
        )
    raise ConfigError(f"unknown model kind {kind!r}")


def _build_family_from_config(
    model: SpectralModel, spec: Dict[str, Any]
) -> HamiltonianFamily:
    terms = []
    for tspec in spec.get("terms", []):
        name = tspec["operator"]
        coeff_name = tspec["coefficient"]
        amp = float(tspec.get("amplitude", 1.0))
        base = COEFFICIENTS[coeff_name]
        terms.append((name, _scaled_coefficient(base, amp)))
    return assemble_family(
        model,
        terms,
        period=spec.get("period"),
        loss_order=float(spec.get("loss_order", 0.0)),
    )


def _scaled_coefficient(base: Callable[[float], float], amp: float):
    return lambda t: amp * base(t)


def _initial_vector(model: SpectralModel, params: Dict[str, Any]) -> ScaleVector:
    if "initial_mode_label" in params:
        target = int(params["initial_mode_label"])
        j = 1
        while model.label(j) != target:
            j += 1
            if j > 100_000:
                raise ConfigError(f"no mode with label {target}")
        return model.basis_vector(j)
    if "initial_modes" in params:
        coeffs = {
            int(j): complex(re, im)
            for j, (re, im) in params["initial_modes"].items()
        }
        return ScaleVector(model, coeffs)
    return model.basis_vector(1)


def _geometric_grid(start: float, count: int, ratio: float = 0.5) -> List[float]:
    return [start * ratio**k for k in range(count)]


def _fit_payload(fit) -> Dict[str, Any]:
    """Publish a finite-part fit so plots can draw it without refitting."""
    return {
        "betas": list(fit.betas),
        "include_log": fit.include_log,
        "coefficients_re": [c.real for c in fit.coefficients],
        "coefficients_im": [c.imag for c in fit.coefficients],
        "finite_part_re": fit.finite_part.real,
        "finite_part_im": fit.finite_part.imag,
    }


# ---------------------------------------------------------------------------
# experiment implementations


def _run_cutoff_convergence(cfg, model, family, workers):
    p = cfg.params
    u = _initial_vector(model, p)
    tol = float(p.get("tol", 1e-10))
    s, t = float(p.get("s", 0.0)), float(p["t"])
    N_ref = float(p["N_ref"])
    ref, delta = reference_with_self_check(family, N_ref, s, t, u, tol)
    Ns = [float(N) for N in p["Ns"]]

    def point(N):
        space = cutoff_space(model, N)
        U = cutoff_propagator(family, space, s, t, tol)
        return space.dim, U.apply(u).sub(ref).norm()

    results = _map_ordered(point, Ns, workers)
    rows = [(N, d, err, delta) for N, (d, err) in zip(Ns, results)]
    errs = [err for _, _, err, _ in rows]
    summary = {
        "errors": errs,
        "min_error": min(errs),
        "final_error": errs[-1],
        "strictly_decreasing": all(a > b for a, b in zip(errs[:-1], errs[1:])),
        "oracle_self_check": delta,
    }
    crit = {
        "max_final_error": lambda v: errs[-1] < v,
        "strictly_decreasing": lambda v: summary["strictly_decreasing"] == v,
        "max_oracle_delta": lambda v: delta < v,
    }
    return ("N", "d_N", "error", "oracle_delta"), rows, summary, crit


def _run_slicing_order(cfg, model, family, workers):
    p = cfg.params
    space = cutoff_space(model, float(p["N"]))
    s, t = float(p.get("s", 0.0)), float(p["t"])
    fit = slicing_order_sweep(family, space, s, t, [int(M) for M in p["Ms"]])
    rows = [(M, e) for M, e in fit.errors]
    summary = {
        "slopes": {"order": {"value": fit.slope, "residual": fit.residual}},
        "degenerate": fit.degenerate,
    }
    crit = {
        "slope_target": lambda v: fit.slope is not None
        and abs(fit.slope - v) <= float(cfg.criteria.get("slope_tol", 0.2)),
        "slope_tol": lambda v: True,  # consumed by slope_target
    }
    return ("M", "error"), rows, summary, crit


def _run_duhamel(cfg, model, family, workers):
    p = cfg.params
    u = _initial_vector(model, p)
    s, t = float(p.get("s", 0.0)), float(p["t"])
    N_ref = float(p["N_ref"])
    quad_points = int(p.get("quad_points", 8))
    tol = float(p.get("tol", 1e-10))
    Ns = [float(N) for N in p["Ns"]]

    def point(N):
        err, bnd = duhamel_bound(
            family, model, N, N_ref, u, s, t, quad_points=quad_points, tol=tol
        )
        return err, bnd, err <= bnd + 1e-8

    results = _map_ordered(point, Ns, workers)
    rows = [(N, err, bnd, ok) for N, (err, bnd, ok) in zip(Ns, results)]
    bounds = [b for _, _, b, _ in rows]
    _, delta = reference_with_self_check(family, N_ref, s, t, u, tol)
    summary = {
        "all_hold": all(ok for *_, ok in rows),
        "bounds_nonincreasing": all(a >= b for a, b in zip(bounds[:-1], bounds[1:])),
        "oracle_self_check": delta,
    }
    crit = {"all_hold": lambda v: summary["all_hold"] == v}
    return ("N", "error", "bound", "holds"), rows, summary, crit


def _run_energy_stability(cfg, model, family, workers):
    p = cfg.params
    space = cutoff_space(model, float(p["N"]))
    r = float(p["r"])
    s, t = float(p.get("s", 0.0)), float(p["t"])
    C = commutator_constant(
        model, family, space, r, grid_points=int(p.get("grid_points", 101))
    )
    max_ratio, bound = energy_stability_check(
        family, space, r, s, t, C, tol=float(p.get("tol", 1e-10))
    )
    rows = [(space.cutoff, r, C, max_ratio, bound, max_ratio <= bound * (1 + 1e-8))]
    summary = {
        "commutator_constant": C,
        "max_ratio": max_ratio,
        "bound": bound,
        "holds": bool(rows[0][-1]),
    }
    crit = {"holds": lambda v: summary["holds"] == v}
    return ("N", "r", "C", "max_ratio", "bound", "holds"), rows, summary, crit


def _run_word_convergence(cfg, model, family, workers):
    from .hamiltonian import word_apply

    p = cfg.params
    u = _initial_vector(model, p)
    times = [float(x) for x in p["word_times"]]
    exact = word_apply(family, times, u)
    Ns = [float(N) for N in p["Ns"]]

    def point(N):
        space = cutoff_space(model, N)
        return word_apply(family, times, u, space).sub(exact).norm()

    devs = _map_ordered(point, Ns, workers)
    rows = list(zip(Ns, devs))
    summary = {
        "final_deviation": devs[-1],
        "nonincreasing": all(a >= b - 1e-15 for a, b in zip(devs[:-1], devs[1:])),
    }
    crit = {
        "max_final_deviation": lambda v: devs[-1] < v,
        "nonincreasing": lambda v: summary["nonincreasing"] == v,
    }
    return ("N", "deviation"), rows, summary, crit


def _run_fm_coefficients(cfg, model, family, workers):
    p = cfg.params
    u = _initial_vector(model, p)
    N_ref = float(p["N_ref"])
    quad_tol = float(p.get("quad_tol", 1e-10))
    Ns = [float(N) for N in p["Ns"]]
    ells = [int(e) for e in p.get("ells", [0, 1])]
    rows = []
    summary: Dict[str, Any] = {}
    for ell in ells:
        sweep = floquet.fm_convergence_sweep(family, model, ell, u, Ns, N_ref, quad_tol)
        devs = [dev for _, dev in sweep]
        rows += [(ell, N, dev) for (N, dev) in sweep]
        # oracle self-check: the N_ref coefficient against its own doubling
        check = floquet.fm_convergence_sweep(
            family, model, ell, u, [N_ref], 2.0 * N_ref, quad_tol
        )[0][1]
        summary[f"ell_{ell}"] = {
            "final_deviation": devs[-1],
            "nonincreasing": all(a >= b - 1e-15 for a, b in zip(devs[:-1], devs[1:])),
            "oracle_self_check": check,
        }
    crit = {
        "max_final_deviation": lambda v: all(
            summary[k]["final_deviation"] < v for k in summary
        ),
        "nonincreasing": lambda v: all(
            summary[k]["nonincreasing"] == v for k in summary
        ),
    }
    return ("ell", "N", "deviation"), rows, summary, crit


def _run_stroboscopic(cfg, model, family, workers):
    p = cfg.params
    space = cutoff_space(model, float(p["N"]))
    Ts = [float(T) for T in p["Ts"]]
    Ls = [int(L) for L in p.get("Ls", [0, 1])]
    qs = [int(q) for q in p.get("qs", [2, 3, 5])]
    tol = float(p.get("tol", 1e-10))
    quad_tol = float(p.get("quad_tol", 1e-10))

    def point(LT):
        L, T = LT
        return floquet.stroboscopic_error(family, space, L, T, 1, tol, quad_tol)

    pairs = [(L, T) for L in Ls for T in Ts]
    errs = _map_ordered(point, pairs, workers)
    rows = [(L, T, 1, e) for (L, T), e in zip(pairs, errs)]
    summary: Dict[str, Any] = {"slopes": {}}
    from ._quad import loglog_fit

    for L in Ls:
        es = [e for (LL, _), e in zip(pairs, errs) if LL == L]
        slope, _, resid = loglog_fit(Ts, es)
        summary["slopes"][f"L_{L}"] = {"value": slope, "residual": resid}
    # telescoping bound at the middle period
    T_mid = Ts[len(Ts) // 2]
    L_tel = Ls[-1]
    e1 = floquet.stroboscopic_error(family, space, L_tel, T_mid, 1, tol, quad_tol)
    telescoping = {}
    for q in qs:
        eq = floquet.stroboscopic_error(family, space, L_tel, T_mid, q, tol, quad_tol)
        telescoping[str(q)] = {
            "error_q": eq,
            "q_times_error_1": q * e1,
            "holds": eq <= q * e1 * (1 + 1e-6),
        }
        rows.append((L_tel, T_mid, q, eq))
    summary["telescoping"] = telescoping
    crit = {
        "slope_tol": lambda v: all(
            abs(summary["slopes"][f"L_{L}"]["value"] - (L + 2)) <= v for L in Ls
        ),
        "telescoping_holds": lambda v: all(
            telescoping[str(q)]["holds"] for q in qs
        ) == v,
    }
    return ("L", "T", "q", "error"), rows, summary, crit


def _run_effective_group(cfg, model, family, workers):
    p = cfg.params
    u = _initial_vector(model, p)
    sweep = floquet.effective_group_convergence(
        family,
        model,
        int(p["L"]),
        float(p["T"]),
        float(p["t"]),
        u,
        [float(N) for N in p["Ns"]],
        float(p["N_ref"]),
        float(p.get("quad_tol", 1e-10)),
    )
    rows = list(sweep)
    devs = [d for _, d in sweep]
    check = floquet.effective_group_convergence(
        family,
        model,
        int(p["L"]),
        float(p["T"]),
        float(p["t"]),
        u,
        [float(p["N_ref"])],
        2.0 * float(p["N_ref"]),
        float(p.get("quad_tol", 1e-10)),
    )[0][1]
    summary = {
        "final_deviation": devs[-1],
        "nonincreasing": all(a >= b - 1e-15 for a, b in zip(devs[:-1], devs[1:])),
        "oracle_self_check": check,
    }
    crit = {
        "max_final_deviation": lambda v: devs[-1] < v,
        "nonincreasing": lambda v: summary["nonincreasing"] == v,
    }
    return ("N", "deviation"), rows, summary, crit


def _run_traces(cfg, model, family, workers):
    p = cfg.params
    grid = _geometric_grid(float(p["eps_start"]), int(p.get("eps_count", 5)))
    betas = [float(b) for b in p.get("betas", [1.0])]
    include_log = bool(p.get("include_log", False))
    values = [heat_trace(model, e) for e in grid]
    fit = fit_finite_part(grid, values, betas, include_log)
    z0 = zeta_value(model, None, 0.0)
    z2 = zeta_value(model, None, 2.0)
    shift = BandedOperator(lambda j, k: 1.0 if j == k + 1 else 0.0, width=1)
    shift_adj = BandedOperator(lambda j, k: 1.0 if k == j + 1 else 0.0, width=1)
    defect = trace_defect(cutoff_space(model, float(p.get("defect_N", 16))),
                          shift, shift_adj)
    rows = [(e, v.real, v.imag) for e, v in zip(grid, values)]
    summary = {
        "finite_part": fit.finite_part.real,
        "fit": _fit_payload(fit),
        "fit_residual": fit.residual,
        "fit_condition": fit.condition_number,
        "zeta_0": z0.real,
        "zeta_2": z2.real,
        "defect_full": defect[0].real,
        "defect_compressed": abs(defect[1]),
    }
    crit = {
        "finite_part_target": lambda v: abs(fit.finite_part.real - v)
        <= float(cfg.criteria.get("finite_part_tol", 1e-3)),
        "finite_part_tol": lambda v: True,
        "zeta_0_tol": lambda v: abs(z0.real + 0.5) <= v,
        "zeta_2_tol": lambda v: abs(z2.real - math.pi**2 / 6.0) <= v,
    }
    return ("eps", "value_re", "value_im"), rows, summary, crit


def _run_amplitude(cfg, model, family, workers):
    p = cfg.params
    grid = _geometric_grid(float(p["eps_start"]), int(p.get("eps_count", 5)))
    betas = [float(b) for b in p.get("betas", [1.0])]
    fit = regularized_amplitude(
        family,
        model,
        float(p["N_ref"]),
        float(p["t"]),
        grid,
        betas,
        include_log=bool(p.get("include_log", False)),
        tol=float(p.get("tol", 1e-10)),
    )
    rows = [(e, v.real, v.imag) for e, v in zip(fit.grid, fit.values)]
    summary = {
        "finite_part_re": fit.finite_part.real,
        "finite_part_im": fit.finite_part.imag,
        "fit": _fit_payload(fit),
        "fit_residual": fit.residual,
        "truncation_bias": fit.truncation_bias,
    }
    crit = {
        "finite_part_re_target": lambda v: abs(fit.finite_part.real - v)
        <= float(cfg.criteria.get("finite_part_tol", 1e-3)),
        "finite_part_tol": lambda v: True,
        "max_truncation_bias": lambda v: fit.truncation_bias < v,
    }
    return ("eps", "z_re", "z_im"), rows, summary, crit


@dataclass(frozen=True)
class ExperimentDef:
    name: str
    description: str
    required_params: Tuple[str, ...]
    runner: Callable
    optional_params: Tuple[str, ...] = ()
    criteria_keys: Tuple[str, ...] = ()

    @property
    def allowed_params(self) -> Tuple[str, ...]:
        return self.required_params + self.optional_params


_INITIAL = ("initial_mode_label", "initial_modes")

_EXPERIMENTS: Dict[str, ExperimentDef] = {
    e.name: e
    for e in [
        ExperimentDef(
            "cutoff-convergence",
            "strong convergence of the cut-off dynamics: ||U_N P_N u - u_ref|| "
            "over increasing N, against the doubling-checked reference",
            ("Ns", "N_ref", "t"),
            _run_cutoff_convergence,
            ("s", "tol") + _INITIAL,
            ("max_final_error", "strictly_decreasing", "max_oracle_delta"),
        ),
        ExperimentDef(
            "slicing-order",
            "first-order product formula: slope of the time-slicing error "
            "under dyadic mesh refinement",
            ("N", "Ms", "t"),
            _run_slicing_order,
            ("s",),
            ("slope_target", "slope_tol"),
        ),
        ExperimentDef(
            "duhamel",
            "cut-off error against its integral bound from the comparison "
            "identity (high-energy remainder under the flow)",
            ("Ns", "N_ref", "t"),
            _run_duhamel,
            ("s", "quad_points", "tol") + _INITIAL,
            ("all_hold",),
        ),
        ExperimentDef(
            "energy-stability",
            "commutator-criterion stability: r-norm amplification of U_N "
            "against exp(C |t-s| / 2)",
            ("N", "r", "t"),
            _run_energy_stability,
            ("s", "grid_points", "tol"),
            ("holds",),
        ),
        ExperimentDef(
            "word-convergence",
            "cut-off words P_N H(t_m) P_N ... P_N H(t_1) P_N u against the "
            "full words (banded locality makes the deviation vanish)",
            ("word_times", "Ns"),
            _run_word_convergence,
            _INITIAL,
            ("max_final_deviation", "nonincreasing"),
        ),
        ExperimentDef(
            "fm-coefficients",
            "convergence of the effective-expansion coefficients "
            "K[ell]_N P_N u to the large-cut-off coefficient",
            ("Ns", "N_ref"),
            _run_fm_coefficients,
            ("ells", "quad_tol") + _INITIAL,
            ("max_final_deviation", "nonincreasing"),
        ),
        ExperimentDef(
            "stroboscopic",
            "finite-dimensional effective-Hamiltonian error law: "
            "||monodromy^q - exp(-i q T H_eff,L)|| = O(T^(L+2))",
            ("N", "Ts"),
            _run_stroboscopic,
            ("Ls", "qs", "tol", "quad_tol"),
            ("slope_tol", "telescoping_holds"),
        ),
        ExperimentDef(
            "effective-group",
            "strong-convergence proxy for the effective unitary groups "
            "exp(-i t H_eff,L,N) P_N u over N",
            ("L", "T", "t", "Ns", "N_ref"),
            _run_effective_group,
            ("quad_tol",) + _INITIAL,
            ("max_final_deviation", "nonincreasing"),
        ),
        ExperimentDef(
            "traces",
            "heat-trace finite part, zeta values at 0 and 2, and the "
            "commutator trace defect on the linear solvable model",
            ("eps_start",),
            _run_traces,
            ("eps_count", "betas", "include_log", "defect_N"),
            ("finite_part_target", "finite_part_tol", "zeta_0_tol", "zeta_2_tol"),
        ),
        ExperimentDef(
            "amplitude",
            "heat-damped real-time amplitude over the reference cut-off "
            "with finite-part fit and truncation-bias bound",
            ("N_ref", "t", "eps_start"),
            _run_amplitude,
            ("eps_count", "betas", "include_log", "tol"),
            ("finite_part_re_target", "finite_part_tol", "max_truncation_bias"),
        ),
    ]
}


def list_experiments() -> List[Tuple[str, str, Tuple[str, ...]]]:
    """Static registry: (name, description, required param keys)."""
    return [
        (e.name, e.description, e.required_params) for e in _EXPERIMENTS.values()
    ]


def _map_ordered(fn, items, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------------------
# validation / loading


def _validate(cfg_dict: Dict[str, Any]) -> List[str]:
    problems: List[str] = []
    unknown = set(cfg_dict) - _TOP_KEYS
    if unknown:
        problems.append(f"unknown top-level keys: {sorted(unknown)}")
    name = cfg_dict.get("experiment")
    if name not in _EXPERIMENTS:
        problems.append(f"unknown experiment {name!r}")
        return problems
    model = cfg_dict.get("model", {})
    if set(model) - _MODEL_KEYS:
        problems.append(f"unknown model keys: {sorted(set(model) - _MODEL_KEYS)}")
    if model.get("kind") not in ("fourier_circle", "hermite_line", "explicit_diagonal"):
        problems.append(f"unknown model kind {model.get('kind')!r}")
    fam = cfg_dict.get("family", {})
    if set(fam) - _FAMILY_KEYS:
        problems.append(f"unknown family keys: {sorted(set(fam) - _FAMILY_KEYS)}")
    for tspec in fam.get("terms", []):
        if set(tspec) - _TERM_KEYS:
            problems.append(f"unknown term keys: {sorted(set(tspec) - _TERM_KEYS)}")
        if tspec.get("coefficient") not in COEFFICIENTS:
            problems.append(f"unknown coefficient {tspec.get('coefficient')!r}")
    if not problems:
        try:
            m = _build_model_from_config(model)
            _build_family_from_config(m, fam)
        except Exception as exc:
            problems.append(f"model/family construction failed: {exc}")
    params = cfg_dict.get("params", {})
    expdef = _EXPERIMENTS[name]
    for key in expdef.required_params:
        if key not in params:
            problems.append(f"missing required parameter {key!r}")
    unknown_params = set(params) - set(expdef.allowed_params)
    if unknown_params:
        problems.append(
            f"unknown parameters for {name}: {sorted(unknown_params)}"
        )
    unknown_criteria = set(cfg_dict.get("criteria", {})) - set(expdef.criteria_keys)
    if unknown_criteria:
        problems.append(
            f"unknown criteria for {name}: {sorted(unknown_criteria)}"
        )
    if "Ns" in params:
        Ns = params["Ns"]
        if any(b <= a for a, b in zip(Ns[:-1], Ns[1:])):
            problems.append("Ns must be strictly increasing")
    for key in ("tol", "quad_tol"):
        if key in params and not params[key] > 0:
            problems.append(f"{key} must be positive")
    seed = cfg_dict.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        problems.append("seed must be a nonnegative integer")
    return problems


def validate_config(path: os.PathLike) -> List[str]:
    """Full validation without execution; returns the violation list."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        return [f"unreadable file: {exc}"]
    try:
        cfg_dict = json.loads(text)
    except json.JSONDecodeError as exc:
        return [f"malformed JSON: {exc}"]
    if not isinstance(cfg_dict, dict):
        return ["config root must be an object"]
    return _validate(cfg_dict)


def load_config(path: os.PathLike) -> ExperimentConfig:
    problems = validate_config(path)
    if problems:
        raise ConfigError("; ".join(problems))
    cfg_dict = json.loads(Path(path).read_text())
    return config_from_dict(cfg_dict)


def config_from_dict(cfg_dict: Dict[str, Any]) -> ExperimentConfig:
    problems = _validate(cfg_dict)
    if problems:
        raise ConfigError("; ".join(problems))
    return ExperimentConfig(
        experiment=cfg_dict["experiment"],
        model=cfg_dict.get("model", {}),
        family=cfg_dict.get("family", {}),
        params=cfg_dict.get("params", {}),
        criteria=cfg_dict.get("criteria", {}),
        seed=int(cfg_dict.get("seed", 0)),
    )


def run_experiment(
    cfg: ExperimentConfig,
    out_dir: Optional[os.PathLike] = None,
    workers: Optional[int] = None,
) -> ExperimentReport:
    """Execute the named experiment, optionally writing results and summary.

    Deterministic for a fixed config and seed; the exit criteria declared in
    the config are evaluated into ``summary['pass']``.
    """
    if workers is None:
        workers = int(os.environ.get("CUTOFFLAB_WORKERS", "1"))
    start = time.perf_counter()
    expdef = _EXPERIMENTS[cfg.experiment]
    model = _build_model_from_config(cfg.model)
    family = _build_family_from_config(model, cfg.family)
    header, rows, summary, crit_handlers = expdef.runner(cfg, model, family, workers)
    passed = True
    for key, value in cfg.criteria.items():
        if key not in crit_handlers:
            raise ConfigError(f"unknown criterion {key!r} for {cfg.experiment}")
        if not crit_handlers[key](value):
            passed = False
    summary_full = {
        "experiment": cfg.experiment,
        "config_hash": cfg.config_hash(),
        "slopes": summary.pop("slopes", {}),
        "constants": summary,
        "pass": passed,
        "wall_clock_seconds": time.perf_counter() - start,
    }
    report = ExperimentReport(cfg.experiment, cfg.config_hash(), header, rows, summary_full)
    if out_dir is not None:
        report.write(Path(out_dir))
    return report
