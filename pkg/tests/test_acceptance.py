"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with ``pytest -s tests/test_acceptance.py`` to see the per-criterion
lines.  The tolerances are fixed here, not calibrated at runtime.
"""

import math
import time

import numpy as np
import pytest

from cutofflab import (
    ScaleVector,
    apply_family,
    assemble_family,
    build_model,
    commutator_constant,
    convergence_sweep_N,
    cutoff_matrix,
    cutoff_space,
    duhamel_bound,
    energy_stability_check,
    fm_coefficient,
    fm_convergence_sweep,
    reference_with_self_check,
    slicing_order_sweep,
    stroboscopic_error,
)
from cutofflab.propagator import cutoff_propagator

from conftest import spin_model
from test_floquet import SY, nested_quadrature_first_order


def report(criterion: str, ok: bool, detail: str) -> None:
    print(f"{criterion}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"{criterion} failed: {detail}"


@pytest.fixture(scope="module")
def circle():
    return build_model("fourier_circle")


@pytest.fixture(scope="module")
def circle_family(circle):
    return assemble_family(
        circle,
        [("laplacian", lambda t: 1.0), ("cos_x", lambda t: math.sin(2 * math.pi * t))],
        period=1.0,
        loss_order=2.0,
    )


@pytest.fixture(scope="module")
def circle_free(circle):
    return assemble_family(circle, [("laplacian", lambda t: 1.0)], period=1.0)


@pytest.fixture(scope="module")
def spin_setup():
    model = spin_model()
    family = assemble_family(
        model,
        [("sz_half", lambda t: 1.0), ("sx", lambda t: math.sin(2 * math.pi * t))],
        period=1.0,
    )
    return model, family, cutoff_space(model, 2.5)


def test_ac1_strong_cutoff_convergence(circle, circle_family):
    start = time.perf_counter()
    u = circle.basis_vector(1)  # Fourier label k = 0
    Ns = [10.0, 20.0, 40.0, 80.0]
    sweep = convergence_sweep_N(circle_family, u, 0.0, 1.0, Ns, 400.0, tol=1e-10)
    _, delta = reference_with_self_check(circle_family, 400.0, 0.0, 1.0, u, 1e-10)
    elapsed = time.perf_counter() - start
    errors = [err for _, err in sweep]
    decreasing = all(a > b for a, b in zip(errors[:-1], errors[1:]))
    report(
        "AC-1",
        decreasing and errors[-1] < 1e-6 and delta < 1e-8 and elapsed < 60.0,
        f"errors={['%.3e' % e for e in errors]}, oracle_delta={delta:.3e}, "
        f"runtime={elapsed:.1f}s",
    )


def test_ac2_time_slicing_order(circle, circle_family):
    start = time.perf_counter()
    space = cutoff_space(circle, 40.0)
    fit = slicing_order_sweep(circle_family, space, 0.0, 1.0, [64, 128, 256, 512, 1024])
    elapsed = time.perf_counter() - start
    ok = fit.slope is not None and abs(fit.slope - 1.0) <= 0.2 and elapsed < 60.0
    report(
        "AC-2",
        ok,
        f"fitted slope={fit.slope:.4f} (target 1.0 +/- 0.2), "
        f"residual={fit.residual:.2e}, runtime={elapsed:.1f}s",
    )


def test_ac3_duhamel_inequality(circle, circle_family, circle_free):
    u = circle.basis_vector(1)
    details = []
    ok = True
    for N in (10.0, 20.0, 40.0, 80.0):
        err, bound = duhamel_bound(circle_family, circle, N, 400.0, u, 0.0, 1.0)
        holds = err <= bound + 1e-8
        ok = ok and holds
        details.append(f"N={int(N)}: err={err:.3e} <= bound={bound:.3e}")
    err0, bound0 = duhamel_bound(circle_free, circle, 10.0, 400.0, u, 0.0, 1.0)
    control = err0 == 0.0 and bound0 == 0.0
    report(
        "AC-3",
        ok and control,
        "; ".join(details) + f"; free control=({err0:.1e},{bound0:.1e})",
    )


def test_ac4_stroboscopic_error_law(spin_setup):
    start = time.perf_counter()
    _, family, space = spin_setup
    Ts = [0.2, 0.1, 0.05, 0.025]
    slope_ok = True
    slope_text = []
    for L in (0, 1):
        errs = [stroboscopic_error(family, space, L, T) for T in Ts]
        slope = float(np.polyfit(np.log(Ts), np.log(errs), 1)[0])
        slope_ok = slope_ok and abs(slope - (L + 2)) <= 0.3
        slope_text.append(f"L={L}: slope={slope:.3f}")
    T = 0.1
    e1 = stroboscopic_error(family, space, 1, T, q=1)
    tel_ok = True
    for q in (2, 3, 5):
        eq = stroboscopic_error(family, space, 1, T, q=q)
        tel_ok = tel_ok and eq <= q * e1 * (1 + 1e-6)
    elapsed = time.perf_counter() - start
    report(
        "AC-4",
        slope_ok and tel_ok and elapsed < 30.0,
        f"{'; '.join(slope_text)}; telescoping q in (2,3,5) "
        f"{'holds' if tel_ok else 'violated'}; runtime={elapsed:.1f}s",
    )


def test_ac5_first_order_coefficient_exactness(spin_setup):
    model, family, space = spin_setup
    K1 = fm_coefficient(family, space, 1, quad_tol=1e-12)
    # analytic double integral with the monodromy-consistent sign convention:
    # +(w g / 2 pi) sigma_y for the sine drive (see decisions ledger on the
    # opposite-sign convention that appears in part of the literature)
    analytic = (1.0 / (2.0 * math.pi)) * SY
    gap_analytic = float(np.max(np.abs(K1 - analytic)))
    oracle = nested_quadrature_first_order(family, space)
    gap_quad = float(np.max(np.abs(K1 - oracle)))
    cos_family = assemble_family(
        model,
        [("sz_half", lambda t: 1.0), ("sx", lambda t: math.cos(2 * math.pi * t))],
        period=1.0,
    )
    K1_cos = fm_coefficient(cos_family, space, 1, quad_tol=1e-12)
    gap_cos = float(np.max(np.abs(K1_cos)))
    report(
        "AC-5",
        gap_analytic < 1e-8 and gap_quad < 1e-8 and gap_cos < 1e-10,
        f"|K1 - (wg/2pi) sy|={gap_analytic:.2e}, |K1 - nested quad|="
        f"{gap_quad:.2e}, cosine control |K1|={gap_cos:.2e}",
    )


def test_ac6_coefficient_convergence(circle, circle_family):
    u = circle.basis_vector(1)
    ok = True
    details = []
    for ell in (0, 1):
        sweep = fm_convergence_sweep(
            circle_family, circle, ell, u, [10.0, 20.0, 40.0], 160.0
        )
        devs = [dev for _, dev in sweep]
        nonincreasing = all(a >= b - 1e-15 for a, b in zip(devs[:-1], devs[1:]))
        ok = ok and nonincreasing and devs[-1] < 1e-8
        details.append(f"ell={ell}: final={devs[-1]:.2e}")
    report("AC-6", ok, "; ".join(details) + " (banded locality: exact zeros)")


def test_ac7_energy_stability(circle, circle_family, circle_free):
    space = cutoff_space(circle, 20.0)
    C = commutator_constant(circle, circle_family, space, 1.0, grid_points=101)
    ratio, bound = energy_stability_check(circle_family, space, 1.0, 0.0, 1.0, C)
    holds = ratio <= bound * (1 + 1e-8)
    ratio0, bound0 = energy_stability_check(circle_free, space, 1.0, 0.0, 1.0, 0.0)
    control = abs(ratio0 - 1.0) <= 1e-12 and bound0 == 1.0
    report(
        "AC-7",
        holds and control,
        f"C={C:.6f}, max ratio={ratio:.6f} <= exp(C/2)={bound:.6f}; "
        f"diagonal control ratio={ratio0:.12f}",
    )


def test_ac8_trace_finite_parts():
    from cutofflab import (
        BandedOperator,
        fit_finite_part,
        heat_trace,
        trace_defect,
        zeta_value,
    )

    start = time.perf_counter()
    linear = build_model(
        "explicit_diagonal", {"eigenvalues": lambda j: float(j), "tail_gap": 1.0}
    )
    grid = [0.0125 * 0.5**k for k in range(5)]
    fit = fit_finite_part(grid, [heat_trace(linear, e) for e in grid], [1.0])
    a0 = fit.finite_part.real
    z0 = zeta_value(linear, None, 0.0).real
    z2 = zeta_value(linear, None, 2.0).real
    shift = BandedOperator(lambda j, k: 1.0 if j == k + 1 else 0.0, width=1)
    shift_adj = BandedOperator(lambda j, k: 1.0 if k == j + 1 else 0.0, width=1)
    first, second = trace_defect(cutoff_space(linear, 16.0), shift, shift_adj)
    elapsed = time.perf_counter() - start
    ok = (
        abs(a0 + 0.5) <= 1e-3
        and abs(z0 + 0.5) <= 1e-6
        and abs(z2 - math.pi**2 / 6.0) <= 1e-8
        and first == -1.0
        and abs(second) <= 1e-12
        and elapsed < 10.0
    )
    report(
        "AC-8",
        ok,
        f"a0={a0:.6f} (target -0.5 +/- 1e-3), zeta(0)={z0:.8f}, "
        f"zeta(2)-pi^2/6={z2 - math.pi**2 / 6:.1e}, defect=({first:.1f},"
        f"{abs(second):.1e}), runtime={elapsed:.1f}s",
    )


def _random_configuration(rng):
    """One seeded random model/family/interval configuration."""
    kind = rng.choice(["fourier_circle", "hermite_line", "linear"])
    if kind == "linear":
        model = spin_model()
        pool = ["h0_diag", "sz_half", "sx"]
    else:
        model = build_model(kind)
        pool = list(model.element_providers)
    waveforms = [
        lambda t: 1.0,
        lambda t: math.sin(2 * math.pi * t),
        lambda t: math.cos(2 * math.pi * t),
    ]
    n_terms = int(rng.integers(1, 3))
    terms = []
    for _ in range(n_terms):
        name = str(rng.choice(pool))
        amp = float(rng.uniform(-2.0, 2.0))
        wf = waveforms[int(rng.integers(0, 3))]
        terms.append((name, lambda t, a=amp, w=wf: a * w(t)))
    family = assemble_family(model, terms, period=1.0)
    lo = float(model.eigenvalue(3))
    hi = float(model.eigenvalue(8))
    N = float(rng.uniform(lo, hi))
    s, r, t = np.sort(rng.uniform(-0.5, 1.0, size=3))
    if r - s < 0.05:
        r = s + 0.05
    if t - r < 0.05:
        t = r + 0.05
    return model, family, N, float(s), float(r), float(t)


def test_ac9_invariant_suite():
    start = time.perf_counter()
    rng = np.random.default_rng(20250809)
    tol = 1e-10
    worst = {"unitarity": 0.0, "composition": 0.0, "norm": 0.0, "hermiticity": 0.0}
    for _ in range(100):
        model, family, N, s, r, t = _random_configuration(rng)
        space = cutoff_space(model, N)
        H = cutoff_matrix(family, space, float(rng.uniform(0.0, 1.0)))
        scale = max(float(np.max(np.abs(H))), 1e-30)
        worst["hermiticity"] = max(
            worst["hermiticity"], float(np.max(np.abs(H - H.conj().T))) / scale
        )
        U_ts = cutoff_propagator(family, space, s, t, tol)
        U_tr = cutoff_propagator(family, space, r, t, tol)
        U_rs = cutoff_propagator(family, space, s, r, tol)
        worst["unitarity"] = max(
            worst["unitarity"], U_ts.unitarity_defect, U_tr.unitarity_defect,
            U_rs.unitarity_defect,
        )
        worst["composition"] = max(
            worst["composition"],
            float(np.linalg.norm(U_tr.matrix @ U_rs.matrix - U_ts.matrix, 2)),
        )
        v = rng.normal(size=space.dim) + 1j * rng.normal(size=space.dim)
        worst["norm"] = max(
            worst["norm"],
            abs(float(np.linalg.norm(U_ts.matrix @ v)) - float(np.linalg.norm(v)))
            / float(np.linalg.norm(v)),
        )
    elapsed = time.perf_counter() - start
    ok = (
        worst["unitarity"] <= 1e-10
        and worst["composition"] <= 10 * tol
        and worst["norm"] <= 1e-10
        and worst["hermiticity"] <= 1e-12
        and elapsed < 120.0
    )
    report(
        "AC-9",
        ok,
        f"100 seeded configs: unitarity={worst['unitarity']:.2e}, "
        f"composition={worst['composition']:.2e}, norm={worst['norm']:.2e}, "
        f"hermiticity={worst['hermiticity']:.2e}, runtime={elapsed:.1f}s",
    )
