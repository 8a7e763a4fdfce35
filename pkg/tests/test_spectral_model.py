import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cutofflab import (
    ElementProvider,
    ScaleVector,
    build_model,
    cutoff_space,
    project,
    scale_weights,
    sobolev_norm,
    tail_norm,
)
from cutofflab.spectral_model import (
    EmptySpaceError,
    InvalidModelError,
    ModelMismatchError,
)


class TestBuildModel:
    def test_fourier_eigenvalues_and_labels(self, fourier):
        assert list(fourier.eigenvalues(5)) == [1.0, 2.0, 2.0, 5.0, 5.0]
        assert [fourier.label(j) for j in range(1, 6)] == [0, 1, -1, 2, -2]

    def test_hermite_eigenvalues(self, hermite):
        assert list(hermite.eigenvalues(4)) == [2.0, 4.0, 6.0, 8.0]

    def test_explicit_linear(self, linear):
        assert list(linear.eigenvalues(3)) == [1.0, 2.0, 3.0]

    def test_non_monotone_generator_rejected(self):
        with pytest.raises(InvalidModelError):
            build_model("explicit_diagonal", {"eigenvalues": lambda j: -float(j)})

    def test_non_hermitian_user_term_rejected(self):
        bad = ElementProvider(lambda j, k: 1.0 if k == j + 1 else 0.0, width=1)
        with pytest.raises(InvalidModelError):
            build_model(
                "explicit_diagonal",
                {"eigenvalues": lambda j: float(j), "terms": {"bad": bad}},
            )

    def test_unknown_kind(self):
        with pytest.raises(InvalidModelError):
            build_model("torus")

    @pytest.mark.parametrize("kind", ["fourier_circle", "hermite_line"])
    def test_eigenvalues_diverge(self, kind):
        model = build_model(kind)
        assert model.eigenvalue(500) > 100.0

    @pytest.mark.parametrize("kind", ["fourier_circle", "hermite_line"])
    def test_builtin_providers_hermitian_on_window(self, kind):
        model = build_model(kind)
        for prov in model.element_providers.values():
            for j in range(1, 65):
                for k in range(1, 65):
                    assert prov.elem(j, k) == np.conj(prov.elem(k, j))


class TestCutoffSpace:
    def test_fourier_at_five(self, fourier):
        sp = cutoff_space(fourier, 5.0)
        assert sp.dim == 5
        assert sorted(fourier.label(j) for j in sp.indices) == [-2, -1, 0, 1, 2]

    def test_hermite_at_seven(self, hermite):
        sp = cutoff_space(hermite, 7.0)
        assert sp.dim == 3
        assert [hermite.label(j) for j in sp.indices] == [0, 1, 2]

    def test_linear_at_ten(self, linear):
        assert cutoff_space(linear, 10.0).dim == 10

    def test_below_first_eigenvalue_gives_zero_space(self, linear):
        assert cutoff_space(linear, 0.5).dim == 0

    def test_membership_is_exact_threshold(self, linear):
        sp = cutoff_space(linear, 3.0)
        assert sp.indices == (1, 2, 3)

    @given(
        n1=st.floats(min_value=0.0, max_value=200.0),
        n2=st.floats(min_value=0.0, max_value=200.0),
    )
    @settings(max_examples=40, deadline=None)
    def test_monotone_exhaustion(self, n1, n2):
        model = build_model("fourier_circle")
        lo, hi = sorted((n1, n2))
        s_lo, s_hi = cutoff_space(model, lo), cutoff_space(model, hi)
        assert s_lo.dim <= s_hi.dim
        assert set(s_lo.indices) <= set(s_hi.indices)


class TestProject:
    def test_drops_high_modes(self, linear):
        u = ScaleVector(linear, {1: 1.0, 100: 1.0})
        sp = cutoff_space(linear, 10.0)
        assert project(sp, u).coefficients == {1: 1.0 + 0.0j}

    def test_identity_on_supported_vectors(self, linear):
        u = ScaleVector(linear, {2: 0.5 + 1.0j, 7: -2.0})
        sp = cutoff_space(linear, 10.0)
        assert project(sp, u).coefficients == u.coefficients

    def test_zero_vector(self, linear):
        u = ScaleVector(linear, {})
        assert project(cutoff_space(linear, 10.0), u).coefficients == {}

    def test_idempotent(self, linear):
        u = ScaleVector(linear, {1: 1.0, 5: 2.0, 50: 3.0})
        sp = cutoff_space(linear, 20.0)
        once = project(sp, u)
        assert project(sp, once).coefficients == once.coefficients

    def test_model_mismatch(self, linear, fourier):
        u = ScaleVector(fourier, {1: 1.0})
        with pytest.raises(ModelMismatchError):
            project(cutoff_space(linear, 5.0), u)


class TestNorms:
    @pytest.mark.parametrize("j,s", [(1, 0.5), (3, 1.0), (10, 2.0)])
    def test_single_mode(self, linear, j, s):
        u = linear.basis_vector(j)
        expected = (1.0 + linear.eigenvalue(j)) ** s
        assert sobolev_norm(linear, u, s) == pytest.approx(expected, rel=1e-14)

    def test_s_zero_is_euclidean(self, linear):
        u = ScaleVector(linear, {1: 3.0, 4: 4.0j})
        assert sobolev_norm(linear, u, 0.0) == pytest.approx(5.0, rel=1e-14)

    def test_two_mode_example(self, linear):
        # direct sum (1+1)^2 + (1+2)^2 = 13
        u = ScaleVector(linear, {1: 1.0, 2: 1.0})
        assert sobolev_norm(linear, u, 1.0) == pytest.approx(math.sqrt(13.0), rel=1e-14)

    def test_tail_inside_is_zero(self, linear):
        u = ScaleVector(linear, {1: 1.0, 5: 2.0})
        assert tail_norm(linear, u, 10.0, 1.0) == 0.0

    def test_tail_single_excluded_mode(self, linear):
        u = ScaleVector(linear, {20: 0.5j})
        assert tail_norm(linear, u, 10.0, 0.0) == pytest.approx(0.5, rel=1e-14)

    def test_tail_vanishes_once_cutoff_covers_support(self, linear):
        u = ScaleVector(linear, {3: 1.0, 8: 2.0})
        assert tail_norm(linear, u, u.max_eigenvalue(), 2.0) == 0.0

    @given(st.integers(min_value=0, max_value=2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_tail_nonincreasing_in_cutoff(self, seed):
        model = build_model(
            "explicit_diagonal", {"eigenvalues": lambda j: float(j)}
        )
        rng = np.random.default_rng(seed)
        support = rng.integers(1, 60, size=6)
        u = ScaleVector(
            model, {int(j): complex(rng.normal(), rng.normal()) for j in support}
        )
        s = float(rng.choice([0.0, 1.0, 2.0]))
        values = [tail_norm(model, u, float(N), s) for N in (5, 10, 20, 40, 80)]
        assert all(a >= b - 1e-15 for a, b in zip(values[:-1], values[1:]))

    @given(st.integers(min_value=0, max_value=2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_projection_contraction(self, seed):
        model = build_model("fourier_circle")
        rng = np.random.default_rng(seed)
        support = rng.integers(1, 50, size=5)
        u = ScaleVector(
            model, {int(j): complex(rng.normal(), rng.normal()) for j in support}
        )
        sp = cutoff_space(model, float(rng.uniform(0.0, 60.0)))
        for s in (0.0, 1.0, 2.0):
            assert sobolev_norm(model, project(sp, u), s) <= sobolev_norm(
                model, u, s
            ) * (1 + 1e-15)


class TestScaleWeights:
    def test_r_zero_gives_ones(self, fourier):
        sp = cutoff_space(fourier, 5.0)
        assert np.all(scale_weights(sp, 0.0) == 1.0)

    def test_r_one_values(self, fourier):
        sp = cutoff_space(fourier, 2.0)  # lambda = (1, 2, 2)
        assert np.allclose(scale_weights(sp, 1.0), [2.0, 3.0, 3.0])

    def test_r_minus_one_inverts(self, fourier):
        sp = cutoff_space(fourier, 20.0)
        prod = scale_weights(sp, 1.0) * scale_weights(sp, -1.0)
        assert np.allclose(prod, 1.0, rtol=1e-15)

    def test_empty_space_rejected(self, linear):
        with pytest.raises(EmptySpaceError):
            scale_weights(cutoff_space(linear, 0.0), 1.0)
