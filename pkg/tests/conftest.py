import math

import pytest

from cutofflab import ElementProvider, assemble_family, build_model


@pytest.fixture(scope="session")
def fourier():
    return build_model("fourier_circle")


@pytest.fixture(scope="session")
def hermite():
    return build_model("hermite_line")


@pytest.fixture(scope="session")
def linear():
    """Solvable diagonal model with lambda_j = j."""
    return build_model(
        "explicit_diagonal", {"eigenvalues": lambda j: float(j), "tail_gap": 1.0}
    )


@pytest.fixture(scope="session")
def driven_circle(fourier):
    """H(t) = -d^2/dx^2 + sin(2 pi t) cos(x) on the circle."""
    return assemble_family(
        fourier,
        [("laplacian", lambda t: 1.0), ("cos_x", lambda t: math.sin(2 * math.pi * t))],
        period=1.0,
        loss_order=2.0,
    )


@pytest.fixture(scope="session")
def free_circle(fourier):
    """The control family with no drive at all."""
    return assemble_family(fourier, [("laplacian", lambda t: 1.0)], period=1.0,
                           loss_order=2.0)


def spin_model():
    """Two-level system embedded on the linear diagonal model."""
    terms = {
        "sz_half": ElementProvider(
            lambda j, k: (0.5 if j == 1 else -0.5) if (j == k and j <= 2) else 0.0,
            width=0,
        ),
        "sx": ElementProvider(lambda j, k: 1.0 if {j, k} == {1, 2} else 0.0, width=1),
    }
    return build_model(
        "explicit_diagonal",
        {"eigenvalues": lambda j: float(j), "terms": terms, "tail_gap": 1.0},
    )


@pytest.fixture(scope="session")
def spin():
    return spin_model()


@pytest.fixture(scope="session")
def spin_family(spin):
    """H(tau) = (w/2) sz + g sin(2 pi tau) sx with w = g = 1."""
    return assemble_family(
        spin,
        [("sz_half", lambda t: 1.0), ("sx", lambda t: math.sin(2 * math.pi * t))],
        period=1.0,
    )


@pytest.fixture(scope="session")
def spin_family_cos(spin):
    return assemble_family(
        spin,
        [("sz_half", lambda t: 1.0), ("sx", lambda t: math.cos(2 * math.pi * t))],
        period=1.0,
    )
