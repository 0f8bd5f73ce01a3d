import cmath

import pytest

from pfzeros import ModelSpec, PhaseSpec, Rectangle

OMEGA = cmath.exp(2j * cmath.pi / 3)


def two_phase_model(q1=1, q2=1, half=1.2):
    """Weights exp(z) and exp(-z): coexistence is exactly the imaginary axis."""
    return ModelSpec(
        phases=(
            PhaseSpec("plus", q1, (0j, 1 + 0j)),
            PhaseSpec("minus", q2, (0j, -1 + 0j)),
        ),
        domain=Rectangle(-half, half, -half, half),
    )


def three_phase_model(qs=(1, 1, 1), half=1.0, shift=0j):
    """Exponents omega^{m} (z - shift), cube-roots-of-unity symmetric."""
    phases = tuple(
        PhaseSpec(f"p{m}", qs[m], (-(OMEGA**m) * shift, OMEGA**m))
        for m in range(3)
    )
    return ModelSpec(phases=phases, domain=Rectangle(-half, half, -half, half))


def collinear_model():
    """Derivatives (-1, 0, 1) are collinear: the triple tie is a whole line."""
    return ModelSpec(
        phases=(
            PhaseSpec("a", 1, (0j, -1 + 0j)),
            PhaseSpec("b", 1, (0j,)),
            PhaseSpec("c", 1, (0j, 1 + 0j)),
        ),
        domain=Rectangle(-1, 1, -1, 1),
    )


def lee_yang_model(q=1, half=1.2):
    """Field-coordinate symmetric pair exp(+w), exp(-w); |z|=1 is Re w = 0."""
    return ModelSpec(
        phases=(
            PhaseSpec("plus", q, (0j, 1 + 0j)),
            PhaseSpec("minus", q, (0j, -1 + 0j)),
        ),
        domain=Rectangle(-half, half, -half, half),
        coordinate_map="exponential",
    )


@pytest.fixture
def m2():
    return two_phase_model()


@pytest.fixture
def m2_q12():
    return two_phase_model(q1=1, q2=2)


@pytest.fixture
def m3():
    return three_phase_model()


@pytest.fixture
def mly():
    return lee_yang_model()
