import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from discspec.cylinder import (
    IRRATIONALS,
    Angle,
    ConstantAlpha,
    IdentityAlpha,
    ObservableSpec,
    Piecewise,
    StepAlpha,
    cesaro_cylinder,
    csv_report,
    fiber_unique_ergodicity,
    geometric_bound,
    mean_ergodicity_scan,
    orbit_phases,
    parse_alpha,
    parse_observable,
    t_grid,
)
from discspec.dynamics import FinSystem
from discspec.errors import PreconditionError
from discspec.koopman import QComplex, QFunction, cesaro_mean

F = Fraction
GOLDEN = ConstantAlpha(Angle(name="golden"))
RE_Z = parse_observable("re(z)")
RE_Z2 = parse_observable("re(z^2)")


def test_observable_parser():
    assert RE_Z2.terms == ((-2, QComplex(F(1, 2))), (2, QComplex(F(1, 2))))
    f = parse_observable("1/2*im(z) - z^-3 + 2")
    assert dict(f.terms) == {-3: QComplex(-1), -1: QComplex(0, F(1, 4)), 0: QComplex(2), 1: QComplex(0, F(-1, 4))}
    assert parse_observable("z + z").terms == ((1, QComplex(2)),)
    for bad in ["", "sin(z)", "z^9", "re(z", "2**z"]:
        with pytest.raises(PreconditionError):
            parse_observable(bad)


def test_observable_evaluates_like_definition():
    f = parse_observable("re(z^3) + 1/3*im(z^-2) - 5")
    phases = np.linspace(0, 1, 17, endpoint=False)
    z = np.exp(2j * np.pi * phases)
    expected = np.real(z**3) + np.imag(z**-2) / 3 - 5
    assert np.allclose(f.evaluate(phases, 0), expected)


def test_alpha_parser():
    assert parse_alpha("identity") == IdentityAlpha()
    assert parse_alpha("golden") == GOLDEN
    assert parse_alpha("3/4").angle_at(0) == Angle(rational=F(3, 4))
    step = parse_alpha("step:1/2:golden,0")
    assert step.angle_at(F(1, 4)).name == "golden"
    assert step.angle_at(F(1, 2)).rational == 0
    for bad in ["pi", "step:1/2:golden", "step:3/4,1/4:0,0,0"]:
        with pytest.raises(PreconditionError):
            parse_alpha(bad)


def test_piecewise_coefficient():
    f = ObservableSpec(((1, Piecewise((F(1, 2),), (QComplex(1), QComplex(0)))),))
    assert f.coefficients(F(1, 4)) == [(1, 1 + 0j)]
    assert f.coefficients(F(3, 4)) == [(1, 0j)]


def test_cesaro_examples():
    n = 10**4
    a = IRRATIONALS["golden"]
    assert abs(cesaro_cylinder(GOLDEN, RE_Z, 0.0, 0, n)) <= 2 / (n * abs(cmath.exp(2j * math.pi * a) - 1))
    assert cesaro_cylinder(ConstantAlpha(Angle(rational=F(0))), RE_Z, 0.0, 0, 37) == 1.0
    for theta in [0.0, 0.1, 0.25, 0.7]:
        assert cesaro_cylinder(IdentityAlpha(), RE_Z2, theta, F(1, 2), 101).real == pytest.approx(
            math.cos(4 * math.pi * theta), abs=1e-12
        )


def test_cesaro_preconditions():
    for theta, t, n in [(0.0, 0, 0), (1.0, 0, 5), (-0.1, 0, 5), (0.0, 2, 5)]:
        with pytest.raises(PreconditionError):
            cesaro_cylinder(GOLDEN, RE_Z, theta, t, n)


def test_orbit_phases_are_exact_for_rationals():
    phases = orbit_phases(0.0, Angle(rational=F(1, 3)), 9)
    assert list(phases) == [0.0, 1 / 3, 2 / 3] * 3
    huge = Angle(rational=F(1, 3**40))
    assert orbit_phases(0.0, huge, 3)[2] == pytest.approx(2 / 3**40)


def test_fiber_verdict_examples():
    v = fiber_unique_ergodicity(IdentityAlpha(), RE_Z2, F(1, 2), 1000, 64)
    assert not v.uniquely_ergodic_evidence
    assert v.gap == pytest.approx(2.0, abs=1e-9)
    assert v.witness == (0.0, 0.25)
    assert v.analytic_uniquely_ergodic is False

    v = fiber_unique_ergodicity(GOLDEN, RE_Z, F(3, 7), 10**4, 64, 1e-2)
    assert v.uniquely_ergodic_evidence and v.witness is None
    assert v.analytic_uniquely_ergodic is True

    v = fiber_unique_ergodicity(ConstantAlpha(Angle(rational=F(0))), RE_Z, 0, 50)
    assert not v.uniquely_ergodic_evidence and v.gap == pytest.approx(2.0)
    with pytest.raises(PreconditionError):
        fiber_unique_ergodicity(GOLDEN, RE_Z, 0, 10, n_samples=1)


def test_scan_examples():
    golden = mean_ergodicity_scan(GOLDEN, RE_Z, 11, 10**4, 1e-2)
    assert golden.mean_ergodic_evidence and not golden.illustrative

    ident = mean_ergodicity_scan(IdentityAlpha(), RE_Z2, 11, 1000, 1e-2)
    assert not ident.mean_ergodic_evidence
    half = next(r for r in ident.rows if r.t == F(1, 2))
    assert not half.uniquely_ergodic_evidence and half.gap == pytest.approx(2.0, abs=1e-9)

    step = mean_ergodicity_scan(StepAlpha((F(1, 2),), (Angle(name="golden"), Angle(rational=F(0)))), RE_Z, 11, 10**4, 1e-2)
    assert step.illustrative
    assert [r.t for r in step.failures()] == [t for t in t_grid(11) if t >= F(1, 2)]


def test_csv_examples():
    two = csv_report(mean_ergodicity_scan(GOLDEN, RE_Z, 2, 100, 1e-1))
    assert two.count("\n") == 3 and two.startswith("t,verdict,gap,n\n")
    with pytest.raises(PreconditionError):
        t_grid(1)
    text = csv_report(mean_ergodicity_scan(GOLDEN, RE_Z, 11, 10**4, 1e-2))
    lines = text.splitlines()
    assert len(lines) == 12
    assert all(line.split(",")[1] == "UE" for line in lines[1:])
    assert lines[6].split(",")[0] == "0.5"


@pytest.mark.parametrize("name", sorted(IRRATIONALS))
@pytest.mark.parametrize("n", [10**2, 10**3, 10**4])
def test_geometric_bound_holds(name, n):
    alpha = ConstantAlpha(Angle(name=name))
    bound = geometric_bound(IRRATIONALS[name], n)
    for i in range(64):
        assert abs(cesaro_cylinder(alpha, RE_Z, i / 64, 0, n).real) <= bound + 1e-9


@settings(max_examples=30)
@given(st.integers(1, 2000), st.floats(0, 1, exclude_max=True))
def test_exact_invariance_under_half_turn(n, theta):
    got = cesaro_cylinder(IdentityAlpha(), RE_Z2, theta, F(1, 2), n)
    assert abs(got - math.cos(4 * math.pi * theta)) <= 1e-12


def test_gap_shrinks_with_n():
    small = fiber_unique_ergodicity(GOLDEN, RE_Z, 0, 10**2)
    large = fiber_unique_ergodicity(GOLDEN, RE_Z, 0, 10**4)
    assert large.gap < small.gap


def _exact_average(p, q, k, start):
    """Exact A_q z^k at phase ``start/4`` via the q-cycle of quarter turns."""
    cycle = FinSystem(tuple((j + 1) % q for j in range(q)))
    quarter = [QComplex(1), QComplex(0, 1), QComplex(-1), QComplex(0, -1)]
    # Orbit point j sits at phase start/4 + j*p/q; with q | 4 this is a quarter turn.
    values = [quarter[(k * (start + j * p * (4 // q))) % 4] for j in range(q)]
    return complex(cesaro_mean(cycle, QFunction(tuple(values)), q)[0])


@pytest.mark.parametrize("p, q", [(0, 1), (1, 2), (1, 4), (3, 4)])
@pytest.mark.parametrize("k", [-3, -1, 1, 2, 4, 5])
def test_rational_rotation_matches_exact_cycle(p, q, k):
    alpha = ConstantAlpha(Angle(rational=F(p, q)))
    f = ObservableSpec(((k, QComplex(1)),))
    for start in range(4):
        got = cesaro_cylinder(alpha, f, start / 4, 0, q)
        assert abs(got - _exact_average(p, q, k, start)) <= 1e-9
