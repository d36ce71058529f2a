from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from discspec.duality import (
    Character,
    DualBundle,
    FiberHom,
    bidual_check,
    dual_group,
    dual_morphism,
    dual_of_subtrivialized,
    dual_of_trivial_product_check,
    dual_rotation_bundle,
    dual_spectrum_identity,
    evaluate,
)
from discspec.errors import PreconditionError
from discspec.koopman import RationalAngle
from discspec.spectrum import GroupRotationBundle, verify_witness

F = Fraction


@st.composite
def rotation_bundles(draw, max_order=24, max_fibers=5):
    fibers = []
    for _ in range(draw(st.integers(1, max_fibers))):
        m = draw(st.integers(1, max_order))
        units = [a for a in range(1, m + 1) if _gcd(a, m) == 1]
        fibers.append((m, draw(st.sampled_from(units))))
    return GroupRotationBundle(tuple(fibers))


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return a


def test_evaluate_examples():
    assert evaluate(Character(4, 1), 3) == RationalAngle(3, 4)
    assert all(evaluate(Character(7, 0), g) == RationalAngle(0, 1) for g in range(7))
    assert evaluate(Character(3, 2), 2) == RationalAngle(1, 3)
    with pytest.raises(PreconditionError):
        evaluate(Character(3, 1), 3)


def test_dual_group_examples():
    assert dual_group(1) == (Character(1, 0),)
    chars = dual_group(4)
    assert len(chars) == 4 and chars[1] * chars[3] == chars[0]
    # Z_3*: χ_1 generates and has order 3.
    chi = dual_group(3)[1]
    assert chi * chi != dual_group(3)[0] and chi * chi * chi == dual_group(3)[0]


def test_character_is_homomorphism():
    for m in range(1, 13):
        for chi in dual_group(m):
            for x in range(m):
                for y in range(m):
                    assert chi((x + y) % m) == chi(x) + chi(y)


def test_dual_rotation_examples():
    d = dual_rotation_bundle(GroupRotationBundle(((3, 1),)))
    assert d.fibers == ((3, RationalAngle(1, 3)),)
    assert d.subtrivialization_image() == {(RationalAngle.of(F(k, 3)), 0) for k in range(3)}
    assert dual_rotation_bundle(GroupRotationBundle(((2, 1),))).fibers == ((2, RationalAngle(1, 2)),)
    d = dual_rotation_bundle(GroupRotationBundle(((5, 2),)))
    assert d.fibers == ((5, RationalAngle(2, 5)),) and d.fibers[0][1].order == 5


def test_dual_of_subtrivialized_examples():
    assert dual_of_subtrivialized(DualBundle(((3, F(1, 3)),))).fibers == ((3, 1),)
    assert dual_of_subtrivialized(DualBundle(((2, F(1, 2)),))).fibers == ((2, 1),)
    assert dual_of_subtrivialized(DualBundle(((5, F(2, 5)),))).fibers == ((5, 2),)
    with pytest.raises(PreconditionError):
        DualBundle(((4, F(1, 2)),))


def test_bidual_examples():
    g = GroupRotationBundle(((3, 1), (2, 1)))
    w = bidual_check(g)
    assert w.state_bijection == tuple(range(5))
    assert bidual_check(GroupRotationBundle(((1, 1),))).state_bijection == (0,)
    g = GroupRotationBundle(((5, 2),))
    w = bidual_check(g)
    assert verify_witness(g.to_system(), dual_of_subtrivialized(dual_rotation_bundle(g)).to_system(), w)


def test_dual_morphism_examples():
    mod3 = FiberHom(6, 3, tuple(x % 3 for x in range(6)))
    d = dual_morphism([mod3], [0])
    assert d.tables == ((0, 2, 4),) and d.injective == (True,)

    ident = FiberHom(4, 4, tuple(range(4)))
    assert dual_morphism([ident], [0]).tables == ((0, 1, 2, 3),)

    double = FiberHom(2, 4, (0, 2))
    d = dual_morphism([double], [0])
    assert d.tables[0][1] == d.tables[0][3]
    assert d.injective == (False,)


def test_fiber_hom_rejects_non_homomorphism():
    with pytest.raises(PreconditionError):
        FiberHom(4, 4, (0, 1, 3, 2))


def test_dual_of_trivial_product_examples():
    assert dual_of_trivial_product_check(3, 4)
    assert dual_of_trivial_product_check(1, 1)
    assert dual_of_trivial_product_check(6, 2)


@given(rotation_bundles())
def test_bidual_and_round_trip(g):
    w = bidual_check(g)
    assert verify_witness(g.to_system(), dual_of_subtrivialized(dual_rotation_bundle(g)).to_system(), w)
    assert dual_of_subtrivialized(dual_rotation_bundle(g)) == g


@given(rotation_bundles())
def test_subtrivialization_image_is_spectrum(g):
    assert dual_spectrum_identity(g)


@given(st.integers(1, 24), st.data())
def test_dual_of_surjection_is_injective(m, data):
    a = data.draw(st.integers(1, 24 // m))
    hom = FiberHom(a * m, m, tuple(x % m for x in range(a * m)))
    assert hom.surjective
    assert all(dual_morphism([hom], [0]).injective)
