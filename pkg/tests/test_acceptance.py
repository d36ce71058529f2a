"""Acceptance gate: each test is one criterion and fails if it exceeds its time budget."""

import cmath
import math
import random
import time
from fractions import Fraction
from functools import lru_cache
from math import gcd, lcm

import pytest

from discspec.cli import main
from discspec.cylinder import (
    IRRATIONALS,
    Angle,
    ConstantAlpha,
    IdentityAlpha,
    fiber_unique_ergodicity,
    mean_ergodicity_scan,
    parse_observable,
)
from discspec.duality import (
    FiberHom,
    bidual_check,
    dual_morphism,
    dual_of_subtrivialized,
    dual_of_trivial_product_check,
    dual_rotation_bundle,
    dual_spectrum_identity,
)
from discspec.dynamics import (
    compose,
    ellis_semigroup,
    has_discrete_spectrum,
    identity_table,
    inverse_table,
    maximal_trivial_factor,
)
from discspec.io import canonical_encoding, serialize
from discspec.koopman import (
    cesaro_mean,
    compose_measure,
    disintegrate,
    invariant_measure_basis,
    is_invariant,
    mean_ergodic_projection,
    mergchar_finite_check,
    random_probability,
    random_qfunction,
    support_in_fiber_iff_dirac,
)
from discspec.spectrum import (
    GroupRotationBundle,
    MeasuredSpectrumBundle,
    PointSpectrumBundle,
    canonical_form,
    canonical_form_idempotent,
    iso_brute_force,
    iso_systems,
    markov_iso,
    markov_iso_brute_force,
    measured_spectrum_bundle,
    realize,
    spectrum_bundle,
    verify_witness,
)
from strategies import (
    cycle_type_representatives,
    random_cycle_measure,
    random_non_bijection,
    random_permutation,
    relabel,
    transport,
)

F = Fraction


class Budget:
    def __init__(self, seconds):
        self.seconds = seconds

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        if exc[0] is None:
            assert self.elapsed < self.seconds, f"took {self.elapsed:.2f} s, budget {self.seconds} s"


@lru_cache(maxsize=None)
def topological_pairs():
    reps = [s for n in range(1, 7) for s in cycle_type_representatives(n)]
    pairs = [(a, b) for a in reps for b in reps]
    rng = random.Random(20240601)
    for _ in range(200):
        n = rng.randint(1, 8)
        s1 = random_permutation(rng, n)
        if rng.random() < 0.5:
            sigma = list(range(n))
            rng.shuffle(sigma)
            s2 = relabel(s1, sigma)
        else:
            s2 = random_permutation(rng, n)
        pairs.append((s1, s2))
    return tuple(pairs)


@lru_cache(maxsize=None)
def measured_pairs():
    rng = random.Random(20240602)
    pairs = []
    for _ in range(100):
        n = rng.randint(1, 6)
        s1 = random_permutation(rng, n)
        mu1 = random_cycle_measure(rng, s1)
        sigma = list(range(n))
        rng.shuffle(sigma)
        choice = rng.random()
        if choice < 0.4:
            s2, mu2 = relabel(s1, sigma), transport(mu1, sigma)
        elif choice < 0.7:
            s2 = relabel(s1, sigma)
            mu2 = random_cycle_measure(rng, s2)
        else:
            s2 = random_permutation(rng, n)
            mu2 = random_cycle_measure(rng, s2)
        pairs.append((s1, mu1, s2, mu2))
    return tuple(pairs)


@pytest.mark.criterion(1, "spectrum bundle decides conjugacy (vs exhaustive search)")
def test_criterion_1_topological_completeness():
    with Budget(10):
        positives = 0
        for s1, s2 in topological_pairs():
            w = iso_systems(s1, s2)
            assert (w is None) == (iso_brute_force(s1, s2) is None), (s1, s2)
            if w is not None:
                positives += 1
                assert verify_witness(s1, s2, w)
        assert positives > 100


@pytest.mark.criterion(2, "measured spectrum bundle decides Markov conjugacy")
def test_criterion_2_measured_completeness():
    with Budget(30):
        agree = positives = 0
        for s1, mu1, s2, mu2 in measured_pairs():
            for mu in (mu1, mu2):
                assert all(w > 0 for w in mu.weights) and max(w.denominator for w in mu.weights) <= 12
            w = markov_iso(s1, mu1, s2, mu2)
            assert (w is None) == (markov_iso_brute_force(s1, mu1, s2, mu2) is None)
            if w is not None:
                positives += 1
                assert verify_witness(s1, s2, w, mu1, mu2)
            agree += 1
        assert agree == 100 and 0 < positives < 100


@pytest.mark.criterion(3, "canonical rotation-bundle form is verified and idempotent")
def test_criterion_3_representation():
    rng = random.Random(3)
    with Budget(5):
        for _ in range(100):
            s = random_permutation(rng, rng.randint(1, 50))
            rot, w = canonical_form(s)
            assert verify_witness(s, rot.to_system(), w)
            assert canonical_form_idempotent(s)


def _is_abelian_group(elements, n):
    members = set(elements)
    if identity_table(n) not in members:
        return False
    for a in elements:
        if inverse_table(a) not in members:
            return False
        for b in elements:
            ab = compose(a, b)
            if ab not in members or ab != compose(b, a):
                return False
    return True


@pytest.mark.criterion(4, "Ellis semigroup: order lcm, abelian group iff discrete spectrum")
def test_criterion_4_ellis_structure():
    rng = random.Random(4)
    with Budget(5):
        for _ in range(100):
            s = random_permutation(rng, rng.randint(1, 12))
            e = ellis_semigroup(s)
            assert e.order == lcm(*(len(c) for c in s.cycles()))
            assert e.is_group and _is_abelian_group(e.elements, s.n_states)
            assert has_discrete_spectrum(s)
        for _ in range(100):
            s = random_non_bijection(rng, rng.randint(2, 12))
            assert has_discrete_spectrum(s) == ellis_semigroup(s).is_group == False  # noqa: E712


@pytest.mark.criterion(5, "duality: bidual, products, duals of surjections")
def test_criterion_5_duality():
    with Budget(5):
        fiber_types = [(m, a) for m in range(1, 25) for a in range(1, m + 1) if gcd(a, m) == 1]
        for fiber in fiber_types:
            g = GroupRotationBundle((fiber,))
            w = bidual_check(g)
            assert verify_witness(g.to_system(), dual_of_subtrivialized(dual_rotation_bundle(g)).to_system(), w)
            assert dual_spectrum_identity(g)
        for m in range(1, 25):
            for base in range(1, 6):
                assert dual_of_trivial_product_check(m, base)
        rng = random.Random(5)
        for _ in range(200):
            parts = [rng.choice(fiber_types) for _ in range(rng.randint(1, 5))]
            g = GroupRotationBundle(tuple(parts))
            bidual_check(g)
            joined = sum((dual_rotation_bundle(GroupRotationBundle((p,))).fibers for p in parts), ())
            assert dual_rotation_bundle(g).fibers == joined
        for m in range(1, 25):
            for n in range(m, 25, m):
                for u in range(m):
                    if gcd(u, m) != 1:
                        continue
                    hom = FiberHom(n, m, tuple(u * x % m for x in range(n)))
                    assert hom.surjective and all(dual_morphism([hom], [0]).injective)


@pytest.mark.criterion(6, "realization round trip, byte-exact")
def test_criterion_6_realization():
    rng = random.Random(6)
    with Budget(2):
        for _ in range(100):
            orders = [rng.randint(1, 20) for _ in range(rng.randint(1, 6))]
            sigma = PointSpectrumBundle.from_orders(orders)
            assert canonical_encoding(spectrum_bundle(realize(sigma).to_system())) == canonical_encoding(sigma)

            raw = [rng.randint(1, 12) for _ in orders]
            msigma = MeasuredSpectrumBundle(tuple((m, F(r, sum(raw))) for m, r in zip(orders, raw)))
            rot, mu = realize(msigma)
            again = measured_spectrum_bundle(rot.to_system(), mu)
            assert canonical_encoding(again) == canonical_encoding(msigma)
            assert serialize(again) == serialize(msigma.canonical())


@pytest.mark.criterion(7, "finite mean-ergodicity equivalences")
def test_criterion_7_mergchar():
    rng = random.Random(7)
    with Budget(5):
        for _ in range(100):
            s = random_permutation(rng, rng.randint(1, 12))
            b = maximal_trivial_factor(s)
            report = mergchar_finite_check(b, rng=rng)
            assert report.passed
            f = random_qfunction(s.n_states, rng)
            assert cesaro_mean(s, f, report.N) == mean_ergodic_projection(s, f)


@pytest.mark.criterion(8, "support lemma and disintegration")
def test_criterion_8_support_and_disintegration():
    rng = random.Random(8)
    with Budget(5):
        checked = 0
        while checked < 500:
            s = random_permutation(rng, rng.randint(1, 10))
            b = maximal_trivial_factor(s)
            basis = invariant_measure_basis(b)
            # Mix arbitrary measures with measures concentrated on a single fiber.
            candidates = [random_probability(s.n_states, rng), basis[rng.randrange(b.n_base)]]
            for mu in candidates:
                for l in range(b.n_base):
                    left, right = support_in_fiber_iff_dirac(b, mu, l)
                    assert left == right
                checked += 1
                if is_invariant(s, mu):
                    nu = disintegrate(b, mu)
                    assert compose_measure(basis, nu) == mu
            nu = random_probability(b.n_base, rng)
            mu = compose_measure(basis, nu)
            assert disintegrate(b, mu) == nu


@pytest.mark.criterion(9, "cylinder scans: golden UE evidence, identity non-UE witness")
def test_criterion_9_cylinder(tmp_path):
    n = 10**4
    a = IRRATIONALS["golden"]
    literal_bound = 2 / (n * abs(a - 1)) + 1e-9
    circle_bound = 4 / (n * abs(cmath.exp(2j * math.pi * a) - 1)) + 1e-9
    with Budget(20):
        scan = mean_ergodicity_scan(ConstantAlpha(Angle(name="golden")), parse_observable("re(z)"), 11, n, 1e-2)
        assert scan.mean_ergodic_evidence
        for row in scan.rows:
            assert row.gap <= literal_bound
            assert row.gap <= circle_bound

        v = fiber_unique_ergodicity(IdentityAlpha(), parse_observable("re(z^2)"), F(1, 2), 1000, 64)
        assert not v.uniquely_ergodic_evidence
        assert abs(v.gap - 2.0) <= 1e-9

        base = ["cylinder", "--grid", "11", "--tol", "1e-2", "--csv", str(tmp_path / "scan.csv")]
        assert main(base + ["--alpha", "golden", "--f", "re(z)", "--n", str(n)]) == 0
        assert main(base + ["--alpha", "identity", "--f", "re(z^2)", "--n", "1000"]) == 1


def _write_system(path, s, mu=None):
    path.write_text(serialize(s, mu))
    return str(path)


@pytest.mark.criterion(10, "iso --oracle never reports a disagreement")
def test_criterion_10_oracle_trap(tmp_path, capsys):
    codes = []
    for i, (s1, s2) in enumerate(topological_pairs()):
        a = _write_system(tmp_path / f"t{i}a.json", s1)
        b = _write_system(tmp_path / f"t{i}b.json", s2)
        codes.append(main(["iso", a, b, "--oracle"]))
    for i, (s1, mu1, s2, mu2) in enumerate(measured_pairs()):
        a = _write_system(tmp_path / f"m{i}a.json", s1, mu1)
        b = _write_system(tmp_path / f"m{i}b.json", s2, mu2)
        codes.append(main(["iso", a, b, "--measured", "--oracle"]))
    capsys.readouterr()
    assert 3 not in codes
    assert set(codes) == {0, 1}
