"""Point spectrum bundles, isomorphism decision and canonical rotation bundles.

On a finite discrete base every bundle has a section and every fiber of an
invertible system is a cycle, whose Koopman point spectrum is the cyclic
group of roots of unity of the cycle length.  Deciding isomorphism therefore
reduces to matching fibers by order under a base bijection; the conjugacy
itself is built by aligning matched cycles at their section points.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Optional, Sequence, Union

from .dynamics import (
    FinBundle,
    FinSystem,
    canonical_section,
    fiber_subsystem,
    is_bijection,
    maximal_trivial_factor,
    require_discrete_spectrum,
)
from .errors import (
    FullSupportRequired,
    InvarianceRequired,
    PreconditionError,
    SizeBoundExceeded,
    VerificationError,
)
from .koopman import (
    CyclicSpectrum,
    RationalMeasure,
    invariance_witness,
    point_spectrum_fiber,
    pushforward,
)

BRUTE_FORCE_BOUND = 8


@dataclass(frozen=True)
class PointSpectrumBundle:
    fibers: tuple[CyclicSpectrum, ...]

    def __post_init__(self):
        fibers = tuple(f if isinstance(f, CyclicSpectrum) else CyclicSpectrum(int(f)) for f in self.fibers)
        object.__setattr__(self, "fibers", fibers)
        if not fibers:
            raise PreconditionError("a spectrum bundle needs at least one fiber")

    @classmethod
    def from_orders(cls, orders: Sequence[int]) -> "PointSpectrumBundle":
        return cls(tuple(CyclicSpectrum(int(m)) for m in orders))

    @property
    def orders(self) -> tuple[int, ...]:
        return tuple(f.order for f in self.fibers)

    def canonical(self) -> "PointSpectrumBundle":
        """The same bundle with fibers sorted by order (base relabeled)."""
        return PointSpectrumBundle.from_orders(sorted(self.orders))

    def as_set(self) -> frozenset:
        """``Σ_p`` as a subset of (Q/Z) × L."""
        return frozenset((angle, l) for l, f in enumerate(self.fibers) for angle in f.angles())


@dataclass(frozen=True)
class MeasuredSpectrumBundle:
    fibers: tuple[tuple[CyclicSpectrum, Fraction], ...]

    def __post_init__(self):
        fibers = tuple(
            (spec if isinstance(spec, CyclicSpectrum) else CyclicSpectrum(int(spec)), Fraction(w))
            for spec, w in self.fibers
        )
        object.__setattr__(self, "fibers", fibers)
        if not fibers:
            raise PreconditionError("a spectrum bundle needs at least one fiber")
        if any(w < 0 for _, w in fibers):
            raise PreconditionError("fiber weights must be nonnegative")
        if sum(w for _, w in fibers) != 1:
            raise PreconditionError("fiber weights must sum to 1")

    @property
    def orders(self) -> tuple[int, ...]:
        return tuple(spec.order for spec, _ in self.fibers)

    @property
    def weights(self) -> tuple[Fraction, ...]:
        return tuple(w for _, w in self.fibers)

    def canonical(self) -> "MeasuredSpectrumBundle":
        return MeasuredSpectrumBundle(
            tuple((CyclicSpectrum(m), w) for m, w in sorted(zip(self.orders, self.weights)))
        )

    def topological(self) -> PointSpectrumBundle:
        return PointSpectrumBundle.from_orders(self.orders)


@dataclass(frozen=True)
class GroupRotationBundle:
    """Fiber ``l`` is the rotation ``x ↦ x + step`` on ``Z_order``.

    Steps are stored as representatives in ``[1, order]``, so the trivial
    group carries step 1.

    As a finite system the fibers are laid out consecutively: state
    ``offsets[l] + x`` is the element ``x`` of fiber ``l``.
    """

    fibers: tuple[tuple[int, int], ...]

    def __post_init__(self):
        fibers = []
        for l, (m, a) in enumerate(self.fibers):
            m, a = int(m), int(a)
            if m < 1:
                raise PreconditionError(f"fiber {l}: order must be positive")
            if gcd(a, m) != 1:
                raise PreconditionError(f"fiber {l}: step {a} does not generate Z_{m} (fiber not minimal)")
            fibers.append((m, a % m or m))
        if not fibers:
            raise PreconditionError("a rotation bundle needs at least one fiber")
        object.__setattr__(self, "fibers", tuple(fibers))

    @property
    def orders(self) -> tuple[int, ...]:
        return tuple(m for m, _ in self.fibers)

    @property
    def offsets(self) -> tuple[int, ...]:
        out, total = [], 0
        for m, _ in self.fibers:
            out.append(total)
            total += m
        return tuple(out)

    @property
    def n_states(self) -> int:
        return sum(self.orders)

    def to_system(self) -> FinSystem:
        table = []
        for offset, (m, a) in zip(self.offsets, self.fibers):
            table.extend(offset + (x + a) % m for x in range(m))
        return FinSystem(tuple(table))

    def to_bundle(self) -> FinBundle:
        proj = tuple(l for l, (m, _) in enumerate(self.fibers) for _ in range(m))
        return FinBundle(self.to_system(), len(self.fibers), proj)


@dataclass(frozen=True)
class IsoWitness:
    """A conjugacy ``state_bijection`` covering ``base_bijection``.

    ``state_bijection[i]`` is the image of state ``i`` of the source,
    ``base_bijection[l]`` the image of base point ``l`` of the source's
    maximal trivial factor.
    """

    state_bijection: tuple[int, ...]
    base_bijection: tuple[int, ...]


def verify_witness(
    s1: FinSystem,
    s2: FinSystem,
    w: IsoWitness,
    mu1: Optional[RationalMeasure] = None,
    mu2: Optional[RationalMeasure] = None,
) -> bool:
    """Independent check of a witness: bijections, equivariance, base square
    and, when measures are given, weight preservation."""
    theta, eta = w.state_bijection, w.base_bijection
    if len(theta) != s1.n_states or s1.n_states != s2.n_states:
        return False
    if not (is_bijection(theta) and is_bijection(eta)):
        return False
    if any(theta[s1.transition[i]] != s2.transition[theta[i]] for i in range(s1.n_states)):
        return False
    q1, q2 = maximal_trivial_factor(s1), maximal_trivial_factor(s2)
    if len(eta) != q1.n_base or q1.n_base != q2.n_base:
        return False
    if any(q2.proj[theta[i]] != eta[q1.proj[i]] for i in range(s1.n_states)):
        return False
    if mu1 is not None or mu2 is not None:
        if mu1 is None or mu2 is None:
            return False
        if any(mu1[i] != mu2[theta[i]] for i in range(s1.n_states)):
            return False
    return True


def spectrum_bundle(s: FinSystem) -> PointSpectrumBundle:
    require_discrete_spectrum(s)
    factor = maximal_trivial_factor(s)
    orders = []
    for l in range(factor.n_base):
        fib = fiber_subsystem(factor, l).system
        spec = point_spectrum_fiber(fib).spectrum
        if spec.order != fib.n_states:
            raise VerificationError("fiber spectrum order differs from cycle length")
        orders.append(spec.order)
    return PointSpectrumBundle.from_orders(orders)


def _require_measured(s: FinSystem, mu: RationalMeasure) -> None:
    if len(mu) != s.n_states:
        raise PreconditionError(f"measure has {len(mu)} weights, system has {s.n_states} states")
    zero = [i for i, w in enumerate(mu.weights) if w == 0]
    if zero:
        raise FullSupportRequired(f"measure vanishes at state {zero[0]}")
    witness = invariance_witness(s, mu)
    if witness is not None:
        raise InvarianceRequired(f"measure is not invariant at state {witness}", witness)
    # A fully supported invariant measure forces surjectivity, hence invertibility.
    require_discrete_spectrum(s)


def measured_spectrum_bundle(s: FinSystem, mu: RationalMeasure) -> MeasuredSpectrumBundle:
    _require_measured(s, mu)
    factor = maximal_trivial_factor(s)
    nu = pushforward(mu, factor.proj, factor.n_base)
    spec = spectrum_bundle(s)
    return MeasuredSpectrumBundle(tuple(zip(spec.fibers, nu.weights)))


def _sorted_match(keys_a: Sequence, keys_b: Sequence) -> Optional[tuple[int, ...]]:
    if len(keys_a) != len(keys_b):
        return None
    order_a = sorted(range(len(keys_a)), key=lambda l: (keys_a[l], l))
    order_b = sorted(range(len(keys_b)), key=lambda l: (keys_b[l], l))
    if [keys_a[l] for l in order_a] != [keys_b[l] for l in order_b]:
        return None
    eta = [0] * len(keys_a)
    for la, lb in zip(order_a, order_b):
        eta[la] = lb
    return tuple(eta)


def iso_spectrum(a: PointSpectrumBundle, b: PointSpectrumBundle) -> Optional[tuple[int, ...]]:
    """A base bijection matching fibers of equal order, or None."""
    return _sorted_match(a.orders, b.orders)


def _align(s1: FinSystem, s2: FinSystem, eta: Sequence[int]) -> IsoWitness:
    q1, q2 = maximal_trivial_factor(s1), maximal_trivial_factor(s2)
    sec1, sec2 = canonical_section(q1), canonical_section(q2)
    theta = [0] * s1.n_states
    for l in range(q1.n_base):
        x, y = sec1.choice[l], sec2.choice[eta[l]]
        for _ in range(len(q1.fiber(l))):
            theta[x] = y
            x, y = s1.transition[x], s2.transition[y]
    return IsoWitness(tuple(theta), tuple(eta))


def iso_systems(s1: FinSystem, s2: FinSystem) -> Optional[IsoWitness]:
    """Decide conjugacy through the point spectrum bundles."""
    eta = iso_spectrum(spectrum_bundle(s1), spectrum_bundle(s2))
    if eta is None:
        return None
    w = _align(s1, s2, eta)
    if not verify_witness(s1, s2, w):
        raise VerificationError("constructed conjugacy failed verification")
    return w


def markov_iso(
    s1: FinSystem, mu1: RationalMeasure, s2: FinSystem, mu2: RationalMeasure
) -> Optional[IsoWitness]:
    """Decide weight-preserving conjugacy through the measured spectrum bundles.

    Invariant weights are constant on cycles, so a cycle carries ``ν[l]/m_l``
    per state and matching ``(m_l, ν[l])`` pairs suffices.
    """
    a, b = measured_spectrum_bundle(s1, mu1), measured_spectrum_bundle(s2, mu2)
    eta = _sorted_match(list(zip(a.orders, a.weights)), list(zip(b.orders, b.weights)))
    if eta is None:
        return None
    w = _align(s1, s2, eta)
    if not verify_witness(s1, s2, w, mu1, mu2):
        raise VerificationError("constructed Markov conjugacy failed verification")
    return w


def _search(
    s1: FinSystem,
    s2: FinSystem,
    mu1: Optional[RationalMeasure],
    mu2: Optional[RationalMeasure],
    bound: int,
) -> Optional[tuple[int, ...]]:
    n = s1.n_states
    if max(n, s2.n_states) > bound:
        raise SizeBoundExceeded(f"brute force limited to {bound} states")
    if n != s2.n_states:
        return None
    t1, t2 = s1.transition, s2.transition
    theta = [-1] * n
    used = [False] * n

    def consistent(i: int) -> bool:
        # every edge between assigned states must commute
        if mu1 is not None and mu1[i] != mu2[theta[i]]:
            return False
        j = t1[i]
        if theta[j] != -1 and theta[j] != t2[theta[i]]:
            return False
        for k in range(n):
            if t1[k] == i and theta[k] != -1 and t2[theta[k]] != theta[i]:
                return False
        return True

    def extend(i: int) -> bool:
        if i == n:
            return True
        for y in range(n):
            if used[y]:
                continue
            theta[i], used[y] = y, True
            if consistent(i) and extend(i + 1):
                return True
            theta[i], used[y] = -1, False
        return False

    return tuple(theta) if extend(0) else None


def _witness_from_states(s1: FinSystem, s2: FinSystem, theta: tuple[int, ...]) -> IsoWitness:
    q1, q2 = maximal_trivial_factor(s1), maximal_trivial_factor(s2)
    eta = [0] * q1.n_base
    for i, l in enumerate(q1.proj):
        eta[l] = q2.proj[theta[i]]
    return IsoWitness(theta, tuple(eta))


def iso_brute_force(s1: FinSystem, s2: FinSystem, bound: int = BRUTE_FORCE_BOUND) -> Optional[IsoWitness]:
    """Exhaustive search for the lexicographically least conjugacy.

    Backtracking over state bijections with pruning on commuting edges; it
    uses no spectral theory and serves as the oracle for :func:`iso_systems`.
    """
    theta = _search(s1, s2, None, None, bound)
    return None if theta is None else _witness_from_states(s1, s2, theta)


def markov_iso_brute_force(
    s1: FinSystem,
    mu1: RationalMeasure,
    s2: FinSystem,
    mu2: RationalMeasure,
    bound: int = BRUTE_FORCE_BOUND,
) -> Optional[IsoWitness]:
    if len(mu1) != s1.n_states or len(mu2) != s2.n_states:
        raise PreconditionError("measure length does not match system")
    theta = _search(s1, s2, mu1, mu2, bound)
    return None if theta is None else _witness_from_states(s1, s2, theta)


def canonical_form(s: FinSystem) -> tuple[GroupRotationBundle, IsoWitness]:
    """Rotation bundle ``⊕ (Z_m, +1)`` isomorphic to ``s``.

    Fibers are ordered by (order, smallest original state); the witness sends
    ``φ^j(s0(l))`` to element ``j`` of the matching fiber.
    """
    require_discrete_spectrum(s)
    factor = maximal_trivial_factor(s)
    section = canonical_section(factor)
    orders = spectrum_bundle(s).orders
    ranked = sorted(range(factor.n_base), key=lambda l: (orders[l], section.choice[l]))
    rot = GroupRotationBundle(tuple((orders[l], 1) for l in ranked))
    eta = [0] * factor.n_base
    for pos, l in enumerate(ranked):
        eta[l] = pos
    offsets = rot.offsets
    theta = [0] * s.n_states
    for l in range(factor.n_base):
        x = section.choice[l]
        for j in range(orders[l]):
            theta[x] = offsets[eta[l]] + j
            x = s.transition[x]
    w = IsoWitness(tuple(theta), tuple(eta))
    if not verify_witness(s, rot.to_system(), w):
        raise VerificationError("canonical form witness failed verification")
    return rot, w


def canonical_form_idempotent(s: FinSystem) -> bool:
    from .io import serialize

    rot, _ = canonical_form(s)
    again, _ = canonical_form(rot.to_system())
    return serialize(again) == serialize(rot)


def realize(
    sigma: Union[PointSpectrumBundle, MeasuredSpectrumBundle],
) -> Union[GroupRotationBundle, tuple[GroupRotationBundle, RationalMeasure]]:
    """Rotation bundle whose spectrum bundle is ``sigma`` (fibers sorted).

    A measured input also yields ``μ = Σ_l ν[l]·(uniform on fiber l)``.
    """
    if isinstance(sigma, MeasuredSpectrumBundle):
        if any(w == 0 for w in sigma.weights):
            raise FullSupportRequired("realization needs strictly positive fiber weights")
        canon = sigma.canonical()
        rot = GroupRotationBundle(tuple((m, 1) for m in canon.orders))
        weights = [w / m for m, w in zip(canon.orders, canon.weights) for _ in range(m)]
        return rot, RationalMeasure(tuple(weights))
    canon = sigma.canonical()
    return GroupRotationBundle(tuple((m, 1) for m in canon.orders))
