"""Exact Koopman-operator algebra on finite systems.

Scalars are Gaussian rationals (:class:`QComplex`).  Unit-modulus eigen-data
is carried as :class:`RationalAngle`, the exponent of ``e^{2πi·num/den}``, so
that eigen-identities reduce to exact angle arithmetic.
"""

from __future__ import annotations

import cmath
import random
from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Iterable, Optional, Sequence

import sympy

from .dynamics import (
    FinBundle,
    FinSystem,
    cycle_lcm,
    fibers_minimal_check,
    has_discrete_spectrum,
    is_minimal,
    require_discrete_spectrum,
)
from .errors import DiscreteSpectrumRequired, InvarianceRequired, PreconditionError, VerificationError

@dataclass(frozen=True)
class QComplex:
    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "re", Fraction(self.re))
        object.__setattr__(self, "im", Fraction(self.im))

    @classmethod
    def of(cls, x) -> "QComplex":
        if isinstance(x, QComplex):
            return x
        if isinstance(x, complex):
            return cls(Fraction(x.real), Fraction(x.imag))
        return cls(Fraction(x))

    def __add__(self, other):
        other = QComplex.of(other)
        return QComplex(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = QComplex.of(other)
        return QComplex(self.re - other.re, self.im - other.im)

    def __neg__(self):
        return QComplex(-self.re, -self.im)

    def __mul__(self, other):
        other = QComplex.of(other)
        return QComplex(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = QComplex.of(other)
        norm = other.re * other.re + other.im * other.im
        if norm == 0:
            raise ZeroDivisionError("division by zero")
        conj = QComplex(other.re, -other.im)
        prod = self * conj
        return QComplex(prod.re / norm, prod.im / norm)

    def __eq__(self, other):
        try:
            other = QComplex.of(other)
        except (TypeError, ValueError):
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        if self.im == 0:
            return f"QComplex({self.re})"
        return f"QComplex({self.re}, {self.im})"


@dataclass(frozen=True)
class QFunction:
    values: tuple[QComplex, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(QComplex.of(v) for v in self.values))

    @classmethod
    def of(cls, values: Iterable) -> "QFunction":
        return cls(tuple(values))

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]

    def __iter__(self):
        return iter(self.values)


@dataclass(frozen=True, order=True)
class RationalAngle:
    """The unit complex number ``e^{2πi·num/den}`` with ``num/den`` reduced mod 1."""

    num: int
    den: int = 1

    def __post_init__(self):
        if self.den < 1:
            raise ValueError("denominator must be positive")
        if not 0 <= self.num < self.den or gcd(self.num, self.den) != 1:
            raise ValueError(f"{self.num}/{self.den} is not a reduced angle in [0, 1)")

    @classmethod
    def of(cls, x) -> "RationalAngle":
        """Reduce any rational (or ``"p/q"`` string) modulo 1."""
        if isinstance(x, RationalAngle):
            return x
        f = Fraction(x) % 1
        return cls(f.numerator, f.denominator)

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.num, self.den)

    def __add__(self, other: "RationalAngle") -> "RationalAngle":
        return RationalAngle.of(self.fraction + RationalAngle.of(other).fraction)

    def __neg__(self) -> "RationalAngle":
        return RationalAngle.of(-self.fraction)

    def __sub__(self, other):
        return self + (-RationalAngle.of(other))

    def scale(self, k: int) -> "RationalAngle":
        return RationalAngle.of(k * self.fraction)

    @property
    def order(self) -> int:
        """Order of the angle in Q/Z, i.e. of the root of unity."""
        return self.den

    def to_complex(self) -> complex:
        return cmath.exp(2j * cmath.pi * self.num / self.den)

    def to_qcomplex(self) -> QComplex:
        """Exact value; only quarter-turn roots of unity are Gaussian rationals."""
        quarter = {0: QComplex(1), 1: QComplex(0, 1), 2: QComplex(-1), 3: QComplex(0, -1)}
        if 4 % self.den:
            raise ValueError(f"e^(2πi·{self.num}/{self.den}) is not a Gaussian rational")
        return quarter[self.num * (4 // self.den)]

    def __str__(self):
        return f"{self.num}/{self.den}" if self.den != 1 else str(self.num)


# A cyclotomic value is either None (zero) or a unit-modulus RationalAngle.
CyclotomicValue = Optional[RationalAngle]


@dataclass(frozen=True)
class CyclotomicFunction:
    values: tuple[CyclotomicValue, ...]

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]

    def to_qfunction(self) -> QFunction:
        return QFunction(tuple(QComplex(0) if v is None else v.to_qcomplex() for v in self.values))


@dataclass(frozen=True)
class RationalMeasure:
    weights: tuple[Fraction, ...]

    def __post_init__(self):
        w = tuple(Fraction(x) for x in self.weights)
        object.__setattr__(self, "weights", w)
        if not w:
            raise PreconditionError("a measure needs at least one atom")
        if any(x < 0 for x in w):
            raise PreconditionError("measure weights must be nonnegative")
        if sum(w) != 1:
            raise PreconditionError(f"measure weights sum to {sum(w)}, not 1")

    @classmethod
    def dirac(cls, n: int, i: int) -> "RationalMeasure":
        return cls(tuple(Fraction(int(j == i)) for j in range(n)))

    @classmethod
    def uniform_on(cls, n: int, support: Sequence[int]) -> "RationalMeasure":
        w = [Fraction(0)] * n
        for i in support:
            w[i] = Fraction(1, len(support))
        return cls(tuple(w))

    def __len__(self):
        return len(self.weights)

    def __getitem__(self, i):
        return self.weights[i]

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i for i, w in enumerate(self.weights) if w)


@dataclass(frozen=True)
class CyclicSpectrum:
    """The subgroup ``{k/order mod 1}`` of Q/Z."""

    order: int

    def __post_init__(self):
        if self.order < 1:
            raise PreconditionError("spectrum order must be positive")

    def angles(self) -> tuple[RationalAngle, ...]:
        return tuple(RationalAngle.of(Fraction(k, self.order)) for k in range(self.order))

    def __contains__(self, angle) -> bool:
        return self.order % RationalAngle.of(angle).den == 0


# ---------------------------------------------------------------------------
# Koopman operator and Cesàro means


def _check_length(s: FinSystem, n: int, what: str = "function") -> None:
    if n != s.n_states:
        raise PreconditionError(f"{what} has length {n}, system has {s.n_states} states")


def koopman_apply(s: FinSystem, f: QFunction) -> QFunction:
    _check_length(s, len(f))
    return QFunction(tuple(f[j] for j in s.transition))


def cesaro_mean(s: FinSystem, f: QFunction, n: int) -> QFunction:
    """``(1/n) Σ_{k<n} f∘φ^k`` computed exactly."""
    if n < 1:
        raise PreconditionError("Cesàro index must be at least 1")
    _check_length(s, len(f))
    out = []
    for start in range(s.n_states):
        total = QComplex(0)
        x = start
        for _ in range(n):
            total = total + f[x]
            x = s.transition[x]
        out.append(total / n)
    return QFunction(tuple(out))


def mean_ergodic_projection(s: FinSystem, f: QFunction) -> QFunction:
    """Cycle averages of ``f``; the limit of the Cesàro means for a permutation."""
    if not has_discrete_spectrum(s):
        raise DiscreteSpectrumRequired("mean ergodic projection needs an invertible system")
    _check_length(s, len(f))
    out = [QComplex(0)] * s.n_states
    for cyc in s.cycles():
        avg = sum((f[x] for x in cyc), QComplex(0)) / len(cyc)
        for x in cyc:
            out[x] = avg
    return QFunction(tuple(out))


# ---------------------------------------------------------------------------
# Point spectrum and eigenfunctions


def check_eigen(s: FinSystem, lam: RationalAngle, f: CyclotomicFunction) -> bool:
    """Exact test of ``f∘φ = λ·f`` for a nonzero cyclotomic function."""
    if len(f) != s.n_states or all(v is None for v in f.values):
        return False
    lam = RationalAngle.of(lam)
    for i, j in enumerate(s.transition):
        left, right = f[j], f[i]
        if left is None or right is None:
            if left is not right:
                return False
        elif left != lam + right:
            return False
    return True


@dataclass(frozen=True)
class FiberSpectrum:
    spectrum: CyclicSpectrum
    eigenfunctions: tuple[tuple[RationalAngle, CyclotomicFunction], ...]


def point_spectrum_fiber(s: FinSystem) -> FiberSpectrum:
    """Spectrum and characters of a single cycle, with phase 0 at state 0."""
    if not is_minimal(s):
        raise PreconditionError("point_spectrum_fiber needs a single cycle")
    m = s.n_states
    position = [0] * m
    x = 0
    for j in range(m):
        position[x] = j
        x = s.transition[x]
    pairs = []
    for k in range(m):
        lam = RationalAngle.of(Fraction(k, m))
        f = CyclotomicFunction(tuple(lam.scale(position[x]) for x in range(m)))
        if not check_eigen(s, lam, f):
            raise VerificationError(f"character {k}/{m} is not an eigenfunction")
        pairs.append((lam, f))
    return FiberSpectrum(CyclicSpectrum(m), tuple(pairs))


def kronecker_dimension(s: FinSystem) -> int:
    """Dimension of the span of unimodular eigenfunctions.

    An eigenfunction is determined by its values on the periodic states and
    every choice there extends uniquely along the tails, so the dimension is
    the number of periodic states.
    """
    return sum(len(c) for c in s.cycles())


# ---------------------------------------------------------------------------
# Invariant measures


def invariance_witness(s: FinSystem, mu: RationalMeasure) -> Optional[int]:
    """First state where ``μ[i] != Σ_{φ(j)=i} μ[j]``, or None if invariant."""
    _check_length(s, len(mu), "measure")
    image = [Fraction(0)] * s.n_states
    for j, i in enumerate(s.transition):
        image[i] += mu[j]
    for i in range(s.n_states):
        if image[i] != mu[i]:
            return i
    return None


def is_invariant(s: FinSystem, mu: RationalMeasure) -> bool:
    return invariance_witness(s, mu) is None


def _require_over_components(b: FinBundle) -> None:
    require_discrete_spectrum(b.system)
    if not fibers_minimal_check(b):
        raise PreconditionError("bundle must be over the maximal trivial factor")


def invariant_measure_basis(b: FinBundle) -> tuple[RationalMeasure, ...]:
    """The fiberwise Haar measures: uniform on each fiber's cycle."""
    _require_over_components(b)
    out = []
    for fib in b.fibers():
        m = RationalMeasure.uniform_on(b.n_states, fib)
        if not is_invariant(b.system, m):
            raise VerificationError("fiber Haar measure is not invariant")
        out.append(m)
    return tuple(out)


def pushforward(mu: RationalMeasure, proj: Sequence[int], n_base: Optional[int] = None) -> RationalMeasure:
    if len(proj) != len(mu):
        raise PreconditionError(f"projection has length {len(proj)}, measure has {len(mu)}")
    if n_base is None:
        n_base = max(proj) + 1
    out = [Fraction(0)] * n_base
    for i, b in enumerate(proj):
        out[b] += mu[i]
    return RationalMeasure(tuple(out))


def support_in_fiber_iff_dirac(b: FinBundle, mu: RationalMeasure, l: int) -> tuple[bool, bool]:
    """``(supp μ ⊂ K_l, q_*μ = δ_l)``; the two entries always agree."""
    fib = set(b.fiber(l))
    in_fiber = all(i in fib for i in mu.support)
    is_dirac = pushforward(mu, b.proj, b.n_base) == RationalMeasure.dirac(b.n_base, l)
    return in_fiber, is_dirac


def compose_measure(basis: Sequence[RationalMeasure], nu: RationalMeasure) -> RationalMeasure:
    """``Σ_l ν[l]·m_l``."""
    n = len(basis[0])
    w = [Fraction(0)] * n
    for coeff, m in zip(nu.weights, basis):
        for i in range(n):
            w[i] += coeff * m[i]
    return RationalMeasure(tuple(w))


def disintegrate(b: FinBundle, mu: RationalMeasure) -> RationalMeasure:
    """Base measure ``ν = q_*μ`` with ``μ = Σ_l ν[l]·m_l`` verified exactly."""
    require_discrete_spectrum(b.system)
    witness = invariance_witness(b.system, mu)
    if witness is not None:
        raise InvarianceRequired(f"measure is not invariant at state {witness}", witness)
    basis = invariant_measure_basis(b)
    nu = pushforward(mu, b.proj, b.n_base)
    if compose_measure(basis, nu) != mu:
        raise VerificationError("disintegration identity failed")
    return nu


# ---------------------------------------------------------------------------
# Mean ergodicity characterization at finite scale


@dataclass(frozen=True)
class MergcharReport:
    N: int
    mean_ergodic: bool
    uniquely_ergodic_fibers: bool
    fiberwise_constant: bool
    measure_bijection: bool

    @property
    def passed(self) -> bool:
        return (
            self.mean_ergodic
            and self.uniquely_ergodic_fibers
            and self.fiberwise_constant
            and self.measure_bijection
        )


def random_qfunction(n: int, rng: random.Random, bound: int = 9) -> QFunction:
    return QFunction(
        tuple(
            QComplex(Fraction(rng.randint(-bound, bound), rng.randint(1, bound)),
                     Fraction(rng.randint(-bound, bound), rng.randint(1, bound)))
            for _ in range(n)
        )
    )


def random_probability(n: int, rng: random.Random, den: int = 12) -> RationalMeasure:
    raw = [rng.randint(0, den) for _ in range(n)]
    if not any(raw):
        raw[rng.randrange(n)] = 1
    total = sum(raw)
    return RationalMeasure(tuple(Fraction(x, total) for x in raw))


def _fiber_invariant_dimension(b: FinBundle, fib: Sequence[int]) -> tuple[int, list[Fraction]]:
    """Dimension of the invariant signed measures on one fiber, plus a normalized basis vector."""
    local = {x: j for j, x in enumerate(fib)}
    m = len(fib)
    transfer = sympy.zeros(m, m)
    for x in fib:
        transfer[local[b.system.transition[x]], local[x]] += 1
    kernel = (transfer - sympy.eye(m)).nullspace()
    if len(kernel) != 1:
        return len(kernel), []
    v = kernel[0] / sum(kernel[0])
    return 1, [Fraction(str(x)) for x in v]


def mergchar_finite_check(
    b: FinBundle,
    functions: Optional[Sequence[QFunction]] = None,
    rng: Optional[random.Random] = None,
    n_random: int = 5,
) -> MergcharReport:
    _require_over_components(b)
    s = b.system
    rng = rng or random.Random(0)
    if functions is None:
        functions = [random_qfunction(s.n_states, rng) for _ in range(n_random)]
    N = cycle_lcm(s)

    mean_ergodic = True
    constant = True
    for f in functions:
        avg = cesaro_mean(s, f, N)
        if avg != mean_ergodic_projection(s, f):
            mean_ergodic = False
        for fib in b.fibers():
            if len({avg[x] for x in fib}) != 1:
                constant = False

    basis = invariant_measure_basis(b)
    unique = True
    for l, fib in enumerate(b.fibers()):
        dim, vec = _fiber_invariant_dimension(b, fib)
        if dim != 1 or any(basis[l][x] != w for x, w in zip(fib, vec)):
            unique = False

    bijection = True
    for _ in range(max(1, n_random)):
        nu = random_probability(b.n_base, rng)
        mu = compose_measure(basis, nu)
        if not is_invariant(s, mu) or pushforward(mu, b.proj, b.n_base) != nu:
            bijection = False
        # An invariant measure obtained without the basis: the orbit average
        # of a random probability.
        rho = random_probability(s.n_states, rng)
        weights = [Fraction(0)] * s.n_states
        for cyc in s.cycles():
            avg = sum((rho[x] for x in cyc), Fraction(0)) / len(cyc)
            for x in cyc:
                weights[x] = avg
        inv = RationalMeasure(tuple(weights))
        if not is_invariant(s, inv):
            bijection = False
        if compose_measure(basis, pushforward(inv, b.proj, b.n_base)) != inv:
            bijection = False

    return MergcharReport(N, mean_ergodic, unique, constant, bijection)

