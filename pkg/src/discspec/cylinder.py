"""Cesàro averages for rotations of the cylinder ``T × [0, 1]``.

The system is ``(z, t) ↦ (α(t)·z, t)`` with ``α(t) = e^{2πi·a(t)}``.  Orbits
are generated in angle arithmetic (``θ + j·a mod 1``, exactly when ``a`` is
rational) and only then fed to the observable, and every average is summed
with :func:`math.fsum`.  Verdicts are numerical evidence; the rational or
irrational nature of a known angle gives the authoritative answer.
"""

from __future__ import annotations

import bisect
import cmath
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

import numpy as np

from .errors import PreconditionError
from .koopman import QComplex

IRRATIONALS = {
    "golden": (math.sqrt(5.0) - 1.0) / 2.0,
    "sqrt2m1": math.sqrt(2.0) - 1.0,
}

MAX_DEGREE = 8


@dataclass(frozen=True)
class Angle:
    """A rotation angle in turns: an exact rational or a catalogued irrational."""

    rational: Optional[Fraction] = None
    name: Optional[str] = None

    def __post_init__(self):
        if (self.rational is None) == (self.name is None):
            raise PreconditionError("an angle is either rational or named")
        if self.rational is not None:
            object.__setattr__(self, "rational", Fraction(self.rational) % 1)
        elif self.name not in IRRATIONALS:
            raise PreconditionError(f"unknown irrational {self.name!r}; known: {sorted(IRRATIONALS)}")

    @classmethod
    def parse(cls, text: str) -> "Angle":
        text = text.strip()
        if text in IRRATIONALS:
            return cls(name=text)
        try:
            return cls(rational=Fraction(text))
        except (ValueError, ZeroDivisionError):
            raise PreconditionError(f"cannot read angle {text!r}") from None

    @property
    def value(self) -> float:
        return float(self.rational) if self.rational is not None else IRRATIONALS[self.name]

    @property
    def is_rational(self) -> bool:
        return self.rational is not None

    def __str__(self):
        return self.name if self.name else str(self.rational)


@dataclass(frozen=True)
class ConstantAlpha:
    angle: Angle
    illustrative = False

    def angle_at(self, t) -> Angle:
        return self.angle


@dataclass(frozen=True)
class IdentityAlpha:
    """``α(t) = e^{2πit}``."""

    illustrative = False

    def angle_at(self, t) -> Angle:
        return Angle(rational=Fraction(t))


@dataclass(frozen=True)
class StepAlpha:
    """Piecewise-constant angle: ``angles[i]`` on ``[breakpoints[i-1], breakpoints[i])``.

    The global map is discontinuous, so scans over it are flagged illustrative.
    """

    breakpoints: tuple[Fraction, ...]
    angles: tuple[Angle, ...]
    illustrative = True

    def __post_init__(self):
        bps = tuple(Fraction(b) for b in self.breakpoints)
        object.__setattr__(self, "breakpoints", bps)
        if any(not 0 <= b <= 1 for b in bps):
            raise PreconditionError("breakpoints must lie in [0, 1]")
        if any(x >= y for x, y in zip(bps, bps[1:])):
            raise PreconditionError("breakpoints must be strictly ascending")
        if len(self.angles) != len(bps) + 1:
            raise PreconditionError(f"{len(bps)} breakpoints need {len(bps) + 1} angles")

    def angle_at(self, t) -> Angle:
        return self.angles[bisect.bisect_right(self.breakpoints, Fraction(t))]


AlphaSpec = Union[ConstantAlpha, IdentityAlpha, StepAlpha]


def parse_alpha(text: str) -> AlphaSpec:
    """``identity``, an angle (``golden``, ``sqrt2m1``, ``p/q``), or
    ``step:B1,B2,...:A0,A1,...``."""
    text = text.strip()
    if text == "identity":
        return IdentityAlpha()
    if text.startswith("step:"):
        try:
            _, bps, angles = text.split(":")
        except ValueError:
            raise PreconditionError("step spec must look like step:B1,...:A0,A1,...") from None
        breakpoints = tuple(Fraction(b) for b in bps.split(",") if b.strip())
        return StepAlpha(breakpoints, tuple(Angle.parse(a) for a in angles.split(",")))
    return ConstantAlpha(Angle.parse(text))


@dataclass(frozen=True)
class Piecewise:
    """Piecewise-constant coefficient in ``t`` with the same convention as :class:`StepAlpha`."""

    breakpoints: tuple[Fraction, ...]
    values: tuple[QComplex, ...]

    def __post_init__(self):
        object.__setattr__(self, "breakpoints", tuple(Fraction(b) for b in self.breakpoints))
        object.__setattr__(self, "values", tuple(QComplex.of(v) for v in self.values))
        if len(self.values) != len(self.breakpoints) + 1:
            raise PreconditionError("piecewise coefficient needs one more value than breakpoints")

    def at(self, t) -> QComplex:
        return self.values[bisect.bisect_right(self.breakpoints, Fraction(t))]


Coefficient = Union[QComplex, Piecewise]


@dataclass(frozen=True)
class ObservableSpec:
    """``f(z, t) = Σ_k c_k(t) z^k`` with exact coefficients, ``|k| <= 8``."""

    terms: tuple[tuple[int, Coefficient], ...]

    def __post_init__(self):
        merged: dict[int, Coefficient] = {}
        for k, c in self.terms:
            k = int(k)
            if abs(k) > MAX_DEGREE:
                raise PreconditionError(f"degree {k} exceeds {MAX_DEGREE}")
            if not isinstance(c, Piecewise):
                c = QComplex.of(c)
                if k in merged and not isinstance(merged[k], Piecewise):
                    c = merged[k] + c
            elif k in merged:
                raise PreconditionError(f"piecewise coefficient for z^{k} given twice")
            merged[k] = c
        object.__setattr__(self, "terms", tuple(sorted(merged.items())))

    def coefficients(self, t) -> list[tuple[int, complex]]:
        return [(k, complex(c.at(t) if isinstance(c, Piecewise) else c)) for k, c in self.terms]

    def evaluate(self, phases: np.ndarray, t) -> np.ndarray:
        """Values at the points ``e^{2πi·phase}`` of the fiber over ``t``."""
        out = np.zeros(np.shape(phases), dtype=complex)
        for k, c in self.coefficients(t):
            if c:
                out += c * np.exp(2j * np.pi * k * phases)
        return out


_TERM = re.compile(
    r"""^(?:(?P<coef>\d+(?:/\d+)?)\*)?
        (?:(?P<part>re|im)\((?P<inner>[^()]*)\)|(?P<bare>z(?:\^-?\d+)?|\d+(?:/\d+)?))$""",
    re.VERBOSE,
)


def _power(atom: str) -> int:
    if atom == "z":
        return 1
    m = re.fullmatch(r"z\^(-?\d+)", atom)
    if not m:
        raise PreconditionError(f"cannot read monomial {atom!r}")
    return int(m.group(1))


def parse_observable(text: str) -> ObservableSpec:
    """Read sums of terms like ``re(z^2)``, ``1/2*im(z)``, ``z^-3``, ``1``."""
    source = text.replace(" ", "")
    if not source:
        raise PreconditionError("empty observable")
    terms: list[tuple[int, QComplex]] = []
    for piece in re.split(r"(?<!\^)(?=[+-])", source):
        if not piece:
            continue
        sign, body = (piece[0], piece[1:]) if piece[0] in "+-" else ("", piece)
        m = _TERM.match(body)
        if not m:
            raise PreconditionError(f"cannot read term {body!r}")
        scale = Fraction(m.group("coef") or 1) * (-1 if sign == "-" else 1)
        if m.group("part"):
            k = _power(m.group("inner"))
            if m.group("part") == "re":
                # Re z^k = (z^k + z^-k)/2
                terms += [(k, QComplex(scale / 2)), (-k, QComplex(scale / 2))]
            else:
                # Im z^k = (z^k - z^-k)/(2i)
                terms += [(k, QComplex(0, -scale / 2)), (-k, QComplex(0, scale / 2))]
        elif m.group("bare").startswith("z"):
            terms.append((_power(m.group("bare")), QComplex(scale)))
        else:
            terms.append((0, QComplex(scale * Fraction(m.group("bare")))))
    return ObservableSpec(tuple(terms))


def orbit_phases(theta: float, angle: Angle, n: int) -> np.ndarray:
    """Phases ``θ + j·a mod 1`` for ``j < n``; the ``j·a`` part is exact for rational ``a``."""
    if angle.is_rational:
        p, q = angle.rational.numerator, angle.rational.denominator
        if q < 2**31:
            steps = (np.arange(n, dtype=np.int64) * p) % q
        else:
            steps = np.array([j * p % q for j in range(n)], dtype=object)
        offsets = np.array([float(Fraction(int(s), q)) for s in steps]) if steps.dtype == object \
            else steps / q
        return np.mod(theta + offsets, 1.0)
    return np.mod(theta + np.arange(n, dtype=float) * angle.value, 1.0)


def _check_params(theta: float, t, n: int) -> None:
    if n < 1:
        raise PreconditionError("n must be at least 1")
    if not 0 <= theta < 1:
        raise PreconditionError("θ must lie in [0, 1)")
    if not 0 <= t <= 1:
        raise PreconditionError("t must lie in [0, 1]")


def cesaro_cylinder(alpha: AlphaSpec, f: ObservableSpec, theta: float, t, n: int) -> complex:
    """``A_n f(e^{2πiθ}, t)``."""
    _check_params(theta, t, n)
    values = f.evaluate(orbit_phases(theta, alpha.angle_at(t), n), t)
    return complex(math.fsum(values.real), math.fsum(values.imag)) / n


def geometric_bound(angle: float, n: int) -> float:
    """``2 / (n·|e^{2πia} − 1|)``, a bound for ``|A_n z^{±1}|`` under rotation by ``a``."""
    return 2.0 / (n * abs(cmath.exp(2j * math.pi * angle) - 1.0))


@dataclass(frozen=True)
class FiberVerdict:
    t: Fraction
    uniquely_ergodic_evidence: bool
    gap: float
    witness: Optional[tuple[float, float]]
    analytic_uniquely_ergodic: Optional[bool]

    @property
    def label(self) -> str:
        return "UE" if self.uniquely_ergodic_evidence else "non-UE"


def fiber_unique_ergodicity(
    alpha: AlphaSpec,
    f: ObservableSpec,
    t,
    n: int,
    n_samples: int = 64,
    tol: float = 1e-2,
) -> FiberVerdict:
    """Compare ``A_n f`` across equispaced starting points of the fiber over ``t``.

    A uniquely ergodic fiber drives every average to the same constant, so a
    large spread witnesses failure.  For a known angle the analytic flag is
    set: irrational rotations of the circle are uniquely ergodic, rational
    ones never are.
    """
    if n_samples < 2:
        raise PreconditionError("need at least two samples")
    thetas = [i / n_samples for i in range(n_samples)]
    values = np.array([cesaro_cylinder(alpha, f, th, t, n) for th in thetas])
    spread = np.abs(values[:, None] - values[None, :])
    i, j = np.unravel_index(int(np.argmax(np.triu(spread))), spread.shape)
    gap = float(spread[i, j])
    ok = gap <= tol
    angle = alpha.angle_at(t)
    return FiberVerdict(
        t=Fraction(t),
        uniquely_ergodic_evidence=ok,
        gap=gap,
        witness=None if ok else (thetas[i], thetas[j]),
        analytic_uniquely_ergodic=not angle.is_rational,
    )


@dataclass(frozen=True)
class ScanReport:
    rows: tuple[FiberVerdict, ...]
    n: int
    tol: float
    illustrative: bool

    @property
    def mean_ergodic_evidence(self) -> bool:
        return all(r.uniquely_ergodic_evidence for r in self.rows)

    @property
    def max_gap(self) -> float:
        return max(r.gap for r in self.rows)

    def failures(self) -> list[FiberVerdict]:
        return [r for r in self.rows if not r.uniquely_ergodic_evidence]


def t_grid(size: int) -> list[Fraction]:
    if size < 2:
        raise PreconditionError("grid needs at least two points")
    return [Fraction(i, size - 1) for i in range(size)]


def mean_ergodicity_scan(
    alpha: AlphaSpec,
    f: ObservableSpec,
    grid: int,
    n: int,
    tol: float,
    n_samples: int = 64,
) -> ScanReport:
    rows = tuple(fiber_unique_ergodicity(alpha, f, t, n, n_samples, tol) for t in t_grid(grid))
    return ScanReport(rows, n, tol, alpha.illustrative)


def csv_report(report: ScanReport) -> str:
    lines = ["t,verdict,gap,n"]
    for r in report.rows:
        lines.append(f"{float(r.t):.12g},{r.label},{r.gap:.12g},{report.n}")
    return "\n".join(lines) + "\n"
