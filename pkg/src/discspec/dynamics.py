"""Finite dynamical systems, bundles over finite bases and Ellis semigroups.

A finite system is a state set ``{0, ..., n-1}`` with a self-map given as a
transition table.  A bundle additionally projects the states onto a finite
base such that every fiber is mapped into itself.  All objects are immutable
and every operation is a pure function.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import lcm
from typing import Iterable, Sequence

from .errors import DiscreteSpectrumRequired, PreconditionError, VerificationError

MapTable = tuple[int, ...]


def compose(outer: Sequence[int], inner: Sequence[int]) -> MapTable:
    """Return the table of ``outer ∘ inner``."""
    return tuple(outer[i] for i in inner)


def identity_table(n: int) -> MapTable:
    return tuple(range(n))


def is_bijection(table: Sequence[int]) -> bool:
    return sorted(table) == list(range(len(table)))


def inverse_table(table: Sequence[int]) -> MapTable:
    inv = [0] * len(table)
    for i, j in enumerate(table):
        inv[j] = i
    return tuple(inv)


@dataclass(frozen=True)
class FinSystem:
    """A self-map of a finite discrete state space."""

    transition: MapTable

    def __post_init__(self):
        table = tuple(int(x) for x in self.transition)
        object.__setattr__(self, "transition", table)
        n = len(table)
        if n < 1:
            raise PreconditionError("a system needs at least one state")
        for i, j in enumerate(table):
            if not 0 <= j < n:
                raise PreconditionError(f"transition[{i}] = {j} is not a state index in [0, {n})")

    @property
    def n_states(self) -> int:
        return len(self.transition)

    def __call__(self, state: int) -> int:
        return self.transition[state]

    def power(self, k: int) -> MapTable:
        """Table of the k-th iterate (k >= 0)."""
        result = identity_table(self.n_states)
        base = self.transition
        while k:
            if k & 1:
                result = compose(base, result)
            base = compose(base, base)
            k >>= 1
        return result

    def cycles(self) -> list[tuple[int, ...]]:
        """Periodic orbits, each starting at its smallest state, sorted by that state."""
        n = self.n_states
        color = [0] * n  # 0 unseen, 1 on current path, 2 done
        found = []
        for start in range(n):
            path = []
            x = start
            while color[x] == 0:
                color[x] = 1
                path.append(x)
                x = self.transition[x]
            if color[x] == 1:
                cyc = path[path.index(x):]
                k = cyc.index(min(cyc))
                found.append(tuple(cyc[k:] + cyc[:k]))
            for y in path:
                color[y] = 2
        found.sort(key=lambda c: c[0])
        return found


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[tuple[int, int], ...] = ()
    missing_base: tuple[int, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True)
class FinBundle:
    """A finite system fibered over ``{0, ..., n_base-1}`` by ``proj``.

    Construction only checks shapes and index ranges.  Use
    :func:`validate_bundle` (or :meth:`require_valid`) for surjectivity and
    fiber invariance, so that broken bundles can still be reported on.
    """

    system: FinSystem
    n_base: int
    proj: MapTable

    def __post_init__(self):
        proj = tuple(int(x) for x in self.proj)
        object.__setattr__(self, "proj", proj)
        if self.n_base < 1:
            raise PreconditionError("a bundle needs at least one base point")
        if len(proj) != self.system.n_states:
            raise PreconditionError(
                f"proj has length {len(proj)}, expected {self.system.n_states}"
            )
        for i, b in enumerate(proj):
            if not 0 <= b < self.n_base:
                raise PreconditionError(f"proj[{i}] = {b} is not a base index in [0, {self.n_base})")

    @property
    def n_states(self) -> int:
        return self.system.n_states

    def fiber(self, b: int) -> tuple[int, ...]:
        if not 0 <= b < self.n_base:
            raise PreconditionError(f"base index {b} out of range [0, {self.n_base})")
        return tuple(i for i, p in enumerate(self.proj) if p == b)

    def fibers(self) -> list[tuple[int, ...]]:
        out: list[list[int]] = [[] for _ in range(self.n_base)]
        for i, p in enumerate(self.proj):
            out[p].append(i)
        return [tuple(f) for f in out]

    def require_valid(self) -> "FinBundle":
        report = validate_bundle(self)
        if not report.ok:
            if report.missing_base:
                raise PreconditionError(f"proj misses base points {list(report.missing_base)}")
            state, fib = report.violations[0]
            raise PreconditionError(
                f"fiber {fib} is not invariant: state {state} maps to "
                f"{self.system.transition[state]} in fiber {self.proj[self.system.transition[state]]}"
            )
        return self


def validate_bundle(b: FinBundle) -> ValidationReport:
    """Check surjectivity of ``proj`` and invariance of every fiber."""
    t = b.system.transition
    violations = tuple((i, b.proj[i]) for i in range(b.n_states) if b.proj[t[i]] != b.proj[i])
    missing = tuple(sorted(set(range(b.n_base)) - set(b.proj)))
    return ValidationReport(not violations and not missing, violations, missing)


@dataclass(frozen=True)
class Section:
    choice: MapTable

    def is_section_of(self, b: FinBundle) -> bool:
        return len(self.choice) == b.n_base and all(
            0 <= s < b.n_states and b.proj[s] == l for l, s in enumerate(self.choice)
        )


@dataclass(frozen=True)
class EllisSemigroup:
    """The distinct iterates ``φ, φ², ...`` of a finite self-map.

    ``elements`` lists them in order of first appearance, i.e. ``elements[k]``
    is the table of ``φ^(k+1)``.
    """

    elements: tuple[MapTable, ...]
    is_group: bool

    @property
    def order(self) -> int:
        return len(self.elements)

    def __contains__(self, table) -> bool:
        return tuple(table) in set(self.elements)


def has_discrete_spectrum(s: FinSystem) -> bool:
    # Equicontinuity is automatic on a finite discrete space, so only
    # invertibility remains.
    return is_bijection(s.transition)


def require_discrete_spectrum(s: FinSystem) -> None:
    if not has_discrete_spectrum(s):
        raise DiscreteSpectrumRequired("the transition map is not a bijection")


def _group_of_bijections(elements: Sequence[MapTable]) -> bool:
    if not elements:
        return False
    n = len(elements[0])
    if not all(is_bijection(e) for e in elements):
        return False
    members = set(elements)
    if identity_table(n) not in members:
        return False
    return all(inverse_table(e) in members for e in elements)


def ellis_semigroup(s: FinSystem) -> EllisSemigroup:
    seen: dict[MapTable, int] = {}
    current = s.transition
    while current not in seen:
        seen[current] = len(seen)
        current = compose(current, s.transition)
    elements = tuple(seen)
    return EllisSemigroup(elements, _group_of_bijections(elements))


def ellis_order(s: FinSystem) -> int:
    """Number of distinct iterates ``φ^n``, n >= 1, without enumerating them.

    The power sequence becomes periodic once every state has reached its
    cycle (after ``tail`` steps) with period the lcm of the cycle lengths.
    """
    period = lcm(*(len(c) for c in s.cycles()))
    periodic = {x for c in s.cycles() for x in c}
    tail = 0
    for x in range(s.n_states):
        steps = 0
        while x not in periodic:
            x = s.transition[x]
            steps += 1
        tail = max(tail, steps)
    return max(tail, 1) + period - 1


def _weak_component_labels(transition: Sequence[int]) -> tuple[int, ...]:
    parent = list(range(len(transition)))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in enumerate(transition):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)

    labels: dict[int, int] = {}
    proj = []
    for i in range(len(transition)):
        root = find(i)
        if root not in labels:
            labels[root] = len(labels)
        proj.append(labels[root])
    return tuple(proj)


def maximal_trivial_factor(s: FinSystem) -> FinBundle:
    """Bundle over the weak components of the functional graph.

    A function is fixed by the Koopman operator iff it is constant along
    every edge ``i -> φ(i)``, i.e. constant on weak components; the indicator
    functions of the components therefore span the fixed space.  Components
    are numbered in order of their smallest state.
    """
    proj = _weak_component_labels(s.transition)
    return FinBundle(s, max(proj) + 1, proj)


@dataclass(frozen=True)
class FiberView:
    """A fiber re-indexed as a system of its own.

    ``states[j]`` is the original state carrying local index ``j``.
    """

    system: FinSystem
    states: tuple[int, ...]

    @property
    def relabel(self) -> dict[int, int]:
        return {orig: j for j, orig in enumerate(self.states)}


def fiber_subsystem(b: FinBundle, l: int) -> FiberView:
    b.require_valid()
    states = b.fiber(l)
    local = {orig: j for j, orig in enumerate(states)}
    table = tuple(local[b.system.transition[x]] for x in states)
    return FiberView(FinSystem(table), states)


def is_minimal(s: FinSystem) -> bool:
    """True iff the map is a single cycle through all states."""
    if not has_discrete_spectrum(s):
        return False
    x, steps = s.transition[0], 1
    while x != 0:
        x = s.transition[x]
        steps += 1
    return steps == s.n_states


def fibers_minimal_check(b: FinBundle) -> bool:
    require_discrete_spectrum(b.system)
    b.require_valid()
    for l in range(b.n_base):
        fib = fiber_subsystem(b, l).system
        if not (is_minimal(fib) and has_discrete_spectrum(fib)):
            return False
    return True


@dataclass(frozen=True)
class Pullback:
    """The pullback ``r*K = {(m, k) : r(m) = p(k)}`` with its two projections.

    States of ``bundle`` are the ``pairs`` in lexicographic order.
    """

    bundle: FinBundle
    pairs: tuple[tuple[int, int], ...]
    to_base: MapTable
    to_total: MapTable


def pullback(b: FinBundle, r: Sequence[int]) -> Pullback:
    b.require_valid()
    r = tuple(int(x) for x in r)
    if not r:
        raise PreconditionError("base map must be non-empty")
    for m, x in enumerate(r):
        if not 0 <= x < b.n_base:
            raise PreconditionError(f"base map entry r[{m}] = {x} outside [0, {b.n_base})")
    missing = sorted(set(range(b.n_base)) - set(r))
    if missing:
        raise PreconditionError(f"base map is not surjective: misses {missing}")

    fibers = b.fibers()
    pairs = tuple((m, k) for m in range(len(r)) for k in fibers[r[m]])
    index = {pair: i for i, pair in enumerate(pairs)}
    phi = b.system.transition
    transition = tuple(index[(m, phi[k])] for m, k in pairs)
    to_base = tuple(m for m, _ in pairs)
    to_total = tuple(k for _, k in pairs)
    result = FinBundle(FinSystem(transition), len(r), to_base)

    if any(to_total[transition[i]] != phi[to_total[i]] for i in range(len(pairs))):
        raise VerificationError("pullback square does not commute")
    if not validate_bundle(result).ok:
        raise VerificationError("pullback is not a bundle")
    return Pullback(result, pairs, to_base, to_total)


def canonical_section(b: FinBundle) -> Section:
    b.require_valid()
    return Section(tuple(min(f) for f in b.fibers()))


def factor_from_partition(s: FinSystem, blocks: Iterable[Iterable[int]]) -> FinBundle:
    """Trivial factor whose fibers are the given blocks.

    Blocks are numbered in order of their smallest state.  Every block must
    be a union of weak components, otherwise its indicator is not invariant.
    """
    blocks = [sorted(set(int(x) for x in blk)) for blk in blocks]
    if any(not blk for blk in blocks):
        raise PreconditionError("empty block in partition")
    proj = [-1] * s.n_states
    for blk in sorted(blocks, key=lambda blk: blk[0]):
        label = max(proj) + 1
        for x in blk:
            if not 0 <= x < s.n_states:
                raise PreconditionError(f"state {x} out of range")
            if proj[x] != -1:
                raise PreconditionError(f"state {x} appears in two blocks")
            proj[x] = label
    uncovered = [i for i, p in enumerate(proj) if p == -1]
    if uncovered:
        raise PreconditionError(f"partition does not cover states {uncovered}")
    for i, j in enumerate(s.transition):
        if proj[i] != proj[j]:
            raise PreconditionError(f"edge {i} -> {j} crosses blocks {proj[i]} and {proj[j]}")
    return FinBundle(s, max(proj) + 1, tuple(proj))


@dataclass(frozen=True)
class HvnIso:
    """The evaluation map ``ψ ↦ ψ(x0)`` from the Ellis group onto the states."""

    x0: int
    elements: tuple[MapTable, ...]
    images: tuple[int, ...]

    def as_dict(self) -> dict[MapTable, int]:
        return dict(zip(self.elements, self.images))


def hvn_iso(s: FinSystem, x0: int) -> HvnIso:
    if not has_discrete_spectrum(s):
        raise DiscreteSpectrumRequired("hvn_iso needs an invertible system")
    if not is_minimal(s):
        raise PreconditionError("hvn_iso needs a minimal system (a single cycle)")
    if not 0 <= x0 < s.n_states:
        raise PreconditionError(f"x0 = {x0} is not a state")
    group = ellis_semigroup(s)
    images = tuple(psi[x0] for psi in group.elements)

    if sorted(images) != list(range(s.n_states)):
        raise VerificationError("evaluation map is not bijective")
    delta = dict(zip(group.elements, images))
    for psi in group.elements:
        if delta[compose(psi, s.transition)] != s.transition[delta[psi]]:
            raise VerificationError("evaluation map is not equivariant")
    if delta[identity_table(s.n_states)] != x0:
        raise VerificationError("identity is not sent to x0")
    return HvnIso(x0, group.elements, images)


def _require_minimal_fibers(b: FinBundle) -> None:
    require_discrete_spectrum(b.system)
    b.require_valid()
    if not fibers_minimal_check(b):
        raise PreconditionError("bundle is not over the maximal trivial factor (a fiber is not minimal)")


@dataclass(frozen=True)
class EllisBundle:
    """Bundle whose fiber over ``l`` is the Ellis group of the fiber system.

    State ``offsets[l] + j`` is ``φ_l^j`` (so the identity comes first) and the
    dynamics is ``ψ ↦ ψ ∘ φ_l``.  ``elements`` holds the fiber-local tables and
    ``witness`` the isomorphism ``ψ_l ↦ ψ_l(s(l))`` onto the original states.
    """

    bundle: FinBundle
    elements: tuple[MapTable, ...]
    offsets: tuple[int, ...]
    section: Section
    witness: MapTable


def ellis_bundle(b: FinBundle) -> EllisBundle:
    _require_minimal_fibers(b)
    section = canonical_section(b)
    transition: list[int] = []
    proj: list[int] = []
    elements: list[MapTable] = []
    witness: list[int] = []
    offsets = []
    for l in range(b.n_base):
        view = fiber_subsystem(b, l)
        group = ellis_semigroup(view.system)
        m = group.order
        offset = len(transition)
        offsets.append(offset)
        # group.elements[k] is φ_l^(k+1); reorder so index j holds φ_l^j.
        ordered = [group.elements[(j - 1) % m] for j in range(m)]
        anchor = view.relabel[section.choice[l]]
        for j, psi in enumerate(ordered):
            transition.append(offset + (j + 1) % m)
            proj.append(l)
            elements.append(psi)
            witness.append(view.states[psi[anchor]])

    result = EllisBundle(
        FinBundle(FinSystem(tuple(transition)), b.n_base, tuple(proj)),
        tuple(elements),
        tuple(offsets),
        section,
        tuple(witness),
    )
    if not verify_bundle_iso(result.bundle, b, result.witness, identity_table(b.n_base)):
        raise VerificationError("Ellis bundle witness is not a bundle isomorphism")
    return result


def verify_bundle_iso(
    source: FinBundle, target: FinBundle, states: Sequence[int], base: Sequence[int]
) -> bool:
    """Check bijectivity, equivariance and the base square of ``(states, base)``."""
    if source.n_states != target.n_states or source.n_base != target.n_base:
        return False
    if not (is_bijection(states) and is_bijection(base)):
        return False
    t1, t2 = source.system.transition, target.system.transition
    return all(
        states[t1[i]] == t2[states[i]] and target.proj[states[i]] == base[source.proj[i]]
        for i in range(source.n_states)
    )


@dataclass(frozen=True)
class TrivialFactorCover:
    """Factor map from ``(E(K, φ), φ) × (L, id)`` onto ``(K, φ)``.

    Product state ``l * |E| + e`` is the pair ``(elements[e], l)``.
    """

    product: FinBundle
    elements: tuple[MapTable, ...]
    section: Section
    theta: MapTable


def trivial_factor_cover(s: FinSystem) -> TrivialFactorCover:
    require_discrete_spectrum(s)
    group = ellis_semigroup(s)
    factor = maximal_trivial_factor(s)
    section = canonical_section(factor)
    index = {psi: e for e, psi in enumerate(group.elements)}
    size = group.order

    transition, proj, theta = [], [], []
    for l in range(factor.n_base):
        for psi in group.elements:
            transition.append(l * size + index[compose(psi, s.transition)])
            proj.append(l)
            theta.append(psi[section.choice[l]])
    product = FinBundle(FinSystem(tuple(transition)), factor.n_base, tuple(proj))

    if set(theta) != set(range(s.n_states)):
        raise VerificationError("trivial factor cover is not surjective")
    pt = product.system.transition
    if any(theta[pt[i]] != s.transition[theta[i]] for i in range(len(theta))):
        raise VerificationError("trivial factor cover is not equivariant")
    return TrivialFactorCover(product, group.elements, section, tuple(theta))


def cycle_lcm(s: FinSystem) -> int:
    return lcm(*(len(c) for c in s.cycles()))
