"""Characters of finite cyclic groups and duals of rotation bundles.

The character ``χ_k`` of ``Z_m`` sends ``x`` to ``e^{2πi·kx/m}``, so its values
are :class:`RationalAngle` objects and every identity below is exact.  A
dual bundle is stored through its subtrivialization: one angle per fiber,
the value at the rotation element of the generating character.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import PreconditionError, VerificationError
from .koopman import RationalAngle
from .spectrum import GroupRotationBundle, IsoWitness, spectrum_bundle


@dataclass(frozen=True, order=True)
class Character:
    group_order: int
    index: int

    def __post_init__(self):
        if self.group_order < 1:
            raise PreconditionError("group order must be positive")
        if not 0 <= self.index < self.group_order:
            raise PreconditionError(f"character index {self.index} outside [0, {self.group_order})")

    def __mul__(self, other: "Character") -> "Character":
        if other.group_order != self.group_order:
            raise PreconditionError("characters of different groups")
        return Character(self.group_order, (self.index + other.index) % self.group_order)

    def __call__(self, g: int) -> RationalAngle:
        return evaluate(self, g)


def evaluate(chi: Character, g: int) -> RationalAngle:
    if not 0 <= g < chi.group_order:
        raise PreconditionError(f"group element {g} outside Z_{chi.group_order}")
    return RationalAngle.of(Fraction(chi.index * g % chi.group_order, chi.group_order))


def dual_group(m: int) -> tuple[Character, ...]:
    """All characters of ``Z_m``; ``χ_j·χ_k = χ_{j+k}``."""
    if m < 1:
        raise PreconditionError("group order must be positive")
    return tuple(Character(m, k) for k in range(m))


@dataclass(frozen=True)
class DualBundle:
    """Fiber ``l`` is ``Z_{m_l}*`` marked by ``ι_l``, an angle of exact order ``m_l``."""

    fibers: tuple[tuple[int, RationalAngle], ...]

    def __post_init__(self):
        fibers = tuple((int(m), RationalAngle.of(a)) for m, a in self.fibers)
        object.__setattr__(self, "fibers", fibers)
        if not fibers:
            raise PreconditionError("a dual bundle needs at least one fiber")
        for l, (m, iota) in enumerate(fibers):
            if iota.order != m:
                raise PreconditionError(
                    f"fiber {l}: marker {iota} has order {iota.order}, so it does not embed Z_{m}*"
                )

    def subtrivialization_image(self) -> frozenset:
        """``ι(G*)`` as a subset of (Q/Z) × L."""
        return frozenset(
            (iota.scale(k), l) for l, (m, iota) in enumerate(self.fibers) for k in range(m)
        )


def dual_rotation_bundle(g: GroupRotationBundle) -> DualBundle:
    """Mark each dual fiber by ``χ_1`` evaluated at the rotation element."""
    fibers = []
    for m, a in g.fibers:
        fibers.append((m, evaluate(Character(m, 1 % m), a % m)))
    return DualBundle(tuple(fibers))


def dual_of_subtrivialized(d: DualBundle) -> GroupRotationBundle:
    """Rotate ``Z_{m_l}* ≅ Z_{m_l}`` by the marked element ``ι_l``."""
    return GroupRotationBundle(tuple((m, iota.num) if m > 1 else (1, 1) for m, iota in d.fibers))


def _evaluation_index(m: int, x: int) -> int:
    """Index ``y`` with ``δ_x = χ ↦ χ(x)`` equal to the character ``χ_k ↦ e^{2πi·ky/m}`` of ``Z_m*``."""
    values = tuple(evaluate(chi, x) for chi in dual_group(m))
    # A character of Z_m* is fixed by its value at χ_1; the comparison checks the rest.
    generator = values[1 % m]
    y = generator.num * (m // generator.den) % m
    if values != tuple(RationalAngle.of(Fraction(k * y, m)) for k in range(m)):
        raise VerificationError(f"evaluation at {x} is not a character of Z_{m}*")
    return y


def bidual_check(g: GroupRotationBundle) -> IsoWitness:
    """The evaluation isomorphism ``x ↦ δ_x`` from ``g`` onto its bidual, verified."""
    bidual = dual_of_subtrivialized(dual_rotation_bundle(g))
    if bidual.orders != g.orders:
        raise VerificationError("bidual changes fiber orders")
    theta = []
    for offset, (m, _) in zip(bidual.offsets, g.fibers):
        theta.extend(offset + _evaluation_index(m, x) for x in range(m))
    w = IsoWitness(tuple(theta), tuple(range(len(g.fibers))))

    src, dst = g.to_bundle(), bidual.to_bundle()
    t1, t2 = src.system.transition, dst.system.transition
    if sorted(theta) != list(range(len(theta))):
        raise VerificationError("evaluation map is not bijective")
    for i in range(len(theta)):
        if theta[t1[i]] != t2[theta[i]] or dst.proj[theta[i]] != src.proj[i]:
            raise VerificationError("evaluation map is not an isomorphism of rotation bundles")
    return w


@dataclass(frozen=True)
class FiberHom:
    """A homomorphism ``Z_source → Z_target`` given by its value table."""

    source_order: int
    target_order: int
    table: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "table", tuple(int(x) for x in self.table))
        a, b = self.source_order, self.target_order
        if len(self.table) != a:
            raise PreconditionError(f"table has length {len(self.table)}, expected {a}")
        for x in range(a):
            if not 0 <= self.table[x] < b:
                raise PreconditionError(f"table[{x}] outside Z_{b}")
            for y in range(a):
                if self.table[(x + y) % a] != (self.table[x] + self.table[y]) % b:
                    raise PreconditionError(
                        f"not a homomorphism: Θ({x}+{y}) != Θ({x}) + Θ({y})"
                    )

    @property
    def surjective(self) -> bool:
        return set(self.table) == set(range(self.target_order))


@dataclass(frozen=True)
class DualMorphism:
    """``tables[l][k]`` is the index of ``χ_k ∘ Θ_l``, a character of the source fiber ``l``;
    ``χ_k`` ranges over the target fiber ``θ(l)``."""

    tables: tuple[tuple[int, ...], ...]
    base_inverse: tuple[int, ...]
    injective: tuple[bool, ...]


def dual_morphism(fibers: Sequence[FiberHom], base: Sequence[int]) -> DualMorphism:
    base = tuple(int(x) for x in base)
    if len(base) != len(fibers) or sorted(base) != list(range(len(base))):
        raise PreconditionError("base map must be a bijection matching the fibers")
    tables = []
    for hom in fibers:
        a, b = hom.source_order, hom.target_order
        table = []
        for k in range(b):
            target_values = tuple(evaluate(Character(b, k), hom.table[x]) for x in range(a))
            # χ_k∘Θ is determined by Θ(1); the value comparison below confirms it.
            j = (k * hom.table[1 % a] * a // b) % a if a > 1 else 0
            if tuple(evaluate(Character(a, j), x) for x in range(a)) != target_values:
                raise VerificationError(f"pullback of χ_{k} along Θ is not χ_{j}")
            table.append(j)
        tables.append(tuple(table))
    injective = tuple(len(set(t)) == len(t) for t in tables)
    for hom, inj in zip(fibers, injective):
        if hom.surjective and not inj:
            raise VerificationError("dual of a surjective homomorphism is not injective")
    inverse = [0] * len(base)
    for l, x in enumerate(base):
        inverse[x] = l
    return DualMorphism(tuple(tables), tuple(inverse), injective)


def dual_of_trivial_product_check(m: int, base_size: int) -> bool:
    """Dualizing ``Z_m × L`` gives the constant bundle ``Z_m* × L``."""
    product = GroupRotationBundle(tuple((m, 1) for _ in range(base_size)))
    dual = dual_rotation_bundle(product)
    single = dual_rotation_bundle(GroupRotationBundle(((m, 1),))).fibers[0]
    if dual.fibers != tuple(single for _ in range(base_size)):
        return False
    return all(len(dual_group(order)) == m for order, _ in dual.fibers)


def dual_spectrum_identity(g: GroupRotationBundle) -> bool:
    """The subtrivialization image of the dual equals the point spectrum bundle."""
    # Fibers of the rotation system are laid out in order, so its maximal
    # trivial factor numbers them the same way.
    spectrum = spectrum_bundle(g.to_system()).as_set()
    return dual_rotation_bundle(g).subtrivialization_image() == spectrum
