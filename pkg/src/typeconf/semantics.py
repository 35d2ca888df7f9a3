"""Per-type metadata: alignment, layout stability, bit-pattern strictness,
and generic candidate sets derived from trait bounds."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from functools import reduce
from typing import Iterable, Mapping

from .ir import (
    PRIMITIVES,
    Adt,
    AggregateDef,
    Array,
    FieldDef,
    FunctionIR,
    Opaque,
    PackageIR,
    Primitive,
    RawPtr,
    Ref,
    Repr,
    Slice,
    TraitDef,
    TypeDescriptor,
    Visibility,
    is_zero_sized,
    resolve_aggregate,
)


class ArchWidth(Enum):
    BITS32 = 32
    BITS64 = 64

    @property
    def word(self) -> int:
        return self.value // 8


BOTH_ARCHES = frozenset(ArchWidth)


class LayoutClass(Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"


class PatternClass(Enum):
    WEAK = "weak"
    STRICT = "strict"
    UNKNOWN = "unknown"


_FIXED_ALIGN = {
    "bool": 1, "char": 4, "str": 1, "()": 1,
    "u8": 1, "i8": 1, "u16": 2, "i16": 2,
    "u32": 4, "i32": 4, "f32": 4,
    "u64": 8, "i64": 8, "f64": 8,
    "u128": 16, "i128": 16,
}
_WORD_SIZED = ("usize", "isize")
_STRICT_PRIMITIVES = frozenset({"bool", "char", "str"})

# Composite candidate injected for generics that external code can
# instantiate: three primitive fields whose natural layout needs padding.
PADDING_NAME = "Padding"
PADDING_DEF = AggregateDef(
    PADDING_NAME,
    (
        FieldDef("a", Primitive("u8"), Visibility.PUBLIC),
        FieldDef("b", Primitive("u16"), Visibility.PUBLIC),
        FieldDef("c", Primitive("u8"), Visibility.PUBLIC),
    ),
    Repr.DEFAULT,
)
PADDING_TYPE = Adt(PADDING_NAME)
_SYNTHETIC = {PADDING_NAME: PADDING_DEF}


def lookup_aggregate(name: str, pkg: PackageIR | None) -> AggregateDef | None:
    """Package definitions first, then the synthetic candidate aggregates."""
    agg = resolve_aggregate(name, pkg)
    if agg is None:
        agg = _SYNTHETIC.get(name)
    return agg


def extract_external_type_hint(symbol: str) -> str | None:
    """Guess a primitive from an external type's symbol name.

    Picks the longest primitive-name token in the final path segment,
    breaking ties to the left: ``external::u8_bytes`` gives ``u8``.
    """
    segment = symbol.rsplit("::", 1)[-1].split("<", 1)[0]
    best: str | None = None
    for token in re.split(r"[^A-Za-z0-9]+", segment):
        if token in PRIMITIVES and (best is None or len(token) > len(best)):
            best = token
    return best


def alignment_of(ty: TypeDescriptor, arch: ArchWidth, pkg: PackageIR | None = None) -> int | None:
    """Alignment in bytes, or ``None`` when it cannot be determined."""
    return _align(ty, arch, pkg, frozenset())


def _align(ty, arch, pkg, seen) -> int | None:
    match ty:
        case Primitive(name=n):
            if n in _WORD_SIZED:
                return arch.word
            return _FIXED_ALIGN.get(n)
        case RawPtr() | Ref():
            return arch.word
        case Slice(element=e) | Array(element=e):
            return _align(e, arch, pkg, seen)
        case Adt(name=name):
            agg = lookup_aggregate(name, pkg)
            if agg is None or name in seen:
                return None
            result = 1
            for f in agg.fields:
                a = _align(f.ty, arch, pkg, seen | {name})
                if a is None:
                    return None
                result = max(result, a)
            return result
        case Opaque(symbol=s):
            hint = extract_external_type_hint(s)
            return _align(Primitive(hint), arch, pkg, seen) if hint else None
    return None


def _is_fat(pointee: TypeDescriptor) -> bool:
    return isinstance(pointee, Slice) or pointee == Primitive("str")


def size_of(ty: TypeDescriptor, arch: ArchWidth, pkg: PackageIR | None = None) -> int | None:
    """Size in bytes with aggregates laid out in declaration order."""
    match ty:
        case Primitive(name="str"):
            return None
        case Primitive(name="()"):
            return 0
        case Primitive():
            return alignment_of(ty, arch)
        case RawPtr(pointee=p) | Ref(pointee=p):
            return arch.word * (2 if _is_fat(p) else 1)
        case Array(element=e, length=n):
            s = size_of(e, arch, pkg)
            return None if s is None else s * n
        case Adt(name=name):
            layout = _c_layout(name, arch, pkg)
            return None if layout is None else layout[0]
    return None


def _c_layout(name: str, arch: ArchWidth, pkg) -> tuple[int, int] | None:
    """Return ``(size, padding_bytes)`` for declaration-order layout."""
    agg = lookup_aggregate(name, pkg)
    if agg is None:
        return None
    offset = 0
    max_align = 1
    payload = 0
    for f in agg.fields:
        a = alignment_of(f.ty, arch, pkg)
        s = size_of(f.ty, arch, pkg)
        if a is None or s is None:
            return None
        offset = -(-offset // a) * a
        offset += s
        payload += s
        max_align = max(max_align, a)
    size = -(-offset // max_align) * max_align
    return size, size - payload


def has_padding(ty: TypeDescriptor, pkg: PackageIR | None, arches: Iterable[ArchWidth] = BOTH_ARCHES) -> bool:
    """True when an aggregate (or a nested field) carries padding bytes on
    any of ``arches``."""
    return _has_padding(ty, pkg, tuple(arches), frozenset())


def _has_padding(ty, pkg, arches, seen) -> bool:
    match ty:
        case Array(element=e, length=n):
            return n > 0 and _has_padding(e, pkg, arches, seen)
        case Adt(name=name):
            agg = lookup_aggregate(name, pkg)
            if agg is None or name in seen:
                return False
            for arch in arches:
                layout = _c_layout(name, arch, pkg)
                if layout is not None and layout[1] > 0:
                    return True
            return any(_has_padding(f.ty, pkg, arches, seen | {name}) for f in agg.fields)
    return False


def layout_class(ty: TypeDescriptor, pkg: PackageIR | None = None) -> LayoutClass:
    return _layout(ty, pkg, frozenset())


def _layout(ty, pkg, seen) -> LayoutClass:
    match ty:
        case Primitive() | RawPtr() | Ref():
            return LayoutClass.STABLE
        case Slice(element=e) | Array(element=e):
            return _layout(e, pkg, seen)
        case Adt(name=name):
            agg = lookup_aggregate(name, pkg)
            if agg is None or name in seen:
                return LayoutClass.UNSTABLE
            if is_zero_sized(ty, pkg):
                return LayoutClass.STABLE
            if agg.representation is Repr.TRANSPARENT:
                inner = [f for f in agg.fields if not is_zero_sized(f.ty, pkg)]
                if len(inner) != 1:
                    return LayoutClass.UNSTABLE
                return _layout(inner[0].ty, pkg, seen | {name})
            if agg.representation is Repr.C:
                return LayoutClass.STABLE
            return LayoutClass.UNSTABLE
    return LayoutClass.UNSTABLE


def is_c_padded(ty: TypeDescriptor, pkg: PackageIR | None) -> bool:
    """A declaration-ordered aggregate whose layout still exposes padding."""
    if not isinstance(ty, Adt):
        return False
    agg = lookup_aggregate(ty.name, pkg)
    return agg is not None and agg.representation is Repr.C and has_padding(ty, pkg)


def pattern_class(ty: TypeDescriptor, pkg: PackageIR | None = None) -> PatternClass:
    return _pattern(ty, pkg, frozenset())


def _pattern(ty, pkg, seen) -> PatternClass:
    match ty:
        case Primitive(name=n):
            return PatternClass.STRICT if n in _STRICT_PRIMITIVES else PatternClass.WEAK
        case Ref():
            return PatternClass.STRICT
        case RawPtr():
            return PatternClass.WEAK
        case Array(length=0):
            return PatternClass.WEAK
        case Slice(element=e) | Array(element=e):
            return _pattern(e, pkg, seen)
        case Adt(name=name):
            agg = lookup_aggregate(name, pkg)
            if agg is None or name in seen:
                return PatternClass.UNKNOWN
            classes = {_pattern(f.ty, pkg, seen | {name}) for f in agg.fields}
            if PatternClass.STRICT in classes:
                return PatternClass.STRICT
            if PatternClass.UNKNOWN in classes:
                return PatternClass.UNKNOWN
            return PatternClass.WEAK
    return PatternClass.UNKNOWN


# -- trait bounds -----------------------------------------------------------

ALL_PRIMITIVES = frozenset(Primitive(n) for n in PRIMITIVES)
_NUMERIC = frozenset(Primitive(n) for n in PRIMITIVES if n not in _STRICT_PRIMITIVES)
STATIC_BOUND = "'static"

BUILTIN_MARKERS = ("Copy", "Clone", "Send", "Sync", "Sized", "Unpin", "Debug", STATIC_BOUND)
BUILTIN_LAYOUT_GUARDS = ("Plain", "Pod", "AnyBitPattern", "FromBytes")
_BUILTIN_SUPERTRAITS = {
    "Copy": ("Clone",),
    "Pod": ("Zeroable", "Copy", STATIC_BOUND),
    "AnyBitPattern": ("Zeroable", "Copy", STATIC_BOUND),
}


@dataclass(frozen=True)
class TraitMap:
    """Trait name to the concrete types known to implement it.

    Layout-guard traits certify an initialized, stable layout; only
    padding-free scalars implement them.  ``'static`` never narrows a set,
    so its implementors are the union of every other entry.
    """

    implementors: Mapping[str, frozenset[TypeDescriptor]]
    supertraits: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    layout_guards: frozenset[str] = frozenset()

    def __contains__(self, name: object) -> bool:
        return name in self.implementors

    @classmethod
    def builtin(cls) -> "TraitMap":
        impls = {name: ALL_PRIMITIVES for name in BUILTIN_MARKERS}
        impls.update({name: _NUMERIC for name in BUILTIN_LAYOUT_GUARDS})
        return cls(impls, dict(_BUILTIN_SUPERTRAITS), frozenset(BUILTIN_LAYOUT_GUARDS))._close()

    def extended(self, traits: Iterable[TraitDef]) -> "TraitMap":
        """Merge trait definitions; only those listing implementors become
        map entries, the rest contribute supertrait edges."""
        impls = dict(self.implementors)
        supers = dict(self.supertraits)
        guards = set(self.layout_guards)
        for t in traits:
            if t.supertraits:
                supers[t.name] = tuple(dict.fromkeys(supers.get(t.name, ()) + t.supertraits))
            if t.implementors:
                impls[t.name] = impls.get(t.name, frozenset()) | frozenset(t.implementors)
            if t.layout_guard:
                guards.add(t.name)
        return TraitMap(impls, supers, frozenset(guards))._close()

    def _close(self) -> "TraitMap":
        impls = dict(self.implementors)
        impls.pop(STATIC_BOUND, None)
        universe = reduce(frozenset.union, impls.values(), ALL_PRIMITIVES)
        impls[STATIC_BOUND] = universe
        return TraitMap(impls, self.supertraits, self.layout_guards)

    @classmethod
    def for_package(cls, pkg: PackageIR, overlay: Iterable[TraitDef] = ()) -> "TraitMap":
        return cls.builtin().extended(overlay).extended(pkg.traits.values())


def resolve_bounds(
    bounds: Iterable[str], trait_map: TraitMap, visible: bool, _visited: set[str] | None = None
) -> set[str]:
    visited = set() if _visited is None else _visited
    out: set[str] = set()
    for bound in bounds:
        if bound in visited:
            continue
        visited.add(bound)
        if bound in trait_map:
            out.add(bound)
        elif trait_map.supertraits.get(bound) and visible:
            out |= resolve_bounds(trait_map.supertraits[bound], trait_map, visible, visited)
        else:
            out.add(bound)
    return out


def get_trait_bounds(fn: FunctionIR, trait_map: TraitMap, visible: bool) -> set[str]:
    """Collect the trait bounds of every generic parameter of ``fn``.

    Bounds present in the map are kept; others are replaced by their
    supertraits (recursively) when the function is externally visible,
    and kept verbatim otherwise.
    """
    return resolve_bounds((b for g in fn.generics for b in g.bounds), trait_map, visible)


@dataclass(frozen=True)
class CandidateTypeSet:
    types: frozenset[TypeDescriptor] = frozenset()
    unconstrained: bool = False

    def sorted(self) -> list[TypeDescriptor]:
        return sorted(self.types, key=str)


UNCONSTRAINED = CandidateTypeSet(frozenset(), True)


def candidate_types(
    bounds: Iterable[str], trait_map: TraitMap, include_composite: bool = True
) -> CandidateTypeSet:
    """Concrete types that may instantiate a generic with ``bounds``.

    ``include_composite`` adds the synthetic padded aggregate, standing in
    for user-defined structs, unless a layout guard is among the bounds.
    """
    bounds = set(bounds)
    known = [b for b in bounds if b in trait_map]
    if not known:
        return UNCONSTRAINED
    types = reduce(frozenset.intersection, (trait_map.implementors[b] for b in known))
    if include_composite and not bounds & trait_map.layout_guards:
        types |= {PADDING_TYPE}
    return CandidateTypeSet(types, False)


def visibility_of(fn: FunctionIR, pkg: PackageIR) -> bool:
    """Whether external code can reach ``fn`` with values it built itself."""
    if fn.visibility is not Visibility.PUBLIC:
        return False
    if fn.method_of is None:
        return True
    return _constructible(Adt(fn.method_of), pkg, set())


def _constructible(ty: TypeDescriptor, pkg: PackageIR, seen: set[str]) -> bool:
    match ty:
        case Adt(name=name):
            agg = resolve_aggregate(name, pkg)
            if agg is None or name in seen:
                return True
            seen.add(name)
            if agg.visibility is not Visibility.PUBLIC:
                return False
            return all(
                f.visibility is Visibility.PUBLIC and _constructible(f.ty, pkg, seen)
                for f in agg.fields
            )
        case RawPtr(pointee=p) | Ref(pointee=p):
            return _constructible(p, pkg, seen)
        case Slice(element=e) | Array(element=e):
            return _constructible(e, pkg, seen)
    return True
