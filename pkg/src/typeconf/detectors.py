"""Conversion checks for the three bug classes.

Each check takes a conversion pair and the candidate set for its generic
side.  Concrete pairs are judged directly; generic pairs either fall back
to the unconstrained rule or substitute every candidate and rerun the
concrete rule, reporting the smallest marking candidate (by name) as the
witness.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable

from .ir import Adt, Array, Opaque, PackageIR, Primitive, Slice, TypeDescriptor, substitute
from .propgraph import ConversionPair, FunctionRecord, Scenario
from .semantics import (
    BOTH_ARCHES,
    UNCONSTRAINED,
    ArchWidth,
    CandidateTypeSet,
    LayoutClass,
    PatternClass,
    TraitMap,
    alignment_of,
    candidate_types,
    is_c_padded,
    layout_class,
    pattern_class,
)


class BugKind(str, Enum):
    MISALIGNMENT = "misalignment"
    INCONSISTENT_LAYOUT = "inconsistent_layout"
    MISMATCHED_SCOPE = "mismatched_scope"

    @property
    def short(self) -> str:
        return _SHORT[self]

    @classmethod
    def from_short(cls, s: str) -> "BugKind":
        for kind, short in _SHORT.items():
            if s in (short, kind.value):
                return kind
        raise ValueError(f"unknown bug type {s!r}")


_SHORT = {
    BugKind.MISALIGNMENT: "I",
    BugKind.INCONSISTENT_LAYOUT: "II",
    BugKind.MISMATCHED_SCOPE: "III",
}
ALL_KINDS = tuple(BugKind)


@dataclass(frozen=True)
class Finding:
    kind: BugKind
    pair: ConversionPair
    rationale: str
    witness: TypeDescriptor | None = None
    arches: tuple[ArchWidth, ...] = field(default=())

    @property
    def dst_local(self) -> int:
        return self.pair.dst_local


def _rule(n: int, scenario: Scenario, sub: str) -> str:
    return f"T{n}-{scenario.value}-{sub}"


def _arch_order(arches: Iterable[ArchWidth]) -> list[ArchWidth]:
    return sorted(arches, key=lambda a: a.value)


# A concrete judgement: None for "no mark", else (sub-rule, failing arches).
_Verdict = tuple[str, tuple[ArchWidth, ...]] | None


def _substituted(
    pair: ConversionPair,
    ty_set: CandidateTypeSet,
    judge: Callable[[TypeDescriptor, TypeDescriptor], _Verdict],
    kind: BugKind,
    n: int,
) -> Finding | None:
    for cand in ty_set.sorted():
        if pair.scenario is Scenario.GEN_CON:
            src, dst = substitute(pair.src, cand), pair.dst
        else:
            src, dst = pair.src, substitute(pair.dst, cand)
        verdict = judge(src, dst)
        if verdict is not None:
            sub, arches = verdict
            return Finding(kind, pair, _rule(n, pair.scenario, sub), cand, arches)
    return None


# -- Type I -----------------------------------------------------------------

def _misaligned(src, dst, arches, pkg) -> _Verdict:
    failing = []
    for arch in _arch_order(arches):
        a, b = alignment_of(src, arch, pkg), alignment_of(dst, arch, pkg)
        if a is not None and b is not None and a % b != 0:
            failing.append(arch)
    return ("align-mod", tuple(failing)) if failing else None


def check_misalignment(
    pair: ConversionPair,
    ty_set: CandidateTypeSet = UNCONSTRAINED,
    arches: Iterable[ArchWidth] = BOTH_ARCHES,
    pkg: PackageIR | None = None,
) -> Finding | None:
    arches = _arch_order(arches)
    kind = BugKind.MISALIGNMENT

    def judge(src, dst):
        return _misaligned(src, dst, arches, pkg)

    if pair.scenario is Scenario.CON_CON:
        verdict = judge(pair.src, pair.dst)
        return None if verdict is None else Finding(kind, pair, _rule(1, pair.scenario, verdict[0]), None, verdict[1])
    if not ty_set.unconstrained:
        return _substituted(pair, ty_set, judge, kind, 1)
    if pair.scenario is Scenario.CON_GEN:
        return Finding(kind, pair, _rule(1, pair.scenario, "align-mod"), None, tuple(arches))
    failing = []
    for arch in arches:
        b = alignment_of(pair.dst, arch, pkg)
        if b is not None and b != 1:
            failing.append(arch)
    if not failing:
        return None
    return Finding(kind, pair, _rule(1, pair.scenario, "align-mod"), None, tuple(failing))


# -- Type II ----------------------------------------------------------------

def abi_compatible(src: TypeDescriptor, dst: TypeDescriptor) -> bool:
    """Unstable types share an ABI only when they are the same named type."""
    if isinstance(src, Adt) and isinstance(dst, Adt):
        return src.name == dst.name
    if isinstance(src, Opaque) and isinstance(dst, Opaque):
        return src.symbol == dst.symbol
    return str(src) == str(dst)


def _is_scalar(ty: TypeDescriptor) -> bool:
    while isinstance(ty, (Slice, Array)):
        ty = ty.element
    return isinstance(ty, Primitive)


def _layout_mismatch(src, dst, pkg) -> _Verdict:
    s, d = layout_class(src, pkg), layout_class(dst, pkg)
    if s is LayoutClass.UNSTABLE and d is LayoutClass.STABLE:
        return "unstable-stable", ()
    if s is LayoutClass.UNSTABLE and d is LayoutClass.UNSTABLE and not abi_compatible(src, dst):
        return "unstable-abi", ()
    if is_c_padded(src, pkg) and _is_scalar(dst):
        return "padding-exposure", ()
    return None


def check_inconsistent_layout(
    pair: ConversionPair,
    ty_set: CandidateTypeSet = UNCONSTRAINED,
    pkg: PackageIR | None = None,
) -> Finding | None:
    kind = BugKind.INCONSISTENT_LAYOUT

    def judge(src, dst):
        return _layout_mismatch(src, dst, pkg)

    if pair.scenario is Scenario.CON_CON:
        verdict = judge(pair.src, pair.dst)
        return None if verdict is None else Finding(kind, pair, _rule(2, pair.scenario, verdict[0]))
    if not ty_set.unconstrained:
        return _substituted(pair, ty_set, judge, kind, 2)
    if pair.scenario is Scenario.CON_GEN:
        if layout_class(pair.src, pkg) is LayoutClass.UNSTABLE:
            return Finding(kind, pair, _rule(2, pair.scenario, "unstable-abi"))
        return None
    # An unknown source instantiation is unstable and never shares a name
    # with the destination.
    sub = "unstable-stable" if layout_class(pair.dst, pkg) is LayoutClass.STABLE else "unstable-abi"
    return Finding(kind, pair, _rule(2, pair.scenario, sub))


# -- Type III ---------------------------------------------------------------

def _scope_mismatch(src, dst, mutable, pkg) -> _Verdict:
    s, d = pattern_class(src, pkg), pattern_class(dst, pkg)
    if s is PatternClass.WEAK and d is PatternClass.STRICT:
        return "weak-strict", ()
    if s is PatternClass.STRICT and d is PatternClass.WEAK and mutable:
        return "strict-mutweak", ()
    return None


def check_mismatched_scope(
    pair: ConversionPair,
    ty_set: CandidateTypeSet = UNCONSTRAINED,
    pkg: PackageIR | None = None,
) -> Finding | None:
    kind = BugKind.MISMATCHED_SCOPE

    def judge(src, dst):
        return _scope_mismatch(src, dst, pair.dst_mutable, pkg)

    if pair.scenario is Scenario.CON_CON:
        verdict = judge(pair.src, pair.dst)
        return None if verdict is None else Finding(kind, pair, _rule(3, pair.scenario, verdict[0]))
    if not ty_set.unconstrained:
        return _substituted(pair, ty_set, judge, kind, 3)
    if pair.scenario is Scenario.CON_GEN:
        known = pattern_class(pair.src, pkg)
    else:
        known = pattern_class(pair.dst, pkg)
    sub = None
    if pair.scenario is Scenario.CON_GEN:
        if known in (PatternClass.WEAK, PatternClass.UNKNOWN):
            sub = "weak-strict"
        elif pair.dst_mutable:
            sub = "strict-mutweak"
    else:
        if known in (PatternClass.STRICT, PatternClass.UNKNOWN):
            sub = "weak-strict"
        elif pair.dst_mutable:
            sub = "strict-mutweak"
    return None if sub is None else Finding(kind, pair, _rule(3, pair.scenario, sub))


def check(
    kind: BugKind,
    pair: ConversionPair,
    ty_set: CandidateTypeSet = UNCONSTRAINED,
    arches: Iterable[ArchWidth] = BOTH_ARCHES,
    pkg: PackageIR | None = None,
) -> Finding | None:
    if kind is BugKind.MISALIGNMENT:
        return check_misalignment(pair, ty_set, arches, pkg)
    if kind is BugKind.INCONSISTENT_LAYOUT:
        return check_inconsistent_layout(pair, ty_set, pkg)
    return check_mismatched_scope(pair, ty_set, pkg)


def run_detectors(
    record: FunctionRecord,
    trait_map: TraitMap,
    pkg: PackageIR | None = None,
    kinds: Iterable[BugKind] = ALL_KINDS,
    arches: Iterable[ArchWidth] = BOTH_ARCHES,
) -> list[Finding]:
    """Run every enabled check once on every pair of ``record``."""
    kinds = [k for k in ALL_KINDS if k in set(kinds)]
    arches = _arch_order(arches)
    out = []
    for pair in record.conversion_pairs:
        ty_set = (
            UNCONSTRAINED
            if pair.scenario is Scenario.CON_CON
            else candidate_types(pair.bounds, trait_map, include_composite=record.visible)
        )
        for kind in kinds:
            f = check(kind, pair, ty_set, arches, pkg)
            if f is not None:
                out.append(f)
    return out
