from __future__ import annotations


import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import build, load
from oracles import any_strict_leaf, layout_oracle, leaves, random_tree
from reference import REFERENCE_ALIGN
from irbuild import aggregate, block, field, fn, opaque, package, prim
from typeconf.ir import (
    PRIMITIVES,
    Adt,
    Array,
    FunctionIR,
    GenericParam,
    Generic,
    Opaque,
    PackageIR,
    Primitive,
    RawPtr,
    Ref,
    Slice,
    TraitDef,
    Visibility,
)
from typeconf.semantics import (
    ALL_PRIMITIVES,
    PADDING_TYPE,
    ArchWidth,
    LayoutClass,
    PatternClass,
    TraitMap,
    alignment_of,
    candidate_types,
    extract_external_type_hint,
    get_trait_bounds,
    has_padding,
    is_c_padded,
    layout_class,
    pattern_class,
    size_of,
    visibility_of,
)

B32, B64 = ArchWidth.BITS32, ArchWidth.BITS64


@pytest.mark.parametrize("name", sorted(REFERENCE_ALIGN))
@pytest.mark.parametrize("arch", [B32, B64])
def test_alignment_table(name, arch):
    expected = REFERENCE_ALIGN[name][0 if arch is B32 else 1]
    assert alignment_of(Primitive(name), arch) == expected


def test_alignment_examples():
    assert alignment_of(Primitive("u8"), B64) == 1
    assert alignment_of(Primitive("i32"), B32) == alignment_of(Primitive("i32"), B64) == 4
    assert alignment_of(Primitive("usize"), B32) == 4
    assert alignment_of(Primitive("usize"), B64) == 8


def test_arch_dependence_only_for_word_sized():
    for name in PRIMITIVES:
        same = alignment_of(Primitive(name), B32) == alignment_of(Primitive(name), B64)
        assert same == (name not in ("usize", "isize"))


def test_pointer_and_container_alignment():
    for arch in ArchWidth:
        assert alignment_of(RawPtr(Primitive("u8")), arch) == arch.word
        assert alignment_of(Ref(Slice(Primitive("u8"))), arch) == arch.word
        assert alignment_of(Slice(Primitive("u64")), arch) == 8
        assert alignment_of(Array(Primitive("u16"), 3), arch) == 2
        assert alignment_of(Generic("T"), arch) is None
        assert alignment_of(Opaque("foo::Widget"), arch) is None
        assert alignment_of(Opaque("external::u8_bytes"), arch) == 1


def test_hint_examples():
    assert extract_external_type_hint("external::u8_bytes") == "u8"
    assert extract_external_type_hint("foo::Widget") is None
    assert extract_external_type_hint("pkg::u16_u8_buf") == "u16"


def _hint_oracle(symbol: str):
    # Every primitive name occurring as a whole token of the final segment,
    # longest first, then leftmost.
    segment = symbol.split("::")[-1].split("<")[0]
    hits = []
    for name in PRIMITIVES:
        start = 0
        while (i := segment.find(name, start)) >= 0:
            before = segment[i - 1] if i else "_"
            after = segment[i + len(name)] if i + len(name) < len(segment) else "_"
            if not before.isalnum() and not after.isalnum():
                hits.append((-len(name), i, name))
            start = i + 1
    return min(hits)[2] if hits else None


tokens = st.sampled_from(list(PRIMITIVES) + ["bytes", "buf", "x", "Widget", "u", "8", "u88"])


@settings(max_examples=300, deadline=None)
@given(st.lists(tokens, min_size=1, max_size=5), st.sampled_from(["_", "-", "."]), st.booleans())
def test_hint_matches_enumeration(parts, sep, prefixed):
    symbol = ("ext::mod::" if prefixed else "") + sep.join(parts)
    assert extract_external_type_hint(symbol) == _hint_oracle(symbol)


def test_layout_examples():
    pkg = load("prettytable")
    assert layout_class(Primitive("u32")) is LayoutClass.STABLE
    assert layout_class(Adt("Table"), pkg) is LayoutClass.UNSTABLE
    tp = load("transparent_ok")
    assert layout_class(Adt("Wrapper"), tp) is LayoutClass.STABLE


def test_layout_c_repr_and_padding():
    pkg = load("repr_c_padding")
    assert layout_class(Adt("CHeader"), pkg) is LayoutClass.STABLE
    assert is_c_padded(Adt("CHeader"), pkg)
    assert has_padding(PADDING_TYPE, None)
    assert size_of(PADDING_TYPE, B64) == 6
    assert layout_class(PADDING_TYPE) is LayoutClass.UNSTABLE


def test_zero_sized_aggregate():
    pkg = build(package("p", aggregates=[aggregate("Unit")]))
    assert layout_class(Adt("Unit"), pkg) is LayoutClass.STABLE
    assert pattern_class(Adt("Unit"), pkg) is PatternClass.WEAK


def test_pattern_examples():
    assert pattern_class(Primitive("bool")) is PatternClass.STRICT
    assert pattern_class(Primitive("i64")) is PatternClass.WEAK
    pkg = build(package("p", aggregates=[aggregate("S", field("a", prim("u8")), field("b", prim("char")))]))
    assert pattern_class(Adt("S"), pkg) is PatternClass.STRICT
    assert pattern_class(Primitive("str")) is PatternClass.STRICT
    assert pattern_class(Ref(Primitive("u8"))) is PatternClass.STRICT
    assert pattern_class(RawPtr(Primitive("bool"))) is PatternClass.WEAK
    assert pattern_class(Generic("T")) is PatternClass.UNKNOWN


# -- random aggregate trees -------------------------------------------------

@st.composite
def aggregate_trees(draw, depth=4):
    return random_tree(lambda lo, hi: draw(st.integers(lo, hi)), lambda xs: draw(st.sampled_from(xs)), depth)


@settings(max_examples=200, deadline=None)
@given(aggregate_trees())
def test_pattern_class_any_strict_leaf(tree):
    root, pkg = tree
    assert (pattern_class(root, pkg) is PatternClass.STRICT) == any_strict_leaf(root, pkg)


@settings(max_examples=200, deadline=None)
@given(aggregate_trees())
def test_layout_class_rules(tree):
    root, pkg = tree
    assert layout_class(root, pkg) is layout_oracle(root, pkg)


@settings(max_examples=200, deadline=None)
@given(aggregate_trees(), st.sampled_from([B32, B64]))
def test_aggregate_alignment_is_max_field(tree, arch):
    root, pkg = tree
    expected = max(alignment_of(leaf, arch) for leaf in leaves(root, pkg))
    assert alignment_of(root, arch, pkg) == expected


# -- trait bounds -----------------------------------------------------------

def _fn(*bounds):
    return FunctionIR("f", generics=(GenericParam("T", tuple(bounds)),))


def test_rgb_bounds_kept():
    tm = TraitMap.builtin()
    bounds = ("Copy", "Send", "Sync", "'static")
    assert get_trait_bounds(_fn(*bounds), tm, True) == set(bounds)


def test_supertrait_expansion_hand_trace():
    # A: B + C, C: D; B and D are in the map, C is not.
    tm = TraitMap.builtin().extended([
        TraitDef("A", ("B", "C")), TraitDef("C", ("D",)),
        TraitDef("B", (), (Primitive("u8"), Primitive("u16"))),
        TraitDef("D", (), (Primitive("u16"),)),
    ])
    assert get_trait_bounds(_fn("A"), tm, True) == {"B", "D"}
    assert get_trait_bounds(_fn("A"), tm, False) == {"A"}


def test_unknown_bound_kept():
    assert get_trait_bounds(_fn("Mystery"), TraitMap.builtin(), True) == {"Mystery"}


def test_cyclic_supertraits_terminate():
    tm = TraitMap.builtin().extended([TraitDef("A", ("B",)), TraitDef("B", ("A", "Copy"))])
    assert get_trait_bounds(_fn("A"), tm, True) == {"Copy"}


def test_candidate_examples():
    tm = TraitMap.builtin()
    full = candidate_types({"Copy", "Send", "Sync", "'static"}, tm)
    assert not full.unconstrained
    assert full.types == ALL_PRIMITIVES | {PADDING_TYPE}
    assert candidate_types(set(), tm).unconstrained
    assert candidate_types({"Unknown"}, tm).unconstrained
    pod = candidate_types({"Pod"}, tm)
    assert PADDING_TYPE not in pod.types
    assert pod.types == tm.implementors["Pod"]


def test_static_never_narrows():
    tm = TraitMap.builtin()
    assert candidate_types({"Copy", "'static"}, tm).types == candidate_types({"Copy"}, tm).types


@settings(max_examples=200, deadline=None)
@given(
    st.sets(st.sampled_from(["Copy", "Send", "Pod", "Sized", "'static", "Plain", "Little", "Even"]), max_size=4),
    st.sampled_from(["Copy", "Send", "Pod", "Sized", "'static", "Plain", "Little", "Even"]),
)
def test_candidate_types_antitone(bounds, extra):
    tm = TraitMap.builtin().extended([
        TraitDef("Little", (), (Primitive("u8"), Primitive("i8"), Primitive("bool"))),
        TraitDef("Even", (), (Primitive("u16"), Primitive("u8"))),
    ])
    base = candidate_types(bounds, tm)
    more = candidate_types(bounds | {extra}, tm)
    if bounds:
        assert more.types <= base.types


def test_visibility():
    pkg = load("rgb")
    assert visibility_of(pkg.function("ComponentBytes::as_bytes_mut"), pkg) is False
    assert visibility_of(pkg.function("RGB::new"), pkg) is False
    assert visibility_of(pkg.function("exploit"), pkg) is False
    lm = load("lmdb")
    assert visibility_of(lm.function("value_as_bytes"), lm) is True
    pub = build(package("p", [fn("S::get", method_of="S", blocks=[block()])],
                        aggregates=[aggregate("S", field("x", prim("u8"), "public"))]))
    assert visibility_of(pub.functions[0], pub) is True
    ext = build(package("p", [fn("Ext::get", method_of="Ext", blocks=[block()])]))
    assert visibility_of(ext.functions[0], ext) is True
    nested = build(package("p", [fn("S::get", method_of="S", blocks=[block()])], aggregates=[
        aggregate("S", field("inner", {"kind": "adt", "name": "Inner", "args": []}, "public")),
        aggregate("Inner", field("x", prim("u8"))),
    ]))
    assert visibility_of(nested.functions[0], nested) is False
    assert visibility_of(FunctionIR("g", Visibility.PRIVATE), PackageIR("p")) is False


def test_opaque_alignment_in_fields():
    pkg = build(package("p", aggregates=[aggregate("S", field("a", opaque("x::Unknown")), field("b", prim("u8")))]))
    assert alignment_of(Adt("S"), B64, pkg) is None
