"""MIR-like intermediate representation and its JSON loader.

A package document is a JSON object::

    {"name": ..., "functions": [...], "aggregates": [...], "traits": [...]}

Type descriptors are tagged objects keyed by ``"kind"`` (``primitive``,
``raw_ptr``, ``ref``, ``slice``, ``array``, ``adt``, ``generic``,
``opaque``).  Local 0 of every function is the return slot and parameters
occupy locals ``1..n``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterator, Union

PRIMITIVES = (
    "bool", "char", "str",
    "u8", "u16", "u32", "u64", "u128",
    "i8", "i16", "i32", "i64", "i128",
    "usize", "isize", "f32", "f64",
)


class IRError(ValueError):
    """Base class for document loading errors."""


class MalformedDocument(IRError):
    def __init__(self, path: str, message: str) -> None:
        super().__init__(f"{path}: {message}")
        self.path = path


class DanglingReference(IRError):
    def __init__(self, violations: list["Violation"]) -> None:
        super().__init__("; ".join(str(v) for v in violations))
        self.violations = violations


class Visibility(str, Enum):
    PUBLIC = "public"
    PRIVATE = "private"


class Repr(str, Enum):
    DEFAULT = "default"
    C = "c"
    TRANSPARENT = "transparent"


class Mode(str, Enum):
    MOVE = "move"
    COPY = "copy"
    CONST = "const"


# -- type descriptors -------------------------------------------------------

@dataclass(frozen=True)
class Primitive:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class RawPtr:
    pointee: "TypeDescriptor"
    mutable: bool = False

    def __str__(self) -> str:
        return f"*{'mut' if self.mutable else 'const'} {self.pointee}"


@dataclass(frozen=True)
class Ref:
    pointee: "TypeDescriptor"
    mutable: bool = False

    def __str__(self) -> str:
        return f"&{'mut ' if self.mutable else ''}{self.pointee}"


@dataclass(frozen=True)
class Slice:
    element: "TypeDescriptor"

    def __str__(self) -> str:
        return f"[{self.element}]"


@dataclass(frozen=True)
class Array:
    element: "TypeDescriptor"
    length: int

    def __str__(self) -> str:
        return f"[{self.element}; {self.length}]"


@dataclass(frozen=True)
class Adt:
    """Reference to an aggregate definition by name.

    ``args`` are kept for display only; matching ignores them.
    """

    name: str
    args: tuple["TypeDescriptor", ...] = ()

    def __str__(self) -> str:
        if not self.args:
            return self.name
        return f"{self.name}<{', '.join(map(str, self.args))}>"


@dataclass(frozen=True)
class Generic:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Opaque:
    symbol: str

    def __str__(self) -> str:
        return self.symbol


TypeDescriptor = Union[Primitive, RawPtr, Ref, Slice, Array, Adt, Generic, Opaque]
POINTER_KINDS = (RawPtr, Ref)


def pointee_of(ty: TypeDescriptor) -> TypeDescriptor:
    """The pointed-to type for pointers, the type itself otherwise."""
    if isinstance(ty, POINTER_KINDS):
        return ty.pointee
    return ty


def contains_generic(ty: TypeDescriptor) -> bool:
    match ty:
        case Generic():
            return True
        case RawPtr(pointee=p) | Ref(pointee=p):
            return contains_generic(p)
        case Slice(element=e) | Array(element=e):
            return contains_generic(e)
    return False


def generic_params(ty: TypeDescriptor) -> list[str]:
    match ty:
        case Generic(name=n):
            return [n]
        case RawPtr(pointee=p) | Ref(pointee=p):
            return generic_params(p)
        case Slice(element=e) | Array(element=e):
            return generic_params(e)
    return []


def substitute(ty: TypeDescriptor, replacement: TypeDescriptor) -> TypeDescriptor:
    """Replace every generic parameter inside ``ty`` with ``replacement``."""
    match ty:
        case Generic():
            return replacement
        case RawPtr(pointee=p, mutable=m):
            return RawPtr(substitute(p, replacement), m)
        case Ref(pointee=p, mutable=m):
            return Ref(substitute(p, replacement), m)
        case Slice(element=e):
            return Slice(substitute(e, replacement))
        case Array(element=e, length=n):
            return Array(substitute(e, replacement), n)
    return ty


# -- aggregates and traits --------------------------------------------------

@dataclass(frozen=True)
class FieldDef:
    name: str
    ty: TypeDescriptor
    visibility: Visibility = Visibility.PRIVATE


@dataclass(frozen=True)
class AggregateDef:
    name: str
    fields: tuple[FieldDef, ...] = ()
    representation: Repr = Repr.DEFAULT
    visibility: Visibility = Visibility.PUBLIC


@dataclass(frozen=True)
class TraitDef:
    name: str
    supertraits: tuple[str, ...] = ()
    implementors: tuple[TypeDescriptor, ...] = ()
    layout_guard: bool = False


# -- statements -------------------------------------------------------------

@dataclass(frozen=True)
class Place:
    local: int
    deref: bool = False

    def __str__(self) -> str:
        return f"(*_{self.local})" if self.deref else f"_{self.local}"


@dataclass(frozen=True)
class Operand:
    mode: Mode
    place: Place | None = None

    def __str__(self) -> str:
        if self.place is None:
            return "const"
        return f"{self.mode.value} {self.place}"


@dataclass(frozen=True)
class RefOf:
    operand: Operand
    mutable: bool = False


@dataclass(frozen=True)
class RawPtrOf:
    operand: Operand
    mutable: bool = False


@dataclass(frozen=True)
class CastPtrToPtr:
    operand: Operand
    src: TypeDescriptor
    dst: TypeDescriptor


@dataclass(frozen=True)
class Transmute:
    operand: Operand
    src: TypeDescriptor
    dst: TypeDescriptor


@dataclass(frozen=True)
class UseOf:
    operand: Operand


Rvalue = Union[RefOf, RawPtrOf, CastPtrToPtr, Transmute, UseOf]
CONVERSIONS = (CastPtrToPtr, Transmute)


@dataclass(frozen=True)
class Assign:
    lhs: Place
    rvalue: Rvalue


@dataclass(frozen=True)
class StorageDead:
    local: int


Statement = Union[Assign, StorageDead]


@dataclass(frozen=True)
class Call:
    callee: str
    args: tuple[Operand, ...]
    dest: int
    is_unsafe_api: bool = False
    target: int | None = None


@dataclass(frozen=True)
class Return:
    pass


@dataclass(frozen=True)
class Goto:
    target: int


Terminator = Union[Call, Return, Goto]


@dataclass(frozen=True)
class BasicBlock:
    statements: tuple[Statement, ...] = ()
    terminator: Terminator = Return()


@dataclass(frozen=True)
class GenericParam:
    name: str
    bounds: tuple[str, ...] = ()


@dataclass(frozen=True)
class FunctionIR:
    name: str
    visibility: Visibility = Visibility.PUBLIC
    method_of: str | None = None
    contains_unsafe: bool = False
    generics: tuple[GenericParam, ...] = ()
    params: tuple[tuple[int, TypeDescriptor], ...] = ()
    return_type: TypeDescriptor = Primitive("()")
    locals: tuple[tuple[int, TypeDescriptor], ...] = ()
    blocks: tuple[BasicBlock, ...] = ()

    def local_type(self, local: int) -> TypeDescriptor | None:
        for lid, ty in self.locals:
            if lid == local:
                return ty
        return None

    def bounds_of(self, param: str) -> tuple[str, ...]:
        for g in self.generics:
            if g.name == param:
                return g.bounds
        return ()

    def sites(self) -> Iterator[tuple[int, int, Statement | Terminator]]:
        """Yield ``(block, index, item)`` in block order; the terminator of a
        block sits at index ``len(statements)``."""
        for b, block in enumerate(self.blocks):
            for i, st in enumerate(block.statements):
                yield b, i, st
            yield b, len(block.statements), block.terminator


@dataclass(frozen=True)
class PackageIR:
    name: str
    functions: tuple[FunctionIR, ...] = ()
    aggregates: dict[str, AggregateDef] = field(default_factory=dict)
    traits: dict[str, TraitDef] = field(default_factory=dict)

    def function(self, name: str) -> FunctionIR | None:
        for fn in self.functions:
            if fn.name == name:
                return fn
        return None


def resolve_aggregate(name: str, pkg: PackageIR | None) -> AggregateDef | None:
    """Exact-name lookup; absent for external/opaque names."""
    if pkg is None:
        return None
    return pkg.aggregates.get(name)


# -- validation -------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    kind: str  # "dangling-reference" or "invariant"
    message: str
    function: str | None = None
    block: int | None = None
    index: int | None = None

    def __str__(self) -> str:
        loc = self.function or ""
        if self.block is not None:
            loc += f":bb{self.block}"
            if self.index is not None:
                loc += f"[{self.index}]"
        return f"{loc}: {self.message}" if loc else self.message


def is_zero_sized(ty: TypeDescriptor, pkg: PackageIR | None, _seen: frozenset[str] = frozenset()) -> bool:
    match ty:
        case Array(element=e, length=n):
            return n == 0 or is_zero_sized(e, pkg, _seen)
        case Adt(name=name):
            if name in _seen:
                return False
            agg = resolve_aggregate(name, pkg)
            if agg is None:
                return False
            return all(is_zero_sized(f.ty, pkg, _seen | {name}) for f in agg.fields)
        case Opaque(symbol=s):
            return s.rsplit("::", 1)[-1].startswith("PhantomData")
        case Primitive(name="()"):
            return True
    return False


def _type_refs(ty: TypeDescriptor) -> Iterator[TypeDescriptor]:
    yield ty
    match ty:
        case RawPtr(pointee=p) | Ref(pointee=p):
            yield from _type_refs(p)
        case Slice(element=e) | Array(element=e):
            yield from _type_refs(e)
        case Adt(args=args):
            for a in args:
                yield from _type_refs(a)


def validate(pkg: PackageIR) -> list[Violation]:
    """Check every structural invariant; an empty list means well-formed."""
    out: list[Violation] = []
    names: set[str] = set()

    def check_type(ty: TypeDescriptor, fn: str | None, where: str, block=None, index=None) -> None:
        for t in _type_refs(ty):
            if isinstance(t, Primitive) and t.name not in PRIMITIVES and t.name != "()":
                out.append(Violation("invariant", f"{where}: unknown primitive {t.name!r}", fn, block, index))

    for agg in pkg.aggregates.values():
        for f in agg.fields:
            check_type(f.ty, None, f"aggregate {agg.name}.{f.name}")
        if agg.representation is Repr.TRANSPARENT:
            non_zst = [f for f in agg.fields if not is_zero_sized(f.ty, pkg)]
            if len(non_zst) != 1:
                out.append(Violation(
                    "invariant",
                    f"transparent aggregate {agg.name} has {len(non_zst)} non-zero-sized fields",
                ))

    for trait in pkg.traits.values():
        for impl in trait.implementors:
            check_type(impl, None, f"trait {trait.name} implementor")

    for fn in pkg.functions:
        if fn.name in names:
            out.append(Violation("invariant", f"duplicate function name {fn.name!r}", fn.name))
        names.add(fn.name)
        table = {lid for lid, _ in fn.locals}
        if len(table) != len(fn.locals):
            out.append(Violation("invariant", "duplicate local id", fn.name))
        if 0 not in table:
            out.append(Violation("dangling-reference", "return slot _0 missing from local table", fn.name))
        for pos, (lid, ty) in enumerate(fn.params, start=1):
            if lid != pos:
                out.append(Violation("invariant", f"parameter {pos} occupies _{lid}, expected _{pos}", fn.name))
            if lid not in table:
                out.append(Violation("dangling-reference", f"parameter local _{lid} not in local table", fn.name))
        for lid, ty in fn.locals:
            check_type(ty, fn.name, f"local _{lid}")
        check_type(fn.return_type, fn.name, "return type")

        def need(local: int, b: int, i: int) -> None:
            if local not in table:
                out.append(Violation("dangling-reference", f"local _{local} not in local table", fn.name, b, i))

        def need_operand(op: Operand, b: int, i: int) -> None:
            if op.mode is Mode.CONST:
                if op.place is not None:
                    out.append(Violation("invariant", "constant operand carries a place", fn.name, b, i))
            elif op.place is None:
                out.append(Violation("invariant", f"{op.mode.value} operand without a place", fn.name, b, i))
            else:
                need(op.place.local, b, i)

        nblocks = len(fn.blocks)
        for b, i, item in fn.sites():
            match item:
                case Assign(lhs=lhs, rvalue=rv):
                    need(lhs.local, b, i)
                    need_operand(rv.operand, b, i)
                    if isinstance(rv, CONVERSIONS):
                        check_type(rv.src, fn.name, "conversion source", b, i)
                        check_type(rv.dst, fn.name, "conversion destination", b, i)
                case StorageDead(local=local):
                    need(local, b, i)
                case Call(args=args, dest=dest, target=target):
                    need(dest, b, i)
                    for a in args:
                        need_operand(a, b, i)
                    if target is not None and not 0 <= target < nblocks:
                        out.append(Violation("dangling-reference", f"block target bb{target} out of range", fn.name, b, i))
                case Goto(target=target):
                    if not 0 <= target < nblocks:
                        out.append(Violation("dangling-reference", f"block target bb{target} out of range", fn.name, b, i))
    return out


# -- JSON decoding ----------------------------------------------------------

def _expect(obj: Any, kind: type | tuple[type, ...], path: str) -> Any:
    if kind is int and isinstance(obj, bool):
        raise MalformedDocument(path, "expected integer, got boolean")
    if not isinstance(obj, kind):
        names = kind.__name__ if isinstance(kind, type) else "/".join(k.__name__ for k in kind)
        raise MalformedDocument(path, f"expected {names}, got {type(obj).__name__}")
    return obj


def _get(obj: dict, key: str, kind, path: str, default: Any = ...) -> Any:
    if key not in obj or (obj[key] is None and default is not ...):
        if default is ...:
            raise MalformedDocument(path, f"missing key {key!r}")
        return default
    return _expect(obj[key], kind, f"{path}.{key}")


def _enum(cls, value: Any, path: str):
    try:
        return cls(value)
    except ValueError:
        allowed = ", ".join(m.value for m in cls)
        raise MalformedDocument(path, f"{value!r} is not one of {allowed}") from None


def decode_type(obj: Any, path: str = "$") -> TypeDescriptor:
    obj = _expect(obj, dict, path)
    kind = _get(obj, "kind", str, path)
    if kind == "primitive":
        return Primitive(_get(obj, "name", str, path))
    if kind in ("raw_ptr", "ref"):
        pointee = decode_type(_get(obj, "pointee", dict, path), f"{path}.pointee")
        mutable = _get(obj, "mutable", bool, path, False)
        return RawPtr(pointee, mutable) if kind == "raw_ptr" else Ref(pointee, mutable)
    if kind == "slice":
        return Slice(decode_type(_get(obj, "element", dict, path), f"{path}.element"))
    if kind == "array":
        length = _get(obj, "length", int, path)
        if length < 0:
            raise MalformedDocument(f"{path}.length", "negative array length")
        return Array(decode_type(_get(obj, "element", dict, path), f"{path}.element"), length)
    if kind == "adt":
        args = _get(obj, "args", list, path, [])
        return Adt(
            _get(obj, "name", str, path),
            tuple(decode_type(a, f"{path}.args[{i}]") for i, a in enumerate(args)),
        )
    if kind == "generic":
        return Generic(_get(obj, "name", str, path))
    if kind == "opaque":
        return Opaque(_get(obj, "symbol", str, path))
    raise MalformedDocument(f"{path}.kind", f"unknown type kind {kind!r}")


def _decode_operand(obj: Any, path: str) -> Operand:
    obj = _expect(obj, dict, path)
    mode = _enum(Mode, _get(obj, "mode", str, path), f"{path}.mode")
    if mode is Mode.CONST:
        if obj.get("local") is not None:
            raise MalformedDocument(path, "constant operand carries a local")
        return Operand(mode)
    local = _get(obj, "local", int, path)
    return Operand(mode, Place(local, _get(obj, "deref", bool, path, False)))


def _decode_place(obj: Any, path: str) -> Place:
    obj = _expect(obj, dict, path)
    return Place(_get(obj, "local", int, path), _get(obj, "deref", bool, path, False))


def _decode_rvalue(obj: Any, path: str) -> Rvalue:
    obj = _expect(obj, dict, path)
    kind = _get(obj, "kind", str, path)
    operand = _decode_operand(_get(obj, "operand", dict, path), f"{path}.operand")
    if kind == "ref":
        return RefOf(operand, _get(obj, "mutable", bool, path, False))
    if kind == "raw_ptr":
        return RawPtrOf(operand, _get(obj, "mutable", bool, path, False))
    if kind in ("cast_ptr_to_ptr", "transmute"):
        src = decode_type(_get(obj, "src_type", dict, path), f"{path}.src_type")
        dst = decode_type(_get(obj, "dst_type", dict, path), f"{path}.dst_type")
        return CastPtrToPtr(operand, src, dst) if kind == "cast_ptr_to_ptr" else Transmute(operand, src, dst)
    if kind == "use":
        return UseOf(operand)
    raise MalformedDocument(f"{path}.kind", f"unknown rvalue kind {kind!r}")


def _decode_statement(obj: Any, path: str) -> Statement:
    obj = _expect(obj, dict, path)
    kind = _get(obj, "kind", str, path)
    if kind == "assign":
        return Assign(
            _decode_place(_get(obj, "lhs", dict, path), f"{path}.lhs"),
            _decode_rvalue(_get(obj, "rvalue", dict, path), f"{path}.rvalue"),
        )
    if kind == "storage_dead":
        return StorageDead(_get(obj, "local", int, path))
    raise MalformedDocument(f"{path}.kind", f"unknown statement kind {kind!r}")


def _decode_terminator(obj: Any, path: str) -> Terminator:
    obj = _expect(obj, dict, path)
    kind = _get(obj, "kind", str, path)
    if kind == "call":
        args = _get(obj, "args", list, path, [])
        return Call(
            callee=_get(obj, "callee", str, path),
            args=tuple(_decode_operand(a, f"{path}.args[{i}]") for i, a in enumerate(args)),
            dest=_get(obj, "dest", int, path),
            is_unsafe_api=_get(obj, "is_unsafe_api", bool, path, False),
            target=_get(obj, "target", int, path, None),
        )
    if kind == "return":
        return Return()
    if kind == "goto":
        return Goto(_get(obj, "target", int, path))
    raise MalformedDocument(f"{path}.kind", f"unknown terminator kind {kind!r}")


def _decode_function(obj: Any, path: str) -> FunctionIR:
    obj = _expect(obj, dict, path)
    generics = []
    for i, g in enumerate(_get(obj, "generics", list, path, [])):
        gp = f"{path}.generics[{i}]"
        g = _expect(g, dict, gp)
        bounds = _get(g, "bounds", list, gp, [])
        generics.append(GenericParam(
            _get(g, "name", str, gp),
            tuple(_expect(b, str, f"{gp}.bounds[{j}]") for j, b in enumerate(bounds)),
        ))
    params = []
    for i, p in enumerate(_get(obj, "params", list, path, [])):
        pp = f"{path}.params[{i}]"
        p = _expect(p, dict, pp)
        params.append((_get(p, "local", int, pp), decode_type(_get(p, "type", dict, pp), f"{pp}.type")))
    return_type = decode_type(_get(obj, "return_type", dict, path), f"{path}.return_type")
    locals_ = []
    for i, entry in enumerate(_get(obj, "locals", list, path, [])):
        lp = f"{path}.locals[{i}]"
        entry = _expect(entry, dict, lp)
        locals_.append((_get(entry, "id", int, lp), decode_type(_get(entry, "type", dict, lp), f"{lp}.type")))
    declared = {lid for lid, _ in locals_}
    # The return slot and parameters may be left implicit in the table.
    implicit = [(0, return_type)] if 0 not in declared else []
    implicit += [(lid, ty) for lid, ty in params if lid not in declared]
    blocks = []
    for b, blk in enumerate(_get(obj, "blocks", list, path, [])):
        bp = f"{path}.blocks[{b}]"
        blk = _expect(blk, dict, bp)
        stmts = tuple(
            _decode_statement(s, f"{bp}.statements[{i}]")
            for i, s in enumerate(_get(blk, "statements", list, bp, []))
        )
        term = _decode_terminator(_get(blk, "terminator", dict, bp, {"kind": "return"}), f"{bp}.terminator")
        blocks.append(BasicBlock(stmts, term))
    return FunctionIR(
        name=_get(obj, "name", str, path),
        visibility=_enum(Visibility, _get(obj, "visibility", str, path, "public"), f"{path}.visibility"),
        method_of=_get(obj, "method_of", str, path, None),
        contains_unsafe=_get(obj, "contains_unsafe", bool, path, False),
        generics=tuple(generics),
        params=tuple(params),
        return_type=return_type,
        locals=tuple(sorted(implicit + locals_, key=lambda e: e[0])),
        blocks=tuple(blocks),
    )


def _decode_aggregate(obj: Any, path: str) -> AggregateDef:
    obj = _expect(obj, dict, path)
    fields = []
    for i, f in enumerate(_get(obj, "fields", list, path, [])):
        fp = f"{path}.fields[{i}]"
        f = _expect(f, dict, fp)
        fields.append(FieldDef(
            _get(f, "name", str, fp),
            decode_type(_get(f, "type", dict, fp), f"{fp}.type"),
            _enum(Visibility, _get(f, "visibility", str, fp, "private"), f"{fp}.visibility"),
        ))
    return AggregateDef(
        name=_get(obj, "name", str, path),
        fields=tuple(fields),
        representation=_enum(Repr, _get(obj, "repr", str, path, "default"), f"{path}.repr"),
        visibility=_enum(Visibility, _get(obj, "visibility", str, path, "public"), f"{path}.visibility"),
    )


def decode_trait(obj: Any, path: str = "$") -> TraitDef:
    obj = _expect(obj, dict, path)
    supers = _get(obj, "supertraits", list, path, [])
    impls = _get(obj, "implementors", list, path, [])
    return TraitDef(
        name=_get(obj, "name", str, path),
        supertraits=tuple(_expect(s, str, f"{path}.supertraits[{i}]") for i, s in enumerate(supers)),
        implementors=tuple(decode_type(t, f"{path}.implementors[{i}]") for i, t in enumerate(impls)),
        layout_guard=_get(obj, "layout_guard", bool, path, False),
    )


def _table(items: Any, decode, path: str) -> dict:
    """Accept either a list of named entries or a name-keyed object."""
    if isinstance(items, dict):
        entries = [(f"{path}.{k}", v) for k, v in items.items()]
    else:
        entries = [(f"{path}[{i}]", v) for i, v in enumerate(_expect(items, list, path))]
    out = {}
    for p, v in entries:
        item = decode(v, p)
        if item.name in out:
            raise MalformedDocument(p, f"duplicate name {item.name!r}")
        out[item.name] = item
    return out


def decode_package(doc: Any) -> PackageIR:
    doc = _expect(doc, dict, "$")
    functions = _get(doc, "functions", list, "$", [])
    return PackageIR(
        name=_get(doc, "name", str, "$"),
        functions=tuple(_decode_function(f, f"$.functions[{i}]") for i, f in enumerate(functions)),
        aggregates=_table(_get(doc, "aggregates", (list, dict), "$", []), _decode_aggregate, "$.aggregates"),
        traits=_table(_get(doc, "traits", (list, dict), "$", []), decode_trait, "$.traits"),
    )


def parse_package(document: str | bytes) -> PackageIR:
    """Parse and validate a JSON package document.

    Raises :class:`MalformedDocument` for schema violations (and invalid
    JSON) and :class:`DanglingReference` for out-of-range local or block ids.
    """
    try:
        doc = json.loads(document)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedDocument("$", f"invalid JSON: {exc}") from None
    except RecursionError:
        raise MalformedDocument("$", "document nesting too deep") from None
    try:
        pkg = decode_package(doc)
    except RecursionError:
        raise MalformedDocument("$", "type descriptor nesting too deep") from None
    violations = validate(pkg)
    dangling = [v for v in violations if v.kind == "dangling-reference"]
    if dangling:
        raise DanglingReference(dangling)
    if violations:
        raise MalformedDocument("$", "; ".join(map(str, violations)))
    return pkg


# -- JSON encoding ----------------------------------------------------------

def encode_type(ty: TypeDescriptor) -> dict:
    match ty:
        case Primitive(name=n):
            return {"kind": "primitive", "name": n}
        case RawPtr(pointee=p, mutable=m):
            return {"kind": "raw_ptr", "mutable": m, "pointee": encode_type(p)}
        case Ref(pointee=p, mutable=m):
            return {"kind": "ref", "mutable": m, "pointee": encode_type(p)}
        case Slice(element=e):
            return {"kind": "slice", "element": encode_type(e)}
        case Array(element=e, length=n):
            return {"kind": "array", "element": encode_type(e), "length": n}
        case Adt(name=n, args=args):
            out = {"kind": "adt", "name": n}
            if args:
                out["args"] = [encode_type(a) for a in args]
            return out
        case Generic(name=n):
            return {"kind": "generic", "name": n}
        case Opaque(symbol=s):
            return {"kind": "opaque", "symbol": s}
    raise TypeError(f"not a type descriptor: {ty!r}")


def _encode_operand(op: Operand) -> dict:
    if op.place is None:
        return {"mode": op.mode.value}
    out = {"mode": op.mode.value, "local": op.place.local}
    if op.place.deref:
        out["deref"] = True
    return out


def _encode_statement(st: Statement) -> dict:
    if isinstance(st, StorageDead):
        return {"kind": "storage_dead", "local": st.local}
    rv = st.rvalue
    r: dict[str, Any] = {"operand": _encode_operand(rv.operand)}
    match rv:
        case RefOf(mutable=m):
            r.update(kind="ref", mutable=m)
        case RawPtrOf(mutable=m):
            r.update(kind="raw_ptr", mutable=m)
        case CastPtrToPtr(src=s, dst=d):
            r.update(kind="cast_ptr_to_ptr", src_type=encode_type(s), dst_type=encode_type(d))
        case Transmute(src=s, dst=d):
            r.update(kind="transmute", src_type=encode_type(s), dst_type=encode_type(d))
        case UseOf():
            r.update(kind="use")
    lhs = {"local": st.lhs.local}
    if st.lhs.deref:
        lhs["deref"] = True
    return {"kind": "assign", "lhs": lhs, "rvalue": r}


def _encode_terminator(t: Terminator) -> dict:
    match t:
        case Call():
            out = {
                "kind": "call", "callee": t.callee,
                "args": [_encode_operand(a) for a in t.args],
                "dest": t.dest, "is_unsafe_api": t.is_unsafe_api,
            }
            if t.target is not None:
                out["target"] = t.target
            return out
        case Goto(target=target):
            return {"kind": "goto", "target": target}
    return {"kind": "return"}


def encode_package(pkg: PackageIR) -> dict:
    return {
        "name": pkg.name,
        "functions": [
            {
                "name": fn.name,
                "visibility": fn.visibility.value,
                "method_of": fn.method_of,
                "contains_unsafe": fn.contains_unsafe,
                "generics": [{"name": g.name, "bounds": list(g.bounds)} for g in fn.generics],
                "params": [{"local": lid, "type": encode_type(ty)} for lid, ty in fn.params],
                "return_type": encode_type(fn.return_type),
                "locals": [{"id": lid, "type": encode_type(ty)} for lid, ty in fn.locals],
                "blocks": [
                    {
                        "statements": [_encode_statement(s) for s in blk.statements],
                        "terminator": _encode_terminator(blk.terminator),
                    }
                    for blk in fn.blocks
                ],
            }
            for fn in pkg.functions
        ],
        "aggregates": [
            {
                "name": a.name,
                "repr": a.representation.value,
                "visibility": a.visibility.value,
                "fields": [
                    {"name": f.name, "type": encode_type(f.ty), "visibility": f.visibility.value}
                    for f in a.fields
                ],
            }
            for a in pkg.aggregates.values()
        ],
        "traits": [
            {
                "name": t.name,
                "supertraits": list(t.supertraits),
                "implementors": [encode_type(i) for i in t.implementors],
                **({"layout_guard": True} if t.layout_guard else {}),
            }
            for t in pkg.traits.values()
        ],
    }


def serialize(pkg: PackageIR) -> str:
    return json.dumps(encode_package(pkg), indent=2)
