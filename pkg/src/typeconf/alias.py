"""Ownership-aware alias graph over a function's locals.

An edge ``a -> b`` records that local ``a`` was created as an alias of
``b`` (reference, raw pointer, pointer cast or transmute, or a call result
derived from an argument).  Moves drop the edge they would have created and
``StorageDead(x)`` drops every edge leaving ``x``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .ir import Assign, Call, CastPtrToPtr, FunctionIR, Mode, RawPtrOf, RefOf, StorageDead, Transmute

_ALIASING = (RefOf, RawPtrOf, CastPtrToPtr, Transmute)


class UnknownNode(KeyError):
    pass


@dataclass
class AliasGraph:
    nodes: frozenset[int]
    edges: dict[int, set[int]] = field(default_factory=dict)

    def insert(self, src: int, dst: int) -> None:
        self.edges.setdefault(src, set()).add(dst)

    def delete(self, src: int, dst: int) -> None:
        self.edges.get(src, set()).discard(dst)

    def clear(self, src: int) -> None:
        self.edges.get(src, set()).clear()

    def successors(self, node: int) -> set[int]:
        return self.edges.get(node, set())

    def edge_set(self) -> frozenset[tuple[int, int]]:
        return frozenset((a, b) for a, targets in self.edges.items() for b in targets)

    def _check(self, node: int) -> None:
        if node not in self.nodes:
            raise UnknownNode(node)

    def to_dot(self, name: str = "alias") -> str:
        lines = [f'digraph "{name}" {{']
        lines += [f'  "_{n}";' for n in sorted(self.nodes)]
        lines += [f'  "_{a}" -> "_{b}";' for a, b in sorted(self.edge_set())]
        lines.append("}")
        return "\n".join(lines) + "\n"


def build_alias_graph(fn: FunctionIR) -> AliasGraph:
    """Replay statements, then call terminators, in block order."""
    g = AliasGraph(frozenset(lid for lid, _ in fn.locals))
    for block in fn.blocks:
        for st in block.statements:
            if isinstance(st, Assign) and isinstance(st.rvalue, _ALIASING):
                op = st.rvalue.operand
                if op.place is None:
                    continue
                g.insert(st.lhs.local, op.place.local)
                if op.mode is Mode.MOVE:
                    g.delete(st.lhs.local, op.place.local)
            elif isinstance(st, StorageDead):
                g.clear(st.local)
    for block in fn.blocks:
        term = block.terminator
        if isinstance(term, Call):
            for arg in term.args:
                if arg.place is None:
                    continue
                g.insert(term.dest, arg.place.local)
                if arg.mode is Mode.MOVE:
                    g.delete(term.dest, arg.place.local)
    return g


def descendants(g: AliasGraph, a: int) -> set[int]:
    """Nodes reachable from ``a`` by breadth-first search (``a`` itself only
    when it lies on a cycle)."""
    g._check(a)
    seen: set[int] = set()
    queue = deque(g.successors(a))
    while queue:
        n = queue.popleft()
        if n in seen:
            continue
        seen.add(n)
        queue.extend(g.successors(n) - seen)
    return seen


def may_alias(g: AliasGraph, a: int, b: int) -> bool:
    g._check(b)
    return not (descendants(g, a) | {a}).isdisjoint(descendants(g, b) | {b})
