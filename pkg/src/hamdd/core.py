"""Decision-diagram substrate: nodes, unique tables, caches, collection, DOT export.

Levels count sites from the bottom: level 0 is site 0, the least significant
bit of a basis index, and the root of an ``L``-site diagram sits at level
``L - 1``. Every edge of a level-``k`` node points to a level-``k - 1`` node,
or to the terminal (``None``) when ``k == 0`` or when the edge is a zero stub.
Vector nodes have two successors (``|0>``, ``|1>``); matrix nodes have four,
ordered ``00, 01, 10, 11`` as ``(row bit, column bit)``, i.e. top-left,
top-right, bottom-left, bottom-right quadrant.
"""

from __future__ import annotations

import io
import math
import sys
import weakref
from typing import NamedTuple, TextIO

import numpy as np

from hamdd.numerics import DEFAULT_TOLERANCE, ONE, ZERO, WeightTable

DEFAULT_GC_THRESHOLD = 2**20


class DegenerateNodeError(ValueError):
    """Raised when asked to normalize an all-zero set of successor weights."""


class Node:
    """A decision node. ``ident`` marks matrix nodes representing an identity."""

    __slots__ = ("level", "edges", "ident")

    def __init__(self, level: int, edges: tuple, ident: bool = False):
        self.level = level
        self.edges = edges
        self.ident = ident

    @property
    def is_matrix(self) -> bool:
        return len(self.edges) == 4

    def __repr__(self) -> str:
        kind = "M" if len(self.edges) == 4 else "V"
        return f"<{kind}Node level={self.level} at {id(self):#x}>"


class Edge(NamedTuple):
    node: Node | None
    weight: complex


ZERO_EDGE = Edge(None, ZERO)
ONE_EDGE = Edge(None, ONE)


def normalize_vector(e0: Edge, e1: Edge, canon=None) -> tuple[complex, Edge, Edge]:
    """Split ``(e0, e1)`` into a common factor and unit-norm successors.

    The successor weights are divided by the 2-norm of the weight pair and by
    the phase of the leftmost nonzero weight, which is left real and
    non-negative. ``canon`` (a weight table) canonicalizes the outputs.
    """
    w0 = e0[1]
    w1 = e1[1]
    a0 = abs(w0)
    a1 = abs(w1)
    if a0 == 0.0 and a1 == 0.0:
        raise DegenerateNodeError("both successor weights are zero")
    norm = math.hypot(a0, a1)
    common = (w0 / a0 if a0 != 0.0 else w1 / a1) * norm
    n0 = w0 / common
    n1 = w1 / common
    if canon is not None:
        common = canon(common)
        n0 = canon(n0)
        n1 = canon(n1)
    return (
        common,
        Edge(e0[0], n0) if n0 != 0 else ZERO_EDGE,
        Edge(e1[0], n1) if n1 != 0 else ZERO_EDGE,
    )


def _leftmost_max(weights, tol: float) -> int:
    mags = [abs(w) for w in weights]
    best = max(mags)
    for i, m in enumerate(mags):
        if m >= best - tol and m > 0.0:
            return i
    return 0  # pragma: no cover


def normalize_matrix(edges, canon=None, tol: float = DEFAULT_TOLERANCE) -> tuple[complex, tuple[Edge, ...]]:
    """Divide the four successor weights by the leftmost one of largest magnitude."""
    weights = [e[1] for e in edges]
    if all(w == 0 for w in weights):
        raise DegenerateNodeError("all successor weights are zero")
    common = weights[_leftmost_max(weights, tol)]
    out = []
    for e, w in zip(edges, weights):
        n = w / common
        if canon is not None:
            n = canon(n)
        out.append(Edge(e[0], n) if n != 0 else ZERO_EDGE)
    if canon is not None:
        common = canon(common)
    return common, tuple(out)


class DD:
    """Base for diagram handles. Live handles are the roots kept by collection."""

    kind = "vector"

    def __init__(self, ctx: DDContext, root: Edge, sites: int):
        self.ctx = ctx
        self.root = Edge(root[0], ctx.weights(root[1]))
        self.sites = sites
        ctx._roots.add(self)

    def node_count(self) -> int:
        return node_count(self.root)

    def same_as(self, other: DD) -> bool:
        """Canonical equality: identical root node and root weight within tolerance."""
        if self.root.node is not other.root.node or self.sites != other.sites:
            return False
        tol = self.ctx.weights.tol
        d = self.root.weight - other.root.weight
        return abs(d.real) <= tol and abs(d.imag) <= tol

    def to_dot(self) -> str:
        return export_dot(self.root)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(sites={self.sites}, nodes={self.node_count()})"


class DDContext:
    """Owns the weight table, unique tables and compute caches of a simulation.

    A context is single-owner: operations on one context must not run
    concurrently. Separate contexts share nothing.
    """

    def __init__(self, tolerance: float = DEFAULT_TOLERANCE, gc_threshold: int = DEFAULT_GC_THRESHOLD):
        self.weights = WeightTable(tolerance)
        self.tol = self.weights.tol
        self.gc_threshold = int(gc_threshold)
        self.vtable: dict[tuple, Node] = {}
        self.mtable: dict[tuple, Node] = {}
        self.caches: dict[str, dict] = {
            "add": {},
            "kron": {},
            "mat_vec": {},
            "mat_mat": {},
            "inner": {},
        }
        self.use_cache = True
        self.gate_cache: dict[tuple, DD] = {}
        self._roots: weakref.WeakSet[DD] = weakref.WeakSet()
        self.collections = 0

    # -- node creation ---------------------------------------------------

    def make_vnode(self, level: int, e0: Edge, e1: Edge) -> Edge:
        """Normalize, hash-cons and return an edge to the canonical vector node."""
        w0 = e0[1]
        w1 = e1[1]
        if w0 == 0 and w1 == 0:
            return ZERO_EDGE
        canon = self.weights.lookup
        a0 = abs(w0)
        a1 = abs(w1)
        norm = math.hypot(a0, a1)
        common = (w0 / a0 if a0 != 0.0 else w1 / a1) * norm
        n0 = canon(w0 / common)
        n1 = canon(w1 / common)
        c0 = e0[0] if n0 != 0 else None
        c1 = e1[0] if n1 != 0 else None
        key = (level, c0, n0, c1, n1)
        node = self.vtable.get(key)
        if node is None:
            node = Node(level, ((c0, n0), (c1, n1)))
            self.vtable[key] = node
        return (node, canon(common))

    def make_mnode(self, level: int, edges) -> Edge:
        """Normalize, hash-cons and return an edge to the canonical matrix node."""
        w = [e[1] for e in edges]
        if w[0] == 0 and w[1] == 0 and w[2] == 0 and w[3] == 0:
            return ZERO_EDGE
        canon = self.weights.lookup
        common = w[_leftmost_max(w, self.tol)]
        ns = [canon(x / common) for x in w]
        cs = [e[0] if n != 0 else None for e, n in zip(edges, ns)]
        key = (level, cs[0], ns[0], cs[1], ns[1], cs[2], ns[2], cs[3], ns[3])
        node = self.mtable.get(key)
        if node is None:
            ident = (
                ns[0] == 1 and ns[3] == 1 and ns[1] == 0 and ns[2] == 0
                and cs[0] is cs[3] and (cs[0] is None or cs[0].ident)
            )
            node = Node(level, tuple(zip(cs, ns)), ident)
            self.mtable[key] = node
        return (node, canon(common))

    def make_node(self, level: int, edges) -> Edge:
        if len(edges) == 2:
            return self.make_vnode(level, edges[0], edges[1])
        return self.make_mnode(level, edges)

    def lookup_or_insert(self, level: int, edges) -> Edge:
        """Alias of :meth:`make_node`: returns the canonical node for ``edges``."""
        return self.make_node(level, edges)

    def identity(self, sites: int) -> Edge:
        """Edge to the canonical identity operator on ``sites`` levels."""
        e = ONE_EDGE
        for level in range(sites):
            e = self.make_mnode(level, (e, ZERO_EDGE, ZERO_EDGE, e))
        return e

    # -- housekeeping ----------------------------------------------------

    def live_roots(self) -> list[DD]:
        return list(self._roots)

    def table_size(self) -> int:
        return len(self.vtable) + len(self.mtable)

    def cache_size(self) -> int:
        return sum(len(c) for c in self.caches.values())

    def clear_caches(self) -> int:
        n = self.cache_size()
        for c in self.caches.values():
            c.clear()
        return n

    def garbage_collect(self, keep_gates: bool = False) -> tuple[int, int]:
        """Drop every node not reachable from a live handle.

        Compute caches are always cleared. The gate cache is a cache too and is
        emptied unless ``keep_gates`` is set. Returns ``(nodes freed,
        cache entries cleared)``.
        """
        cleared = self.clear_caches()
        if not keep_gates:
            self.gate_cache.clear()
        marked: set[int] = set()
        weights = {ZERO, ONE}
        stack = []
        for dd in list(self._roots):
            weights.add(dd.root.weight)
            if dd.root.node is not None:
                stack.append(dd.root.node)
        while stack:
            node = stack.pop()
            if id(node) in marked:
                continue
            marked.add(id(node))
            for child, w in node.edges:
                weights.add(w)
                if child is not None and id(child) not in marked:
                    stack.append(child)
        before = self.table_size()
        self.vtable = {k: n for k, n in self.vtable.items() if id(n) in marked}
        self.mtable = {k: n for k, n in self.mtable.items() if id(n) in marked}
        self.weights.retain(weights)
        self.collections += 1
        return before - self.table_size(), cleared

    def maybe_collect(self) -> bool:
        """Collect if table occupancy or cache size passed the threshold."""
        if self.table_size() > self.gc_threshold or len(self.weights) > self.gc_threshold:
            self.garbage_collect()
            return True
        if self.cache_size() > self.gc_threshold:
            self.clear_caches()
        return False


class StateDD(DD):
    """Vector diagram of an ``sites``-site state."""

    kind = "vector"

    def amplitude(self, index: int) -> complex:
        """Amplitude of basis state ``index`` (site ``L-1`` is the most significant bit)."""
        if not 0 <= index < 1 << self.sites:
            raise IndexError(f"basis index {index} out of range for {self.sites} sites")
        node, w = self.root
        for level in range(self.sites - 1, -1, -1):
            if w == 0:
                return ZERO
            child, cw = node.edges[(index >> level) & 1]
            w *= cw
            node = child
        return w

    def to_dense(self) -> np.ndarray:
        return dense_vector(self.root, self.sites)

    def norm(self) -> float:
        from hamdd.algebra import inner_product

        return math.sqrt(max(inner_product(self, self).real, 0.0))


class OperatorDD(DD):
    """Matrix diagram of an operator on ``sites`` sites."""

    kind = "matrix"

    def entry(self, row: int, col: int) -> complex:
        dim = 1 << self.sites
        if not (0 <= row < dim and 0 <= col < dim):
            raise IndexError("matrix index out of range")
        node, w = self.root
        for level in range(self.sites - 1, -1, -1):
            if w == 0:
                return ZERO
            child, cw = node.edges[2 * ((row >> level) & 1) + ((col >> level) & 1)]
            w *= cw
            node = child
        return w

    def to_dense(self) -> np.ndarray:
        return dense_matrix(self.root, self.sites)


def dense_vector(root: Edge, sites: int) -> np.ndarray:
    """Expand a vector diagram into a length ``2**sites`` array."""
    memo: dict[int, np.ndarray] = {}

    def rec(node: Node | None, level: int) -> np.ndarray:
        if node is None:
            return np.ones(1, dtype=complex)
        got = memo.get(id(node))
        if got is None:
            half = 1 << level
            parts = []
            for child, w in node.edges:
                if w == 0:
                    parts.append(np.zeros(half, dtype=complex))
                else:
                    parts.append(w * rec(child, level - 1))
            got = memo[id(node)] = np.concatenate(parts)
        return got

    if root.weight == 0:
        return np.zeros(1 << sites, dtype=complex)
    return root.weight * rec(root.node, sites - 1)


def dense_matrix(root: Edge, sites: int) -> np.ndarray:
    """Expand a matrix diagram into a ``2**sites`` square array."""
    memo: dict[int, np.ndarray] = {}

    def rec(node: Node | None, level: int) -> np.ndarray:
        if node is None:
            return np.ones((1, 1), dtype=complex)
        got = memo.get(id(node))
        if got is None:
            half = 1 << level
            blocks = []
            for child, w in node.edges:
                if w == 0:
                    blocks.append(np.zeros((half, half), dtype=complex))
                else:
                    blocks.append(w * rec(child, level - 1))
            got = memo[id(node)] = np.block([[blocks[0], blocks[1]], [blocks[2], blocks[3]]])
        return got

    if root.weight == 0:
        return np.zeros((1 << sites, 1 << sites), dtype=complex)
    return root.weight * rec(root.node, sites - 1)


_default: DDContext | None = None


def default_context() -> DDContext:
    """Process-wide context used when none is passed explicitly."""
    global _default
    if _default is None:
        _default = DDContext()
    return _default


def ensure_recursion(depth: int) -> None:
    """Raise the interpreter recursion limit so ``depth`` levels can be traversed."""
    need = 8 * depth + 1000
    if sys.getrecursionlimit() < need:
        sys.setrecursionlimit(need)


def reachable_nodes(root: Edge) -> list[Node]:
    seen: set[int] = set()
    out = []
    stack = [root[0]] if root[0] is not None else []
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        out.append(node)
        for child, _ in node.edges:
            if child is not None and id(child) not in seen:
                stack.append(child)
    return out


def node_count(root: Edge | DD) -> int:
    """Number of distinct decision nodes reachable from ``root`` (terminal excluded)."""
    if isinstance(root, DD):
        root = root.root
    return len(reachable_nodes(root))


def format_weight(w: complex) -> str:
    return f"{w.real:.6g}{w.imag:+.6g}i"


def export_dot(root: Edge | DD, sink: TextIO | None = None) -> str:
    """Serialize a diagram as a DOT digraph.

    One vertex per decision node (labelled ``q<level>``), one for the
    terminal, one for the root entry point. Edges carry their weight as
    ``a+bi``; zero stubs are left out. Returns the text and also writes it to
    ``sink`` when given.
    """
    if isinstance(root, DD):
        root = root.root
    nodes = reachable_nodes(root)
    nodes.sort(key=lambda n: -n.level)
    names = {id(n): f"n{i}" for i, n in enumerate(nodes)}
    buf = io.StringIO()
    buf.write("digraph dd {\n")
    buf.write('  root [shape=point, label=""];\n')
    buf.write('  terminal [shape=box, style=filled, fillcolor=black, label="", width=0.2, height=0.2];\n')
    for n in nodes:
        buf.write(f'  {names[id(n)]} [shape=circle, label="q{n.level}"];\n')
    target = names[id(root.node)] if root.node is not None else "terminal"
    buf.write(f'  root -> {target} [label="{format_weight(root.weight)}"];\n')
    for n in nodes:
        for slot, (child, w) in enumerate(n.edges):
            if w == 0:
                continue
            dst = names[id(child)] if child is not None else "terminal"
            buf.write(f'  {names[id(n)]} -> {dst} [label="{format_weight(w)}", taillabel="{slot}"];\n')
    buf.write("}\n")
    text = buf.getvalue()
    if sink is not None:
        sink.write(text)
    return text
