"""Kronecker product, addition, multiplication, inner product and expectation on diagrams.

All recursions descend both operands level by level and memoize on node
identity. Edge weights are factored out before a cache lookup, so a cache
entry is a property of the nodes alone (plus, for addition, the canonical
ratio of the two incoming weights).
"""

from __future__ import annotations

from hamdd.core import DD, ZERO_EDGE, DDContext, Edge, Node, OperatorDD, StateDD, ensure_recursion
from hamdd.numerics import ONE, ZERO, NumericContractError

IMAG_RESIDUE_BOUND = 1e-8


class SiteMismatchError(ValueError):
    """Operands of a binary diagram operation live on different numbers of sites."""


def _check_pair(a: DD, b: DD, what: str) -> DDContext:
    if a.ctx is not b.ctx:
        raise ValueError(f"{what}: operands belong to different contexts")
    if a.sites != b.sites:
        raise SiteMismatchError(f"{what}: {a.sites} sites vs {b.sites} sites")
    ensure_recursion(a.sites)
    return a.ctx


# -- edge-level kernels -------------------------------------------------------


def add_edges(ctx: DDContext, x: Edge, y: Edge) -> Edge:
    """Sum of two diagrams rooted at edges of the same level."""
    xw = x[1]
    yw = y[1]
    if yw == 0:
        return x
    if xw == 0:
        return y
    xn = x[0]
    yn = y[0]
    canon = ctx.weights.lookup
    if xn is yn:
        w = canon(xw + yw)
        return (xn, w) if w != 0 else ZERO_EDGE
    ratio = canon(yw / xw)
    cache = ctx.caches["add"]
    key = (xn, yn, ratio)
    r = cache.get(key) if ctx.use_cache else None
    if r is None:
        subs = []
        for (a, aw), (b, bw) in zip(xn.edges, yn.edges):
            subs.append(add_edges(ctx, (a, aw), (b, bw * ratio)))
        r = ctx.make_node(xn.level, subs)
        if ctx.use_cache:
            cache[key] = r
    if r[1] == 0:
        return ZERO_EDGE
    return (r[0], r[1] * xw)


def _mat_vec(ctx: DDContext, m: Node | None, v: Node | None) -> Edge:
    if m is None or m.ident:
        return (v, ONE)
    cache = ctx.caches["mat_vec"]
    key = (m, v)
    r = cache.get(key) if ctx.use_cache else None
    if r is not None:
        return r
    me = m.edges
    ve = v.edges
    out = []
    for row in (0, 2):
        acc = ZERO_EDGE
        for col in (0, 1):
            mn, mw = me[row + col]
            if mw == 0:
                continue
            vn, vw = ve[col]
            if vw == 0:
                continue
            sub = _mat_vec(ctx, mn, vn)
            if sub[1] == 0:
                continue
            term = (sub[0], mw * vw * sub[1])
            acc = term if acc[1] == 0 else add_edges(ctx, acc, term)
        out.append(acc)
    r = ctx.make_vnode(m.level, out[0], out[1])
    if ctx.use_cache:
        cache[key] = r
    return r


def _mat_mat(ctx: DDContext, a: Node | None, b: Node | None) -> Edge:
    if a is None or a.ident:
        return (b, ONE)
    if b.ident:
        return (a, ONE)
    cache = ctx.caches["mat_mat"]
    key = (a, b)
    r = cache.get(key) if ctx.use_cache else None
    if r is not None:
        return r
    ae = a.edges
    be = b.edges
    out = []
    for row in (0, 1):
        for col in (0, 1):
            acc = ZERO_EDGE
            for k in (0, 1):
                an, aw = ae[2 * row + k]
                if aw == 0:
                    continue
                bn, bw = be[2 * k + col]
                if bw == 0:
                    continue
                sub = _mat_mat(ctx, an, bn)
                if sub[1] == 0:
                    continue
                term = (sub[0], aw * bw * sub[1])
                acc = term if acc[1] == 0 else add_edges(ctx, acc, term)
            out.append(acc)
    r = ctx.make_mnode(a.level, out)
    if ctx.use_cache:
        cache[key] = r
    return r


def _inner(ctx: DDContext, a: Node | None, b: Node | None) -> complex:
    if a is None:
        return ONE
    cache = ctx.caches["inner"]
    key = (a, b)
    r = cache.get(key) if ctx.use_cache else None
    if r is not None:
        return r
    total = ZERO
    for (an, aw), (bn, bw) in zip(a.edges, b.edges):
        if aw == 0 or bw == 0:
            continue
        total += aw.conjugate() * bw * _inner(ctx, an, bn)
    if ctx.use_cache:
        cache[key] = total
    return total


def _kron(ctx: DDContext, a: Node | None, b: Node | None, shift: int) -> Edge:
    if a is None:
        return (b, ONE)
    cache = ctx.caches["kron"]
    key = (a, b, shift)
    r = cache.get(key) if ctx.use_cache else None
    if r is not None:
        return r
    subs = []
    for cn, cw in a.edges:
        if cw == 0:
            subs.append(ZERO_EDGE)
        else:
            s = _kron(ctx, cn, b, shift)
            subs.append((s[0], cw * s[1]))
    r = ctx.make_node(a.level + shift, subs)
    if ctx.use_cache:
        cache[key] = r
    return r


def kron_edges(ctx: DDContext, a: Edge, b: Edge, b_sites: int) -> Edge:
    """``a (x) b`` where ``b`` spans the lowest ``b_sites`` levels."""
    if a[1] == 0 or b[1] == 0:
        return ZERO_EDGE
    r = _kron(ctx, a[0], b[0], b_sites)
    return Edge(r[0], ctx.weights(a[1] * b[1] * r[1]))


def mat_vec_edges(ctx: DDContext, m: Edge, v: Edge) -> Edge:
    if m[1] == 0 or v[1] == 0:
        return ZERO_EDGE
    r = _mat_vec(ctx, m[0], v[0])
    if r[1] == 0:
        return ZERO_EDGE
    return Edge(r[0], ctx.weights(m[1] * v[1] * r[1]))


def mat_mat_edges(ctx: DDContext, a: Edge, b: Edge) -> Edge:
    if a[1] == 0 or b[1] == 0:
        return ZERO_EDGE
    r = _mat_mat(ctx, a[0], b[0])
    if r[1] == 0:
        return ZERO_EDGE
    return Edge(r[0], ctx.weights(a[1] * b[1] * r[1]))


def inner_edges(ctx: DDContext, a: Edge, b: Edge) -> complex:
    if a[1] == 0 or b[1] == 0:
        return ZERO
    return a[1].conjugate() * b[1] * _inner(ctx, a[0], b[0])


# -- handle-level operations --------------------------------------------------


def _wrap(like: DD, root: Edge, sites: int) -> DD:
    cls = OperatorDD if isinstance(like, OperatorDD) else StateDD
    return cls(like.ctx, root, sites)


def kron(a: DD, b: DD) -> DD:
    """Kronecker product ``a (x) b``; ``b`` occupies the low sites of the result."""
    if a.ctx is not b.ctx:
        raise ValueError("kron: operands belong to different contexts")
    if type(a) is not type(b):
        raise TypeError("kron: cannot mix vector and matrix diagrams")
    ensure_recursion(a.sites + b.sites)
    return _wrap(a, kron_edges(a.ctx, a.root, b.root, b.sites), a.sites + b.sites)


def add(a: DD, b: DD) -> DD:
    """Entrywise sum. No global renormalization is applied."""
    ctx = _check_pair(a, b, "add")
    if type(a) is not type(b):
        raise TypeError("add: cannot mix vector and matrix diagrams")
    r = add_edges(ctx, a.root, b.root)
    return _wrap(a, Edge(r[0], ctx.weights(r[1])), a.sites)


def scale(a: DD, factor: complex) -> DD:
    """``factor * a``."""
    w = a.ctx.weights(a.root.weight * factor)
    return _wrap(a, Edge(a.root.node, w) if w != 0 else ZERO_EDGE, a.sites)


def mat_vec(op: OperatorDD, state: StateDD) -> StateDD:
    """``op |state>``."""
    ctx = _check_pair(op, state, "mat_vec")
    return StateDD(ctx, mat_vec_edges(ctx, op.root, state.root), state.sites)


def mat_mat(a: OperatorDD, b: OperatorDD) -> OperatorDD:
    """Matrix product ``a @ b``."""
    ctx = _check_pair(a, b, "mat_mat")
    return OperatorDD(ctx, mat_mat_edges(ctx, a.root, b.root), a.sites)


def inner_product(a: StateDD, b: StateDD) -> complex:
    """``<a|b>``, conjugating the left operand."""
    ctx = _check_pair(a, b, "inner_product")
    return inner_edges(ctx, a.root, b.root)


def expectation(state: StateDD, obs: OperatorDD, bound: float = IMAG_RESIDUE_BOUND) -> float:
    """``Re <state| obs |state>``; a larger imaginary part than ``bound`` is an error."""
    ctx = _check_pair(state, obs, "expectation")
    phi = mat_vec_edges(ctx, obs.root, state.root)
    value = inner_edges(ctx, state.root, phi)
    if abs(value.imag) >= bound:
        raise NumericContractError(
            f"expectation value has imaginary part {value.imag:.3e}; operator not Hermitian?"
        )
    return value.real

