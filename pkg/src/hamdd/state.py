"""Constructing vector diagrams of ``L``-site two-level systems."""

from __future__ import annotations

import math
from collections.abc import Sequence

import numpy as np

from hamdd.core import ONE_EDGE, ZERO_EDGE, DDContext, Edge, StateDD, default_context, ensure_recursion
from hamdd.algebra import add_edges


class DegenerateStateError(ValueError):
    """The all-zero vector has no normalized diagram."""


def _ctx(ctx: DDContext | None) -> DDContext:
    return ctx if ctx is not None else default_context()


def basis_state(sites: int, bits: Sequence[int], ctx: DDContext | None = None) -> StateDD:
    """Computational basis state.

    ``bits[k]`` is the value of site ``k`` (site 0 is the bottom level and the
    least significant bit of the basis index).
    """
    ctx = _ctx(ctx)
    if sites < 1:
        raise ValueError("need at least one site")
    if len(bits) != sites or any(b not in (0, 1) for b in bits):
        raise ValueError(f"expected {sites} bits in {{0, 1}}, got {bits!r}")
    e = ONE_EDGE
    for level in range(sites):
        e = ctx.make_vnode(level, e, ZERO_EDGE) if bits[level] == 0 else ctx.make_vnode(level, ZERO_EDGE, e)
    return StateDD(ctx, e, sites)


def zero_state(sites: int, ctx: DDContext | None = None) -> StateDD:
    return basis_state(sites, [0] * sites, ctx)


def basis_index_state(sites: int, index: int, ctx: DDContext | None = None) -> StateDD:
    """Basis state ``|index>`` with the usual binary ordering."""
    return basis_state(sites, [(index >> k) & 1 for k in range(sites)], ctx)


def from_amplitudes(amps, ctx: DDContext | None = None) -> StateDD:
    """Reduced diagram of a dense amplitude vector of length ``2**L``.

    Built bottom-up by recursive halving. Identical sub-vectors are built once
    and structurally equal ones meet in the unique table, so the unreduced
    tree never exists.
    """
    ctx = _ctx(ctx)
    vec = np.asarray(amps, dtype=complex).ravel()
    n = vec.size
    if n < 2 or n & (n - 1):
        raise ValueError(f"amplitude vector length must be a power of two >= 2, got {n}")
    if not np.all(np.isfinite(vec)):
        raise ValueError("amplitudes must be finite")
    sites = n.bit_length() - 1
    if not np.any(vec):
        raise DegenerateStateError("cannot build a diagram of the all-zero vector")
    ensure_recursion(sites)
    memo: dict[bytes, Edge] = {}

    def build(lo: int, level: int) -> Edge:
        size = 1 << (level + 1)
        chunk = vec[lo : lo + size]
        key = chunk.tobytes()
        got = memo.get(key)
        if got is not None:
            return got
        if level == 0:
            a0 = complex(chunk[0])
            a1 = complex(chunk[1])
            got = ctx.make_vnode(0, Edge(None, a0), Edge(None, a1))
        else:
            half = size >> 1
            e0 = build(lo, level - 1) if np.any(chunk[:half]) else ZERO_EDGE
            e1 = build(lo + half, level - 1) if np.any(chunk[half:]) else ZERO_EDGE
            got = ctx.make_vnode(level, e0, e1)
        memo[key] = got
        return got

    return StateDD(ctx, build(0, sites - 1), sites)


def ghz_state(sites: int, ctx: DDContext | None = None) -> StateDD:
    """``(|0...0> + |1...1>) / sqrt(2)``."""
    ctx = _ctx(ctx)
    if sites < 2:
        raise ValueError("GHZ state needs at least two sites")
    zeros = basis_state(sites, [0] * sites, ctx).root
    ones = basis_state(sites, [1] * sites, ctx).root
    s = 1 / math.sqrt(2)
    e = add_edges(ctx, Edge(zeros.node, s), Edge(ones.node, s))
    return StateDD(ctx, e, sites)


def w_state(sites: int, ctx: DDContext | None = None) -> StateDD:
    """Equal superposition of all single-excitation basis states."""
    ctx = _ctx(ctx)
    if sites < 2:
        raise ValueError("W state needs at least two sites")
    s = 1 / math.sqrt(sites)
    e = ZERO_EDGE
    for k in range(sites):
        bits = [0] * sites
        bits[k] = 1
        b = basis_state(sites, bits, ctx).root
        e = add_edges(ctx, e, Edge(b.node, s))
    return StateDD(ctx, e, sites)
