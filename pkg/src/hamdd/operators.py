"""Matrix diagrams for gates and observables.

Operators are assembled level by level from local blocks spliced into
identity chains, so no ``2**L`` matrix is ever formed. A block spanning
``k`` adjacent sites is indexed with its top site as the most significant
bit, matching the basis-index convention of the diagrams.
"""

from __future__ import annotations

import math
import re
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from hamdd.algebra import add_edges
from hamdd.core import ONE_EDGE, ZERO_EDGE, DDContext, Edge, OperatorDD, default_context, ensure_recursion
from hamdd.numerics import ONE

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"i": I2, "x": X, "y": Y, "z": Z}

# swaps the two factors of a two-site operator
_SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


def rz(theta: float) -> np.ndarray:
    return np.array([[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]])


def rx(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def two_site_rotation(axis: str, theta: float) -> np.ndarray:
    """``exp(-i theta/2 P(x)P)`` for ``P`` in {X, Y, Z}."""
    p = PAULI[axis]
    return math.cos(theta / 2) * np.eye(4) - 1j * math.sin(theta / 2) * np.kron(p, p)


@dataclass(frozen=True)
class GateSpec:
    """One gate of a circuit.

    ``kind`` is one of ``rxx``, ``ryy``, ``rzz``, ``rz``, ``rx``, ``x``,
    ``y``, ``z``, ``i`` or ``u`` (custom; ``unitary`` holds the matrix as
    nested tuples). For two-site gates the first target is the more
    significant factor of the 4x4 matrix.
    """

    kind: str
    targets: tuple[int, ...]
    angle: float = 0.0
    unitary: tuple | None = None

    ROTATIONS2 = {"rxx": "x", "ryy": "y", "rzz": "z"}

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if len(set(self.targets)) != len(self.targets):
            raise ValueError(f"coincident targets {self.targets}")
        expected = 2 if self.kind in self.ROTATIONS2 else 1
        if self.kind == "u" and self.unitary is not None:
            expected = {2: 1, 4: 2}.get(len(self.unitary), -1)
        if len(self.targets) != expected:
            raise ValueError(f"gate {self.kind!r} acts on {expected} site(s), got targets {self.targets}")

    @classmethod
    def custom(cls, matrix, targets: Sequence[int]) -> GateSpec:
        m = np.asarray(matrix, dtype=complex)
        return cls("u", tuple(targets), 0.0, tuple(tuple(complex(x) for x in row) for row in m))

    def matrix(self) -> np.ndarray:
        k = self.kind
        if k in self.ROTATIONS2:
            return two_site_rotation(self.ROTATIONS2[k], self.angle)
        if k == "rz":
            return rz(self.angle)
        if k == "rx":
            return rx(self.angle)
        if k in PAULI:
            return PAULI[k].copy()
        if k == "u":
            if self.unitary is None:
                raise ValueError("custom gate without a matrix")
            return np.array(self.unitary, dtype=complex)
        raise ValueError(f"unknown gate kind {k!r}")

    def check(self, sites: int) -> None:
        if any(not 0 <= t < sites for t in self.targets):
            raise ValueError(f"targets {self.targets} out of range for {sites} sites")

    def label(self) -> str:
        args = ",".join(str(t) for t in self.targets)
        if self.kind in self.ROTATIONS2 or self.kind in ("rz", "rx"):
            return f"{self.kind}({self.angle:g})[{args}]"
        return f"{self.kind}[{args}]"


def _block(ctx: DDContext, m: np.ndarray, bottom: Edge, top: int) -> Edge:
    if m.shape[0] == 1:
        w = complex(m[0, 0])
        if w == 0 or bottom[1] == 0:
            return ZERO_EDGE
        return Edge(bottom[0], w * bottom[1])
    h = m.shape[0] // 2
    subs = [
        _block(ctx, m[r * h : (r + 1) * h, c * h : (c + 1) * h], bottom, top - 1)
        for r in (0, 1)
        for c in (0, 1)
    ]
    return ctx.make_mnode(top, subs)


def local_operator_edge(ctx: DDContext, sites: int, blocks: Iterable[tuple[int, np.ndarray]]) -> Edge:
    """Edge of ``... (x) B_2 (x) I (x) B_1 ...`` for disjoint blocks of adjacent sites.

    Each block is ``(lowest site, matrix)`` with a ``2**k`` square matrix
    covering sites ``lowest .. lowest + k - 1``; uncovered sites get identities.
    """
    starts: dict[int, np.ndarray] = {}
    covered: set[int] = set()
    for low, m in blocks:
        m = np.asarray(m, dtype=complex)
        dim = m.shape[0]
        k = dim.bit_length() - 1
        if m.shape != (dim, dim) or dim != 1 << k or k < 1:
            raise ValueError(f"block matrix must be 2**k square, got shape {m.shape}")
        span = set(range(low, low + k))
        if low < 0 or low + k > sites:
            raise ValueError(f"block at site {low} spanning {k} sites exceeds {sites} sites")
        if span & covered:
            raise ValueError("blocks overlap")
        covered |= span
        starts[low] = m
    # block scales are kept apart so long products cannot drift below the tolerance
    e = ONE_EDGE
    scale = 1 + 0j
    level = 0
    while level < sites:
        m = starts.get(level)
        if m is None:
            e = ctx.make_mnode(level, (e, ZERO_EDGE, ZERO_EDGE, e))
            level += 1
        else:
            k = m.shape[0].bit_length() - 1
            e = _block(ctx, m, (e[0], ONE), level + k - 1)
            scale *= e[1]
            level += k
        if e[0] is None:
            return ZERO_EDGE
    return Edge(e[0], ctx.weights(scale))


def _ctx(ctx: DDContext | None) -> DDContext:
    return ctx if ctx is not None else default_context()


def identity_dd(sites: int, ctx: DDContext | None = None) -> OperatorDD:
    ctx = _ctx(ctx)
    return OperatorDD(ctx, ctx.identity(sites), sites)


def product_operator(sites: int, factors: Mapping[int, np.ndarray], ctx: DDContext | None = None) -> OperatorDD:
    """Tensor product with ``factors[site]`` (2x2) at the given sites and identities elsewhere."""
    ctx = _ctx(ctx)
    return OperatorDD(ctx, local_operator_edge(ctx, sites, factors.items()), sites)


def single_site_dd(u, target: int, sites: int, ctx: DDContext | None = None) -> OperatorDD:
    """``I (x) ... (x) U (x) ... (x) I`` with ``U`` on ``target``."""
    if not 0 <= target < sites:
        raise ValueError(f"target {target} out of range for {sites} sites")
    return product_operator(sites, {target: np.asarray(u, dtype=complex)}, ctx)


def two_site_dd(m: np.ndarray, targets: tuple[int, int], sites: int, ctx: DDContext | None = None) -> OperatorDD:
    """Arbitrary 4x4 operator on two sites (first target = more significant factor)."""
    ctx = _ctx(ctx)
    i, j = targets
    if i == j:
        raise ValueError("coincident targets")
    if not (0 <= i < sites and 0 <= j < sites):
        raise ValueError(f"targets {targets} out of range for {sites} sites")
    m = np.asarray(m, dtype=complex)
    if i < j:
        m = _SWAP @ m @ _SWAP
        i, j = j, i
    if i - j == 1:
        return OperatorDD(ctx, local_operator_edge(ctx, sites, [(j, m)]), sites)
    # long range: expand in the operator basis |a><b| (x) |c><d| and sum the products
    ensure_recursion(sites)
    acc = ZERO_EDGE
    for a in (0, 1):
        for b in (0, 1):
            for c in (0, 1):
                for d in (0, 1):
                    coef = m[2 * a + c, 2 * b + d]
                    if coef == 0:
                        continue
                    hi = np.zeros((2, 2), dtype=complex)
                    hi[a, b] = 1
                    lo = np.zeros((2, 2), dtype=complex)
                    lo[c, d] = 1
                    term = local_operator_edge(ctx, sites, [(i, hi), (j, lo)])
                    acc = add_edges(ctx, acc, Edge(term[0], coef * term[1]))
    return OperatorDD(ctx, Edge(acc[0], ctx.weights(acc[1])), sites)


def two_site_rotation_dd(
    kind: str, theta: float, targets: tuple[int, int], sites: int, ctx: DDContext | None = None
) -> OperatorDD:
    """``R_PP(theta) = cos(theta/2) I - i sin(theta/2) P_i P_j`` for ``kind`` in xx/yy/zz."""
    ctx = _ctx(ctx)
    axis = kind[-1].lower()
    if kind.lower() not in ("xx", "yy", "zz", "rxx", "ryy", "rzz"):
        raise ValueError(f"unknown two-site rotation {kind!r}")
    i, j = targets
    if i == j:
        raise ValueError("coincident targets")
    if not (0 <= i < sites and 0 <= j < sites):
        raise ValueError(f"targets {targets} out of range for {sites} sites")
    if abs(i - j) == 1:
        return OperatorDD(ctx, local_operator_edge(ctx, sites, [(min(i, j), two_site_rotation(axis, theta))]), sites)
    # long range: cos(theta/2) * identity + (-i sin(theta/2)) * P_i P_j
    ensure_recursion(sites)
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    p = PAULI[axis]
    ident = ctx.identity(sites)
    pp = local_operator_edge(ctx, sites, [(i, p), (j, p)])
    e = add_edges(ctx, Edge(ident[0], c * ident[1]) if c else ZERO_EDGE, Edge(pp[0], -1j * s * pp[1]) if s else ZERO_EDGE)
    return OperatorDD(ctx, Edge(e[0], ctx.weights(e[1])), sites)


def gate_dd(gate: GateSpec, sites: int, ctx: DDContext | None = None) -> OperatorDD:
    """Diagram of a single gate; memoized in the context's gate cache."""
    ctx = _ctx(ctx)
    gate.check(sites)
    key = ("gate", gate, sites)
    got = ctx.gate_cache.get(key)
    if got is not None:
        return got
    if gate.kind in GateSpec.ROTATIONS2:
        dd = two_site_rotation_dd(gate.kind, gate.angle, gate.targets, sites, ctx)
    elif len(gate.targets) == 1:
        dd = single_site_dd(gate.matrix(), gate.targets[0], sites, ctx)
    else:
        dd = two_site_dd(gate.matrix(), gate.targets, sites, ctx)
    ctx.gate_cache[key] = dd
    return dd


def fusable(gate: GateSpec) -> bool:
    """Gates that can share a layer diagram: one site, or two adjacent sites."""
    t = gate.targets
    return len(t) == 1 or abs(t[0] - t[1]) == 1


def layer_dd(gates: Sequence[GateSpec], sites: int, ctx: DDContext | None = None) -> OperatorDD:
    """Product of gates on pairwise disjoint sites as one diagram (memoized)."""
    ctx = _ctx(ctx)
    gates = tuple(gates)
    if len(gates) == 1:
        return gate_dd(gates[0], sites, ctx)
    key = ("layer", gates, sites)
    got = ctx.gate_cache.get(key)
    if got is not None:
        return got
    blocks = []
    for g in gates:
        g.check(sites)
        if not fusable(g):
            raise ValueError(f"gate {g.label()} cannot be fused into a layer")
        m = g.matrix()
        if len(g.targets) == 2 and g.targets[0] < g.targets[1]:
            m = _SWAP @ m @ _SWAP
        blocks.append((min(g.targets), m))
    dd = OperatorDD(ctx, local_operator_edge(ctx, sites, blocks), sites)
    ctx.gate_cache[key] = dd
    return dd


_OBS_RE = re.compile(r"^\s*(sz|sxsx)\s*\(\s*(\d+)\s*(?:,\s*(\d+)\s*)?\)\s*$")


@dataclass(frozen=True)
class ObservableSpec:
    """``sz(i)`` or ``sxsx(i,j)``."""

    kind: str
    sites: tuple[int, ...]

    @classmethod
    def parse(cls, text: str) -> ObservableSpec:
        m = _OBS_RE.match(text)
        if not m:
            raise ValueError(f"cannot parse observable {text!r}; expected sz(i) or sxsx(i,j)")
        kind, a, b = m.groups()
        if kind == "sz":
            if b is not None:
                raise ValueError(f"sz takes one site: {text!r}")
            return cls("sz", (int(a),))
        if b is None:
            raise ValueError(f"sxsx takes two sites: {text!r}")
        if int(a) == int(b):
            raise ValueError(f"sxsx needs distinct sites: {text!r}")
        return cls("sxsx", (int(a), int(b)))

    @property
    def label(self) -> str:
        return f"{self.kind}({','.join(map(str, self.sites))})"

    def factors(self) -> dict[int, np.ndarray]:
        p = Z if self.kind == "sz" else X
        return {s: p for s in self.sites}

    def check(self, sites: int) -> None:
        if any(not 0 <= s < sites for s in self.sites):
            raise ValueError(f"observable {self.label} out of range for {sites} sites")


def observable_dd(obs: ObservableSpec | str, sites: int, ctx: DDContext | None = None) -> OperatorDD:
    if isinstance(obs, str):
        obs = ObservableSpec.parse(obs)
    obs.check(sites)
    return product_operator(sites, obs.factors(), ctx)
