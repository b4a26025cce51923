from __future__ import annotations

import gc
import math

import numpy as np
import pydot
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from hamdd.core import (
    ONE_EDGE,
    ZERO_EDGE,
    DDContext,
    DegenerateNodeError,
    Edge,
    export_dot,
    node_count,
    normalize_matrix,
    normalize_vector,
    reachable_nodes,
)
from hamdd.numerics import WeightTable
from hamdd.operators import GateSpec, gate_dd
from hamdd.state import basis_state, from_amplitudes, ghz_state

S = 1 / math.sqrt(2)


def test_normalize_vector_unit_norm_and_phase():
    common, a, b = normalize_vector(Edge(None, 3j), Edge(None, 4j))
    assert common == pytest.approx(5j)
    assert a.weight == pytest.approx(0.6)
    assert b.weight == pytest.approx(0.8)


def test_normalize_vector_leading_zero():
    common, a, b = normalize_vector(ZERO_EDGE, Edge(None, -2))
    assert a == ZERO_EDGE
    assert b.weight == pytest.approx(1)
    assert common == pytest.approx(-2)


def test_normalize_degenerate():
    with pytest.raises(DegenerateNodeError):
        normalize_vector(ZERO_EDGE, ZERO_EDGE)
    with pytest.raises(DegenerateNodeError):
        normalize_matrix([ZERO_EDGE] * 4)


def test_normalize_matrix_leftmost_max():
    w = [0.5, -1.0, 1.0, 0.2j]
    common, edges = normalize_matrix([Edge(None, x) for x in w], WeightTable())
    assert common == -1
    assert [e.weight for e in edges] == pytest.approx([-0.5, 1, -1, -0.2j])


@given(
    st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False),
    st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False),
)
@settings(max_examples=200, deadline=None)
def test_normalize_vector_reconstructs(w0, w1):
    if abs(w0) < 1e-6 and abs(w1) < 1e-6:
        return
    common, a, b = normalize_vector(Edge(None, w0), Edge(None, w1))
    assert abs(a.weight) ** 2 + abs(b.weight) ** 2 == pytest.approx(1)
    assert common * a.weight == pytest.approx(w0, abs=1e-9)
    assert common * b.weight == pytest.approx(w1, abs=1e-9)
    lead = a.weight if a.weight != 0 else b.weight
    assert lead.imag == pytest.approx(0, abs=1e-12) and lead.real > 0


def test_hash_consing_shares_nodes():
    ctx = DDContext()
    e1 = ctx.make_vnode(0, ONE_EDGE, ZERO_EDGE)
    e2 = ctx.make_vnode(0, Edge(None, 2.0), ZERO_EDGE)
    assert e1[0] is e2[0]
    assert e2[1] == 2
    assert ctx.table_size() == 1


def test_make_node_all_zero_gives_zero_stub():
    ctx = DDContext()
    assert ctx.make_vnode(0, ZERO_EDGE, ZERO_EDGE) == ZERO_EDGE
    assert ctx.make_mnode(0, [ZERO_EDGE] * 4) == ZERO_EDGE


def test_identity_is_flagged_and_linear():
    ctx = DDContext()
    e = ctx.identity(6)
    assert node_count(e) == 6
    assert e[0].ident


def test_amplitude_and_entry_bounds():
    ctx = DDContext()
    psi = basis_state(3, [1, 0, 1], ctx)
    assert psi.amplitude(5) == 1
    assert psi.amplitude(4) == 0
    with pytest.raises(IndexError):
        psi.amplitude(8)
    op = gate_dd(GateSpec("x", (0,)), 2, ctx)
    assert op.entry(0, 1) == 1
    with pytest.raises(IndexError):
        op.entry(4, 0)


# coarse grid values, so nothing sits within the tolerance of a snap point
grid = st.builds(lambda a, b: complex(a, b) / 4, st.integers(-4, 4), st.integers(-4, 4))


@given(hnp.arrays(np.complex128, 16, elements=grid))
@settings(max_examples=100, deadline=None)
def test_structurally_equal_vectors_share_the_root(v):
    if not v.any():
        return
    ctx = DDContext()
    a = from_amplitudes(v, ctx)
    b = from_amplitudes(v * np.exp(0.7j) * 3.0, ctx)
    assert a.root.node is b.root.node
    np.testing.assert_allclose(a.to_dense(), v, atol=1e-9)


def test_garbage_collection_keeps_live_and_frees_dead():
    ctx = DDContext()
    live = ghz_state(8, ctx)
    before = live.to_dense()
    dead = from_amplitudes(np.arange(1, 257, dtype=complex), ctx)
    n_dead = dead.node_count()
    del dead
    gc.collect()
    total = ctx.table_size()
    freed, _ = ctx.garbage_collect()
    assert freed >= n_dead - live.node_count()
    assert ctx.table_size() == total - freed
    assert ctx.table_size() >= live.node_count()
    np.testing.assert_allclose(live.to_dense(), before)
    # rebuilding after a collection reuses the surviving nodes
    again = ghz_state(8, ctx)
    assert again.root.node is live.root.node


def test_maybe_collect_threshold():
    ctx = DDContext(gc_threshold=10)
    from_amplitudes(np.arange(1, 65, dtype=complex), ctx)
    gc.collect()
    assert ctx.maybe_collect()
    assert ctx.collections == 1


def _parse(text):
    (graph,) = pydot.graph_from_dot_data(text)
    return graph


def test_dot_export_parses_and_counts():
    ctx = DDContext()
    psi = from_amplitudes(np.array([S / 2, S / 2, 0.5, 0, S / 2, S / 2, 0.5, 0]), ctx)
    text = export_dot(psi)
    g = _parse(text)
    decision = [n for n in g.get_nodes() if n.get_name().startswith("n")]
    assert len(decision) == psi.node_count() == 4
    # zero stubs are omitted, so the one-sided bottom node has a single out-edge
    edges = g.get_edges()
    assert len(edges) == 1 + 2 + 2 + 2 + 1


def test_dot_export_sink(tmp_path):
    ctx = DDContext()
    path = tmp_path / "x.dot"
    with open(path, "w") as fh:
        text = export_dot(gate_dd(GateSpec("rxx", (1, 0), math.pi / 2), 2, ctx), fh)
    assert path.read_text() == text
    g = _parse(text)
    assert len([n for n in g.get_nodes() if n.get_name().startswith("n")]) == 3


def test_collect_with_all_roots_live_frees_nothing():
    ctx = DDContext()
    keep = [from_amplitudes(np.arange(1, 33, dtype=complex), ctx), basis_state(5, [1, 1, 0, 0, 1], ctx)]
    freed, _ = ctx.garbage_collect()
    assert freed == 0
    assert len(keep) == 2


def test_stepping_with_collection_keeps_only_live_nodes():
    from hamdd.models import ModelSpec, apply_circuit, trotter_step_circuit
    from hamdd.state import zero_state

    ctx = DDContext()
    circuit = trotter_step_circuit(ModelSpec("ising", 6, 1.0, 0.5), 0.2)
    psi = zero_state(6, ctx)
    for _ in range(5):
        psi = apply_circuit(psi, circuit)
        gc.collect()
        ctx.garbage_collect()
        live = {id(n) for dd in ctx.live_roots() for n in reachable_nodes(dd.root)}
        assert ctx.table_size() == len(live)
        assert psi.node_count() <= ctx.table_size()
