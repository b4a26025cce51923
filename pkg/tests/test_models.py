from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hamdd import oracle
from hamdd.core import DDContext
from hamdd.models import (
    EvolutionPlan,
    ModelSpec,
    TrotterCircuit,
    apply_circuit,
    build_gaussian_bonds,
    circuit_from_angles,
    even_odd_bonds,
    evolve,
    trotter_step_circuit,
)
from hamdd.operators import GateSpec
from hamdd.state import zero_state


def test_gaussian_bonds_frozen():
    # Philox + ziggurat; frozen so a numpy upgrade that changes the stream is noticed
    assert build_gaussian_bonds(5, 0) == pytest.approx(
        (-0.2059740286292238, -0.12884495093462758, -0.28978987549091256, -1.271943284573895), abs=1e-15
    )
    assert build_gaussian_bonds(4, 42) == pytest.approx((-1.1043995228921153, 0.1891281100736375, 0.04600092882122236))
    assert build_gaussian_bonds(9, 3) == build_gaussian_bonds(9, 3)
    assert build_gaussian_bonds(9, 3) != build_gaussian_bonds(9, 4)


def test_model_validation():
    with pytest.raises(ValueError):
        ModelSpec("xy", 4)
    with pytest.raises(ValueError):
        ModelSpec("ising", 1)
    with pytest.raises(ValueError):
        ModelSpec("spinglass", 4, bonds=(1.0, 2.0))
    m = ModelSpec("spinglass", 4, bonds=[1, 2, 3])
    assert m.bonds == (1.0, 2.0, 3.0)
    assert m.commuting and not ModelSpec("ising", 4).commuting


def test_even_odd_order():
    assert even_odd_bonds(6) == [0, 2, 4, 1, 3]
    assert even_odd_bonds(2) == [0]


def test_ising_circuit_layout():
    c = trotter_step_circuit(ModelSpec("ising", 4, 1.5, 0.5), 0.1)
    kinds = [g.kind for g in c.gates]
    assert kinds == ["rxx"] * 3 + ["rz"] * 4
    assert [g.targets for g in c.gates[:3]] == [(0, 1), (2, 3), (1, 2)]
    assert c.gates[0].angle == pytest.approx(-2 * 1.5 * 0.1)
    assert c.gates[-1].angle == pytest.approx(-2 * 0.5 * 0.1)


def test_heisenberg_and_spinglass_layout():
    h = trotter_step_circuit(ModelSpec("heisenberg", 3, 1.0, 1.0), 0.1)
    assert [g.kind for g in h.gates] == ["rxx", "rxx", "ryy", "ryy", "rzz", "rzz", "rz", "rz", "rz"]
    sg = ModelSpec("spinglass", 5, seed=2)
    c = trotter_step_circuit(sg, 0.3)
    assert all(g.kind == "rxx" for g in c.gates)
    by_bond = {g.targets[0]: g.angle for g in c.gates}
    for l, j in enumerate(sg.bonds):
        assert by_bond[l] == pytest.approx(-2 * j * 0.3)


def test_circuit_from_angles_per_bond():
    m = ModelSpec("ising", 4)
    c = circuit_from_angles(m, 0.2, [0.1, 0.2, 0.3])
    assert {g.targets: g.angle for g in c.gates if g.kind == "rxx"} == {(0, 1): 0.1, (1, 2): 0.2, (2, 3): 0.3}


def test_layers_group_disjoint_gates():
    c = trotter_step_circuit(ModelSpec("ising", 5, 1.0, 1.0), 0.1)
    layers = c.layers()
    # rz on site 0 joins the odd-bond layer, which leaves it free
    assert [len(x) for x in layers] == [2, 3, 4]
    assert [len(x) for x in c.layers(fuse=False)] == [1] * len(c.gates)
    long = TrotterCircuit((GateSpec("rz", (0,), 1), GateSpec("rxx", (0, 3), 1), GateSpec("rz", (1,), 1)), 4)
    assert [len(x) for x in long.layers()] == [1, 1, 1]


@pytest.mark.parametrize("family", ["ising", "heisenberg", "spinglass"])
def test_fused_and_sequential_agree(family):
    ctx = DDContext()
    m = ModelSpec(family, 6, 0.9, 0.4, seed=5)
    c = trotter_step_circuit(m, 0.25)
    a = b = zero_state(6, ctx)
    for _ in range(3):
        a = apply_circuit(a, c, fuse=True)
        b = apply_circuit(b, c, fuse=False)
    assert a.same_as(b)


@pytest.mark.parametrize("family", ["ising", "heisenberg", "spinglass"])
def test_step_matches_dense_circuit(family):
    m = ModelSpec(family, 5, 1.0, 0.7, seed=1)
    c = trotter_step_circuit(m, 0.2)
    psi = zero_state(5, DDContext())
    ref = oracle.zero_state(5)
    for _ in range(4):
        psi = apply_circuit(psi, c)
        ref = oracle.dense_apply_circuit(ref, c)
    np.testing.assert_allclose(psi.to_dense(), ref, atol=1e-10)


def test_apply_circuit_site_mismatch():
    c = trotter_step_circuit(ModelSpec("ising", 4), 0.1)
    with pytest.raises(ValueError):
        apply_circuit(zero_state(3, DDContext()), c)


def test_trotter_sign_convention():
    # U(dt) approaches exp(-i H dt) with H = -J XX - g Z
    m = ModelSpec("ising", 3, 1.0, 0.8)
    dt = 1e-4
    u = oracle.dense_apply_circuit(oracle.zero_state(3), trotter_step_circuit(m, dt))
    exact = oracle.dense_exact_evolve(oracle.dense_hamiltonian(m), dt, oracle.zero_state(3))
    assert np.linalg.norm(u - exact) < 1e-7


def test_plan_validation():
    m = ModelSpec("ising", 4)
    with pytest.raises(ValueError):
        EvolutionPlan(m, 0.0, 3)
    with pytest.raises(ValueError):
        EvolutionPlan(m, 0.1, -1)
    with pytest.raises(ValueError):
        EvolutionPlan(m, 0.1, 3, ("sz(4)",))
    with pytest.raises(ValueError):
        EvolutionPlan(m, 0.1, 3, mode="exact")
    with pytest.raises(ValueError):
        EvolutionPlan(m, 0.1, 3, sample_every=0)


def test_evolve_records_samples():
    m = ModelSpec("ising", 4, 1.0, 0.5)
    plan = EvolutionPlan(m, 0.1, 6, ("sz(0)", "sxsx(0,3)"), sample_every=2)
    res = evolve(plan, zero_state(4, DDContext()))
    assert res.steps == [0, 2, 4, 6]
    assert res.times == pytest.approx([0, 0.2, 0.4, 0.6])
    assert res.values["sz(0)"][0] == pytest.approx(1)
    assert res.node_counts[0] == 4
    assert res.wall_ms == sorted(res.wall_ms)
    assert not res.warnings


def test_single_step_warns_for_non_commuting(caplog):
    m = ModelSpec("ising", 3, 1.0, 0.5)
    res = evolve(EvolutionPlan(m, 0.1, 2, ("sz(1)",), mode="single-step"), zero_state(3, DDContext()))
    assert res.warnings and "non-commuting" in res.warnings[0]
    assert "non-commuting" in caplog.text


@given(st.integers(2, 7), st.integers(0, 1000), st.floats(0.01, 2.0))
@settings(max_examples=30, deadline=None)
def test_spinglass_single_step_is_exact(L, seed, t):
    m = ModelSpec("spinglass", L, seed=seed)
    psi = apply_circuit(zero_state(L, DDContext()), trotter_step_circuit(m, t))
    exact = oracle.dense_exact_evolve(oracle.dense_hamiltonian(m), t, oracle.zero_state(L))
    np.testing.assert_allclose(psi.to_dense(), exact, atol=1e-9)


def test_spinglass_center_magnetization_closed_form():
    # sz(c) = cos(2 J_{c-1} t) * cos(2 J_c t) for |0...0> under commuting XX bonds
    L, c = 9, 4
    m = ModelSpec("spinglass", L, seed=11)
    res = evolve(EvolutionPlan(m, 0.1, 20, (f"sz({c})",), mode="single-step"), zero_state(L, DDContext()))
    j0, j1 = m.bonds[c - 1], m.bonds[c]
    expect = [math.cos(2 * j0 * t) * math.cos(2 * j1 * t) for t in res.times]
    assert res.values[f"sz({c})"] == pytest.approx(expect, abs=1e-9)


def test_three_site_ising_step_layout():
    # the three-site circuit as drawn: two bond rotations then a field rotation per site
    c = trotter_step_circuit(ModelSpec("ising", 3, 1.0, 0.5), 0.1)
    assert [(g.kind, g.targets) for g in c.gates] == [
        ("rxx", (0, 1)), ("rxx", (1, 2)), ("rz", (0,)), ("rz", (1,)), ("rz", (2,)),
    ]
