"""Decision-diagram simulation of Trotterized spin-chain dynamics.

Quick start::

    from hamdd import DDContext, ModelSpec, EvolutionPlan, evolve, zero_state

    ctx = DDContext()
    plan = EvolutionPlan(ModelSpec("ising", 5, 1.0, 0.001), dt=0.1, n_steps=100, observables=("sxsx(0,4)",))
    result = evolve(plan, zero_state(5, ctx))
"""

from __future__ import annotations

from hamdd.algebra import (
    SiteMismatchError,
    add,
    expectation,
    inner_product,
    kron,
    mat_mat,
    mat_vec,
    scale,
)
from hamdd.core import (
    DD,
    DDContext,
    DegenerateNodeError,
    Edge,
    Node,
    OperatorDD,
    StateDD,
    export_dot,
    node_count,
    normalize_matrix,
    normalize_vector,
)
from hamdd.models import (
    EvolutionPlan,
    EvolutionResult,
    ModelSpec,
    TrotterCircuit,
    apply_circuit,
    build_gaussian_bonds,
    circuit_from_angles,
    evolve,
    trotter_step_circuit,
)
from hamdd.numerics import (
    DEFAULT_TOLERANCE,
    NumericContractError,
    NumericDomainError,
    WeightTable,
    canonical_weight,
    weight_arith,
)
from hamdd.operators import (
    GateSpec,
    ObservableSpec,
    gate_dd,
    identity_dd,
    layer_dd,
    observable_dd,
    single_site_dd,
    two_site_dd,
    two_site_rotation_dd,
)
from hamdd.state import (
    DegenerateStateError,
    basis_index_state,
    basis_state,
    from_amplitudes,
    ghz_state,
    w_state,
    zero_state,
)

__version__ = "0.1.0"
