"""Spin-chain Hamiltonians, first-order Trotter circuits and time evolution.

Conventions (open chains, hbar = 1):

* Ising:       H = -J sum X_l X_{l+1} - g sum Z_l
* Heisenberg:  H = -J sum (X X + Y Y + Z Z)_{l,l+1} - h sum Z_l
* spin glass:  H = -sum J_l X_l X_{l+1}, J_l ~ N(0, 1)

One Trotter step of size ``dt`` applies the bond rotations ``R_PP(-2 J dt)``
on even bonds, then odd bonds (axis by axis for Heisenberg), followed by
``R_z(-2 g dt)`` on every site.
"""

from __future__ import annotations

import logging
import time
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from hamdd.algebra import expectation, mat_vec
from hamdd.core import DDContext, StateDD
from hamdd.operators import GateSpec, ObservableSpec, fusable, gate_dd, layer_dd, observable_dd

log = logging.getLogger(__name__)

FAMILIES = ("ising", "heisenberg", "spinglass")


def build_gaussian_bonds(sites: int, seed: int) -> tuple[float, ...]:
    """``sites - 1`` couplings drawn from N(0, 1).

    Uses numpy's Philox counter-based bit generator with the ziggurat normal
    sampler of ``Generator.standard_normal``, so a seed gives the same bonds
    on every platform.
    """
    if sites < 2:
        raise ValueError("need at least two sites")
    rng = np.random.Generator(np.random.Philox(seed))
    return tuple(float(x) for x in rng.standard_normal(sites - 1))


@dataclass(frozen=True)
class ModelSpec:
    family: str
    sites: int
    coupling: float = 1.0
    field: float = 0.0
    bonds: tuple[float, ...] | None = None
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown model family {self.family!r}; expected one of {FAMILIES}")
        if self.sites < 2:
            raise ValueError("a chain needs at least two sites")
        if self.family == "spinglass":
            bonds = self.bonds if self.bonds is not None else build_gaussian_bonds(self.sites, self.seed)
            bonds = tuple(float(b) for b in bonds)
            if len(bonds) != self.sites - 1:
                raise ValueError(f"spin glass needs {self.sites - 1} bonds, got {len(bonds)}")
            object.__setattr__(self, "bonds", bonds)

    def bond_couplings(self) -> tuple[float, ...]:
        if self.family == "spinglass":
            return self.bonds
        return (self.coupling,) * (self.sites - 1)

    @property
    def commuting(self) -> bool:
        """True when all Hamiltonian terms commute, so one Trotter step is exact."""
        return self.family == "spinglass"

    def describe(self) -> dict:
        d = {"family": self.family, "sites": self.sites}
        if self.family == "spinglass":
            d["seed"] = self.seed
        else:
            d["coupling"] = self.coupling
            d["field"] = self.field
        return d


def even_odd_bonds(sites: int) -> list[int]:
    """Left sites of the bonds, even bonds first then odd ones."""
    return list(range(0, sites - 1, 2)) + list(range(1, sites - 1, 2))


@dataclass(frozen=True)
class TrotterCircuit:
    gates: tuple[GateSpec, ...]
    sites: int
    dt: float = 0.0

    def layers(self, fuse: bool = True) -> list[tuple[GateSpec, ...]]:
        """Group consecutive gates on disjoint sites so each group is one diagram.

        Gates in a group commute, so the product is the same as applying them
        in list order. Long-range gates always form their own group.
        """
        if not fuse:
            return [(g,) for g in self.gates]
        out: list[tuple[GateSpec, ...]] = []
        current: list[GateSpec] = []
        used: set[int] = set()
        for g in self.gates:
            if not fusable(g):
                if current:
                    out.append(tuple(current))
                out.append((g,))
                current, used = [], set()
                continue
            if used.intersection(g.targets):
                out.append(tuple(current))
                current, used = [], set()
            current.append(g)
            used.update(g.targets)
        if current:
            out.append(tuple(current))
        return out


def _bond_gates(kind: str, sites: int, angles: Sequence[float]) -> list[GateSpec]:
    return [GateSpec(kind, (l, l + 1), angles[l]) for l in even_odd_bonds(sites)]


def circuit_from_angles(
    model: ModelSpec, theta_single: float, theta_two: float | Sequence[float], dt: float = 0.0
) -> TrotterCircuit:
    """One Trotter-step circuit with explicit rotation angles.

    ``theta_two`` is either one angle for every bond or a per-bond sequence.
    ``theta_single`` is ignored for the field-free spin glass.
    """
    L = model.sites
    two = [float(theta_two)] * (L - 1) if np.ndim(theta_two) == 0 else [float(a) for a in theta_two]
    gates = _bond_gates("rxx", L, two)
    if model.family == "heisenberg":
        gates += _bond_gates("ryy", L, two) + _bond_gates("rzz", L, two)
    if model.family != "spinglass":
        gates += [GateSpec("rz", (l,), float(theta_single)) for l in range(L)]
    return TrotterCircuit(tuple(gates), L, dt)


def trotter_step_circuit(model: ModelSpec, dt: float) -> TrotterCircuit:
    """First-order Trotter step ``U(dt)`` of the model as a gate list."""
    two = [-2.0 * j * dt for j in model.bond_couplings()]
    return circuit_from_angles(model, -2.0 * model.field * dt, two, dt)


def apply_circuit(state: StateDD, circuit: TrotterCircuit, fuse: bool = True) -> StateDD:
    """Apply the circuit gate by gate (or layer by layer when ``fuse``)."""
    if circuit.sites != state.sites:
        raise ValueError(f"circuit on {circuit.sites} sites applied to a {state.sites}-site state")
    ctx = state.ctx
    for group in circuit.layers(fuse):
        op = layer_dd(group, state.sites, ctx)
        state = mat_vec(op, state)
        ctx.maybe_collect()
    return state


@dataclass
class EvolutionPlan:
    model: ModelSpec
    dt: float
    n_steps: int
    observables: tuple[ObservableSpec, ...] = ()
    sample_every: int = 1
    mode: str = "stepwise"
    fuse: bool = True

    def __post_init__(self):
        self.observables = tuple(
            ObservableSpec.parse(o) if isinstance(o, str) else o for o in self.observables
        )
        if self.n_steps < 0:
            raise ValueError("n_steps must be non-negative")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.sample_every < 1:
            raise ValueError("sample_every must be >= 1")
        if self.mode not in ("stepwise", "single-step"):
            raise ValueError(f"unknown mode {self.mode!r}")
        for o in self.observables:
            o.check(self.model.sites)


@dataclass
class EvolutionResult:
    times: list[float] = field(default_factory=list)
    steps: list[int] = field(default_factory=list)
    values: dict[str, list[float]] = field(default_factory=dict)
    node_counts: list[int] = field(default_factory=list)
    wall_ms: list[float] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.times)


def evolve(plan: EvolutionPlan, psi0: StateDD) -> EvolutionResult:
    """Run a time evolution and sample observables, node counts and wall time.

    ``stepwise`` applies ``n_steps`` Trotter steps of size ``dt`` in sequence.
    ``single-step`` evolves a fresh copy of ``psi0`` with one Trotter step of
    size ``k * dt`` for every sample ``k``; this is exact only for commuting
    models. Sample 0 (``t = 0``) is always recorded.
    """
    ctx: DDContext = psi0.ctx
    model = plan.model
    if psi0.sites != model.sites:
        raise ValueError("initial state and model disagree on the number of sites")
    result = EvolutionResult(values={o.label: [] for o in plan.observables})
    if plan.mode == "single-step" and not model.commuting:
        msg = f"single-step mode on non-commuting {model.family} model: values are a one-step approximation"
        log.warning(msg)
        result.warnings.append(msg)
    obs_dds = [observable_dd(o, model.sites, ctx) for o in plan.observables]
    start = time.perf_counter()

    def record(k: int, state: StateDD) -> None:
        result.steps.append(k)
        result.times.append(k * plan.dt)
        for o, dd in zip(plan.observables, obs_dds):
            result.values[o.label].append(expectation(state, dd))
        result.node_counts.append(state.node_count())
        result.wall_ms.append((time.perf_counter() - start) * 1e3)

    record(0, psi0)
    if plan.mode == "stepwise":
        circuit = trotter_step_circuit(model, plan.dt)
        state = psi0
        for k in range(1, plan.n_steps + 1):
            state = apply_circuit(state, circuit, plan.fuse)
            if k % plan.sample_every == 0:
                record(k, state)
    else:
        for k in range(plan.sample_every, plan.n_steps + 1, plan.sample_every):
            state = apply_circuit(psi0, trotter_step_circuit(model, k * plan.dt), plan.fuse)
            record(k, state)
    return result
