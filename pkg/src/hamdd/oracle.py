"""Dense reference simulation for small chains.

States are plain ``2**L`` numpy arrays with site ``L-1`` as the most
significant bit of the index, the same convention as the diagrams. Gate
matrices are rebuilt here from their Hermitian generators rather than taken
from :mod:`hamdd.operators`, so the two code paths stay independent.
"""

from __future__ import annotations

from collections.abc import Mapping

import numpy as np

from hamdd.models import ModelSpec, TrotterCircuit
from hamdd.operators import GateSpec, ObservableSpec

DEFAULT_CAP = 12

_P = {
    "i": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class OracleCapError(ValueError):
    """The system is too large for dense simulation."""


class NotHermitianError(ValueError):
    pass


def check_cap(sites: int, cap: int = DEFAULT_CAP) -> None:
    if sites > cap:
        raise OracleCapError(f"dense oracle limited to {cap} sites, got {sites}")


def kron_sites(sites: int, factors: Mapping[int, np.ndarray]) -> np.ndarray:
    """Dense ``(x)_{s=L-1..0} factors.get(s, I)``."""
    out = np.ones((1, 1), dtype=complex)
    for s in range(sites - 1, -1, -1):
        out = np.kron(out, factors.get(s, _P["i"]))
    return out


def zero_state(sites: int) -> np.ndarray:
    psi = np.zeros(1 << sites, dtype=complex)
    psi[0] = 1
    return psi


def expm_hermitian(h: np.ndarray, t: float) -> np.ndarray:
    """``exp(-i t h)`` for Hermitian ``h`` via its eigendecomposition."""
    h = np.asarray(h, dtype=complex)
    if not np.allclose(h, h.conj().T, atol=1e-12, rtol=0):
        raise NotHermitianError("generator is not Hermitian")
    evals, evecs = np.linalg.eigh(h)
    return (evecs * np.exp(-1j * t * evals)) @ evecs.conj().T


def gate_matrix(gate: GateSpec) -> np.ndarray:
    """Local matrix of a gate, built from ``exp(-i theta/2 G)``."""
    k = gate.kind
    if k in ("rxx", "ryy", "rzz"):
        p = _P[k[-1]]
        return expm_hermitian(np.kron(p, p), gate.angle / 2)
    if k in ("rz", "rx"):
        return expm_hermitian(_P[k[-1]], gate.angle / 2)
    if k in _P:
        return _P[k]
    if k == "u":
        return np.array(gate.unitary, dtype=complex)
    raise ValueError(f"unknown gate kind {k!r}")


def apply_local(psi: np.ndarray, sites: int, m: np.ndarray, targets: tuple[int, ...]) -> np.ndarray:
    """Apply a ``2**k`` matrix on ``targets`` (first target = most significant factor)."""
    k = len(targets)
    axes = [sites - 1 - t for t in targets]
    tensor = psi.reshape((2,) * sites)
    g = np.asarray(m, dtype=complex).reshape((2,) * (2 * k))
    out = np.tensordot(g, tensor, axes=(list(range(k, 2 * k)), axes))
    out = np.moveaxis(out, list(range(k)), axes)
    return out.reshape(-1)


def dense_apply_circuit(psi: np.ndarray, circuit: TrotterCircuit, cap: int = DEFAULT_CAP) -> np.ndarray:
    check_cap(circuit.sites, cap)
    if psi.size != 1 << circuit.sites:
        raise ValueError("state dimension does not match the circuit")
    for g in circuit.gates:
        psi = apply_local(psi, circuit.sites, gate_matrix(g), g.targets)
    return psi


def dense_hamiltonian(model: ModelSpec, cap: int = DEFAULT_CAP) -> np.ndarray:
    """Full Hamiltonian matrix as a sum of Pauli strings."""
    L = model.sites
    check_cap(L, cap)
    x, y, z = _P["x"], _P["y"], _P["z"]
    h = np.zeros((1 << L, 1 << L), dtype=complex)
    for l, j in enumerate(model.bond_couplings()):
        h -= j * kron_sites(L, {l: x, l + 1: x})
        if model.family == "heisenberg":
            h -= j * kron_sites(L, {l: y, l + 1: y})
            h -= j * kron_sites(L, {l: z, l + 1: z})
    if model.family != "spinglass" and model.field:
        for l in range(L):
            h -= model.field * kron_sites(L, {l: z})
    return h


def dense_exact_evolve(h: np.ndarray, t: float, psi0: np.ndarray) -> np.ndarray:
    """``exp(-i H t) psi0`` by eigendecomposition of the Hermitian ``H``."""
    return expm_hermitian(h, t) @ psi0


def dense_observable(obs: ObservableSpec | str, sites: int) -> np.ndarray:
    if isinstance(obs, str):
        obs = ObservableSpec.parse(obs)
    p = _P["z"] if obs.kind == "sz" else _P["x"]
    return kron_sites(sites, {s: p for s in obs.sites})


def dense_expectation(psi: np.ndarray, op: np.ndarray, bound: float = 1e-10) -> float:
    if op.shape != (psi.size, psi.size):
        raise ValueError(f"operator shape {op.shape} does not match state of size {psi.size}")
    value = np.vdot(psi, op @ psi)
    if abs(value.imag) >= bound:
        raise NotHermitianError(f"expectation has imaginary part {value.imag:.3e}")
    return float(value.real)


def dense_expectation_local(psi: np.ndarray, sites: int, obs: ObservableSpec | str) -> float:
    """Expectation of a Pauli-product observable without forming its matrix."""
    if isinstance(obs, str):
        obs = ObservableSpec.parse(obs)
    p = _P["z"] if obs.kind == "sz" else _P["x"]
    phi = psi
    for s in obs.sites:
        phi = apply_local(phi, sites, p, (s,))
    return float(np.vdot(psi, phi).real)
