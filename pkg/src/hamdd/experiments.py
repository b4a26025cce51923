"""Experiment drivers behind the command line.

Each ``cmd_*`` function takes an :class:`ExperimentConfig` and returns a
:class:`ResultTable` (or DOT text), so the experiments can also be scripted
without going through argparse.
"""

from __future__ import annotations

import csv
import io
import math
import os
import re
import statistics
import time
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from importlib import metadata

import numpy as np

from hamdd import oracle
from hamdd.core import DEFAULT_GC_THRESHOLD, DDContext, ensure_recursion, export_dot
from hamdd.models import (
    FAMILIES,
    EvolutionPlan,
    ModelSpec,
    apply_circuit,
    circuit_from_angles,
    evolve,
    trotter_step_circuit,
)
from hamdd.numerics import DEFAULT_TOLERANCE
from hamdd.operators import GateSpec, ObservableSpec, gate_dd
from hamdd.state import basis_state, ghz_state, w_state, zero_state

# default (J, field) per family, matching the reference runs
MODEL_DEFAULTS = {"ising": (1.0, 0.001), "heisenberg": (1.0, 1.0), "spinglass": (1.0, 0.0)}


class ConfigError(ValueError):
    """Invalid experiment configuration."""


def artifact_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        from hamdd import __version__

        return __version__


@dataclass
class ExperimentConfig:
    command: str = "evolve"
    model: str = "ising"
    sites: int | None = None
    coupling: float | None = None
    field: float | None = None
    dt: float = 0.1
    steps: int | None = None
    grid: int = 101
    angle_range: tuple[float, float] = (-math.pi, math.pi)
    observables: tuple[str, ...] = ()
    seed: int = 0
    mode: str = "stepwise"
    dense_check: bool = False
    tolerance: float = DEFAULT_TOLERANCE
    gc_threshold: int = DEFAULT_GC_THRESHOLD
    reps: int = 10
    threads: int | None = None
    obj: tuple[str, ...] = ()
    out: str | None = None

    def resolved(self) -> ExperimentConfig:
        """Copy with command-specific defaults filled in, validated."""
        c = replace(self)
        if c.model not in FAMILIES:
            raise ConfigError(f"unknown model {c.model!r}; expected one of {FAMILIES}")
        j, g = MODEL_DEFAULTS[c.model]
        if c.coupling is None:
            c.coupling = j
        if c.field is None:
            c.field = g
        if c.sites is None:
            c.sites = {"landscape": 12, "scaling": 10, "bench": 4, "export-dot": 2}.get(c.command, 5)
        if c.steps is None:
            c.steps = {"landscape": 2, "scaling": 100, "bench": 1}.get(c.command, 100)
        if c.threads is None:
            c.threads = os.cpu_count() or 1
        if c.command in ("evolve", "bench") and not c.observables:
            c.observables = (f"sz({(c.sites - 1) // 2})",)
        c.angle_range = (float(c.angle_range[0]), float(c.angle_range[1]))
        c.observables = tuple(c.observables)
        c.obj = tuple(c.obj)
        c.validate()
        return c

    def validate(self) -> None:
        low = 1 if self.command == "export-dot" else 2
        if self.sites < low:
            raise ConfigError(f"--sites must be at least {low}")
        if self.steps < (0 if self.command == "evolve" else 1):
            raise ConfigError("--steps out of range")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigError("--dt must be positive")
        if self.grid < 2:
            raise ConfigError("--grid needs at least 2 points per axis")
        lo, hi = self.angle_range
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise ConfigError("--angle-range needs finite LO < HI")
        if self.mode not in ("stepwise", "single-step"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if not (self.tolerance > 0 and math.isfinite(self.tolerance)):
            raise ConfigError("--tolerance must be positive")
        if self.reps < 1:
            raise ConfigError("--reps must be at least 1")
        if self.threads < 1:
            raise ConfigError("--threads must be at least 1")
        if self.gc_threshold < 1:
            raise ConfigError("--gc-threshold must be positive")
        for o in self.observables:
            try:
                ObservableSpec.parse(o).check(self.sites)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None

    def metadata(self) -> dict[str, str]:
        out = {}
        for f in fields(self):
            if f.name == "out":
                continue
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = " ".join(repr(x) if isinstance(x, float) else str(x) for x in v)
            out[f.name.replace("_", "-")] = str(v)
        return out

    def model_spec(self) -> ModelSpec:
        return ModelSpec(self.model, self.sites, self.coupling, self.field, seed=self.seed)

    def context(self) -> DDContext:
        return DDContext(self.tolerance, self.gc_threshold)


@dataclass
class ResultTable:
    """Rows under a fixed header, plus a ``key=value`` metadata block."""

    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)
    meta: dict[str, str] = field(default_factory=dict)

    def add(self, *row) -> None:
        if len(row) != len(self.columns):
            raise ValueError(f"row has {len(row)} values for {len(self.columns)} columns")
        self.rows.append(tuple(row))

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        for k, v in self.meta.items():
            buf.write(f"# {k}={v}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_fmt(x) for x in r])
        return buf.getvalue()

    def write(self, path: str | None, stream=None) -> None:
        text = self.to_csv()
        if path:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        elif stream is not None:
            stream.write(text)


def read_csv(text: str) -> tuple[dict[str, str], list[dict[str, str]]]:
    """Parse the output format back into ``(metadata, rows)``."""
    meta = {}
    body = []
    for line in text.splitlines():
        if line.startswith("#"):
            k, _, v = line[1:].strip().partition("=")
            meta[k] = v
        else:
            body.append(line)
    return meta, list(csv.DictReader(body))


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _meta(cfg: ExperimentConfig) -> dict[str, str]:
    m = {"artifact-version": artifact_version()}
    m.update(cfg.metadata())
    return m


def _pmap(fn: Callable, items: Sequence, threads: int) -> list:
    """Map in worker processes; results come back in input order."""
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(fn, items))


# -- landscape ---------------------------------------------------------------


def landscape_point(cfg: ExperimentConfig, model: ModelSpec, ts: float, tt: float) -> list[tuple]:
    """Rows ``(theta_single, theta_two, n, node_count)`` for ``n = 1 .. cfg.steps``."""
    ctx = cfg.context()
    ensure_recursion(cfg.sites)
    circuit = circuit_from_angles(model, ts, tt)
    state = zero_state(cfg.sites, ctx)
    out = []
    for n in range(1, cfg.steps + 1):
        state = apply_circuit(state, circuit)
        out.append((ts, tt, n, state.node_count()))
    return out


def cmd_landscape(cfg: ExperimentConfig) -> ResultTable:
    """Node count over a grid of single-site and two-site rotation angles."""
    cfg = cfg.resolved()
    model = cfg.model_spec()
    axis = [float(a) for a in np.linspace(*cfg.angle_range, cfg.grid)]
    # one task per theta_single row keeps process overhead small
    tasks = [(cfg, model, ts, axis) for ts in axis]
    start = time.perf_counter()
    chunks = _pmap(_landscape_column, tasks, cfg.threads)
    table = ResultTable(("theta_single", "theta_two", "trotter_steps", "node_count"), meta=_meta(cfg))
    for rows in chunks:
        for r in rows:
            table.add(*r)
    table.meta["wall-s"] = f"{time.perf_counter() - start:.3f}"
    return table


def _landscape_column(args) -> list[tuple]:
    cfg, model, ts, axis = args
    rows = []
    for tt in axis:
        rows.extend(landscape_point(cfg, model, ts, tt))
    return rows


# -- scaling -----------------------------------------------------------------


def _scaling_run(args) -> list[tuple]:
    cfg, L = args
    ctx = cfg.context()
    ensure_recursion(L)
    model = ModelSpec(cfg.model, L, cfg.coupling, cfg.field, seed=cfg.seed)
    circuit = trotter_step_circuit(model, cfg.dt)
    state = zero_state(L, ctx)
    rows = [(L, 0, state.node_count())]
    for k in range(1, cfg.steps + 1):
        state = apply_circuit(state, circuit)
        rows.append((L, k, state.node_count()))
    return rows


def cmd_scaling(cfg: ExperimentConfig) -> ResultTable:
    """Node count after every Trotter step for each chain length 2..L."""
    cfg = cfg.resolved()
    # largest chains first so the slow runs start early
    sizes = list(range(cfg.sites, 1, -1))
    start = time.perf_counter()
    runs = _pmap(_scaling_run, [(cfg, L) for L in sizes], cfg.threads)
    table = ResultTable(("L", "step", "node_count"), meta=_meta(cfg))
    for rows in sorted(runs, key=lambda r: r[0][0]):
        for r in rows:
            table.add(*r)
    table.meta["wall-s"] = f"{time.perf_counter() - start:.3f}"
    return table


# -- evolve ------------------------------------------------------------------


def dense_reference(plan: EvolutionPlan, steps: Iterable[int], cap: int = oracle.DEFAULT_CAP) -> dict[str, list[float]]:
    """Dense-oracle values of the plan's observables at the given step numbers.

    Mirrors the plan's mode: the same Trotter circuits are applied to dense
    vectors, so any difference measures the diagram arithmetic alone.
    """
    model = plan.model
    oracle.check_cap(model.sites, cap)
    steps = list(steps)
    psi0 = oracle.zero_state(model.sites)
    states = {}
    if plan.mode == "stepwise":
        circuit = trotter_step_circuit(model, plan.dt)
        psi, done = psi0, 0
        for k in sorted(set(steps)):
            for _ in range(k - done):
                psi = oracle.dense_apply_circuit(psi, circuit, cap)
            done = k
            states[k] = psi
    else:
        for k in set(steps):
            states[k] = oracle.dense_apply_circuit(psi0, trotter_step_circuit(model, k * plan.dt), cap) if k else psi0
    return {
        o.label: [oracle.dense_expectation_local(states[k], model.sites, o) for k in steps] for o in plan.observables
    }


def cmd_evolve(cfg: ExperimentConfig) -> ResultTable:
    """Time evolution of ``|0...0>`` with observables, node counts and timing."""
    cfg = cfg.resolved()
    if cfg.dense_check:
        try:
            oracle.check_cap(cfg.sites)
        except oracle.OracleCapError as exc:
            raise ConfigError(f"--dense-check refused: {exc}") from None
    model = cfg.model_spec()
    ensure_recursion(cfg.sites)
    plan = EvolutionPlan(model, cfg.dt, cfg.steps, cfg.observables, mode=cfg.mode)
    ctx = cfg.context()
    res = evolve(plan, zero_state(cfg.sites, ctx))
    labels = [o.label for o in plan.observables]
    cols = ["t", *labels, "node_count", "wall_ms"]
    ref = None
    if cfg.dense_check:
        ref = dense_reference(plan, res.steps)
        cols += [f"oracle_{x}" for x in labels] + [f"abs_err_{x}" for x in labels]
    table = ResultTable(tuple(cols), meta=_meta(cfg))
    if model.family == "spinglass":
        table.meta["bonds"] = " ".join(repr(b) for b in model.bonds) if model.sites <= 64 else "(omitted)"
    for w in res.warnings:
        table.meta["warning"] = w
    for i, t in enumerate(res.times):
        row = [t, *(res.values[x][i] for x in labels), res.node_counts[i], round(res.wall_ms[i], 3)]
        if ref is not None:
            row += [ref[x][i] for x in labels]
            row += [abs(ref[x][i] - res.values[x][i]) for x in labels]
        table.add(*row)
    if ref is not None:
        table.meta["max-abs-err"] = repr(
            max((abs(ref[x][i] - res.values[x][i]) for x in labels for i in range(len(res))), default=0.0)
        )
    return table


# -- bench -------------------------------------------------------------------


def _run_dd(cfg: ExperimentConfig, plan: EvolutionPlan) -> None:
    evolve(plan, zero_state(cfg.sites, cfg.context()))


def _run_dense(cfg: ExperimentConfig, plan: EvolutionPlan) -> None:
    dense_reference(plan, [plan.n_steps])


def cmd_bench(cfg: ExperimentConfig) -> ResultTable:
    """Median and mean wall time of the same evolution for the DD and dense paths.

    One untimed warm-up run precedes the timed repetitions of each method.
    """
    cfg = cfg.resolved()
    ensure_recursion(cfg.sites)
    plan = EvolutionPlan(cfg.model_spec(), cfg.dt, cfg.steps, cfg.observables, sample_every=cfg.steps, mode=cfg.mode)
    table = ResultTable(("L", "steps", "method", "reps", "median_ms", "mean_ms"), meta=_meta(cfg))
    methods: list[tuple[str, Callable | None]] = [("dd", _run_dd)]
    methods.append(("dense", _run_dense if cfg.sites <= oracle.DEFAULT_CAP else None))
    for name, fn in methods:
        if fn is None:
            table.add(cfg.sites, cfg.steps, name, 0, "unavailable", "unavailable")
            continue
        fn(cfg, plan)
        times = []
        for _ in range(cfg.reps):
            t0 = time.perf_counter()
            fn(cfg, plan)
            times.append((time.perf_counter() - t0) * 1e3)
        table.add(cfg.sites, cfg.steps, name, cfg.reps, round(statistics.median(times), 4), round(statistics.fmean(times), 4))
    return table


# -- export-dot --------------------------------------------------------------

_ANGLE_RE = re.compile(r"^([+-]?)(\d*\.?\d*(?:e[+-]?\d+)?)?\*?(pi)?(?:/(\d+(?:\.\d*)?))?$", re.IGNORECASE)


def parse_angle(text: str) -> float:
    """Parse ``1.5``, ``pi``, ``-pi/2``, ``3pi/4`` or ``0.25*pi``."""
    s = text.strip().replace(" ", "")
    try:
        return float(s)
    except ValueError:
        pass
    m = _ANGLE_RE.match(s)
    if not m or not (m.group(2) or m.group(3)):
        raise ConfigError(f"cannot parse angle {text!r}")
    sign, num, pi, den = m.groups()
    v = float(num) if num else 1.0
    if pi:
        v *= math.pi
    if den:
        v /= float(den)
    return -v if sign == "-" else v


def build_object(cfg: ExperimentConfig, ctx: DDContext):
    """Diagram for an object description such as ``ghz 3``, ``basis 0101`` or ``rxx pi/2``."""
    spec = list(cfg.obj)
    if not spec:
        raise ConfigError("export-dot needs an object: ghz N | w N | basis BITS | GATE [ANGLE] [TARGETS]")
    kind = spec[0].lower()
    try:
        if kind in ("ghz", "w"):
            n = int(spec[1]) if len(spec) > 1 else cfg.sites
            return (ghz_state if kind == "ghz" else w_state)(n, ctx)
        if kind == "basis":
            bits = spec[1]
            if not bits or set(bits) - {"0", "1"}:
                raise ConfigError(f"basis needs a bit string, got {bits!r}")
            # written most significant (highest site) first
            return basis_state(len(bits), [int(b) for b in reversed(bits)], ctx)
        if kind in GateSpec.ROTATIONS2 or kind in ("rz", "rx"):
            angle = parse_angle(spec[1]) if len(spec) > 1 else 0.0
            rest = spec[2:]
        elif kind in ("x", "y", "z"):
            angle, rest = 0.0, spec[1:]
        else:
            raise ConfigError(f"unknown object {kind!r}")
        arity = 2 if kind in GateSpec.ROTATIONS2 else 1
        targets = tuple(int(t) for t in rest) if rest else tuple(range(arity))
        sites = max(cfg.sites, max(targets) + 1)
        return gate_dd(GateSpec(kind, targets, angle), sites, ctx)
    except (IndexError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad object description {' '.join(spec)!r}: {exc}") from None


def cmd_export_dot(cfg: ExperimentConfig) -> str:
    cfg = cfg.resolved()
    return export_dot(build_object(cfg, cfg.context()))


COMMANDS = {
    "landscape": cmd_landscape,
    "scaling": cmd_scaling,
    "evolve": cmd_evolve,
    "bench": cmd_bench,
    "export-dot": cmd_export_dot,
}
