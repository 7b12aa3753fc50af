"""Executable ODE view of an architecture and sampled envelopes.

``build_ode`` assembles the connected sub-functions into a compiled
right-hand side (states = integrator states, algebraic outputs evaluated in
topological order).  ``integrate`` is a classical fixed-step 4th-order
Runge-Kutta loop.  ``envelope_over_box`` simulates a deterministic bundle of
samples drawn from a design-space box (all corners plus an n-per-axis grid)
and records per-variable extrema; the outward padding makes the result an
empirical envelope, *not* a sound over-approximation, and every consumer of
it says so.

All samples of a bundle are integrated simultaneously as numpy vectors, so
the cost is dominated by the number of time steps, not the number of samples.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from .architecture import Algebraic, Architecture, Integrator
from .errors import AlgebraicCycle, NonFinite, SetDecompError
from .intervals import Interval, RangeMap

__all__ = ["OdeSystem", "Trajectory", "Envelope", "SamplingPlan",
           "build_ode", "integrate", "envelope_over_box", "design_samples"]


@dataclass(frozen=True)
class SamplingPlan:
    """How to sample a design-space box for envelope estimation."""

    grid: int = 3              # grid points per axis (0 disables the grid)
    corners: bool = True
    padding: float = 0.02      # outward inflation per bound, fraction of span
    step: float = 0.01         # integration step [s]
    horizon: float = 100.0     # integration horizon [s]
    cap: int = 10_000          # hard cap on bundle size

    def reduced(self) -> "SamplingPlan":
        """Cheaper plan for inner narrowing loops: corners + center only,
        coarser step, no padding."""
        return SamplingPlan(grid=1, corners=True, padding=0.0,
                            step=max(self.step, 0.05), horizon=self.horizon,
                            cap=self.cap)


@dataclass(frozen=True)
class OdeSystem:
    """Compiled dynamic system for one architecture at one design point."""

    state_names: tuple[str, ...]
    output_names: tuple[str, ...]       # all sub-function outputs (the y' set)
    algebraic_order: tuple[str, ...]
    initial_state: tuple        # floats or ndarrays, aligned with state_names
    rhs: object                 # rhs(*states) -> (derivs tuple, outputs tuple)


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    values: dict[str, np.ndarray]   # per variable, aligned with times


@dataclass(frozen=True)
class Envelope:
    """Per-variable (min, max) over a trajectory bundle, plus window extrema
    for time-windowed requirements."""

    bounds: dict[str, tuple[float, float]]
    windows: dict[str, dict[tuple[float, float], tuple[float, float]]] = field(default_factory=dict)
    n_samples: int = 0

    def merged(self, other: "Envelope") -> "Envelope":
        bounds = dict(self.bounds)
        for k, (lo, hi) in other.bounds.items():
            if k in bounds:
                bounds[k] = (min(bounds[k][0], lo), max(bounds[k][1], hi))
            else:
                bounds[k] = (lo, hi)
        windows: dict = {k: dict(v) for k, v in self.windows.items()}
        for k, ws in other.windows.items():
            tgt = windows.setdefault(k, {})
            for w, (lo, hi) in ws.items():
                if w in tgt:
                    tgt[w] = (min(tgt[w][0], lo), max(tgt[w][1], hi))
                else:
                    tgt[w] = (lo, hi)
        return Envelope(bounds, windows, self.n_samples + other.n_samples)


def _design_var_names(arch: Architecture) -> list[str]:
    produced = set()
    for sf in arch.subfunctions:
        produced.update(v.name for v, _ in sf.outputs.items())
    names: set[str] = set()
    for sf in arch.subfunctions:
        for m in (sf.inputs, sf.controllables, sf.uncontrollables):
            names.update(v.name for v, _ in m.items())
    return sorted(names - produced)


def build_ode(arch: Architecture, point: dict[str, float]) -> OdeSystem:
    """Compile the architecture at a design point (values for every design
    variable: top inputs, free architecture inputs, controllables and
    uncontrollables).  Point values may be scalars or aligned numpy arrays."""
    constants = arch.constants_map()
    design = _design_var_names(arch)
    missing = [n for n in design if n not in point]
    if missing:
        raise SetDecompError(f"design point missing values for: {', '.join(missing)}")

    # collect states and algebraic assignments
    states: list[tuple[str, ex.Expr, object]] = []  # (name, derivative expr, initial value)
    assigns: dict[str, ex.Expr] = {}
    env0 = dict(constants)
    env0.update({n: point[n] for n in design})

    for sf in arch.subfunctions:
        if isinstance(sf.kind, Integrator):
            k = sf.kind
            states.append((k.state, ex.Var(k.derivative_input), point[k.initial_input]
                           if k.initial_input in point else None))
            if k.initial_input not in point:
                raise SetDecompError(f"{sf.id}: no value for initial input '{k.initial_input}'")
        else:
            for st in sf.kind.states:
                states.append((st.name, st.derivative, ex.evaluate(st.initial, env0)))
            for out, e in sf.kind.exprs:
                assigns[out] = e

    state_names = tuple(n for n, _, _ in states)
    known = set(constants) | set(design) | set(state_names)

    # topological order of the algebraic assignments
    order: list[str] = []
    resolved = set(known)
    pending = dict(assigns)
    while pending:
        ready = sorted(n for n, e in pending.items()
                       if ex.free_vars(e) <= resolved)
        if not ready:
            raise AlgebraicCycle(sorted(pending))
        for n in ready:
            order.append(n)
            resolved.add(n)
            del pending[n]

    output_names = tuple(sorted(
        {v.name for sf in arch.subfunctions for v, _ in sf.outputs.items()}))

    # compile one Python function for the whole right-hand side
    mangle = {}
    for i, n in enumerate(sorted(known | set(order))):
        mangle[n] = f"_v{i}"
    rn = mangle.__getitem__

    lines = ["def _make(_P):"]
    for n in sorted(set(constants) | set(design)):
        lines.append(f"    {rn(n)} = _P[{n!r}]")
    args = ", ".join(rn(n) for n in state_names)
    lines.append(f"    def _rhs({args}):")
    for n in order:
        lines.append(f"        {rn(n)} = {ex.to_source(assigns[n], rn)}")
    derivs = ", ".join(ex.to_source(d, rn) for _, d, _ in states) or ""
    outs = ", ".join(rn(n) for n in output_names)
    lines.append(f"        return ({derivs}{',' if len(states) == 1 else ''}), "
                 f"({outs}{',' if len(output_names) == 1 else ''})")
    lines.append("    return _rhs")
    src = "\n".join(lines)
    ns: dict = {}
    exec(src, ns)  # noqa: S102 - generated from validated expression trees only
    params = dict(constants)
    params.update({n: point[n] for n in design})
    rhs = ns["_make"](params)

    initial = tuple(v for _, _, v in states)
    return OdeSystem(state_names=state_names, output_names=output_names,
                     algebraic_order=tuple(order), initial_state=initial, rhs=rhs)


def _rk4_step(rhs, state: list, h: float):
    k1, _ = rhs(*state)
    k2, _ = rhs(*(s + 0.5 * h * d for s, d in zip(state, k1)))
    k3, _ = rhs(*(s + 0.5 * h * d for s, d in zip(state, k2)))
    k4, _ = rhs(*(s + h * d for s, d in zip(state, k3)))
    return [s + (h / 6.0) * (a + 2 * b + 2 * c + d)
            for s, a, b, c, d in zip(state, k1, k2, k3, k4)]


def integrate(sys: OdeSystem, horizon: float, step: float) -> Trajectory:
    """Fixed-step RK4 over [0, horizon]; records every y' variable at every
    grid time (outputs evaluated at the grid point, not at RK stages)."""
    if step <= 0:
        raise ValueError("step must be positive")
    n = int(round(horizon / step))
    state = list(sys.initial_state)
    times = np.empty(n + 1)
    series = {name: [] for name in sys.output_names}
    for k in range(n + 1):
        t = k * step
        times[k] = t
        _, outs = sys.rhs(*state)
        for name, val in zip(sys.output_names, outs):
            series[name].append(val)
        if not all(np.all(np.isfinite(np.asarray(s))) for s in state):
            bad = next(nm for nm, s in zip(sys.state_names, state)
                       if not np.all(np.isfinite(np.asarray(s))))
            raise NonFinite(bad, t)
        if k < n:
            state = _rk4_step(sys.rhs, state, step)
    return Trajectory(times=times,
                      values={k: np.asarray(v) for k, v in series.items()})


def design_samples(box: RangeMap, plan: SamplingPlan) -> list[dict[str, float]]:
    """Deterministic sample set for a box: all corners plus an n-per-axis
    grid, deduplicated; beyond the cap, a Halton low-discrepancy set."""
    items = box.items()
    names = [v.name for v, _ in items]
    axes_corners = [(iv.lo, iv.hi) if iv.lo < iv.hi else (iv.lo,) for _, iv in items]
    pts: list[tuple[float, ...]] = []
    if plan.corners:
        pts.extend(itertools.product(*axes_corners))
    if plan.grid > 0:
        axes_grid = []
        for _, iv in items:
            if iv.lo == iv.hi or plan.grid == 1:
                axes_grid.append((iv.mid,))
            else:
                axes_grid.append(tuple(np.linspace(iv.lo, iv.hi, plan.grid)))
        pts.extend(itertools.product(*axes_grid))
    seen = set()
    unique: list[tuple[float, ...]] = []
    for p in pts:
        if p not in seen:
            seen.add(p)
            unique.append(p)
    if len(unique) > plan.cap:
        unique = _halton_samples(items, plan.cap)
    return [dict(zip(names, p)) for p in unique]


def _halton_samples(items, n: int) -> list[tuple[float, ...]]:
    primes = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37]

    def halton(i: int, base: int) -> float:
        f, r = 1.0, 0.0
        while i > 0:
            f /= base
            r += f * (i % base)
            i //= base
        return r

    out = []
    for i in range(1, n + 1):
        pt = tuple(iv.lo + halton(i, primes[d % len(primes)]) * (iv.hi - iv.lo)
                   for d, (_, iv) in enumerate(items))
        out.append(pt)
    return out


def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get("SETDECOMP_THREADS", "1")))
    except ValueError:
        return 1


def envelope_over_box(arch: Architecture, box: RangeMap, plan: SamplingPlan,
                      windows: dict[str, list[tuple[float, float]]] | None = None) -> Envelope:
    """Simulate every sample of the box and take per-variable extrema, then
    inflate each bound outward by ``plan.padding`` of the observed span.

    ``windows`` optionally requests extra extrema of given variables over
    time windows [t0, t1].  The result is deterministic for a given plan
    regardless of SETDECOMP_THREADS.
    """
    samples = design_samples(box, plan)
    if not samples:
        raise ValueError("empty design box")
    threads = _thread_count()
    if threads <= 1 or len(samples) < 2 * threads:
        env = _envelope_bundle(arch, samples, plan, windows)
    else:
        chunks = [samples[i::threads] for i in range(threads)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(
                lambda ch: _envelope_bundle(arch, ch, plan, windows), chunks))
        env = parts[0]
        for p in parts[1:]:
            env = env.merged(p)

    if plan.padding > 0:
        padded = {}
        for k, (lo, hi) in env.bounds.items():
            pad = plan.padding * (hi - lo)
            padded[k] = (lo - pad, hi + pad)
        wpad = {}
        for k, ws in env.windows.items():
            wpad[k] = {w: (lo - plan.padding * (hi - lo), hi + plan.padding * (hi - lo))
                       for w, (lo, hi) in ws.items()}
        env = Envelope(padded, wpad, env.n_samples)
    return env


def _envelope_bundle(arch: Architecture, samples: list[dict[str, float]],
                     plan: SamplingPlan,
                     windows: dict[str, list[tuple[float, float]]] | None) -> Envelope:
    point = {k: np.array([s[k] for s in samples])
             for k in samples[0]}
    sys = build_ode(arch, point)
    n = int(round(plan.horizon / plan.step))
    state = [np.asarray(v, dtype=float) + np.zeros(len(samples)) for v in sys.initial_state]

    lo = {k: math.inf for k in sys.output_names}
    hi = {k: -math.inf for k in sys.output_names}
    wlo: dict[str, dict[tuple[float, float], float]] = {}
    whi: dict[str, dict[tuple[float, float], float]] = {}
    for k, ws in (windows or {}).items():
        wlo[k] = {tuple(w): math.inf for w in ws}
        whi[k] = {tuple(w): -math.inf for w in ws}

    for k in range(n + 1):
        t = k * plan.step
        _, outs = sys.rhs(*state)
        for name, val in zip(sys.output_names, outs):
            arr = np.asarray(val)
            vmin, vmax = float(arr.min()), float(arr.max())
            if not (math.isfinite(vmin) and math.isfinite(vmax)):
                idx = int(np.argmax(~np.isfinite(arr)))
                raise NonFinite(f"{name} (sample {samples[idx]})", t)
            if vmin < lo[name]:
                lo[name] = vmin
            if vmax > hi[name]:
                hi[name] = vmax
            if name in wlo:
                for (t0, t1) in wlo[name]:
                    if t0 <= t <= t1:
                        if vmin < wlo[name][(t0, t1)]:
                            wlo[name][(t0, t1)] = vmin
                        if vmax > whi[name][(t0, t1)]:
                            whi[name][(t0, t1)] = vmax
        if k < n:
            state = _rk4_step(sys.rhs, state, plan.step)

    bounds = {name: (lo[name], hi[name]) for name in sys.output_names}
    wins = {name: {w: (wlo[name][w], whi[name][w]) for w in wlo[name]}
            for name in wlo}
    return Envelope(bounds=bounds, windows=wins, n_samples=len(samples))
