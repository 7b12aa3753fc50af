"""Choosing final sub-requirement ranges between two nested performance boxes.

After narrowing we hold, for every performance variable, an outer allowed
interval [l1, u1] (what the connected sub-functions tolerate) and an inner
attained interval [l2, u2] (what simulation says the design actually does).
Any choice l1 <= l* <= l2 <= u2 <= u* <= u1 yields consistent
sub-requirements; where in that corridor to land is a trade-off between the
producer of a variable (wants a generous output promise, away from [l2, u2])
and its consumers (want a tight input obligation, away from [l1, u1]).

The trade-off is scored with a weighted log-barrier and solved by projected
gradient descent.  A final feasibility-restoration pass enforces, per
algebraic sub-function, that the interval-arithmetic image of the chosen
input ranges is contained in the chosen output range; integrator-bearing
sub-functions are excluded (interval arithmetic says nothing useful about
them) and are covered by the simulated envelope instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .architecture import Algebraic, Architecture, Integrator, SubFunction
from .errors import (Infeasible, InfeasibleBrackets, NoInteriorPoint,
                     PostconditionFailure)
from .expr import evaluate_interval, free_vars
from .intervals import Interval, RangeMap, VarId
from .requirements import FunctionalRequirement, check_composable, check_refines, compose

__all__ = ["PreferenceWeights", "Bracket", "BarrierProblem", "TradeoffResult",
           "build_brackets", "barrier_value", "barrier_gradient",
           "solve_tradeoff", "assemble_subrequirements", "run_tradeoff"]


@dataclass(frozen=True)
class PreferenceWeights:
    """Per-variable producer weights and per-(sub, variable) consumer weights.
    Anything unspecified defaults to 0.5."""

    producer: dict[str, float] = field(default_factory=dict)
    consumer: dict[str, dict[str, float]] = field(default_factory=dict)
    default: float = 0.5

    def producer_weight(self, variable: str) -> float:
        return self.producer.get(variable, self.default)

    def consumer_weight(self, sub_id: str, variable: str) -> float:
        return self.consumer.get(sub_id, {}).get(variable, self.default)

    @classmethod
    def from_dict(cls, doc: dict) -> "PreferenceWeights":
        return cls(producer=dict(doc.get("producer", {})),
                   consumer={k: dict(v) for k, v in doc.get("consumer", {}).items()},
                   default=float(doc.get("default", 0.5)))

    def to_dict(self) -> dict:
        return {"producer": dict(self.producer),
                "consumer": {k: dict(v) for k, v in self.consumer.items()},
                "default": self.default}


@dataclass(frozen=True)
class Bracket:
    """Feasible corridor for one variable's chosen bounds:
    l1 <= l* <= l2  and  u2 <= u* <= u1."""

    variable: str
    unit: str
    l1: float
    l2: float
    u2: float
    u1: float

    def __post_init__(self):
        if not (self.l1 <= self.l2 <= self.u2 <= self.u1):
            raise InfeasibleBrackets(
                f"{self.variable}: need l1<=l2<=u2<=u1, got "
                f"[{self.l1}, {self.l2}, {self.u2}, {self.u1}]")


def build_brackets(fps1: RangeMap, fps2: RangeMap) -> dict[str, Bracket]:
    """Brackets from the allowed (outer) and attained (inner) performance
    boxes.  The inner box must be contained in the outer one."""
    out: dict[str, Bracket] = {}
    for v, outer in fps1.items():
        inner = fps2[v]
        out[v.name] = Bracket(v.name, outer.unit,
                              outer.lo, inner.lo, inner.hi, outer.hi)
    return out


class BarrierProblem:
    """The trade-off objective over the free bound variables.

    The decision vector stacks, in variable-name order, the lower then the
    upper chosen bound of every variable whose bracket has interior width on
    that side.  Zero-width sides are pinned to their only possible value.
    """

    def __init__(self, arch: Architecture, brackets: dict[str, Bracket],
                 weights: PreferenceWeights):
        self.brackets = brackets
        self.weights = weights
        consumers: dict[str, list[str]] = {name: [] for name in brackets}
        producers: dict[str, str] = {}
        for sf in arch.subfunctions:
            for v, _ in sf.inputs.items():
                if v.name in consumers:
                    consumers[v.name].append(sf.id)
            for v, _ in sf.outputs.items():
                if v.name in brackets:
                    producers[v.name] = sf.id
        self.consumers = consumers
        self.producers = producers

        # (variable, side, inner wall, outer wall); sides with no interior
        # are pinned
        self.free: list[tuple[str, str, float, float]] = []
        self.pinned: dict[tuple[str, str], float] = {}
        for name in sorted(brackets):
            b = brackets[name]
            if b.l1 < b.l2:
                self.free.append((name, "lo", b.l2, b.l1))
            else:
                self.pinned[(name, "lo")] = b.l1
            if b.u2 < b.u1:
                self.free.append((name, "hi", b.u2, b.u1))
            else:
                self.pinned[(name, "hi")] = b.u1

    def dim(self) -> int:
        return len(self.free)

    def midpoint(self) -> np.ndarray:
        if not self.free:
            raise NoInteriorPoint("all bound brackets are degenerate")
        return np.array([0.5 * (inner + outer)
                         for _, _, inner, outer in self.free])

    def _terms(self, k: int) -> tuple[float, float]:
        """(producer weight, summed consumer weight) for free bound k."""
        name = self.free[k][0]
        a_p = self.weights.producer_weight(name)
        a_c = sum(self.weights.consumer_weight(j, name)
                  for j in self.consumers[name])
        return a_p, a_c

    def clip(self, x: np.ndarray, margin: float = 1e-12) -> np.ndarray:
        out = x.copy()
        for k, (_, _, inner, outer) in enumerate(self.free):
            lo, hi = sorted((inner, outer))
            m = margin * (hi - lo)
            out[k] = min(max(out[k], lo + m), hi - m)
        return out

    def chosen(self, x: np.ndarray) -> RangeMap:
        vals = dict(self.pinned)
        for k, (name, side, _, _) in enumerate(self.free):
            vals[(name, side)] = float(x[k])
        rm = RangeMap()
        for name, b in self.brackets.items():
            rm = rm.with_entry(VarId(name, b.unit),
                               Interval(vals[(name, "lo")], vals[(name, "hi")], b.unit))
        return rm


def barrier_value(problem: BarrierProblem, x: np.ndarray) -> float:
    """Sum over free bounds of
    -a_prod * ln(distance to the inner wall) - a_cons * ln(distance to the
    outer wall); infinite outside the open bracket."""
    total = 0.0
    for k, (_, _, inner, outer) in enumerate(problem.free):
        a_p, a_c = problem._terms(k)
        d_in, d_out = abs(x[k] - inner), abs(outer - x[k])
        lo, hi = sorted((inner, outer))
        if not (lo < x[k] < hi):
            return float("inf")
        total += -a_p * np.log(d_in) - a_c * np.log(d_out)
    return float(total)


def barrier_gradient(problem: BarrierProblem, x: np.ndarray) -> np.ndarray:
    g = np.empty(problem.dim())
    for k, (_, side, inner, outer) in enumerate(problem.free):
        a_p, a_c = problem._terms(k)
        s = 1.0 if outer > inner else -1.0   # direction inner wall -> outer wall
        g[k] = s * (-a_p / abs(x[k] - inner) + a_c / abs(outer - x[k]))
    return g


def _curvature(problem: BarrierProblem, x: np.ndarray) -> float:
    worst = 0.0
    for k, (_, _, inner, outer) in enumerate(problem.free):
        a_p, a_c = problem._terms(k)
        worst = max(worst, a_p / (x[k] - inner) ** 2 + a_c / (outer - x[k]) ** 2)
    return worst


def solve_tradeoff(problem: BarrierProblem, max_iters: int = 10_000,
                   tol: float = 1e-9) -> tuple[np.ndarray, int]:
    """Projected gradient descent from the bracket midpoints; the step size
    is the inverse of the current worst-case barrier curvature.  Stops when
    the projected step is shorter than ``tol``."""
    x = problem.midpoint()
    it = 0
    for it in range(1, max_iters + 1):
        g = barrier_gradient(problem, x)
        alpha = 1.0 / max(_curvature(problem, x), 1e-300)
        x_new = problem.clip(x - alpha * g)
        if float(np.linalg.norm(x_new - x)) < tol:
            x = x_new
            break
        x = x_new
    return x, it


def _static_subs(arch: Architecture) -> list[SubFunction]:
    """Algebraic sub-functions without internal dynamic state, in an order
    where producers precede consumers."""
    subs = [sf for sf in arch.subfunctions
            if isinstance(sf.kind, Algebraic) and not sf.kind.states]
    produced = {v.name: sf.id for sf in subs for v, _ in sf.outputs.items()}
    order: list[SubFunction] = []
    placed: set[str] = set()
    remaining = list(subs)
    while remaining:
        progress = False
        for sf in list(remaining):
            deps = {produced[v.name] for v, _ in sf.inputs.items()
                    if v.name in produced}
            if deps <= placed:
                order.append(sf)
                placed.add(sf.id)
                remaining.remove(sf)
                progress = True
        if not progress:       # cyclic static coupling: keep original order
            order.extend(remaining)
            break
    return order


def _interval_env(sf: SubFunction, chosen: RangeMap, fds2: RangeMap,
                  constants: dict[str, float]) -> dict[str, Interval]:
    env: dict[str, Interval] = {k: Interval(v, v, "") for k, v in constants.items()}
    for role in (sf.inputs, sf.controllables, sf.uncontrollables):
        for v, declared in role.items():
            if v in chosen:
                env[v.name] = chosen[v]
            elif v in fds2:
                env[v.name] = fds2[v]
            else:
                env[v.name] = declared
    return env


def restore_feasibility(arch: Architecture, chosen: RangeMap, fds2: RangeMap,
                        brackets: dict[str, Bracket]) -> tuple[RangeMap, list[dict]]:
    """Make the chosen ranges containment-consistent for every static
    algebraic sub-function: the interval image of the inputs must fit in the
    output range.

    A single producer-to-consumer sweep widens each output to cover its
    interval image; if any image overflows the outer bracket, every chosen
    performance range is pulled toward its attained (inner) range by one
    shared interpolation parameter, found by binary search on the smallest
    pull for which the sweep succeeds.  Per-sub-function pulls do not work
    here: shrinking a consumer's input re-widens at its producer, and the
    two can see-saw forever.
    """
    constants = arch.constants_map()
    subs = _static_subs(arch)

    def pulled(t: float) -> RangeMap:
        cur = chosen
        for v, got in chosen.items():
            b = brackets.get(v.name)
            if b is None:
                continue
            cur = cur.with_entry(v, Interval(
                got.lo + t * (b.l2 - got.lo),
                got.hi + t * (b.u2 - got.hi), got.unit))
        return cur

    def sweep(cur: RangeMap) -> tuple[RangeMap, list[dict]] | None:
        widenings: list[dict] = []
        for sf in subs:
            for out_name, e in sf.kind.exprs:
                b = brackets.get(out_name)
                if b is None:
                    continue
                img = evaluate_interval(e, _interval_env(sf, cur, fds2, constants))
                if img.lo < b.l1 or img.hi > b.u1:
                    return None
                out_v = VarId(out_name, b.unit)
                got = cur[out_v]
                new_lo, new_hi = min(got.lo, img.lo), max(got.hi, img.hi)
                if (new_lo, new_hi) != (got.lo, got.hi):
                    cur = cur.with_entry(out_v, Interval(new_lo, new_hi, got.unit))
                    widenings.append({"step": "output-widened", "sub": sf.id,
                                      "output": out_name, "lo": new_lo, "hi": new_hi})
        return cur, widenings

    done = sweep(chosen)
    if done is not None:
        fixed, log = done
        return fixed, log
    if sweep(pulled(1.0)) is None:
        raise Infeasible(
            "interval images exceed the outer brackets even at the attained "
            "performance ranges")
    t_lo, t_hi = 0.0, 1.0
    for _ in range(40):
        t = 0.5 * (t_lo + t_hi)
        if sweep(pulled(t)) is None:
            t_lo = t
        else:
            t_hi = t
    fixed, log = sweep(pulled(t_hi))
    return fixed, [{"step": "pulled-in", "t": t_hi}, *log]


@dataclass(frozen=True)
class TradeoffResult:
    chosen: RangeMap                       # final performance ranges
    subrequirements: tuple[FunctionalRequirement, ...]
    composite: FunctionalRequirement
    iterations: int
    log: tuple[dict, ...]


def assemble_subrequirements(arch: Architecture, fds2: RangeMap,
                             chosen: RangeMap) -> tuple[FunctionalRequirement, ...]:
    """One functional requirement per sub-function: performance variables get
    the chosen ranges, design variables the narrowed design ranges."""

    def remap(role: RangeMap) -> RangeMap:
        out = RangeMap()
        for v, declared in role.items():
            if v in chosen:
                out = out.with_entry(v, chosen[v])
            elif v in fds2:
                out = out.with_entry(v, fds2[v])
            else:
                out = out.with_entry(v, declared)
        return out

    frs = []
    for sf in arch.subfunctions:
        frs.append(FunctionalRequirement(
            name=sf.id, inputs=remap(sf.inputs), outputs=remap(sf.outputs),
            controllables=remap(sf.controllables),
            uncontrollables=remap(sf.uncontrollables)))
    return tuple(frs)


def run_tradeoff(arch: Architecture, fds2: RangeMap, fps1: RangeMap,
                 fps2: RangeMap, weights: PreferenceWeights,
                 max_iters: int = 10_000) -> TradeoffResult:
    """Full final step: bracket construction, barrier descent, feasibility
    restoration, sub-requirement assembly, and the composability/refinement
    post-conditions."""
    brackets = build_brackets(fps1, fps2)
    problem = BarrierProblem(arch, brackets, weights)
    log: list[dict] = []
    if problem.dim() == 0:
        chosen = problem.chosen(np.empty(0))
        iterations = 0
    else:
        x, iterations = solve_tradeoff(problem, max_iters=max_iters)
        chosen = problem.chosen(x)
    log.append({"step": "barrier-descent", "iterations": iterations,
                "free_bounds": problem.dim(),
                "pinned_bounds": sorted(f"{n}.{s}" for n, s in problem.pinned)})
    chosen, rlog = restore_feasibility(arch, chosen, fds2, brackets)
    log.extend(rlog)

    frs = assemble_subrequirements(arch, fds2, chosen)
    by_id = {fr.name: fr for fr in frs}
    consumers = arch.consumers_of()
    for sf in arch.subfunctions:
        for v, _ in sf.outputs.items():
            for cid in consumers.get(v.name, []):
                res = check_composable(by_id[sf.id], by_id[cid])
                if not res:
                    raise PostconditionFailure(
                        "composability", f"{sf.id} -> {cid}: {res.witness_var}")
    composite = compose(frs, name=f"{arch.top.name}-composite")
    res = check_refines(composite.fr, arch.top, strict=False)
    if not res:
        raise PostconditionFailure(
            "refinement", f"{res.witness_var}: {res.clause}")
    log.append({"step": "post-conditions", "composable": True, "refines_top": True})
    return TradeoffResult(chosen=chosen, subrequirements=frs, composite=composite.fr,
                          iterations=iterations, log=tuple(log))
