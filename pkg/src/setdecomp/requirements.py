"""Functional-requirement contracts, refinement and composability.

A ``FunctionalRequirement`` is a constrained mapping from admissible input,
uncontrollable-parameter and controllable-parameter ranges to guaranteed
output ranges.  ``check_refines`` and ``check_composable`` implement the two
relations that make independently developed sub-requirements safe to compose,
and ``compose`` builds the composite contract those laws talk about.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from .errors import NotComposable
from .intervals import (
    EMPTY, Interval, RangeMap, VarId, interval_intersect, names_intersect,
    rangemap_merge,
)

__all__ = [
    "TimedOutputSpec", "FunctionalRequirement", "CompositeFR",
    "RefinementResult", "ComposabilityResult",
    "check_refines", "check_composable", "compose", "check_satisfaction_static",
    "fr_to_dict", "fr_from_dict", "load_fr", "save_fr",
]


@dataclass(frozen=True)
class TimedOutputSpec:
    """Extra time-windowed bounds on one output variable: the variable must
    stay inside ``interval`` for every t in [t_start, t_end]."""

    variable: VarId
    windows: tuple[tuple[float, float, Interval], ...]

    def __post_init__(self):
        for t0, t1, iv in self.windows:
            if t0 > t1:
                raise ValueError(f"window [{t0},{t1}] for {self.variable.name} is reversed")
            if iv.is_empty:
                raise ValueError(f"empty window interval for {self.variable.name}")


@dataclass(frozen=True)
class FunctionalRequirement:
    """The contract (inputs, uncontrollables, controllables) -> outputs.

    The four key sets must be pairwise disjoint and contain no empty ranges.
    """

    name: str
    inputs: RangeMap = field(default_factory=RangeMap)
    outputs: RangeMap = field(default_factory=RangeMap)
    controllables: RangeMap = field(default_factory=RangeMap)
    uncontrollables: RangeMap = field(default_factory=RangeMap)
    timed_outputs: tuple[TimedOutputSpec, ...] = ()

    def __post_init__(self):
        maps = {
            "inputs": self.inputs, "outputs": self.outputs,
            "controllables": self.controllables, "uncontrollables": self.uncontrollables,
        }
        seen: dict[str, str] = {}
        for role, m in maps.items():
            for v, iv in m.items():
                if iv.is_empty:
                    raise ValueError(f"{self.name}: empty range for {role} variable '{v.name}'")
                if v.name in seen:
                    raise ValueError(
                        f"{self.name}: variable '{v.name}' appears in both "
                        f"{seen[v.name]} and {role}")
                seen[v.name] = role

    def role_of(self, name: str) -> str | None:
        for role, m in (("input", self.inputs), ("output", self.outputs),
                        ("controllable", self.controllables),
                        ("uncontrollable", self.uncontrollables)):
            if name in m:
                return role
        return None


@dataclass(frozen=True)
class RefinementResult:
    ok: bool
    witness_var: str | None = None
    clause: str | None = None
    refining: Interval | None = None
    refined: Interval | None = None

    def __bool__(self):
        return self.ok


@dataclass(frozen=True)
class ComposabilityResult:
    ok: bool
    shared: frozenset[VarId] = frozenset()
    witness_var: str | None = None
    producer_range: Interval | None = None
    consumer_range: Interval | None = None

    def __bool__(self):
        return self.ok


def _contains(outer: Interval, inner: Interval) -> bool:
    return outer.contains_interval(inner)


def check_refines(fr_new: FunctionalRequirement, fr_old: FunctionalRequirement,
                  *, strict: bool = True) -> RefinementResult:
    """Does ``fr_new`` refine ``fr_old``?

    The core relation: the refiner defines every input/output of the refined
    contract, accepts at least its input ranges, and guarantees output ranges
    at least as tight.  With ``strict=True`` the same direction rules are
    additionally applied to uncontrollables (input-like: the refiner must
    tolerate at least as much) and controllables (output-like: the refiner
    must promise a subset); this extension is flagged in reports and can be
    switched off.
    """
    for v, iv_old in fr_old.inputs.items():
        if v not in fr_new.inputs:
            return RefinementResult(False, v.name, "input-missing", None, iv_old)
        iv_new = fr_new.inputs[v]
        if not _contains(iv_new, iv_old):
            return RefinementResult(False, v.name, "input-not-widened", iv_new, iv_old)
    for v, iv_old in fr_old.outputs.items():
        if v not in fr_new.outputs:
            return RefinementResult(False, v.name, "output-missing", None, iv_old)
        iv_new = fr_new.outputs[v]
        if not _contains(iv_old, iv_new):
            return RefinementResult(False, v.name, "output-not-tightened", iv_new, iv_old)
    if strict:
        for v, iv_old in fr_old.uncontrollables.items():
            if v not in fr_new.uncontrollables:
                return RefinementResult(False, v.name, "uncontrollable-missing", None, iv_old)
            iv_new = fr_new.uncontrollables[v]
            if not _contains(iv_new, iv_old):
                return RefinementResult(False, v.name, "uncontrollable-not-widened",
                                        iv_new, iv_old)
        for v, iv_old in fr_old.controllables.items():
            if v not in fr_new.controllables:
                return RefinementResult(False, v.name, "controllable-missing", None, iv_old)
            iv_new = fr_new.controllables[v]
            if not _contains(iv_old, iv_new):
                return RefinementResult(False, v.name, "controllable-not-tightened",
                                        iv_new, iv_old)
    return RefinementResult(True)


def check_composable(fr_j: FunctionalRequirement, fr_k: FunctionalRequirement) -> ComposabilityResult:
    """Can ``fr_j`` feed ``fr_k``?  True iff they share at least one
    output->input variable and, for each shared variable, the producer's
    range fits inside the consumer's."""
    shared = names_intersect(fr_j.outputs.names(), fr_k.inputs.names())
    if not shared:
        return ComposabilityResult(False, frozenset())
    for v in sorted(shared, key=lambda v: v.name):
        prod, cons = fr_j.outputs[v], fr_k.inputs[v]
        if not _contains(cons, prod):
            return ComposabilityResult(False, shared, v.name, prod, cons)
    return ComposabilityResult(True, shared)


@dataclass(frozen=True)
class CompositeFR:
    """The composite of a set of pairwise-compatible requirements.

    Internal shared variables (produced by one part, consumed by another)
    are hidden from the interface.  Exposed input ranges come from the
    consumer side, exposed output ranges from the producer side.
    """

    fr: FunctionalRequirement
    parts: tuple[FunctionalRequirement, ...]

    @property
    def inputs(self) -> RangeMap:
        return self.fr.inputs

    @property
    def outputs(self) -> RangeMap:
        return self.fr.outputs


def compose(frs: list[FunctionalRequirement] | tuple[FunctionalRequirement, ...],
            name: str = "composite") -> CompositeFR:
    """Build the composite contract.

    Preconditions: a single producer per variable, and for every pair that
    shares producer->consumer variables, range containment on each of them.
    """
    frs = tuple(frs)
    if not frs:
        raise ValueError("compose() needs at least one requirement")

    producers: dict[str, str] = {}
    for fr in frs:
        for v, _ in fr.outputs.items():
            if v.name in producers:
                raise NotComposable(producers[v.name], fr.name, v.name,
                                    "two producers for one variable")
            producers[v.name] = fr.name

    for fr_j in frs:
        for fr_k in frs:
            if fr_j is fr_k:
                continue
            shared = names_intersect(fr_j.outputs.names(), fr_k.inputs.names())
            for v in sorted(shared, key=lambda v: v.name):
                if not _contains(fr_k.inputs[v], fr_j.outputs[v]):
                    raise NotComposable(fr_j.name, fr_k.name, v.name,
                                        f"{fr_j.outputs[v]!r} not within {fr_k.inputs[v]!r}")

    exposed_inputs = RangeMap()
    for fr in frs:
        free = fr.inputs.without(producers)
        exposed_inputs = rangemap_merge(exposed_inputs, free, context="composite inputs")
    exposed_outputs = RangeMap()
    for fr in frs:
        for v, iv in fr.outputs.items():
            exposed_outputs = exposed_outputs.with_entry(v, iv)

    controllables = RangeMap()
    uncontrollables = RangeMap()
    for fr in frs:
        controllables = rangemap_merge(controllables, fr.controllables,
                                       context="composite controllables")
        uncontrollables = rangemap_merge(uncontrollables, fr.uncontrollables,
                                         context="composite uncontrollables")

    composite = FunctionalRequirement(
        name=name, inputs=exposed_inputs, outputs=exposed_outputs,
        controllables=controllables, uncontrollables=uncontrollables)
    return CompositeFR(fr=composite, parts=frs)


def check_satisfaction_static(impl: FunctionalRequirement,
                              spec: FunctionalRequirement,
                              *, strict: bool = True) -> RefinementResult:
    """Range-level satisfaction: an implementation's achieved ranges satisfy a
    contract exactly when they refine it."""
    return check_refines(impl, spec, strict=strict)


# --- JSON (de)serialization -------------------------------------------------

def _map_to_dict(m: RangeMap) -> dict:
    return {v.name: {"lo": iv.lo, "hi": iv.hi, "unit": v.unit} for v, iv in m.items()}


def _map_from_dict(d: dict) -> RangeMap:
    entries = []
    for name, spec in d.items():
        unit = spec.get("unit", "")
        entries.append((VarId(name, unit), Interval(spec["lo"], spec["hi"], unit)))
    return RangeMap(entries)


def fr_to_dict(fr: FunctionalRequirement) -> dict:
    d = {
        "name": fr.name,
        "inputs": _map_to_dict(fr.inputs),
        "outputs": _map_to_dict(fr.outputs),
        "controllables": _map_to_dict(fr.controllables),
        "uncontrollables": _map_to_dict(fr.uncontrollables),
    }
    if fr.timed_outputs:
        d["timed_outputs"] = [
            {"variable": ts.variable.name,
             "windows": [{"t_start": t0, "t_end": t1,
                          "lo": iv.lo, "hi": iv.hi, "unit": iv.unit}
                         for t0, t1, iv in ts.windows]}
            for ts in fr.timed_outputs
        ]
    return d


def fr_from_dict(d: dict) -> FunctionalRequirement:
    timed = []
    for ts in d.get("timed_outputs", []):
        outputs = _map_from_dict(d.get("outputs", {}))
        var = outputs.var(ts["variable"])
        windows = tuple(
            (w["t_start"], w["t_end"], Interval(w["lo"], w["hi"], w.get("unit", var.unit)))
            for w in ts["windows"])
        timed.append(TimedOutputSpec(var, windows))
    return FunctionalRequirement(
        name=d["name"],
        inputs=_map_from_dict(d.get("inputs", {})),
        outputs=_map_from_dict(d.get("outputs", {})),
        controllables=_map_from_dict(d.get("controllables", {})),
        uncontrollables=_map_from_dict(d.get("uncontrollables", {})),
        timed_outputs=tuple(timed),
    )


def load_fr(path) -> FunctionalRequirement:
    with open(path, "r", encoding="utf-8") as fh:
        return fr_from_dict(json.load(fh))


def save_fr(fr: FunctionalRequirement, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(fr_to_dict(fr), fh, indent=2, sort_keys=True)
        fh.write("\n")
