"""Model validation, count summaries and model diffs.

The validator is what lets an expert spot species and reactions that went
missing between two versions of a model.
"""

from __future__ import annotations

import enum
import json
from collections import Counter
from dataclasses import asdict, dataclass, fields

from .errors import EpinarrError, UnboundSymbol
from .expr import canonical, eval_expr, format_number, free_symbols
from .model import (
    ROOT_LOCATION, Model, derive_reactions_lenient, globalize_law, parameter_env,
    referenced_actions, resolve_symbol, bare_species_map,
)


class Severity(enum.Enum):
    ERROR = "error"
    WARNING = "warning"


class IssueKind(enum.Enum):
    UNDEFINED_SPECIES = "UndefinedSpecies"
    UNDEFINED_LOCATION = "UndefinedLocation"
    UNDEFINED_PARAMETER_OR_SYMBOL = "UndefinedParameterOrSymbol"
    UNKNOWN_ACTION = "UnknownAction"
    ORPHAN_SPECIES = "OrphanSpecies"
    UNINITIALIZED_SPECIES = "UninitializedSpecies"
    DUPLICATE_DEFINITION = "DuplicateDefinition"
    NON_POSITIVE_SIZE = "NonPositiveSize"


_SEVERITY_ORDER = list(Severity)
_KIND_ORDER = list(IssueKind)


@dataclass(frozen=True)
class Issue:
    severity: Severity
    kind: IssueKind
    subject: str
    detail: str

    def sort_key(self):
        return (_SEVERITY_ORDER.index(self.severity), _KIND_ORDER.index(self.kind),
                self.subject, self.detail)

    def to_dict(self) -> dict:
        return {"severity": self.severity.value, "kind": self.kind.value,
                "subject": self.subject, "detail": self.detail}


def errors(issues) -> list[Issue]:
    return [i for i in issues if i.severity is Severity.ERROR]


def _species_shaped(model: Model, name: str) -> bool:
    """True when ``name`` looks like ``<species>_<location>`` for a known
    species component and a known location."""
    for comp in model.species_components:
        if name.startswith(comp.name + "_"):
            if model.location(name[len(comp.name) + 1:]) is not None:
                return True
    return False


def validate(model: Model) -> list[Issue]:
    """Cross-reference and structural checks.  Returns issues sorted by
    (severity, kind, subject); an empty list means the model is clean."""
    found: set[Issue] = set()

    def err(kind, subject, detail):
        found.add(Issue(Severity.ERROR, kind, subject, detail))

    def warn(kind, subject, detail):
        found.add(Issue(Severity.WARNING, kind, subject, detail))

    dup = IssueKind.DUPLICATE_DEFINITION
    for what, names in (
        ("location", [l.name for l in model.locations]),
        ("parameter", [p.name for p in model.parameters]),
        ("functional rate", [r.action for r in model.functional_rates]),
        ("species", [c.name for c in model.species_components]),
        ("species instance", model.species_ids),
        ("event", [e.name for e in model.events]),
    ):
        for name, n in Counter(names).items():
            if n > 1:
                err(dup, name, f"The {what} {name} is defined {n} times.")
    rate_names = {r.action for r in model.functional_rates}
    for p in model.parameters:
        if p.name in rate_names:
            err(dup, p.name, f"{p.name} is defined both as a parameter and as a functional rate.")
    for comp in model.species_components:
        per_action = Counter(p.action for p in comp.prefixes)
        for p in comp.prefixes:
            if per_action[p.action] > 1 and any(
                    q.location is None for q in comp.prefixes if q.action == p.action):
                err(dup, comp.name, f"The species {comp.name} takes part in action "
                                    f"{p.action} more than once.")
        per_site = Counter((p.action, p.location) for p in comp.prefixes)
        for (action, loc), n in per_site.items():
            if n > 1:
                err(dup, comp.name, f"The species {comp.name} takes part in action "
                                    f"{action} more than once.")

    # locations
    params = parameter_env(model)
    for loc in model.locations:
        if loc.parent is not None and loc.parent != ROOT_LOCATION and model.location(loc.parent) is None:
            err(IssueKind.UNDEFINED_LOCATION, loc.parent,
                f"The location {loc.name} is inside {loc.parent}, which is not defined.")
        try:
            size = eval_expr(loc.size, params)
        except UnboundSymbol as exc:
            err(IssueKind.UNDEFINED_PARAMETER_OR_SYMBOL, exc.name,
                f"The size of location {loc.name} uses {exc.name}, which is not defined.")
            continue
        except EpinarrError as exc:
            err(IssueKind.NON_POSITIVE_SIZE, loc.name,
                f"The size of location {loc.name} cannot be computed ({exc}).")
            continue
        if size <= 0:
            err(IssueKind.NON_POSITIVE_SIZE, loc.name,
                f"The location {loc.name} has size {format_number(size)}, which is not positive.")

    # species instances
    for inst in model.system_equation:
        if model.component(inst.species) is None:
            err(IssueKind.UNDEFINED_SPECIES, inst.global_id,
                f"The system equation places {inst.global_id}, but no species "
                f"{inst.species} is defined.")
        if inst.location is not None and model.location(inst.location) is None:
            err(IssueKind.UNDEFINED_LOCATION, inst.location,
                f"The species {inst.global_id} is placed in {inst.location}, "
                f"which is not defined.")

    # prefixes
    for comp in model.species_components:
        for p in comp.prefixes:
            if p.action not in rate_names:
                err(IssueKind.UNKNOWN_ACTION, p.action,
                    f"The species {comp.name} takes part in {p.action}, "
                    f"which has no functional rate.")
            if p.location is not None and model.location(p.location) is None:
                err(IssueKind.UNDEFINED_LOCATION, p.location,
                    f"The species {comp.name} takes part in {p.action} in {p.location}, "
                    f"which is not defined.")
    for p in model.parameters:
        if p.reaction is not None and p.reaction not in rate_names:
            err(IssueKind.UNKNOWN_ACTION, p.reaction,
                f"The parameter {p.name} is local to {p.reaction}, which is not a reaction.")

    # reactions and their laws
    bare = bare_species_map(model)
    ids = set(model.species_ids)
    reactions = derive_reactions_lenient(model)
    for r in reactions:
        for gid in r.participants:
            if gid not in ids:
                err(IssueKind.UNDEFINED_SPECIES, gid,
                    f"The reaction {r.id} refers to species {gid}, which is not defined.")
    for fr in model.functional_rates:
        for sym in sorted(free_symbols(fr.law)):
            if resolve_symbol(model, sym, bare) is not None:
                continue
            if _species_shaped(model, sym):
                err(IssueKind.UNDEFINED_SPECIES, sym,
                    f"The reaction {fr.action} refers to species {sym}, which is not defined.")
            else:
                err(IssueKind.UNDEFINED_PARAMETER_OR_SYMBOL, sym,
                    f"The rate of {fr.action} uses {sym}, which is not defined.")

    # events
    param_names = {p.name for p in model.parameters}
    for ev in model.events:
        for target, value in ev.assignments:
            if target not in param_names and target not in ids:
                kind = (IssueKind.UNDEFINED_SPECIES if _species_shaped(model, target)
                        else IssueKind.UNDEFINED_PARAMETER_OR_SYMBOL)
                err(kind, target, f"The event {ev.name} assigns {target}, "
                                  f"which is not defined.")
            for sym in sorted(free_symbols(value)):
                if resolve_symbol(model, sym, bare) is None:
                    err(IssueKind.UNDEFINED_PARAMETER_OR_SYMBOL, sym,
                        f"The event {ev.name} uses {sym}, which is not defined.")

    # warnings
    instanced = {s.species for s in model.system_equation}
    for comp in model.species_components:
        if comp.name not in instanced:
            warn(IssueKind.UNINITIALIZED_SPECIES, comp.name,
                 f"The species {comp.name} never appears in the system equation.")
    participating = {g for r in reactions for g in r.participants}
    for gid in model.species_ids:
        if gid not in participating:
            warn(IssueKind.ORPHAN_SPECIES, gid,
                 f"The species {gid} takes part in no reaction.")

    return sorted(found, key=Issue.sort_key)


def issues_to_json(issues) -> str:
    return json.dumps([i.to_dict() for i in issues], indent=2, sort_keys=True) + "\n"


def issues_to_text(issues) -> str:
    if not issues:
        return "no issues\n"
    return "".join(f"{i.severity.value}: {i.kind.value} {i.subject}: {i.detail}\n"
                   for i in issues)


# --- summary -----------------------------------------------------------------

@dataclass(frozen=True)
class SummaryCounts:
    nb_FunctionDefinitions: int = 0
    nb_CompartmentTypes: int = 0
    nb_Compartments: int = 0
    nb_Species: int = 0
    nb_Parameters: int = 0
    nb_InitialAssignments: int = 0
    nb_Rules: int = 0
    nb_Reactions: int = 0

    def items(self):
        return [(f.name, getattr(self, f.name)) for f in fields(self)]

    def to_text(self) -> str:
        return "".join(f"{name} : {value}\n" for name, value in self.items())


def summarize(model: Model) -> SummaryCounts:
    return SummaryCounts(
        nb_CompartmentTypes=len({l.kind for l in model.locations}),
        nb_Compartments=len(model.locations),
        nb_Species=len(model.system_equation),
        nb_Parameters=len(model.parameters),
        nb_InitialAssignments=sum(1 for s in model.system_equation
                                  if s.initial_amount is not None),
        nb_Reactions=len(referenced_actions(model)),
    )


# --- diff --------------------------------------------------------------------

@dataclass(frozen=True)
class DiffReport:
    missingSpecies: tuple = ()
    extraSpecies: tuple = ()
    missingReactions: tuple = ()
    extraReactions: tuple = ()
    changedKineticLaws: tuple = ()
    changedParameters: tuple = ()   # (name, old value, new value)

    @property
    def empty(self) -> bool:
        return not any(getattr(self, f.name) for f in fields(self))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["changedParameters"] = [{"name": n, "old": a, "new": b}
                                  for n, a, b in self.changedParameters]
        return {k: list(v) for k, v in d.items()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        if self.empty:
            return "models agree\n"
        out = []
        labels = [("missingSpecies", "missing species"), ("extraSpecies", "extra species"),
                  ("missingReactions", "missing reaction"),
                  ("extraReactions", "extra reaction"),
                  ("changedKineticLaws", "changed kinetic law")]
        for attr, label in labels:
            out += [f"{label}: {x}\n" for x in getattr(self, attr)]
        out += [f"changed parameter: {n} {format_number(a)} -> {format_number(b)}\n"
                for n, a, b in self.changedParameters]
        return "".join(out)


def _laws(model: Model) -> dict:
    return {r.action: canonical(globalize_law(model, r.law))
            for r in reversed(model.functional_rates)}


def diff_models(reference: Model, candidate: Model, tolerance: float = 0.0) -> DiffReport:
    """Set differences of species and reactions plus changed laws and
    parameter values.  Parameters compare exactly unless ``tolerance`` > 0."""
    ref_sp, cand_sp = set(reference.species_ids), set(candidate.species_ids)
    ref_rx, cand_rx = set(referenced_actions(reference)), set(referenced_actions(candidate))
    ref_laws, cand_laws = _laws(reference), _laws(candidate)
    changed_laws = sorted(a for a in ref_rx & cand_rx
                          if a in ref_laws and a in cand_laws and ref_laws[a] != cand_laws[a])
    ref_p = parameter_env(reference)
    cand_p = parameter_env(candidate)
    changed_params = []
    for name in sorted(set(ref_p) & set(cand_p)):
        a, b = ref_p[name], cand_p[name]
        if (a != b) if tolerance <= 0 else abs(a - b) > tolerance:
            changed_params.append((name, a, b))
    return DiffReport(
        missingSpecies=tuple(sorted(ref_sp - cand_sp)),
        extraSpecies=tuple(sorted(cand_sp - ref_sp)),
        missingReactions=tuple(sorted(ref_rx - cand_rx)),
        extraReactions=tuple(sorted(cand_rx - ref_rx)),
        changedKineticLaws=tuple(changed_laws),
        changedParameters=tuple(changed_params),
    )
