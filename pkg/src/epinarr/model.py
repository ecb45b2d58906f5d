"""Bio-PEPA model data types and the species-to-reaction pivot.

A model is the 7-tuple of locations, auxiliary per-instance information,
parameters, functional rates, species components, the system equation and
events.  All types are frozen; list-valued fields are stored as tuples.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import EpinarrError, UnknownAction
from .expr import Expr, Number, Symbol, eval_expr, map_symbols

ROOT_LOCATION = "world"
DEFAULT_MODEL_NAME = "model"


class LocationKind(enum.Enum):
    COMPARTMENT = "Compartment"
    MEMBRANE = "Membrane"


class Role(enum.Enum):
    REACTANT = "reactant"
    PRODUCT = "product"
    ACTIVATOR = "activator"
    INHIBITOR = "inhibitor"
    GENERIC_MODIFIER = "modifier"

    @property
    def is_modifier(self) -> bool:
        return self not in (Role.REACTANT, Role.PRODUCT)


def species_global_id(species: str, location: Optional[str] = None) -> str:
    if not species:
        raise ValueError("species name must be non-empty")
    return f"{species}_{location}" if location else species


@dataclass(frozen=True)
class Location:
    name: str
    parent: Optional[str]
    size: Expr
    kind: LocationKind = LocationKind.COMPARTMENT


@dataclass(frozen=True)
class Parameter:
    """A named constant.  ``reaction`` is set for reaction-local parameters,
    whose ``name`` is then ``<reaction>_<local name>``."""

    name: str
    value: float
    reaction: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))
        if not math.isfinite(self.value):
            raise ValueError(f"parameter {self.name} has non-finite value {self.value}")
        if self.reaction is not None and not self.name.startswith(self.reaction + "_"):
            raise ValueError(f"local parameter {self.name} must be prefixed "
                             f"with its reaction name {self.reaction}_")

    @property
    def local_name(self) -> str:
        if self.reaction is None:
            return self.name
        return self.name[len(self.reaction) + 1:]


@dataclass(frozen=True)
class FunctionalRate:
    action: str
    law: Expr


@dataclass(frozen=True)
class Prefix:
    """``(action, stoichiometry) op S[@location]``.

    ``location`` pins the prefix to the instance of the species in that
    location; without it the prefix applies to every instance.
    """

    action: str
    stoichiometry: int
    role: Role
    location: Optional[str] = None

    def __post_init__(self):
        if int(self.stoichiometry) != self.stoichiometry or self.stoichiometry < 1:
            raise ValueError(f"stoichiometry must be a positive integer, got {self.stoichiometry}")
        object.__setattr__(self, "stoichiometry", int(self.stoichiometry))


@dataclass(frozen=True)
class SpeciesComponent:
    name: str
    prefixes: tuple[Prefix, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "prefixes", tuple(self.prefixes))


@dataclass(frozen=True)
class SpeciesInstance:
    species: str
    location: Optional[str] = None
    initial_amount: Optional[float] = None
    step_size: float = 1.0
    levels: int = 1

    def __post_init__(self):
        if self.initial_amount is not None:
            amount = float(self.initial_amount)
            if not (math.isfinite(amount) and amount >= 0):
                raise ValueError(f"initial amount of {self.global_id} must be finite "
                                 f"and nonnegative, got {amount}")
            object.__setattr__(self, "initial_amount", amount)
        if not self.step_size > 0:
            raise ValueError("step size must be positive")
        if int(self.levels) != self.levels or self.levels < 1:
            raise ValueError("levels must be a positive integer")

    @property
    def global_id(self) -> str:
        return species_global_id(self.species, self.location)

    @property
    def amount(self) -> float:
        return 0.0 if self.initial_amount is None else self.initial_amount


@dataclass(frozen=True)
class Event:
    """Fires once when simulation time reaches ``trigger_time``; all
    assignments are evaluated first, then applied together."""

    name: str
    trigger_time: float
    assignments: tuple[tuple[str, Expr], ...] = ()

    def __post_init__(self):
        t = float(self.trigger_time)
        if not (math.isfinite(t) and t >= 0):
            raise ValueError(f"event {self.name} needs a finite nonnegative trigger time")
        object.__setattr__(self, "trigger_time", t)
        object.__setattr__(self, "assignments", tuple(tuple(a) for a in self.assignments))


@dataclass(frozen=True)
class Model:
    name: str = DEFAULT_MODEL_NAME
    locations: tuple[Location, ...] = ()
    parameters: tuple[Parameter, ...] = ()
    functional_rates: tuple[FunctionalRate, ...] = ()
    species_components: tuple[SpeciesComponent, ...] = ()
    system_equation: tuple[SpeciesInstance, ...] = ()
    events: tuple[Event, ...] = ()

    def __post_init__(self):
        for f in ("locations", "parameters", "functional_rates",
                  "species_components", "system_equation", "events"):
            object.__setattr__(self, f, tuple(getattr(self, f)))

    # lookups return the first definition when names are duplicated;
    # duplicates are reported by the validator

    def location(self, name: str) -> Optional[Location]:
        return next((l for l in self.locations if l.name == name), None)

    def parameter(self, name: str) -> Optional[Parameter]:
        return next((p for p in self.parameters if p.name == name), None)

    def rate(self, action: str) -> Optional[FunctionalRate]:
        return next((r for r in self.functional_rates if r.action == action), None)

    def component(self, name: str) -> Optional[SpeciesComponent]:
        return next((c for c in self.species_components if c.name == name), None)

    def instance(self, global_id: str) -> Optional[SpeciesInstance]:
        return next((s for s in self.system_equation if s.global_id == global_id), None)

    @property
    def species_ids(self) -> list[str]:
        return [s.global_id for s in self.system_equation]


@dataclass(frozen=True)
class Reaction:
    id: str
    reactants: tuple[tuple[str, int], ...] = ()
    products: tuple[tuple[str, int], ...] = ()
    modifiers: tuple[str, ...] = ()
    kinetic_law: Optional[Expr] = field(default=None)

    @property
    def participants(self) -> list[str]:
        return ([g for g, _ in self.reactants] + [g for g, _ in self.products]
                + list(self.modifiers))


def referenced_actions(model: Model) -> list[str]:
    """Distinct prefix actions, in reaction order.

    Actions with a functional rate come first, in the order the rates are
    defined; any action lacking a rate follows in order of first use.
    """
    used = []
    seen = set()
    for comp in model.species_components:
        for p in comp.prefixes:
            if p.action not in seen:
                seen.add(p.action)
                used.append(p.action)
    ordered = []
    for fr in model.functional_rates:
        if fr.action in seen and fr.action not in ordered:
            ordered.append(fr.action)
    ordered.extend(a for a in used if a not in ordered)
    return ordered


def prefix_targets(model: Model, comp: SpeciesComponent, prefix: Prefix) -> list[str]:
    """Global ids a prefix refers to.

    A located prefix names exactly one instance, whether or not it exists.
    An unlocated prefix names every instance of the component.
    """
    if prefix.location is not None:
        return [species_global_id(comp.name, prefix.location)]
    return [s.global_id for s in model.system_equation if s.species == comp.name]


def _derive(model: Model, strict: bool) -> list[Reaction]:
    order = {s.global_id: i for i, s in enumerate(model.system_equation)}
    reactions = []
    for action in referenced_actions(model):
        fr = model.rate(action)
        if fr is None and strict:
            raise UnknownAction(action)
        lists: dict[Role, list] = {Role.REACTANT: [], Role.PRODUCT: [], Role.GENERIC_MODIFIER: []}
        seen = set()
        for comp in model.species_components:
            for p in comp.prefixes:
                if p.action != action:
                    continue
                group = Role.GENERIC_MODIFIER if p.role.is_modifier else p.role
                for gid in prefix_targets(model, comp, p):
                    if (gid, group) in seen:
                        continue
                    seen.add((gid, group))
                    lists[group].append((gid, p.stoichiometry))
        # instances in system-equation order, then dangling references
        key = lambda item: order.get(item[0], len(order))
        for group in lists:
            lists[group].sort(key=key)
        reactions.append(Reaction(
            id=action,
            reactants=tuple(lists[Role.REACTANT]),
            products=tuple(lists[Role.PRODUCT]),
            modifiers=tuple(g for g, _ in lists[Role.GENERIC_MODIFIER]),
            kinetic_law=fr.law if fr is not None else None,
        ))
    return reactions


def derive_reactions(model: Model) -> list[Reaction]:
    """One reaction per action used in a prefix, gathering its participants
    from every species component.  Raises UnknownAction when an action has
    no functional rate."""
    return _derive(model, strict=True)


def derive_reactions_lenient(model: Model) -> list[Reaction]:
    """Like derive_reactions, but a missing rate leaves ``kinetic_law`` None."""
    return _derive(model, strict=False)


def stoichiometry_matrix(model: Model) -> np.ndarray:
    """Net stoichiometry, rows = system-equation species, cols = reactions."""
    reactions = derive_reactions(model)
    row = {}
    for i, s in enumerate(model.system_equation):
        row.setdefault(s.global_id, i)
    mat = np.zeros((len(model.system_equation), len(reactions)))
    for j, r in enumerate(reactions):
        for gid, k in r.reactants:
            if gid in row:
                mat[row[gid], j] -= k
        for gid, k in r.products:
            if gid in row:
                mat[row[gid], j] += k
    return mat


# --- symbol resolution ------------------------------------------------------

class SymbolKind(enum.Enum):
    SPECIES = "species"
    PARAMETER = "parameter"
    LOCATION = "location"


def bare_species_map(model: Model) -> dict[str, str]:
    """Plain species names usable in laws, mapped to their global id.

    Only available when the model has at most one location and the species
    has exactly one instance.
    """
    if len(model.locations) > 1:
        return {}
    counts: dict[str, list[str]] = {}
    for s in model.system_equation:
        counts.setdefault(s.species, []).append(s.global_id)
    return {name: gids[0] for name, gids in counts.items() if len(gids) == 1}


def resolve_symbol(model: Model, name: str,
                   _bare: Optional[dict] = None) -> Optional[tuple[SymbolKind, str]]:
    """Resolve a law symbol: species global id, then bare species name,
    then parameter, then location (standing for its size)."""
    if model.instance(name) is not None:
        return SymbolKind.SPECIES, name
    bare = bare_species_map(model) if _bare is None else _bare
    if name in bare:
        return SymbolKind.SPECIES, bare[name]
    if model.parameter(name) is not None:
        return SymbolKind.PARAMETER, name
    if model.location(name) is not None:
        return SymbolKind.LOCATION, name
    return None


def parameter_env(model: Model) -> dict[str, float]:
    return {p.name: p.value for p in reversed(model.parameters)}


def location_sizes(model: Model, params: Optional[dict] = None) -> dict[str, float]:
    """Evaluate every location size that can be evaluated.

    Sizes see parameters only.  Locations whose size fails to evaluate are
    left out.
    """
    env = parameter_env(model) if params is None else params
    sizes = {}
    for loc in reversed(model.locations):
        try:
            sizes[loc.name] = eval_expr(loc.size, env)
        except EpinarrError:
            sizes.pop(loc.name, None)
    return sizes


def law_environment(model: Model, amounts: Optional[dict] = None) -> dict[str, float]:
    """The environment a kinetic law is evaluated in.

    ``amounts`` maps species global ids to current amounts; by default the
    initial amounts are used.
    """
    if amounts is None:
        amounts = {s.global_id: s.amount for s in model.system_equation}
    params = parameter_env(model)
    env = dict(location_sizes(model, params))
    env.update(params)
    for name, gid in bare_species_map(model).items():
        if gid in amounts:
            env[name] = amounts[gid]
    env.update(amounts)
    return env


def globalize_law(model: Model, law: Expr) -> Expr:
    """Rewrite bare species names in ``law`` to global ids."""
    bare = bare_species_map(model)
    ids = set(model.species_ids)
    return map_symbols(law, lambda n: n if n in ids or n not in bare else bare[n])


__all__ = [
    "ROOT_LOCATION", "DEFAULT_MODEL_NAME", "LocationKind", "Role", "Location",
    "Parameter", "FunctionalRate", "Prefix", "SpeciesComponent",
    "SpeciesInstance", "Event", "Model", "Reaction", "species_global_id",
    "derive_reactions", "derive_reactions_lenient", "stoichiometry_matrix",
    "referenced_actions", "prefix_targets", "resolve_symbol", "SymbolKind",
    "law_environment", "parameter_env", "location_sizes", "bare_species_map",
    "globalize_law", "Number", "Symbol",
]
