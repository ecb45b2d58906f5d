"""SBML Level 2 Version 3 export and import.

Mapping between SBML elements and model components:

==========================  ==============================================
listOfCompartments          locations (``world`` is the implicit root)
listOfSpecies               system equation instances, id ``<name>_<loc>``
listOfParameters            global parameters
kineticLaw/listOfParameters reaction-local parameters, renamed
                            ``<reaction>_<name>`` on import
listOfReactions             species component prefixes + functional rates
kineticLaw math             functional-rate law (content MathML subset)
==========================  ==============================================

SBML cannot tell activators and inhibitors from other modifiers, so every
modifier comes back as a generic modifier.  :func:`sbml_normal_form` gives
the exact model an export/import round trip produces.
"""

from __future__ import annotations

import logging
import re
import xml.etree.ElementTree as ET
from typing import Optional
from xml.sax.saxutils import escape

from .analysis import errors, validate
from .errors import (
    SchemaError, UnresolvedReference, UnsupportedMathml, ValidationFailed, XmlError,
)
from .expr import (
    Add, Div, Expr, Mul, Number, Pow, Sub, Symbol, format_number, map_symbols,
)
from .model import (
    DEFAULT_MODEL_NAME, ROOT_LOCATION, Event, FunctionalRate, Location, LocationKind,
    Model, Parameter, Prefix, Role, SpeciesComponent, SpeciesInstance,
    derive_reactions, globalize_law, location_sizes, species_global_id,
)

log = logging.getLogger(__name__)

SBML_NS = "http://www.sbml.org/sbml/level2/version3"
MATHML_NS = "http://www.w3.org/1998/Math/MathML"
TIME_URL = "http://www.sbml.org/sbml/symbols/time"
XML_DECLARATION = '<?xml version="1.0" encoding="UTF-8"?>'

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

_MATH_OPS = {Add: "plus", Sub: "minus", Mul: "times", Div: "divide", Pow: "power"}
_NARY = {"plus": Add, "times": Mul}
_BINARY = {"minus": Sub, "divide": Div, "power": Pow}


# --- xml writing -------------------------------------------------------------

def _attr(value: str) -> str:
    return escape(value, {'"': "&quot;"})


def _compact(el: ET.Element) -> str:
    attrs = "".join(f' {k}="{_attr(v)}"' for k, v in el.attrib.items())
    if len(el) == 0 and not el.text:
        return f"<{el.tag}{attrs}/>"
    inner = escape(el.text or "") + "".join(_compact(c) for c in el)
    return f"<{el.tag}{attrs}>{inner}</{el.tag}>"


def _pretty(el: ET.Element, depth: int, out: list) -> None:
    pad = "  " * depth
    if el.tag == "math" or len(el) == 0:
        out.append(pad + _compact(el))
        return
    attrs = "".join(f' {k}="{_attr(v)}"' for k, v in el.attrib.items())
    out.append(f"{pad}<{el.tag}{attrs}>")
    for child in el:
        _pretty(child, depth + 1, out)
    out.append(f"{pad}</{el.tag}>")


def _num(value: float) -> str:
    return repr(float(value))


# --- MathML ------------------------------------------------------------------

def _chain(expr: Expr, kind: type) -> list[Expr]:
    # only left-nested chains flatten, so left folding restores the tree
    if type(expr) is kind:
        return _chain(expr.left, kind) + [expr.right]
    return [expr]


def _math_element(expr: Expr) -> ET.Element:
    if isinstance(expr, Number):
        el = ET.Element("cn")
        el.text = format_number(expr.value)
        return el
    if isinstance(expr, Symbol):
        el = ET.Element("ci")
        el.text = expr.name
        return el
    el = ET.Element("apply")
    name = _MATH_OPS[type(expr)]
    ET.SubElement(el, name)
    operands = _chain(expr, type(expr)) if name in _NARY else [expr.left, expr.right]
    for operand in operands:
        el.append(_math_element(operand))
    return el


def _math_root(expr: Expr) -> ET.Element:
    root = ET.Element("math", {"xmlns": MATHML_NS})
    root.append(_math_element(expr))
    return root


def expr_to_mathml(expr: Expr) -> str:
    """Content MathML for ``expr`` (operand element, no ``<math>`` wrapper)."""
    return _compact(_math_element(expr))


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _element_to_expr(el: ET.Element) -> Expr:
    tag = _local(el.tag)
    if tag == "math":
        children = list(el)
        if len(children) != 1:
            raise UnsupportedMathml("math")
        return _element_to_expr(children[0])
    if tag == "cn":
        return Number(_cn_value(el))
    if tag == "ci":
        return Symbol((el.text or "").strip())
    if tag != "apply":
        raise UnsupportedMathml(tag)
    children = list(el)
    if not children:
        raise UnsupportedMathml("apply")
    op = _local(children[0].tag)
    args = [_element_to_expr(c) for c in children[1:]]
    if op in _NARY:
        if not args:
            return Number(0.0 if op == "plus" else 1.0)
        out = args[0]
        for a in args[1:]:
            out = _NARY[op](out, a)
        return out
    if op == "minus" and len(args) == 1:
        return Sub(Number(0.0), args[0])
    if op in _BINARY:
        if len(args) != 2:
            raise UnsupportedMathml(op)
        return _BINARY[op](*args)
    raise UnsupportedMathml(op)


def _cn_value(el: ET.Element) -> float:
    kind = el.get("type", "real")
    parts = [(el.text or "").strip()] + [(c.tail or "").strip() for c in el]
    try:
        if kind in ("real", "integer"):
            return float(parts[0])
        if kind == "e-notation" and len(parts) == 2:
            return float(parts[0]) * 10.0 ** float(parts[1])
        if kind == "rational" and len(parts) == 2:
            return float(parts[0]) / float(parts[1])
    except (ValueError, ZeroDivisionError):
        pass
    raise UnsupportedMathml(f"cn type={kind}")


def mathml_to_expr(xml: str) -> Expr:
    """Inverse of :func:`expr_to_mathml`; n-ary plus/times fold to the left."""
    try:
        el = ET.fromstring(xml)
    except ET.ParseError as exc:
        raise XmlError(f"malformed MathML: {exc}") from None
    return _element_to_expr(el)


# --- export ------------------------------------------------------------------

def _local_renamer(model: Model, reaction: str):
    local = {p.name: p.local_name for p in model.parameters if p.reaction == reaction}
    return lambda n: local.get(n, n)


def export_sbml(model: Model) -> str:
    """Serialize a model that validates without errors.

    Output is byte-stable: fixed attribute order, two-space indentation and
    ``repr`` floats.
    """
    problems = errors(validate(model))
    if problems:
        raise ValidationFailed(problems)

    reactions = derive_reactions(model)
    reaction_ids = {r.id for r in reactions}
    sizes = location_sizes(model)
    targets = {t for ev in model.events for t, _ in ev.assignments}

    root = ET.Element("sbml", {"xmlns": SBML_NS, "level": "2", "version": "3"})
    m = ET.SubElement(root, "model", {"id": model.name})

    kinds = [k for k in LocationKind if any(l.kind is k for l in model.locations)]
    if kinds:
        lst = ET.SubElement(m, "listOfCompartmentTypes")
        for k in kinds:
            ET.SubElement(lst, "compartmentType", {"id": k.value})

    rootless = any(s.location is None for s in model.system_equation)
    if model.locations or rootless:
        lst = ET.SubElement(m, "listOfCompartments")
        if rootless:
            ET.SubElement(lst, "compartment", {"id": ROOT_LOCATION, "size": "1.0"})
        for loc in model.locations:
            attrs = {"id": loc.name}
            if loc.parent is not None:
                attrs["outside"] = loc.parent
            attrs["size"] = _num(sizes[loc.name])
            attrs["compartmentType"] = loc.kind.value
            ET.SubElement(lst, "compartment", attrs)

    if model.system_equation:
        lst = ET.SubElement(m, "listOfSpecies")
        for s in model.system_equation:
            attrs = {"id": s.global_id, "name": s.species,
                     "compartment": s.location or ROOT_LOCATION}
            if s.initial_amount is not None:
                attrs["initialAmount"] = _num(s.initial_amount)
            attrs["hasOnlySubstanceUnits"] = "true"
            attrs["substanceUnits"] = "item"
            ET.SubElement(lst, "species", attrs)

    globals_ = [p for p in model.parameters if p.reaction not in reaction_ids]
    if globals_:
        lst = ET.SubElement(m, "listOfParameters")
        for p in globals_:
            attrs = {"id": p.name, "value": _num(p.value)}
            if p.name in targets:
                attrs["constant"] = "false"
            ET.SubElement(lst, "parameter", attrs)

    if reactions:
        lst = ET.SubElement(m, "listOfReactions")
        for r in reactions:
            rel = ET.SubElement(lst, "reaction", {"id": r.id, "reversible": "false"})
            for tag, refs in (("listOfReactants", r.reactants), ("listOfProducts", r.products)):
                if refs:
                    sub = ET.SubElement(rel, tag)
                    for gid, k in refs:
                        ET.SubElement(sub, "speciesReference",
                                      {"species": gid, "stoichiometry": str(k)})
            if r.modifiers:
                sub = ET.SubElement(rel, "listOfModifiers")
                for gid in r.modifiers:
                    ET.SubElement(sub, "modifierSpeciesReference", {"species": gid})
            law = map_symbols(globalize_law(model, r.kinetic_law),
                              _local_renamer(model, r.id))
            kl = ET.SubElement(rel, "kineticLaw")
            kl.append(_math_root(law))
            local = [p for p in model.parameters if p.reaction == r.id]
            if local:
                sub = ET.SubElement(kl, "listOfParameters")
                for p in local:
                    ET.SubElement(sub, "parameter", {"id": p.local_name, "value": _num(p.value)})

    if model.events:
        lst = ET.SubElement(m, "listOfEvents")
        for ev in model.events:
            eel = ET.SubElement(lst, "event", {"id": ev.name})
            trig = ET.SubElement(eel, "trigger")
            math = ET.SubElement(trig, "math", {"xmlns": MATHML_NS})
            ap = ET.SubElement(math, "apply")
            ET.SubElement(ap, "geq")
            t = ET.SubElement(ap, "csymbol", {"encoding": "text", "definitionURL": TIME_URL})
            t.text = "t"
            ap.append(_math_element(Number(ev.trigger_time)))
            sub = ET.SubElement(eel, "listOfEventAssignments")
            for target, value in ev.assignments:
                ea = ET.SubElement(sub, "eventAssignment", {"variable": target})
                ea.append(_math_root(globalize_law(model, value)))

    out = [XML_DECLARATION]
    _pretty(root, 0, out)
    return "\n".join(out) + "\n"


# --- import ------------------------------------------------------------------

def _children(el: Optional[ET.Element], name: str) -> list[ET.Element]:
    if el is None:
        return []
    return [c for c in el if _local(c.tag) == name]


def _child(el: ET.Element, name: str) -> Optional[ET.Element]:
    found = _children(el, name)
    return found[0] if found else None


def _items(parent: ET.Element, listname: str, itemname: str) -> list[ET.Element]:
    lst = _child(parent, listname)
    return _children(lst, itemname)


def _require(el: ET.Element, attr: str, path: str) -> str:
    value = el.get(attr)
    if value is None:
        raise SchemaError(path, f"missing required attribute {attr!r}")
    return value


def _float(el: ET.Element, attr: str, path: str) -> float:
    raw = _require(el, attr, path)
    try:
        return float(raw)
    except ValueError:
        raise SchemaError(path, f"attribute {attr!r} is not a number: {raw!r}") from None


def _math_of(el: ET.Element, path: str) -> Expr:
    math = _child(el, "math")
    if math is None:
        raise SchemaError(path, "missing <math>")
    return _element_to_expr(math)


def import_sbml(xml: str) -> Model:
    """Read an SBML Level 2 document.

    Species references to undeclared species are kept, so the validator can
    report them; compartment references must resolve.
    """
    try:
        root = ET.fromstring(xml)
    except ET.ParseError as exc:
        raise XmlError(f"malformed XML: {exc}") from None
    if _local(root.tag) != "sbml":
        raise SchemaError("/", f"root element is <{_local(root.tag)}>, expected <sbml>")
    if root.get("level") != "2":
        raise SchemaError("/sbml", f"unsupported SBML level {root.get('level')!r}")
    m = _child(root, "model")
    if m is None:
        raise SchemaError("/sbml", "missing <model>")
    path = "/sbml/model"
    name = m.get("id") or DEFAULT_MODEL_NAME

    for tag in ("listOfRules", "listOfFunctionDefinitions", "listOfInitialAssignments"):
        if len(_child(m, tag) or []):
            log.warning("ignoring %s: not supported", tag)

    ctypes = {}
    for i, el in enumerate(_items(m, "listOfCompartmentTypes", "compartmentType")):
        cid = _require(el, "id", f"{path}/listOfCompartmentTypes/compartmentType[{i + 1}]")
        ctypes[cid] = (LocationKind.MEMBRANE if cid.lower() == "membrane"
                       else LocationKind.COMPARTMENT)

    comp_els = _items(m, "listOfCompartments", "compartment")
    declared = {el.get("id") for el in comp_els}
    locations = []
    for i, el in enumerate(comp_els):
        p = f"{path}/listOfCompartments/compartment[{i + 1}]"
        cid = _require(el, "id", p)
        if cid == ROOT_LOCATION:
            continue
        parent = el.get("outside")
        if parent is not None and parent != ROOT_LOCATION and parent not in declared:
            raise UnresolvedReference(parent, f"{p}: compartment {cid} is outside "
                                              f"undeclared compartment {parent!r}")
        ctype = el.get("compartmentType")
        if ctype is not None and ctype not in ctypes:
            raise UnresolvedReference(ctype, f"{p}: undeclared compartmentType {ctype!r}")
        kind = ctypes.get(ctype, LocationKind.COMPARTMENT)
        locations.append(Location(cid, parent, Number(_float(el, "size", p)), kind))
    loc_names = {l.name for l in locations}

    # species id -> (component name, location)
    sites: dict[str, tuple[str, Optional[str]]] = {}
    instances = []
    for i, el in enumerate(_items(m, "listOfSpecies", "species")):
        p = f"{path}/listOfSpecies/species[{i + 1}]"
        sid = _require(el, "id", p)
        loc = el.get("compartment")
        if loc == ROOT_LOCATION:
            loc = None
        if loc is not None and loc not in loc_names:
            raise UnresolvedReference(loc, f"{p}: species {sid} is in undeclared "
                                           f"compartment {loc!r}")
        comp = _component_name(sid, el.get("name"), loc)
        amount = el.get("initialAmount")
        try:
            amount = float(amount) if amount is not None else None
            instances.append(SpeciesInstance(comp, loc, amount))
        except ValueError as exc:
            raise SchemaError(p, f"bad initialAmount: {exc}") from None
        sites.setdefault(sid, (comp, loc))

    def site(ref: str) -> tuple[str, Optional[str]]:
        if ref in sites:
            return sites[ref]
        for loc in sorted(loc_names, key=len, reverse=True):
            head = ref[:-len(loc) - 1]
            if ref.endswith("_" + loc) and _IDENT.match(head):
                return head, loc
        return ref, None

    def rename(n: str) -> str:
        return species_global_id(*sites[n]) if n in sites else n

    parameters = []
    for i, el in enumerate(_items(m, "listOfParameters", "parameter")):
        p = f"{path}/listOfParameters/parameter[{i + 1}]"
        parameters.append(Parameter(_require(el, "id", p), _float(el, "value", p)))

    component_order = []
    prefixes: dict[str, list[Prefix]] = {}
    for inst in instances:
        if inst.species not in prefixes:
            component_order.append(inst.species)
            prefixes[inst.species] = []

    rates = []
    local_params = []
    for i, rel in enumerate(_items(m, "listOfReactions", "reaction")):
        p = f"{path}/listOfReactions/reaction[{i + 1}]"
        rid = _require(rel, "id", p)
        roles: dict[str, list] = {}
        order = []
        for listname, role in (("listOfReactants", Role.REACTANT),
                               ("listOfProducts", Role.PRODUCT)):
            for j, ref in enumerate(_items(rel, listname, "speciesReference")):
                rp = f"{p}/{listname}/speciesReference[{j + 1}]"
                sid = _require(ref, "species", rp)
                k = float(ref.get("stoichiometry", "1"))
                if not k.is_integer() or k < 1:
                    raise SchemaError(rp, f"stoichiometry must be a positive integer, got {k}")
                if sid not in roles:
                    order.append(sid)
                    roles[sid] = []
                roles[sid].append((role, int(k)))
        for j, ref in enumerate(_items(rel, "listOfModifiers", "modifierSpeciesReference")):
            sid = _require(ref, "species", f"{p}/listOfModifiers/modifierSpeciesReference[{j + 1}]")
            if sid not in roles:
                order.append(sid)
                roles[sid] = [(Role.GENERIC_MODIFIER, 1)]

        for sid in order:
            role, k = _merge_roles(roles[sid])
            comp, loc = site(sid)
            if comp not in prefixes:
                component_order.append(comp)
                prefixes[comp] = []
            prefixes[comp].append(Prefix(rid, k, role, loc))

        kl = _child(rel, "kineticLaw")
        if kl is None:
            raise SchemaError(p, "missing <kineticLaw>")
        local = {}
        for j, el in enumerate(_items(kl, "listOfParameters", "parameter")):
            lp = f"{p}/kineticLaw/listOfParameters/parameter[{j + 1}]"
            pid = _require(el, "id", lp)
            local[pid] = f"{rid}_{pid}"
            local_params.append(Parameter(local[pid], _float(el, "value", lp), rid))
        law = _math_of(kl, f"{p}/kineticLaw")
        law = map_symbols(law, lambda n: local[n] if n in local else rename(n))
        rates.append(FunctionalRate(rid, law))

    events = []
    for i, el in enumerate(_items(m, "listOfEvents", "event")):
        p = f"{path}/listOfEvents/event[{i + 1}]"
        eid = _require(el, "id", p)
        if _child(el, "delay") is not None:
            raise SchemaError(p, "event delays are not supported")
        trigger = _child(el, "trigger")
        if trigger is None:
            raise SchemaError(p, "missing <trigger>")
        t = _trigger_time(trigger, f"{p}/trigger")
        assigns = []
        for j, ea in enumerate(_items(el, "listOfEventAssignments", "eventAssignment")):
            ep = f"{p}/listOfEventAssignments/eventAssignment[{j + 1}]"
            var = rename(_require(ea, "variable", ep))
            assigns.append((var, map_symbols(_math_of(ea, ep), rename)))
        events.append(Event(eid, t, tuple(assigns)))

    return Model(
        name=name,
        locations=locations,
        parameters=parameters + local_params,
        functional_rates=rates,
        species_components=[SpeciesComponent(c, tuple(prefixes[c])) for c in component_order],
        system_equation=instances,
        events=events,
    )


def _component_name(sid: str, name: Optional[str], loc: Optional[str]) -> str:
    if name and _IDENT.match(name) and species_global_id(name, loc) == sid:
        return name
    if loc and sid.endswith("_" + loc) and _IDENT.match(sid[:-len(loc) - 1]):
        return sid[:-len(loc) - 1]
    return sid


def _merge_roles(roles: list) -> tuple[Role, int]:
    if len(roles) == 1:
        return roles[0]
    # a species both consumed and produced: keep the net change, or a
    # modifier when it cancels out
    net = sum(k if r is Role.PRODUCT else -k for r, k in roles)
    if net > 0:
        return Role.PRODUCT, net
    if net < 0:
        return Role.REACTANT, -net
    return Role.GENERIC_MODIFIER, 1


def _trigger_time(trigger: ET.Element, path: str) -> float:
    math = _child(trigger, "math")
    ap = list(math)[0] if math is not None and len(math) == 1 else None
    parts = list(ap) if ap is not None and _local(ap.tag) == "apply" else []
    if (len(parts) == 3 and _local(parts[0].tag) == "geq"
            and _local(parts[1].tag) == "csymbol"
            and parts[1].get("definitionURL") == TIME_URL
            and _local(parts[2].tag) == "cn"):
        t = _cn_value(parts[2])
        if t >= 0:
            return t
    raise SchemaError(path, "only triggers of the form t >= <number> are supported")


# --- round-trip normal form --------------------------------------------------

def sbml_normal_form(model: Model) -> Model:
    """The model ``import_sbml(export_sbml(model))`` returns.

    Sizes become numbers, modifier roles become generic, bare species names
    in laws become global ids, uninstanced species and unused rates drop
    out, and parameters and species components are reordered the way the
    importer rebuilds them.
    """
    reactions = derive_reactions(model)
    reaction_ids = {r.id for r in reactions}
    sizes = location_sizes(model)
    locations = [Location(l.name, l.parent, Number(sizes[l.name]), l.kind)
                 for l in model.locations]
    parameters = [Parameter(p.name, p.value) for p in model.parameters
                  if p.reaction not in reaction_ids]
    for r in reactions:
        parameters += [p for p in model.parameters if p.reaction == r.id]
    site = {s.global_id: (s.species, s.location) for s in model.system_equation}
    order, prefixes = [], {}
    for s in model.system_equation:
        if s.species not in prefixes:
            order.append(s.species)
            prefixes[s.species] = []
    for r in reactions:
        refs = ([(g, k, Role.REACTANT) for g, k in r.reactants]
                + [(g, k, Role.PRODUCT) for g, k in r.products]
                + [(g, 1, Role.GENERIC_MODIFIER) for g in r.modifiers])
        for gid, k, role in refs:
            comp, loc = site[gid]
            prefixes[comp].append(Prefix(r.id, k, role, loc))
    return Model(
        name=model.name,
        locations=locations,
        parameters=parameters,
        functional_rates=[FunctionalRate(r.id, globalize_law(model, r.kinetic_law))
                          for r in reactions],
        species_components=[SpeciesComponent(c, tuple(prefixes[c])) for c in order],
        system_equation=[SpeciesInstance(s.species, s.location, s.initial_amount)
                         for s in model.system_equation],
        events=[Event(e.name, e.trigger_time,
                      tuple((t, globalize_law(model, v)) for t, v in e.assignments))
                for e in model.events],
    )


def lossy_roles(model: Model) -> list[str]:
    """Species whose activator/inhibitor roles SBML will flatten."""
    return sorted({c.name for c in model.species_components for p in c.prefixes
                   if p.role in (Role.ACTIVATOR, Role.INHIBITOR)})
