"""Plain-language reports of a model for domain experts.

All English wording lives in ``TEMPLATES`` so it can be translated in one
place.
"""

from __future__ import annotations

import enum
import html
from dataclasses import dataclass
from typing import Optional

from .analysis import Severity, SummaryCounts, summarize, validate
from .expr import format_number, to_infix
from .model import Model, Reaction, derive_reactions_lenient, location_sizes

TEMPLATES = {
    "title": "Model {name}",
    "summary": "Summary",
    "compartments": "Compartments",
    "species": "Species",
    "parameters": "Parameters",
    "reactions": "Reactions",
    "problems": "Problems",
    "location": "{name} is a {kind} inside {parent} with size {size}.",
    "location_root": "{name} is a {kind} with size {size}.",
    "size_unknown": "{expr} (which cannot be computed)",
    "species_amount": "{species} starts with {amount} individuals.",
    "species_no_amount": "{species} has no initial amount given.",
    "parameter": "{name} has value {value}.",
    "parameter_local": "{name} has value {value} (local to reaction {reaction}).",
    "reaction": "Reaction {id}: {clauses}.",
    "consumes": "consumes {items}",
    "produces": "produces {items}",
    "influenced": "influenced by {items}",
    "rate": "at rate {law}",
    "rate_missing": "at a rate that is not defined",
    "no_problems": "No problems were found.",
    "error": "{detail}",
    "warning": "Warning: {detail}",
}


class Format(enum.Enum):
    TEXT = "txt"
    MARKDOWN = "md"
    HTML = "html"


@dataclass(frozen=True)
class NarrativeDoc:
    title: str
    summary: SummaryCounts
    sections: tuple[tuple[str, tuple[str, ...]], ...]

    def section(self, heading: str) -> tuple[str, ...]:
        return dict(self.sections)[heading]

    def render(self, fmt: Format = Format.TEXT) -> str:
        return _RENDERERS[Format(fmt)](self)


def _species_label(model: Model, gid: str, sites: dict) -> str:
    species, location = sites.get(gid, (gid, None))
    return f"{species} in {location}" if location else species


def _sites(model: Model) -> dict:
    sites = {s.global_id: (s.species, s.location) for s in model.system_equation}
    for comp in model.species_components:
        for p in comp.prefixes:
            if p.location:
                sites.setdefault(f"{comp.name}_{p.location}", (comp.name, p.location))
    return sites


def narrate_reaction(reaction: Reaction, model: Model, _sites_cache: Optional[dict] = None) -> str:
    sites = _sites(model) if _sites_cache is None else _sites_cache
    label = lambda gid: _species_label(model, gid, sites)
    clauses = []
    if reaction.reactants:
        clauses.append(TEMPLATES["consumes"].format(
            items=", ".join(f"{k} {label(g)}" for g, k in reaction.reactants)))
    if reaction.products:
        clauses.append(TEMPLATES["produces"].format(
            items=", ".join(f"{k} {label(g)}" for g, k in reaction.products)))
    if reaction.modifiers:
        clauses.append(TEMPLATES["influenced"].format(
            items=", ".join(label(g) for g in reaction.modifiers)))
    if reaction.kinetic_law is None:
        clauses.append(TEMPLATES["rate_missing"])
    else:
        clauses.append(TEMPLATES["rate"].format(law=to_infix(reaction.kinetic_law)))
    return TEMPLATES["reaction"].format(id=reaction.id, clauses="; ".join(clauses))


def build_narrative(model: Model) -> NarrativeDoc:
    sizes = location_sizes(model)
    locations = []
    for loc in model.locations:
        size = (format_number(sizes[loc.name]) if loc.name in sizes
                else TEMPLATES["size_unknown"].format(expr=to_infix(loc.size)))
        kind = loc.kind.value.lower()
        key = "location" if loc.parent is not None else "location_root"
        locations.append(TEMPLATES[key].format(name=loc.name, kind=kind,
                                               parent=loc.parent, size=size))
    species = []
    for s in model.system_equation:
        where = f"{s.species} in {s.location}" if s.location else s.species
        if s.initial_amount is None:
            species.append(TEMPLATES["species_no_amount"].format(species=where))
        else:
            species.append(TEMPLATES["species_amount"].format(
                species=where, amount=format_number(s.initial_amount)))
    parameters = []
    for p in model.parameters:
        if p.reaction is None:
            parameters.append(TEMPLATES["parameter"].format(
                name=p.name, value=format_number(p.value)))
        else:
            parameters.append(TEMPLATES["parameter_local"].format(
                name=p.name, value=format_number(p.value), reaction=p.reaction))
    sites = _sites(model)
    reactions = [narrate_reaction(r, model, sites) for r in derive_reactions_lenient(model)]
    problems = [TEMPLATES["error" if i.severity is Severity.ERROR else "warning"]
                .format(detail=i.detail) for i in validate(model)]
    return NarrativeDoc(
        title=TEMPLATES["title"].format(name=model.name),
        summary=summarize(model),
        sections=(
            (TEMPLATES["compartments"], tuple(locations)),
            (TEMPLATES["species"], tuple(species)),
            (TEMPLATES["parameters"], tuple(parameters)),
            (TEMPLATES["reactions"], tuple(reactions)),
            (TEMPLATES["problems"], tuple(problems)),
        ),
    )


def narrate(model: Model, fmt: Format = Format.TEXT) -> str:
    return build_narrative(model).render(fmt)


def _shown(heading: str, sentences: tuple[str, ...]) -> tuple[str, ...]:
    # an empty problem list still gets a sentence so readers know it was checked
    if heading == TEMPLATES["problems"] and not sentences:
        return (TEMPLATES["no_problems"],)
    return sentences


def _text(doc: NarrativeDoc) -> str:
    out = [doc.title, "=" * len(doc.title), ""]
    summary = TEMPLATES["summary"]
    out += [summary, "-" * len(summary)]
    out += [f"{k} : {v}" for k, v in doc.summary.items()] + [""]
    for heading, sentences in doc.sections:
        out += [heading, "-" * len(heading), *_shown(heading, sentences), ""]
    return "\n".join(out)


def _markdown(doc: NarrativeDoc) -> str:
    out = [f"# {doc.title}", "", f"## {TEMPLATES['summary']}", ""]
    out += [f"- `{k}` : {v}" for k, v in doc.summary.items()] + [""]
    for heading, sentences in doc.sections:
        out += [f"## {heading}", ""]
        sentences = _shown(heading, sentences)
        if sentences:
            out += [f"- {s}" for s in sentences] + [""]
    return "\n".join(out)


_CSS = ("body{font-family:sans-serif;max-width:48em;margin:2em auto;line-height:1.4}"
        "h2{border-bottom:1px solid #ccc}li.problem{color:#a00}")


def _html(doc: NarrativeDoc) -> str:
    e = html.escape
    out = ["<!DOCTYPE html>", '<html lang="en">', "<head>", '<meta charset="utf-8">',
           f"<title>{e(doc.title)}</title>", f"<style>{_CSS}</style>", "</head>", "<body>",
           f"<h1>{e(doc.title)}</h1>", f"<h2>{e(TEMPLATES['summary'])}</h2>", "<ul>"]
    out += [f"<li><code>{k}</code> : {v}</li>" for k, v in doc.summary.items()]
    out.append("</ul>")
    problems = TEMPLATES["problems"]
    for heading, sentences in doc.sections:
        out.append(f"<h2>{e(heading)}</h2>")
        if sentences:
            cls = ' class="problem"' if heading == problems else ""
        else:
            sentences = _shown(heading, sentences)
            cls = ""
        if sentences:
            out += ["<ul>", *(f"<li{cls}>{e(s)}</li>" for s in sentences), "</ul>"]
    out += ["</body>", "</html>", ""]
    return "\n".join(out)


_RENDERERS = {Format.TEXT: _text, Format.MARKDOWN: _markdown, Format.HTML: _html}
