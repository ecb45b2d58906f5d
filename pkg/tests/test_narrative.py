import dataclasses
from html.parser import HTMLParser

from epinarr.analysis import summarize
from epinarr.expr import Number
from epinarr.model import Model, Reaction, derive_reactions
from epinarr.narrative import Format, TEMPLATES, build_narrative, narrate, narrate_reaction

from conftest import GOLDEN


def test_exposition_sentence(exposition):
    [r] = derive_reactions(exposition)
    assert narrate_reaction(r, exposition) == (
        "Reaction Exposition: consumes 1 S in Age1; produces 1 Exp in Age1; "
        "influenced by I in Age1; at rate lambda * S * I.")


def test_lost_vaccin_sentence(lost_vaccin):
    [r] = derive_reactions(lost_vaccin)
    assert narrate_reaction(r, lost_vaccin) == (
        "Reaction LostVaccin: consumes 1 VP; produces 1 S; at rate W * VP.")


def test_degenerate_reaction():
    r = Reaction(id="X", kinetic_law=Number(0))
    assert narrate_reaction(r, Model()) == "Reaction X: at rate 0."


def test_empty_model_document():
    doc = build_narrative(Model())
    assert doc.title == "Model model"
    assert doc.summary == summarize(Model())
    assert all(sentences == () for _, sentences in doc.sections)


def test_problems_listed_one_per_issue(varicella):
    broken = dataclasses.replace(varicella, system_equation=tuple(
        s for s in varicella.system_equation if s.global_id != "VS_Age7"))
    problems = build_narrative(broken).section(TEMPLATES["problems"])
    assert len(problems) == 2
    assert all("VS_Age7" in p for p in problems)


def test_golden_text(varicella):
    golden = (GOLDEN / "varicella_narrative.txt").read_text(encoding="utf-8")
    assert narrate(varicella) == golden


def test_sentence_counts_match_summary(varicella):
    doc = build_narrative(varicella)
    counts = summarize(varicella)
    assert len(doc.section(TEMPLATES["reactions"])) == counts.nb_Reactions
    assert len(doc.section(TEMPLATES["species"])) == counts.nb_Species


def test_markdown_layout(lost_vaccin):
    md = narrate(lost_vaccin, Format.MARKDOWN)
    assert md.startswith("# Model model\n")
    assert "## Reactions\n\n- Reaction LostVaccin: consumes 1 VP;" in md
    assert "- No problems were found." in md


class _TagCounter(HTMLParser):
    def __init__(self):
        super().__init__()
        self.open, self.items = [], 0

    def handle_starttag(self, tag, attrs):
        if tag not in ("meta",):
            self.open.append(tag)
        self.items += tag == "li"

    def handle_endtag(self, tag):
        assert self.open.pop() == tag


def test_html_is_balanced_and_escaped(varicella):
    page = narrate(varicella, Format.HTML)
    parser = _TagCounter()
    parser.feed(page)
    assert parser.open == []
    # 8 summary lines, then every sentence of every section plus the problems line
    sections = build_narrative(varicella).sections
    assert parser.items == 8 + sum(len(s) for _, s in sections) + 1
    assert "<script" not in page and "http" not in page


def test_html_escapes_names():
    r = Reaction(id="a<b", kinetic_law=Number(1))
    assert "a<b" in narrate_reaction(r, Model())
    page = narrate(Model(name="x&y"), Format.HTML)
    assert "x&amp;y" in page and "x&y" not in page
