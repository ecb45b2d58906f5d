import numpy as np
import pytest

from epinarr.dsl import parse_expr, parse_model
from epinarr.errors import UnknownAction
from epinarr.model import (
    Model, Parameter, Prefix, Reaction, Role, SpeciesInstance, SymbolKind,
    derive_reactions, derive_reactions_lenient, globalize_law, law_environment,
    resolve_symbol, species_global_id, stoichiometry_matrix,
)


@pytest.mark.parametrize("species, location, gid", [
    ("Exp", "Age1", "Exp_Age1"), ("VS", "Age7", "VS_Age7"), ("S", None, "S"),
])
def test_global_id(species, location, gid):
    assert species_global_id(species, location) == gid


def test_global_id_needs_name():
    with pytest.raises(ValueError):
        species_global_id("")


def test_exposition_reaction(exposition):
    # worked by hand from the role table: reactant, product, activator
    assert derive_reactions(exposition) == [Reaction(
        id="Exposition",
        reactants=(("S_Age1", 1),),
        products=(("Exp_Age1", 1),),
        modifiers=("I_Age1",),
        kinetic_law=parse_expr("lambda * S * I"),
    )]


def test_lost_vaccin_reaction(lost_vaccin):
    [r] = derive_reactions(lost_vaccin)
    assert (r.id, r.reactants, r.products, r.modifiers) == ("LostVaccin", (("VP", 1),), (("S", 1),), ())
    assert r.kinetic_law == parse_expr("W * VP")


def test_no_prefixes_no_reactions():
    assert derive_reactions(parse_model("X[1]")) == []


def test_missing_rate_is_unknown_action():
    m = parse_model("X = (go, 1) << X;\nX[1]")
    with pytest.raises(UnknownAction):
        derive_reactions(m)
    [r] = derive_reactions_lenient(m)
    assert r.kinetic_law is None


def test_unlocated_prefix_covers_every_instance():
    src = ("location A : size = 1, type = compartment;\n"
           "location B : size = 1, type = compartment;\n"
           "k = 1; die = k;\nX = (die, 1) << X;\nX@A[1] <*> X@B[2]")
    [r] = derive_reactions(parse_model(src))
    assert r.reactants == (("X_A", 1), ("X_B", 1))


def test_located_prefix_targets_one_instance():
    src = ("location A : size = 1, type = compartment;\n"
           "location B : size = 1, type = compartment;\n"
           "k = 1; die = k;\nX = (die, 1) << X@B;\nX@A[1] <*> X@B[2]")
    [r] = derive_reactions(parse_model(src))
    assert r.reactants == (("X_B", 1),)


def test_stoichiometry_decay(decay):
    np.testing.assert_array_equal(stoichiometry_matrix(decay), [[-1]])


def test_stoichiometry_exposition_column(exposition):
    mat = stoichiometry_matrix(exposition)
    rows = {gid: i for i, gid in enumerate(exposition.species_ids)}
    column = [mat[rows[g], 0] for g in ("S_Age1", "I_Age1", "Exp_Age1")]
    assert column == [-1, 0, 1]


def test_stoichiometry_empty():
    assert stoichiometry_matrix(Model()).shape == (0, 0)


def test_stoichiometry_sir_conserves_total(sir):
    # every column sums to zero, so S + I + R is invariant
    assert not stoichiometry_matrix(sir).sum(axis=0).any()


def test_resolution_order():
    src = ("location Age1 : size = 3, type = compartment;\n"
           "k = 2;\nX = ();\nX@Age1[5]")
    m = parse_model(src)
    assert resolve_symbol(m, "X_Age1") == (SymbolKind.SPECIES, "X_Age1")
    assert resolve_symbol(m, "X") == (SymbolKind.SPECIES, "X_Age1")
    assert resolve_symbol(m, "k") == (SymbolKind.PARAMETER, "k")
    assert resolve_symbol(m, "Age1") == (SymbolKind.LOCATION, "Age1")
    assert resolve_symbol(m, "nope") is None


def test_bare_names_ambiguous_with_many_locations(varicella):
    assert resolve_symbol(varicella, "S") is None
    assert resolve_symbol(varicella, "S_Age3") == (SymbolKind.SPECIES, "S_Age3")


def test_law_environment(exposition):
    env = law_environment(exposition)
    assert env["S"] == env["S_Age1"] == 990
    assert env["Age1"] == 100000
    assert env["lambda"] == 0.0005


def test_globalize_law(exposition):
    law = globalize_law(exposition, parse_expr("lambda * S * I"))
    assert law == parse_expr("lambda * S_Age1 * I_Age1")


def test_dataclass_checks():
    with pytest.raises(ValueError):
        Prefix("a", 0, Role.REACTANT)
    with pytest.raises(ValueError):
        SpeciesInstance("X", None, -1.0)
    with pytest.raises(ValueError):
        Parameter("c", 1.0, reaction="r")
    with pytest.raises(ValueError):
        Parameter("k", float("nan"))
