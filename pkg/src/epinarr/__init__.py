"""Parse, validate, narrate and simulate Bio-PEPA epidemic models, with
SBML Level 2 interchange."""

from importlib import resources

__version__ = "0.1.0"

from .analysis import (  # noqa: E402
    DiffReport, Issue, IssueKind, Severity, SummaryCounts, diff_models, summarize, validate,
)
from .dsl import parse_expr, parse_model, render_model  # noqa: E402
from .expr import eval_expr, free_symbols  # noqa: E402
from .model import (  # noqa: E402
    Event, FunctionalRate, Location, LocationKind, Model, Parameter, Prefix, Reaction,
    Role, SpeciesComponent, SpeciesInstance, derive_reactions, species_global_id,
    stoichiometry_matrix,
)
from .narrative import Format, narrate, narrate_reaction  # noqa: E402
from .sbml import expr_to_mathml, export_sbml, import_sbml, mathml_to_expr  # noqa: E402
from .sim import (  # noqa: E402
    SimConfig, Trajectory, simulate_ode, simulate_ssa, write_trajectory_csv,
)

__all__ = [
    "DiffReport", "Issue", "IssueKind", "Severity", "SummaryCounts", "diff_models",
    "summarize", "validate", "parse_expr", "parse_model", "render_model", "eval_expr",
    "free_symbols", "Event", "FunctionalRate", "Location", "LocationKind", "Model",
    "Parameter", "Prefix", "Reaction", "Role", "SpeciesComponent", "SpeciesInstance",
    "derive_reactions", "species_global_id", "stoichiometry_matrix", "Format", "narrate",
    "narrate_reaction", "expr_to_mathml", "export_sbml", "import_sbml", "mathml_to_expr",
    "SimConfig", "Trajectory", "simulate_ode", "simulate_ssa", "write_trajectory_csv",
    "bundled_model_path", "load_bundled_model", "__version__",
]


def bundled_model_path(name: str = "varicella.biopepa"):
    """Path to a model file shipped with the package."""
    return resources.files(__name__).joinpath("data", name)


def load_bundled_model(name: str = "varicella.biopepa") -> Model:
    return parse_model(bundled_model_path(name).read_text(encoding="utf-8"),
                       name=name.split(".")[0])
