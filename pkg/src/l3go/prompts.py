"""Prompt templates as versioned text assets, plus shared prompt snippets."""

from functools import lru_cache
from importlib import resources

TEMPLATE_NAMES = (
    "preamble",
    "l3go_part_gen",
    "l3go_part_critic",
    "l3go_spatial_gen",
    "l3go_coord",
    "l3go_shape",
    "l3go_completion",
    "react",
    "reflexion_reflect",
    "single_shot",
)

ACTION_GRAMMAR_DOC = """\
  cube name=<name> location=(x,y,z) scale=(x,y,z)
  cylinder name=<name> radius=R depth=D location=(x,y,z)
  cone name=<name> radius_bottom=R radius_top=R depth=D location=(x,y,z)
  sphere name=<name> radius=R location=(x,y,z)
  torus name=<name> major_radius=R minor_radius=R location=(x,y,z)
Numbers are plain decimals, location is the part's center, names contain
only letters, digits and underscores, and every name must be new."""

DSL_CALC_INSTRUCTIONS = """\
Write a program of exactly three assignments, one per line:
x = <expression>
y = <expression>
z = <expression>
Expressions may use numbers, the identifiers listed above, the operators
+ - * /, parentheses, and the functions min(a,b), max(a,b), abs(a).
Reply with only the three assignment lines."""

LITERAL_CALC_INSTRUCTIONS = """\
Reply with only the three numbers of the center coordinate, separated by
commas: x, y, z"""


@lru_cache(maxsize=None)
def load_template(name: str) -> str:
    if name not in TEMPLATE_NAMES:
        raise KeyError(f"unknown template {name!r}")
    return (resources.files("l3go") / "templates" / f"{name}.txt").read_text(
        encoding="utf-8")


def render(name: str, **values: str) -> str:
    """Fill a template's named placeholders; unknown placeholders are an error."""
    return load_template(name).format(**values)


def preamble() -> str:
    return load_template("preamble")
