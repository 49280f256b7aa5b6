"""Headless construction environment.

A scene is an ordered list of placed parts.  Applying a create-part action
appends the part and reports how its bounding box relates to everything
built so far: fully swallowed by an existing part, floating with a gap, or
connected.  States are values; every operation returns a new state.
"""

import json
import math
import re
from dataclasses import dataclass
from enum import Enum

from .geometry import (
    Aabb,
    DuplicateNameError,
    InvalidSpecError,
    Kind,
    PrimitiveSpec,
    Vec3,
    analytic_aabb,
)

DEFAULT_TOUCH_EPS = 1e-3
CONTAINMENT_SLACK = 1e-6


class BlenvError(Exception):
    """Base class for environment errors."""


class UnknownPartError(BlenvError):
    pass


class ActionSyntaxError(BlenvError):
    """A line of an action script failed to parse."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


class UnknownCommandError(ActionSyntaxError):
    pass


class BadNumberError(ActionSyntaxError):
    pass


class SpatialFlag(str, Enum):
    TOTAL_CONTAINMENT = "total_containment"
    DISCONNECTED = "disconnected"


@dataclass(frozen=True)
class PartRecord:
    name: str
    spec: PrimitiveSpec
    aabb: Aabb
    dims: Vec3
    created_at: int


@dataclass(frozen=True)
class SceneState:
    parts: tuple[PartRecord, ...] = ()
    next_step: int = 0

    def names(self) -> set[str]:
        return {p.name for p in self.parts}

    def part(self, name: str) -> PartRecord:
        for p in self.parts:
            if p.name == name:
                return p
        raise UnknownPartError(f"no part named {name!r}")


@dataclass(frozen=True)
class SpatialReport:
    new_part: str
    flags: frozenset[SpatialFlag]
    nearest_gap: tuple[str, float] | None
    overlapping_with: tuple[str, ...]
    contained_in: str | None
    summary_text: str


def min_gap(a: Aabb, b: Aabb) -> float:
    """Euclidean norm of per-axis clearances; 0 iff the boxes touch or overlap."""
    gx = max(0.0, a.min.x - b.max.x, b.min.x - a.max.x)
    gy = max(0.0, a.min.y - b.max.y, b.min.y - a.max.y)
    gz = max(0.0, a.min.z - b.max.z, b.min.z - a.max.z)
    return math.sqrt(gx * gx + gy * gy + gz * gz)


def _strict_overlap(a: Aabb, b: Aabb) -> bool:
    """Positive-measure intersection on every axis."""
    return (max(a.min.x, b.min.x) < min(a.max.x, b.max.x)
            and max(a.min.y, b.min.y) < min(a.max.y, b.max.y)
            and max(a.min.z, b.min.z) < min(a.max.z, b.max.z))


def classify_spatial(new_name: str, new: Aabb, existing: list[tuple[str, Aabb]],
                     touch_eps: float = DEFAULT_TOUCH_EPS) -> SpatialReport:
    """Check the new box against every existing one.

    Total containment wins over everything; otherwise the part is
    disconnected when its nearest clearance exceeds `touch_eps`.  Touching
    counts as connected.  Partial overlaps are reported but never flagged.
    """
    if touch_eps <= 0:
        raise ValueError("touch_eps must be > 0")
    flags: set[SpatialFlag] = set()
    contained_in = None
    nearest: tuple[str, float] | None = None
    overlapping: list[str] = []
    for name, box in existing:
        if contained_in is None and box.contains(new, slack=CONTAINMENT_SLACK):
            contained_in = name
        if _strict_overlap(new, box):
            overlapping.append(name)
        gap = min_gap(new, box)
        if nearest is None or gap < nearest[1]:
            nearest = (name, gap)
    if contained_in is not None:
        flags.add(SpatialFlag.TOTAL_CONTAINMENT)
    elif existing and nearest is not None and nearest[1] > touch_eps:
        flags.add(SpatialFlag.DISCONNECTED)
    gap_info = nearest if SpatialFlag.DISCONNECTED in flags else None

    if SpatialFlag.TOTAL_CONTAINMENT in flags:
        summary = (f"Warning: part '{new_name}' is entirely contained within "
                   f"part '{contained_in}'.")
    elif SpatialFlag.DISCONNECTED in flags:
        summary = (f"Warning: part '{new_name}' is disconnected from the existing "
                   f"parts, with an unnecessary gap of {gap_info[1]:.3f} to part "
                   f"'{gap_info[0]}'.")
    else:
        summary = f"Part '{new_name}' created successfully."
    return SpatialReport(
        new_part=new_name,
        flags=frozenset(flags),
        nearest_gap=gap_info,
        overlapping_with=tuple(overlapping),
        contained_in=contained_in,
        summary_text=summary,
    )


def apply_action(state: SceneState, spec: PrimitiveSpec,
                 touch_eps: float = DEFAULT_TOUCH_EPS) -> tuple[SceneState, SpatialReport]:
    """Append a part and report its spatial relation to the prior parts."""
    if spec.name in state.names():
        raise DuplicateNameError(f"part name {spec.name!r} already used")
    box = analytic_aabb(spec)
    report = classify_spatial(spec.name, box,
                              [(p.name, p.aabb) for p in state.parts], touch_eps)
    record = PartRecord(name=spec.name, spec=spec, aabb=box, dims=box.size,
                        created_at=state.next_step)
    new_state = SceneState(parts=state.parts + (record,), next_step=state.next_step + 1)
    return new_state, report


def remove_part(state: SceneState, name: str) -> SceneState:
    if name not in state.names():
        raise UnknownPartError(f"no part named {name!r}")
    return SceneState(parts=tuple(p for p in state.parts if p.name != name),
                      next_step=state.next_step)


def _box_line(name: str, box: Aabb) -> str:
    s = box.size
    return (f"  '{name}': min ({box.min.x:.3f}, {box.min.y:.3f}, {box.min.z:.3f}), "
            f"max ({box.max.x:.3f}, {box.max.y:.3f}, {box.max.z:.3f}), "
            f"size ({s.x:.3f}, {s.y:.3f}, {s.z:.3f})")


def feedback_text(report: SpatialReport, state: SceneState) -> str:
    """Environment feedback for one action: new box, scene boxes, warnings."""
    lines = [report.summary_text]
    try:
        new = state.part(report.new_part)
        lines.append(_box_line(new.name, new.aabb))
    except UnknownPartError:
        pass
    others = [p for p in state.parts if p.name != report.new_part]
    if others:
        lines.append("Existing parts:")
        lines.extend(_box_line(p.name, p.aabb) for p in others)
    if SpatialFlag.DISCONNECTED in report.flags and report.nearest_gap is not None:
        name, gap = report.nearest_gap
        lines.append(f"Fix: close the gap of {gap:.3f} to part '{name}' so the new "
                     "part touches the existing construction.")
    if SpatialFlag.TOTAL_CONTAINMENT in report.flags and report.contained_in:
        lines.append(f"Fix: move the new part so it is not swallowed by part "
                     f"'{report.contained_in}'.")
    return "\n".join(lines)


def contact_edges(state: SceneState, touch_eps: float = DEFAULT_TOUCH_EPS):
    """Pairs of part names whose boxes are within touch_eps of each other."""
    parts = state.parts
    for i in range(len(parts)):
        for j in range(i + 1, len(parts)):
            if min_gap(parts[i].aabb, parts[j].aabb) <= touch_eps:
                yield (parts[i].name, parts[j].name)


def contact_graph_connected(state: SceneState,
                            touch_eps: float = DEFAULT_TOUCH_EPS) -> bool:
    """True when every part can reach every other through touching parts."""
    if len(state.parts) <= 1:
        return True
    adjacency: dict[str, set[str]] = {p.name: set() for p in state.parts}
    for a, b in contact_edges(state, touch_eps):
        adjacency[a].add(b)
        adjacency[b].add(a)
    seen = {state.parts[0].name}
    frontier = [state.parts[0].name]
    while frontier:
        for nxt in adjacency[frontier.pop()]:
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return len(seen) == len(state.parts)


# ---------------------------------------------------------------------------
# Action scripts: one create-part action per line.
# ---------------------------------------------------------------------------

_NUMBER_RE = r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?"
_IDENT_RE = r"[A-Za-z_][A-Za-z0-9_]*"
_TRIPLE_RE = re.compile(rf"^\(\s*({_NUMBER_RE})\s*,\s*({_NUMBER_RE})\s*,\s*({_NUMBER_RE})\s*\)$")
_PAIR_RE = re.compile(rf"^({_IDENT_RE})=(.*)$")

_SCALAR_KEYS = {"radius", "depth", "radius_bottom", "radius_top",
                "major_radius", "minor_radius"}
_KIND_NAMES = {k.value for k in Kind}


@dataclass(frozen=True)
class ActionScript:
    """Parsed action script: the specs plus their source line numbers."""

    actions: tuple[PrimitiveSpec, ...] = ()
    lines: tuple[int, ...] = ()

    def __len__(self):
        return len(self.actions)

    def __iter__(self):
        return iter(self.actions)


def _split_fields(rest: str, lineno: int) -> list[tuple[str, str]]:
    """Split `key=value` fields; parenthesized values may not contain spaces."""
    fields = []
    for token in rest.split():
        m = _PAIR_RE.match(token)
        if not m:
            raise ActionSyntaxError(lineno, f"expected key=value, got {token!r}")
        fields.append((m.group(1), m.group(2)))
    return fields


def _parse_number(text: str, key: str, lineno: int) -> float:
    if not re.fullmatch(_NUMBER_RE, text):
        raise BadNumberError(lineno, f"bad number for {key}: {text!r}")
    return float(text)


def _parse_triple(text: str, key: str, lineno: int) -> Vec3:
    m = _TRIPLE_RE.match(text)
    if not m:
        raise BadNumberError(lineno, f"bad triple for {key}: {text!r}")
    return Vec3(float(m.group(1)), float(m.group(2)), float(m.group(3)))


def parse_action_line(text: str, lineno: int = 1) -> PrimitiveSpec | None:
    """Parse one action line; blank lines and `#` comments yield None."""
    stripped = text.split("#", 1)[0].strip()
    if not stripped:
        return None
    head, _, rest = stripped.partition(" ")
    kind_name = head.lower()
    if kind_name not in _KIND_NAMES:
        raise UnknownCommandError(lineno, f"unknown primitive {head!r}")
    kind = Kind(kind_name)
    name = None
    location = Vec3(0.0, 0.0, 0.0)
    scale = Vec3(1.0, 1.0, 1.0)
    scalars: dict[str, float] = {}
    for key, value in _split_fields(rest, lineno):
        if key == "name":
            if not re.fullmatch(_IDENT_RE, value):
                raise ActionSyntaxError(lineno, f"bad name {value!r}")
            name = value
        elif key == "location":
            location = _parse_triple(value, key, lineno)
        elif key == "scale":
            scale = _parse_triple(value, key, lineno)
        elif key in _SCALAR_KEYS:
            scalars[key] = _parse_number(value, key, lineno)
        else:
            raise ActionSyntaxError(lineno, f"unknown field {key!r}")
    if name is None:
        raise ActionSyntaxError(lineno, "missing name=")
    try:
        return PrimitiveSpec(kind, name, location, scale, **scalars)
    except InvalidSpecError as exc:
        raise ActionSyntaxError(lineno, str(exc)) from exc


def parse_action_script(source: str) -> ActionScript:
    """Parse a whole script, reporting the first error with its line number."""
    actions: list[PrimitiveSpec] = []
    linenos: list[int] = []
    for lineno, raw in enumerate(source.splitlines(), start=1):
        spec = parse_action_line(raw, lineno)
        if spec is not None:
            actions.append(spec)
            linenos.append(lineno)
    return ActionScript(actions=tuple(actions), lines=tuple(linenos))


def _fmt_num(value: float) -> str:
    return repr(value + 0.0)


def format_action(spec: PrimitiveSpec) -> str:
    parts = [spec.kind.value, f"name={spec.name}"]
    loc = spec.location
    parts.append(f"location=({_fmt_num(loc.x)},{_fmt_num(loc.y)},{_fmt_num(loc.z)})")
    if spec.scale != Vec3(1.0, 1.0, 1.0):
        s = spec.scale
        parts.append(f"scale=({_fmt_num(s.x)},{_fmt_num(s.y)},{_fmt_num(s.z)})")
    for key, value in spec.params().items():
        parts.append(f"{key}={_fmt_num(value)}")
    return " ".join(parts)


def format_action_script(script: ActionScript) -> str:
    return "\n".join(format_action(a) for a in script.actions)


def scene_from_json(text: str) -> SceneState:
    """Rebuild a scene from its JSON snapshot by re-applying each part."""
    doc = json.loads(text)
    state = SceneState()
    for entry in doc.get("parts", []):
        spec = PrimitiveSpec(
            kind=Kind(entry["kind"]),
            name=entry["name"],
            location=Vec3(*entry["location"]),
            scale=Vec3(*entry["scale"]),
            **entry.get("params", {}),
        )
        state, _ = apply_action(state, spec)
    return state


def _fmt6(value: float) -> str:
    return f"{value + 0.0:.6f}"


def _json_triple(v: Vec3) -> str:
    return f"[{_fmt6(v.x)}, {_fmt6(v.y)}, {_fmt6(v.z)}]"


def scene_to_json(state: SceneState) -> str:
    """Scene snapshot with fixed key order and 6-decimal floats."""
    entries = []
    for p in state.parts:
        params = ", ".join(f'"{k}": {_fmt6(v)}' for k, v in p.spec.params().items())
        entries.append(
            "    {\n"
            f'      "name": "{p.name}",\n'
            f'      "kind": "{p.spec.kind.value}",\n'
            f'      "params": {{{params}}},\n'
            f'      "location": {_json_triple(p.spec.location)},\n'
            f'      "scale": {_json_triple(p.spec.scale)},\n'
            f'      "aabb": {{"min": {_json_triple(p.aabb.min)}, '
            f'"max": {_json_triple(p.aabb.max)}}}\n'
            "    }"
        )
    if not entries:
        return '{\n  "parts": []\n}\n'
    body = ",\n".join(entries)
    return '{\n  "parts": [\n' + body + "\n  ]\n}\n"
