"""Build agents: the part-by-part state machine and three baselines.

The main agent loops through six components per part: propose a part name
and dimensions, critique the proposal, plan the attachment, compute the
center through voted coordinate programs, pick a primitive shape, then
place the part and let the spatial critic accept or reject it.  A
completion check closes the loop.  The baselines drive the same
environment through a thought/action loop (react), the same loop plus a
redo reflection (reflexion), and a one-shot full script (single-shot).
"""

import re
from dataclasses import dataclass, field

from . import prompts
from .blenv import (
    BlenvError,
    DEFAULT_TOUCH_EPS,
    SceneState,
    SpatialReport,
    apply_action,
    feedback_text,
    parse_action_line,
    remove_part,
)
from .coord_dsl import (
    DslError,
    VoteConfig,
    eval_program,
    majority_vote,
    make_bindings,
    parse_program,
)
from .gateway import Backend, ChatMessage, ChatRequest, GatewayError
from .geometry import GeometryError, Kind, PrimitiveSpec, Vec3
from .transcript import (
    BuildResult,
    BuildTranscript,
    COMPONENT_ENV_APPLY,
    COMPONENT_ENV_REMOVE,
    STATUS_ABORTED,
    STATUS_COMPLETED,
    STATUS_MAX_PARTS,
    VERDICT_ACCEPTED,
    VERDICT_REJECTED,
    spec_to_dict,
)

TEMP_GENERATOR = 0.7
TEMP_CRITIC = 0.0


class AgentError(Exception):
    pass


class UnparsableResponseError(AgentError):
    pass


class UnknownBasePartError(AgentError):
    pass


class AllSamplesUnparsableError(AgentError):
    pass


@dataclass
class AgentConfig:
    backend: Backend
    max_parts: int = 20
    part_critic_rounds: int = 3
    spatial_retry_rounds: int = 3
    vote: VoteConfig = field(default_factory=VoteConfig)
    touch_eps: float = DEFAULT_TOUCH_EPS
    ablate_spatial_critic: bool = False
    ablate_program_calc: bool = False
    seed: int = 0
    max_steps: int = 15  # react / reflexion turn cap

    def __post_init__(self):
        for cap in ("max_parts", "part_critic_rounds", "spatial_retry_rounds", "max_steps"):
            if getattr(self, cap) < 1:
                raise ValueError(f"{cap} must be >= 1")


@dataclass(frozen=True)
class PartProposal:
    name: str
    dims: Vec3  # width, depth, height along x, y, z

    def __post_init__(self):
        if not self.name:
            raise ValueError("part name must be nonempty")
        if min(self.dims.as_tuple()) <= 0:
            raise ValueError("dims must be positive")


@dataclass(frozen=True)
class SpatialSpec:
    base_part: str
    relation: str


@dataclass(frozen=True)
class PlacementOutcome:
    status: str  # accepted | accepted_with_flags
    report: SpatialReport
    attempts: int


# --- reply parsing helpers --------------------------------------------------

_NUM_RE = re.compile(r"[-+]?\d*\.?\d+(?:[eE][-+]?\d+)?")
_KIND_WORDS = {k.value for k in Kind}


def parse_part_name(text: str) -> str | None:
    for raw in text.splitlines():
        line = raw.strip().strip("\"'`*-• ").rstrip(".")
        if line:
            return " ".join(line.split())[:60]
    return None


def parse_dims(text: str) -> Vec3 | None:
    numbers = [float(m) for m in _NUM_RE.findall(text)]
    if len(numbers) < 3 or any(n <= 0 for n in numbers[:3]):
        return None
    return Vec3(*numbers[:3])


def parse_triple(text: str) -> Vec3 | None:
    numbers = [float(m) for m in _NUM_RE.findall(text)]
    if len(numbers) < 3:
        return None
    return Vec3(*numbers[:3])


def parse_verdict(text: str) -> tuple[str, str]:
    """Return ("approve"|"revise"|"unparsable", reason)."""
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        upper = line.upper()
        if upper.startswith("APPROVE"):
            return "approve", ""
        if upper.startswith("REVISE"):
            return "revise", line.partition(":")[2].strip() or "no reason given"
    return "unparsable", ""


def parse_base_relation(text: str) -> tuple[str, str] | None:
    base = relation = None
    for raw in text.splitlines():
        line = raw.strip()
        if line.upper().startswith("BASE:"):
            base = line.partition(":")[2].strip().strip("\"'")
        elif line.upper().startswith("RELATION:"):
            relation = line.partition(":")[2].strip()
    if base and relation:
        return base, relation
    return None


def parse_kind(text: str) -> Kind | None:
    lowered = text.lower()
    hits = [(lowered.index(w), w) for w in _KIND_WORDS if w in lowered]
    if not hits:
        return None
    return Kind(min(hits)[1])


def parse_done(text: str) -> str:
    """Return "done", "continue", or "unparsable"."""
    for raw in text.splitlines():
        line = raw.strip().lower()
        if not line:
            continue
        first = re.split(r"[^a-z]+", line, maxsplit=1)[0]
        if first == "done":
            return "done"
        if first == "continue":
            return "continue"
        break
    lowered = text.lower()
    if re.search(r"\bcontinue\b|\bincomplete\b|\bnot (?:yet )?(?:done|complete|finished)\b",
                 lowered):
        return "continue"
    if re.search(r"\bdone\b|\bcomplete\b|\bfinished\b", lowered):
        return "done"
    return "unparsable"


def parse_react_reply(text: str) -> tuple[str, str | None]:
    """Split a thought/action reply; action is None when missing."""
    thought_lines = []
    action = None
    for raw in text.splitlines():
        line = raw.strip()
        if line.lower().startswith("action:"):
            action = line.partition(":")[2].strip()
            break
        if line.lower().startswith("thought:"):
            thought_lines.append(line.partition(":")[2].strip())
        elif line:
            thought_lines.append(line)
    return " ".join(thought_lines), action


def parse_reflection(text: str) -> tuple[str, str]:
    """Return (decision, reflection_text); decision is "redo" or "move_on"."""
    decision = None
    for raw in text.splitlines():
        line = raw.strip().lower()
        if line.startswith("decision:"):
            tail = line.partition(":")[2].strip()
            if tail.startswith("redo"):
                decision = "redo"
            elif tail.startswith("move"):
                decision = "move_on"
    if decision is None:
        decision = "move_on"
    return decision, text.strip()


def sanitize_part_name(raw: str, taken: set[str]) -> str:
    name = re.sub(r"[^A-Za-z0-9_]+", "_", raw.strip()).strip("_") or "part"
    if name[0].isdigit():
        name = "p_" + name
    candidate = name
    suffix = 2
    while candidate in taken:
        candidate = f"{name}_{suffix}"
        suffix += 1
    return candidate


def spec_from_proposal(part_name: str, kind: Kind, dims: Vec3,
                       center: Vec3) -> PrimitiveSpec:
    """Map named width/depth/height onto kind-specific parameters."""
    if kind is Kind.CUBE:
        return PrimitiveSpec(kind, part_name, center, scale=dims)
    if kind is Kind.CYLINDER:
        return PrimitiveSpec(kind, part_name, center,
                             radius=min(dims.x, dims.y) / 2.0, depth=dims.z)
    if kind is Kind.CONE:
        radius = min(dims.x, dims.y) / 2.0
        top = radius / 2.0 if "frustum" in part_name.lower() else 0.0
        return PrimitiveSpec(kind, part_name, center,
                             radius_bottom=radius, radius_top=top, depth=dims.z)
    if kind is Kind.SPHERE:
        m = min(dims.as_tuple())
        return PrimitiveSpec(kind, part_name, center, radius=m / 2.0,
                             scale=Vec3(dims.x / m, dims.y / m, dims.z / m))
    # torus: ring thickness from the height, ring radius from the width,
    # clamped so the hole stays open
    minor = dims.z / 2.0
    major = dims.x / 2.0 - dims.z / 4.0
    if major <= minor:
        major = minor * 1.5
    return PrimitiveSpec(kind, part_name, center, major_radius=major,
                         minor_radius=minor)


class Session:
    """One build session: object prompt, scene, transcript, backend."""

    def __init__(self, prompt: str, cfg: AgentConfig):
        self.object = prompt
        self.cfg = cfg
        self.state = SceneState()
        self.transcript = BuildTranscript()
        self._preamble = prompts.preamble()

    # -- low-level helpers ---------------------------------------------------

    def exchange(self, component: str, user_text: str, temperature: float):
        request = ChatRequest(
            (ChatMessage("system", self._preamble), ChatMessage("user", user_text)),
            temperature=temperature, tag=component)
        text = self.cfg.backend.complete(request)
        return self.transcript.add(component, prompt=user_text, response=text)

    def parts_so_far(self) -> str:
        if not self.state.parts:
            return "(none)"
        return "\n".join(
            f"- {p.name} ({p.dims.x:.3f} x {p.dims.y:.3f} x {p.dims.z:.3f})"
            for p in self.state.parts)

    def scene_boxes(self) -> str:
        return "\n".join(
            f"- {p.name}: min ({p.aabb.min.x:.3f}, {p.aabb.min.y:.3f}, "
            f"{p.aabb.min.z:.3f}), max ({p.aabb.max.x:.3f}, {p.aabb.max.y:.3f}, "
            f"{p.aabb.max.z:.3f})"
            for p in self.state.parts)

    @staticmethod
    def _dims_text(dims: Vec3) -> str:
        return f"{dims.x:.3f} x {dims.y:.3f} x {dims.z:.3f}"

    def _record_apply(self, spec: PrimitiveSpec, report: SpatialReport,
                      state_after: SceneState):
        return self.transcript.add(
            COMPONENT_ENV_APPLY,
            parsed=spec_to_dict(spec),
            feedback=feedback_text(report, state_after),
        )

    # -- the six components --------------------------------------------------

    def propose_part(self, critique: str | None = None) -> PartProposal:
        """Two exchanges: a part name, then its dimensions."""
        if not self.state.parts:
            ask = ("Name the most pivotal part of this object, the one that makes "
                   "attaching every later part easiest. Reply with the part name only.")
        else:
            ask = ("Name the next part to add. When the object has several similar "
                   "parts, include a spatial qualifier in the name (for example "
                   "'front right leg'). Reply with the part name only.")
        if critique:
            ask += (f"\n\nA reviewer rejected the previous proposal: {critique}\n"
                    "Propose a corrected part.")
        record = self.exchange("l3go_part_gen", self._render_part_gen(ask),
                               TEMP_GENERATOR)
        name = parse_part_name(record.response)
        if name is None:
            record.verdict = "unparsable"
            record = self.exchange(
                "l3go_part_gen",
                self._render_part_gen("Your previous reply was empty or unreadable. "
                                      + ask),
                TEMP_GENERATOR)
            name = parse_part_name(record.response)
            if name is None:
                record.verdict = "unparsable"
                raise UnparsableResponseError("part name unparsable after reprompt")
        record.parsed = name

        dims_ask = (f"Give reasonable dimensions for the part '{name}' as three "
                    "numbers: width (x), depth (y), height (z), in meters. Reply "
                    "with the three numbers separated by commas.")
        record = self.exchange("l3go_part_gen", self._render_part_gen(dims_ask),
                               TEMP_GENERATOR)
        dims = parse_dims(record.response)
        if dims is None:
            record.verdict = "unparsable"
            record = self.exchange(
                "l3go_part_gen",
                self._render_part_gen("Your previous reply could not be parsed as "
                                      "three positive numbers. " + dims_ask),
                TEMP_GENERATOR)
            dims = parse_dims(record.response)
            if dims is None:
                record.verdict = "unparsable"
                raise UnparsableResponseError("part dims unparsable after reprompt")
        record.parsed = list(dims.as_tuple())
        return PartProposal(name=name, dims=dims)

    def _render_part_gen(self, request: str) -> str:
        return prompts.render("l3go_part_gen", object=self.object,
                              parts_so_far=self.parts_so_far(), request=request)

    def critique_part(self, proposal: PartProposal) -> tuple[str, str]:
        """One critic exchange: ("approve"|"revise", reason)."""
        text = prompts.render(
            "l3go_part_critic", object=self.object, parts_so_far=self.parts_so_far(),
            part_name=proposal.name, dims=self._dims_text(proposal.dims))
        record = self.exchange("l3go_part_critic", text, TEMP_CRITIC)
        verdict, reason = parse_verdict(record.response)
        if verdict == "unparsable":
            self.transcript.note("part critic reply unparsable; treated as approval")
            verdict, reason = "approve", ""
        record.parsed = verdict
        record.verdict = verdict
        return verdict, reason

    def propose_with_critique(self) -> PartProposal:
        proposal = self.propose_part()
        for _ in range(self.cfg.part_critic_rounds):
            verdict, reason = self.critique_part(proposal)
            if verdict == "approve":
                return proposal
            proposal = self.propose_part(critique=reason)
        self.transcript.note(
            f"part critic rounds exhausted; proposal '{proposal.name}' auto-approved")
        return proposal

    def plan_spatial(self, proposal: PartProposal,
                     feedback: str = "") -> tuple[SpatialSpec | None, Vec3, Kind]:
        """Pick a base part, compute the center, and choose a shape kind."""
        if not self.state.parts:
            return None, Vec3(0.0, 0.0, 0.0), self._ask_shape(proposal)
        spatial = self._ask_base_relation(proposal, feedback)
        base_box = self.state.part(spatial.base_part).aabb
        bindings = make_bindings(base_box, proposal.dims)
        if self.cfg.ablate_program_calc:
            center = self._ask_literal_center(proposal, spatial, bindings)
        else:
            center = self._ask_voted_center(proposal, spatial, bindings)
        kind = self._ask_shape(proposal)
        return spatial, center, kind

    def _ask_base_relation(self, proposal: PartProposal, feedback: str) -> SpatialSpec:
        feedback_block = ""
        if feedback:
            feedback_block = (f"\nThe previous placement failed:\n{feedback}\n"
                              "Adjust the plan so the new part connects properly.\n")
        text = prompts.render(
            "l3go_spatial_gen", object=self.object, scene_boxes=self.scene_boxes(),
            part_name=proposal.name, dims=self._dims_text(proposal.dims),
            feedback=feedback_block)
        record = self.exchange("l3go_spatial_gen", text, TEMP_GENERATOR)
        parsed = parse_base_relation(record.response)
        if parsed is None or parsed[0] not in self.state.names():
            problem = ("missing BASE:/RELATION: lines" if parsed is None
                       else f"part {parsed[0]!r} does not exist")
            record.verdict = "unparsable"
            names = ", ".join(sorted(self.state.names()))
            retry_text = (text + f"\n\nYour previous reply was invalid ({problem}). "
                          f"BASE must be one of: {names}.")
            record = self.exchange("l3go_spatial_gen", retry_text, TEMP_GENERATOR)
            parsed = parse_base_relation(record.response)
            if parsed is None:
                record.verdict = "unparsable"
                raise UnparsableResponseError("spatial plan unparsable after reprompt")
            if parsed[0] not in self.state.names():
                record.verdict = "unparsable"
                raise UnknownBasePartError(f"base part {parsed[0]!r} does not exist")
        record.parsed = {"base": parsed[0], "relation": parsed[1]}
        return SpatialSpec(base_part=parsed[0], relation=parsed[1])

    def _coord_prompt(self, proposal: PartProposal, spatial: SpatialSpec,
                      bindings: dict, instructions: str) -> str:
        doc = "\n".join(f"{name} = {bindings[name]:.6f}"
                        for name in sorted(bindings))
        return prompts.render(
            "l3go_coord", part_name=proposal.name, base_name=spatial.base_part,
            relation=spatial.relation, bindings_doc=doc,
            calc_instructions=instructions)

    def _ask_voted_center(self, proposal: PartProposal, spatial: SpatialSpec,
                          bindings: dict) -> Vec3:
        text = self._coord_prompt(proposal, spatial, bindings,
                                  prompts.DSL_CALC_INSTRUCTIONS)
        samples: list[Vec3] = []
        for _ in range(self.cfg.vote.samples):
            value = self._one_coord_sample(text, bindings)
            if value is None:
                # failed sample: resample once, then drop it from the vote
                value = self._one_coord_sample(text, bindings)
            if value is not None:
                samples.append(value)
        if not samples:
            raise AllSamplesUnparsableError(
                "every coordinate program failed to parse or evaluate")
        return majority_vote(samples, self.cfg.vote)

    def _one_coord_sample(self, text: str, bindings: dict) -> Vec3 | None:
        record = self.exchange("l3go_coord", text, TEMP_GENERATOR)
        try:
            program = parse_program(record.response)
            value = eval_program(program, bindings)
        except DslError as exc:
            record.verdict = "failed"
            record.feedback = str(exc)
            return None
        record.parsed = list(value.as_tuple())
        record.verdict = "evaluated"
        return value

    def _ask_literal_center(self, proposal: PartProposal, spatial: SpatialSpec,
                            bindings: dict) -> Vec3:
        text = self._coord_prompt(proposal, spatial, bindings,
                                  prompts.LITERAL_CALC_INSTRUCTIONS)
        record = self.exchange("l3go_coord", text, TEMP_GENERATOR)
        value = parse_triple(record.response)
        if value is None:
            record.verdict = "unparsable"
            record = self.exchange("l3go_coord", text + "\n\nYour previous reply "
                                   "did not contain three numbers.", TEMP_GENERATOR)
            value = parse_triple(record.response)
            if value is None:
                record.verdict = "unparsable"
                raise UnparsableResponseError("literal center unparsable after reprompt")
        record.parsed = list(value.as_tuple())
        return value

    def _ask_shape(self, proposal: PartProposal) -> Kind:
        text = prompts.render("l3go_shape", object=self.object,
                              part_name=proposal.name,
                              dims=self._dims_text(proposal.dims))
        record = self.exchange("l3go_shape", text, TEMP_CRITIC)
        kind = parse_kind(record.response)
        if kind is None:
            record.verdict = "unparsable"
            record = self.exchange("l3go_shape", text + "\n\nYour previous reply "
                                   "did not name one of the five solids.", TEMP_CRITIC)
            kind = parse_kind(record.response)
            if kind is None:
                record.verdict = "unparsable"
                self.transcript.note("shape kind unparsable; defaulted to cube")
                kind = Kind.CUBE
        record.parsed = kind.value
        return kind

    def apply_and_critique(self, proposal: PartProposal, center: Vec3,
                           kind: Kind) -> PlacementOutcome:
        """Place the part; on a spatial flag, replan and retry up to the cap."""
        part_name = sanitize_part_name(proposal.name, self.state.names())
        attempts = 0
        while True:
            attempts += 1
            spec = spec_from_proposal(part_name, kind, proposal.dims, center)
            state_after, report = apply_action(self.state, spec, self.cfg.touch_eps)
            record = self._record_apply(spec, report, state_after)
            flagged = bool(report.flags) and not self.cfg.ablate_spatial_critic
            if not flagged:
                record.verdict = VERDICT_ACCEPTED
                self.state = state_after
                return PlacementOutcome("accepted", report, attempts)
            if attempts > self.cfg.spatial_retry_rounds:
                record.verdict = VERDICT_ACCEPTED
                self.state = state_after
                self.transcript.note(
                    f"spatial retries exhausted; flagged placement of "
                    f"'{part_name}' kept")
                return PlacementOutcome("accepted_with_flags", report, attempts)
            record.verdict = VERDICT_REJECTED
            flags = ", ".join(sorted(f.value for f in report.flags))
            feedback = f"[{flags}] {feedback_text(report, state_after)}"
            spatial, center, kind = self.plan_spatial(proposal, feedback)

    def completion_check(self) -> tuple[bool, bool]:
        """Ask whether the object is finished; the part cap forces Done.

        Returns (done, forced_by_cap).
        """
        text = prompts.render("l3go_completion", object=self.object,
                              parts_so_far=self.parts_so_far())
        record = self.exchange("l3go_completion", text, TEMP_CRITIC)
        answer = parse_done(record.response)
        if answer == "unparsable":
            self.transcript.note("completion reply unparsable; treated as CONTINUE")
            answer = "continue"
        record.parsed = answer
        record.verdict = answer
        if answer == "done":
            return True, False
        if len(self.state.parts) >= self.cfg.max_parts:
            self.transcript.note("max parts reached; build stopped")
            return True, True
        return False, False


def _finish(session: Session, status: str, reason: str = "") -> BuildResult:
    session.transcript.finish(status, reason)
    return BuildResult(scene=session.state, transcript=session.transcript,
                       prompt=session.object)


def run_l3go(prompt: str, cfg: AgentConfig) -> BuildResult:
    """The full part-by-part loop with critics and coordinate voting."""
    session = Session(prompt, cfg)
    try:
        while True:
            proposal = session.propose_with_critique()
            spatial, center, kind = session.plan_spatial(proposal)
            session.apply_and_critique(proposal, center, kind)
            done, forced = session.completion_check()
            if done:
                return _finish(session,
                               STATUS_MAX_PARTS if forced else STATUS_COMPLETED)
    except GatewayError as exc:
        return _finish(session, STATUS_ABORTED, f"backend error: {exc}")
    except AgentError as exc:
        return _finish(session, STATUS_ABORTED, str(exc))


def _react_loop(prompt: str, cfg: AgentConfig, reflect: bool) -> BuildResult:
    session = Session(prompt, cfg)
    blocks: list[str] = []
    try:
        for _ in range(cfg.max_steps):
            history = "\n\n".join(blocks) if blocks else "(none yet)"
            text = prompts.render("react", object=prompt,
                                  grammar_doc=prompts.ACTION_GRAMMAR_DOC,
                                  history=history)
            record = session.exchange("react", text, TEMP_GENERATOR)
            thought, action = parse_react_reply(record.response)
            record.parsed = {"thought": thought, "action": action}
            if action is None:
                observation = ("Reply format error: no 'Action:' line found. Use "
                               "'Action: <action line>' or 'Action: done'.")
                blocks.append(f"Thought: {thought}\nAction: (missing)\n"
                              f"Observation: {observation}")
                continue
            if action.strip().lower() == "done":
                record.verdict = "done"
                return _finish(session, STATUS_COMPLETED)
            observation, applied_spec = _apply_script_line(session, action)
            block = (f"Thought: {thought}\nAction: {action}\n"
                     f"Observation: {observation}")
            if reflect and (applied_spec is not None or observation.startswith("Action failed")):
                block += "\n" + _reflect_on_part(session, applied_spec, observation)
            blocks.append(block)
        session.transcript.note("step limit reached")
        return _finish(session, STATUS_MAX_PARTS)
    except GatewayError as exc:
        return _finish(session, STATUS_ABORTED, f"backend error: {exc}")


def _apply_script_line(session: Session, action: str) -> tuple[str, PrimitiveSpec | None]:
    try:
        spec = parse_action_line(action)
        if spec is None:
            return "Action failed: empty action line.", None
        state_after, report = apply_action(session.state, spec, session.cfg.touch_eps)
    except (BlenvError, GeometryError) as exc:
        session.transcript.add(COMPONENT_ENV_APPLY, feedback=f"Action failed: {exc}",
                               verdict="error")
        return f"Action failed: {exc}", None
    observation = feedback_text(report, state_after)
    record = session._record_apply(spec, report, state_after)
    record.verdict = VERDICT_ACCEPTED
    session.state = state_after
    return observation, spec


def _reflect_on_part(session: Session, spec: PrimitiveSpec | None,
                     observation: str) -> str:
    text = prompts.render("reflexion_reflect", object=session.object,
                          feedback=observation)
    record = session.exchange("reflexion_reflect", text, TEMP_CRITIC)
    decision, reflection = parse_reflection(record.response)
    record.parsed = decision
    record.verdict = decision
    if decision == "redo":
        if spec is not None and spec.name in session.state.names():
            session.state = remove_part(session.state, spec.name)
            session.transcript.add(COMPONENT_ENV_REMOVE,
                                   parsed={"name": spec.name},
                                   verdict="removed")
            return f"Reflection: {reflection}\n(The part '{spec.name}' was removed; redo it.)"
        session.transcript.note("redo requested but there is no part to remove")
        return f"Reflection: {reflection}\n(Nothing to remove.)"
    return f"Reflection: {reflection}"


def run_react_b(prompt: str, cfg: AgentConfig) -> BuildResult:
    """Thought / action / observation loop over the action-script grammar."""
    return _react_loop(prompt, cfg, reflect=False)


def run_reflexion_b(prompt: str, cfg: AgentConfig) -> BuildResult:
    """ReAct plus a post-action reflection that may redo the last part."""
    return _react_loop(prompt, cfg, reflect=True)


def run_single_shot(prompt: str, cfg: AgentConfig) -> BuildResult:
    """One exchange produces a whole action script; no critics."""
    session = Session(prompt, cfg)
    try:
        text = prompts.render("single_shot", object=prompt,
                              grammar_doc=prompts.ACTION_GRAMMAR_DOC)
        record = session.exchange("single_shot", text, TEMP_GENERATOR)
    except GatewayError as exc:
        return _finish(session, STATUS_ABORTED, f"backend error: {exc}")
    applied = 0
    for lineno, raw in enumerate(record.response.splitlines(), start=1):
        try:
            spec = parse_action_line(raw, lineno)
            if spec is None:
                continue
            state_after, report = apply_action(session.state, spec, session.cfg.touch_eps)
        except (BlenvError, GeometryError) as exc:
            return _finish(session, STATUS_ABORTED, f"script error at line {lineno}: {exc}")
        env_record = session._record_apply(spec, report, state_after)
        env_record.verdict = VERDICT_ACCEPTED
        session.state = state_after
        applied += 1
    if applied == 0:
        return _finish(session, STATUS_ABORTED, "empty script")
    record.verdict = "parsed"
    return _finish(session, STATUS_COMPLETED)
