"""Build transcripts: the ordered, replayable log of one build session.

Every LLM exchange, environment action, and note is one StepRecord.  The
serialized form carries no timestamps or absolute paths, so two identical
runs produce byte-identical files.
"""

import hashlib
import json
from dataclasses import dataclass, field
from typing import Any

from .blenv import BlenvError, SceneState, apply_action, remove_part
from .geometry import GeometryError, Kind, PrimitiveSpec, Vec3

STATUS_COMPLETED = "completed"
STATUS_MAX_PARTS = "max_parts_reached"
STATUS_ABORTED = "aborted"

COMPONENT_ENV_APPLY = "env.apply_action"
COMPONENT_ENV_REMOVE = "env.remove_part"
COMPONENT_NOTE = "note"
COMPONENT_TERMINAL = "terminal"

VERDICT_ACCEPTED = "accepted"
VERDICT_REJECTED = "rejected"


class TranscriptError(Exception):
    pass


class CorruptTranscriptError(TranscriptError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass
class StepRecord:
    step: int
    component: str
    prompt: str = ""
    response: str = ""
    parsed: Any = None
    feedback: str = ""
    verdict: str = ""


@dataclass
class BuildTranscript:
    steps: list[StepRecord] = field(default_factory=list)
    status: str = ""
    abort_reason: str = ""

    def add(self, component: str, **fields) -> StepRecord:
        record = StepRecord(step=len(self.steps), component=component, **fields)
        self.steps.append(record)
        return record

    def note(self, text: str) -> StepRecord:
        return self.add(COMPONENT_NOTE, feedback=text)

    def finish(self, status: str, reason: str = "") -> None:
        self.status = status
        self.abort_reason = reason
        verdict = status if not reason else f"{status}: {reason}"
        self.add(COMPONENT_TERMINAL, verdict=verdict)

    def llm_steps(self) -> list[StepRecord]:
        return [s for s in self.steps
                if s.component not in (COMPONENT_ENV_APPLY, COMPONENT_ENV_REMOVE,
                                       COMPONENT_NOTE, COMPONENT_TERMINAL)]


@dataclass
class BuildResult:
    scene: SceneState
    transcript: BuildTranscript
    prompt: str

    @property
    def completed(self) -> bool:
        return self.transcript.status == STATUS_COMPLETED

    @property
    def aborted(self) -> bool:
        return self.transcript.status == STATUS_ABORTED


def spec_to_dict(spec: PrimitiveSpec) -> dict:
    return {
        "name": spec.name,
        "kind": spec.kind.value,
        "params": spec.params(),
        "location": list(spec.location.as_tuple()),
        "scale": list(spec.scale.as_tuple()),
    }


def spec_from_dict(doc: dict) -> PrimitiveSpec:
    return PrimitiveSpec(
        kind=Kind(doc["kind"]),
        name=doc["name"],
        location=Vec3(*doc["location"]),
        scale=Vec3(*doc["scale"]),
        **doc.get("params", {}),
    )


def transcript_to_jsonl(transcript: BuildTranscript) -> str:
    lines = []
    for s in transcript.steps:
        record = {
            "step": s.step,
            "component": s.component,
            "prompt_sha256": hashlib.sha256(s.prompt.encode("utf-8")).hexdigest(),
            "prompt": s.prompt,
            "response": s.response,
            "parsed": s.parsed,
            "feedback": s.feedback,
            "verdict": s.verdict,
        }
        lines.append(json.dumps(record, ensure_ascii=True))
    return "\n".join(lines) + ("\n" if lines else "")


def replay_scene(jsonl_text: str, touch_eps: float = 1e-3) -> SceneState:
    """Rebuild the scene from a transcript's accepted actions and removals."""
    state = SceneState()
    for lineno, raw in enumerate(jsonl_text.splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            record = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise CorruptTranscriptError(lineno, f"bad JSON: {exc}") from exc
        if not isinstance(record, dict) or "component" not in record:
            raise CorruptTranscriptError(lineno, "not a step record")
        component = record["component"]
        try:
            if component == COMPONENT_ENV_APPLY and record.get("verdict") == VERDICT_ACCEPTED:
                state, _ = apply_action(state, spec_from_dict(record["parsed"]), touch_eps)
            elif component == COMPONENT_ENV_REMOVE:
                state = remove_part(state, record["parsed"]["name"])
        except (KeyError, TypeError, ValueError, BlenvError, GeometryError) as exc:
            raise CorruptTranscriptError(lineno, f"bad env step: {exc}") from exc
    return state
