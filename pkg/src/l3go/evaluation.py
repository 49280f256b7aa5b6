"""Render-and-judge evaluation: classification accuracy, rater agreement,
and pairwise preference manifests.

A vision-capable (or scripted) judge sees all turntable views of an object
at once and must answer with one category name.  Judge refusals are
recorded outcomes, not crashes.
"""

import base64
import random
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .gateway import Backend, ChatMessage, ChatRequest
from .render import encode_png


class EvalError(Exception):
    pass


class LengthMismatchError(EvalError):
    pass


class MissingRunsError(EvalError):
    def __init__(self, prompt: str, model: str):
        super().__init__(f"model {model!r} has no run for prompt {prompt!r}")
        self.prompt = prompt
        self.model = model


UNPARSABLE = "unparsable"

JUDGE_PROMPT = ("What object do you see in these images? Answer with a single "
                "object name. Your answer must be one of the following options: "
                "[{options}]")

REFUSAL_PATTERNS = (
    "i cannot assist",
    "i can't assist",
    "i cannot help",
    "i can't help",
    "i'm sorry",
    "i am sorry",
    "i cannot provide",
    "unable to assist",
)


def load_categories() -> list[str]:
    text = (resources.files("l3go") / "data" / "shapenet13.txt").read_text("utf-8")
    return [line.strip() for line in text.splitlines() if line.strip()]


def load_ufo_prompts() -> list[str]:
    text = (resources.files("l3go") / "data" / "ufo_prompts.txt").read_text("utf-8")
    return [line.strip() for line in text.splitlines() if line.strip()]


@dataclass(frozen=True)
class JudgeConfig:
    backend: Backend
    categories: tuple[str, ...]
    prompt: str | None = None  # None = default classification prompt

    def __post_init__(self):
        if not self.categories:
            raise ValueError("categories must be nonempty")
        if len(set(self.categories)) != len(self.categories):
            raise ValueError("categories must be unique")

    def prompt_text(self) -> str:
        if self.prompt is not None:
            return self.prompt
        return JUDGE_PROMPT.format(options=", ".join(self.categories))


@dataclass(frozen=True)
class EvalRecord:
    object_id: str
    true_category: str
    predicted: str
    raw_reply: str
    refused: bool = False

    def to_dict(self) -> dict:
        return {
            "object_id": self.object_id,
            "true_category": self.true_category,
            "predicted": self.predicted,
            "raw_reply": self.raw_reply,
            "refused": self.refused,
        }


def normalize_label(reply: str, categories: Sequence[str]) -> str:
    """Map a free-text reply onto exactly one category, else `unparsable`."""
    cleaned = re.sub(r"[^a-z0-9 ]+", " ", reply.lower())
    tokens = set(cleaned.split())
    exact = cleaned.strip()
    if exact in categories:
        return exact
    hits = [c for c in categories if c in tokens]
    if len(hits) == 1:
        return hits[0]
    return UNPARSABLE


def is_refusal(reply: str) -> bool:
    lowered = reply.lower()
    return any(pattern in lowered for pattern in REFUSAL_PATTERNS)


def _image_message(images: Sequence[np.ndarray], prompt: str) -> ChatMessage:
    parts = [{"type": "text", "text": prompt}]
    for image in images:
        encoded = base64.b64encode(encode_png(image)).decode("ascii")
        parts.append({"type": "image_url",
                      "image_url": {"url": f"data:image/png;base64,{encoded}"}})
    return ChatMessage("user", tuple(parts))


def classify_mesh(images: Sequence[np.ndarray], judge: JudgeConfig,
                  object_id: str = "", true_category: str = "") -> EvalRecord:
    """One multimodal request with every view; the reply is normalized."""
    request = ChatRequest(
        (_image_message(images, judge.prompt_text()),),
        temperature=0.0,
        tag=f"judge/{object_id}" if object_id else "judge",
    )
    reply = judge.backend.complete(request)
    refused = is_refusal(reply)
    predicted = UNPARSABLE if refused else normalize_label(reply, judge.categories)
    return EvalRecord(object_id=object_id, true_category=true_category,
                      predicted=predicted, raw_reply=reply, refused=refused)


@dataclass(frozen=True)
class AccuracyReport:
    per_category: dict[str, float]
    mean: float
    total_records: int

    def table_text(self) -> str:
        width = max([len(c) for c in self.per_category] + [4])
        lines = [f"{'category'.ljust(width)}  accuracy"]
        for category in sorted(self.per_category):
            lines.append(f"{category.ljust(width)}  {self.per_category[category]:.3f}")
        lines.append(f"{'mean'.ljust(width)}  {self.mean:.3f}")
        return "\n".join(lines)


def aggregate_accuracy(records: Sequence[EvalRecord]) -> AccuracyReport:
    """Per-category accuracy and their unweighted mean; unparsable counts wrong."""
    totals: dict[str, int] = {}
    correct: dict[str, int] = {}
    for record in records:
        totals[record.true_category] = totals.get(record.true_category, 0) + 1
        if record.predicted == record.true_category:
            correct[record.true_category] = correct.get(record.true_category, 0) + 1
    per_category = {c: correct.get(c, 0) / totals[c] for c in totals}
    mean = sum(per_category.values()) / len(per_category) if per_category else 0.0
    return AccuracyReport(per_category=per_category, mean=mean,
                          total_records=len(records))


def cohens_kappa(labels_a: Sequence[str], labels_b: Sequence[str]) -> float:
    """Chance-corrected agreement between two raters over the same items."""
    if len(labels_a) != len(labels_b):
        raise LengthMismatchError(
            f"label vectors differ in length: {len(labels_a)} vs {len(labels_b)}")
    if not labels_a:
        raise LengthMismatchError("label vectors are empty")
    a, b = list(labels_a), list(labels_b)
    n = len(a)
    observed = sum(x == y for x, y in zip(a, b)) / n
    expected = sum((a.count(lab) / n) * (b.count(lab) / n)
                   for lab in set(a) | set(b))
    if expected == 1.0:
        # Both raters constant on the same label: perfect, vacuous agreement.
        return 1.0
    return (observed - expected) / (1.0 - expected)


# ---------------------------------------------------------------------------
# UFO pairwise preference manifests.
# ---------------------------------------------------------------------------

ATTENTION_CHECKS = 4


def ufo_manifest(model_a_runs: Mapping[str, str | Path],
                 model_b_runs: Mapping[str, str | Path],
                 prompts: Sequence[str], *, model_a: str = "model_a",
                 model_b: str = "model_b", seed: int = 0,
                 attention_checks: int = ATTENTION_CHECKS) -> list[dict]:
    """Pair two models' runs per prompt with a seeded left/right assignment.

    Each trial row records which side each model landed on (the answer key);
    attention-check rows state the expected side outright.
    """
    for prompt in prompts:
        if prompt not in model_a_runs:
            raise MissingRunsError(prompt, model_a)
        if prompt not in model_b_runs:
            raise MissingRunsError(prompt, model_b)
    rng = random.Random(seed)
    rows = []
    for prompt in prompts:
        a_left = rng.random() < 0.5
        left_model, right_model = (model_a, model_b) if a_left else (model_b, model_a)
        left_path = model_a_runs[prompt] if a_left else model_b_runs[prompt]
        right_path = model_b_runs[prompt] if a_left else model_a_runs[prompt]
        rows.append({
            "kind": "trial",
            "prompt": prompt,
            "left": str(left_path),
            "right": str(right_path),
            "left_model": left_model,
            "right_model": right_model,
        })
    for i in range(attention_checks):
        expected = "left" if rng.random() < 0.5 else "right"
        rows.append({
            "kind": "attention_check",
            "prompt": f"Attention check {i + 1}: select the {expected.upper()} option.",
            "left": "",
            "right": "",
            "expected": expected,
        })
    order = list(range(len(rows)))
    rng.shuffle(order)
    return [dict(rows[i], index=slot) for slot, i in enumerate(order)]
