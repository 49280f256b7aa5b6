"""Named deterministic policies for the scripted backend.

These make offline pipelines runnable end-to-end: a tiny deterministic
builder for generating placeholder objects, a judge that reads the true
category out of the request tag (for plumbing checks at full scale), and a
seeded judge that misclassifies a fixed subset of chairs.
"""

import random

from .gateway import BackendError, ChatRequest

# judge tags look like "judge/<category>/<index>"
_JUDGE_SEED = 2024
_WRONG_CHAIR_COUNT = 4


def _judge_truth(tag: str) -> tuple[str, int]:
    parts = tag.split("/")
    if len(parts) < 3 or parts[0] != "judge":
        raise BackendError(f"judge policy needs a judge/<category>/<index> tag, got {tag!r}")
    try:
        index = int(parts[2])
    except ValueError:
        raise BackendError(f"bad judge tag index in {tag!r}") from None
    return parts[1], index


def oracle_judge(req: ChatRequest, occurrence: int) -> str:
    """Always answers with the true category embedded in the tag."""
    category, _ = _judge_truth(req.tag)
    return category


_wrong_chair_indices = frozenset(
    random.Random(_JUDGE_SEED).sample(range(10), _WRONG_CHAIR_COUNT))


def chair_six_of_ten_judge(req: ChatRequest, occurrence: int) -> str:
    """Oracle judge except for a seeded 4-of-10 subset of chairs."""
    category, index = _judge_truth(req.tag)
    if category == "chair" and index in _wrong_chair_indices:
        return "table"
    return category


def tiny_builder(req: ChatRequest, occurrence: int) -> str:
    """One fixed three-part action script, whatever the object prompt."""
    return ("cube name=base location=(0,0,0.25) scale=(1,1,0.5)\n"
            "cylinder name=post radius=0.1 depth=0.8 location=(0,0,0.9)\n"
            "sphere name=top radius=0.2 location=(0,0,1.5)\n")


_REGISTRY = {
    "oracle-judge": oracle_judge,
    "chair-six-of-ten-judge": chair_six_of_ten_judge,
    "tiny-builder": tiny_builder,
}


def get_policy(name: str):
    try:
        return _REGISTRY[name]
    except KeyError:
        raise ValueError(f"unknown scripted policy {name!r}; "
                         f"known: {', '.join(sorted(_REGISTRY))}") from None
