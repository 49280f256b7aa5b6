#!/usr/bin/env python3
"""Regenerate the bundled replay fixtures under fixtures/.

Each fixture is produced by driving an agent with a scripted response
sequence through a recording backend; the recorded store then replays the
same build deterministically with no scripting involved.

Usage: python scripts/make_fixtures.py
"""

import shutil
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from l3go.agents import AgentConfig, run_l3go
from l3go.gateway import ResponseSequence, ScriptedBackend, record_session
from l3go.transcript import STATUS_COMPLETED


def chair_sequence():
    """A six-part chair: seat, four corner legs, backrest."""
    steps = [
        ("l3go_part_gen", "seat"),
        ("l3go_part_gen", "0.9, 0.9, 0.12"),
        ("l3go_part_critic", "APPROVE"),
        ("l3go_shape", "cube"),
        ("l3go_completion", "CONTINUE"),
    ]
    legs = [
        ("front left leg", "x = base.min.x + part.size.x / 2",
         "y = base.max.y - part.size.y / 2"),
        ("front right leg", "x = base.max.x - part.size.x / 2",
         "y = base.max.y - part.size.y / 2"),
        ("back left leg", "x = base.min.x + part.size.x / 2",
         "y = base.min.y + part.size.y / 2"),
        ("back right leg", "x = base.max.x - part.size.x / 2",
         "y = base.min.y + part.size.y / 2"),
    ]
    for name, px, py in legs:
        corner = name.replace(" leg", "")
        program = f"{px}\n{py}\nz = base.min.z - part.size.z / 2"
        steps += [
            ("l3go_part_gen", name),
            ("l3go_part_gen", "0.08, 0.08, 0.45"),
            ("l3go_part_critic", "APPROVE"),
            ("l3go_spatial_gen",
             f"BASE: seat\nRELATION: attach under the seat at its {corner} "
             "corner, flush with the seat edges"),
            ("l3go_coord", program),
            ("l3go_coord", program),
            ("l3go_coord", program),
            ("l3go_shape", "cylinder"),
            ("l3go_completion", "CONTINUE"),
        ]
    backrest_program = ("x = base.center.x\n"
                        "y = base.min.y + part.size.y / 2\n"
                        "z = base.max.z + part.size.z / 2")
    steps += [
        ("l3go_part_gen", "backrest"),
        ("l3go_part_gen", "0.9, 0.08, 0.5"),
        ("l3go_part_critic", "APPROVE"),
        ("l3go_spatial_gen",
         "BASE: seat\nRELATION: stand on top of the seat flush with its back edge"),
        ("l3go_coord", backrest_program),
        ("l3go_coord", backrest_program),
        ("l3go_coord", backrest_program),
        ("l3go_shape", "cube"),
        ("l3go_completion", "DONE"),
    ]
    return steps


def faulty_leg_sequence():
    """A stool whose leg is first placed floating, then corrected on retry."""
    bad_program = ("x = base.center.x\n"
                   "y = base.center.y\n"
                   "z = base.min.z - part.size.z / 2 - 0.4")
    good_program = ("x = base.center.x\n"
                    "y = base.center.y\n"
                    "z = base.min.z - part.size.z / 2")
    return [
        ("l3go_part_gen", "seat"),
        ("l3go_part_gen", "0.4, 0.4, 0.06"),
        ("l3go_part_critic", "APPROVE"),
        ("l3go_shape", "cylinder"),
        ("l3go_completion", "CONTINUE"),
        ("l3go_part_gen", "center leg"),
        ("l3go_part_gen", "0.08, 0.08, 0.5"),
        ("l3go_part_critic", "APPROVE"),
        ("l3go_spatial_gen",
         "BASE: seat\nRELATION: attach centered under the seat"),
        ("l3go_coord", bad_program),
        ("l3go_coord", bad_program),
        ("l3go_coord", bad_program),
        ("l3go_shape", "cylinder"),
        ("l3go_spatial_gen",
         "BASE: seat\nRELATION: attach centered under the seat, touching its underside"),
        ("l3go_coord", good_program),
        ("l3go_coord", good_program),
        ("l3go_coord", good_program),
        ("l3go_shape", "cylinder"),
        ("l3go_completion", "DONE"),
    ]


def record(name: str, prompt: str, sequence, expect_parts: int):
    store = ROOT / "fixtures" / name
    if store.exists():
        shutil.rmtree(store)
    backend = record_session(ScriptedBackend(ResponseSequence(sequence)), store)
    result = run_l3go(prompt, AgentConfig(backend=backend))
    if result.transcript.status != STATUS_COMPLETED:
        raise SystemExit(f"{name}: unexpected status {result.transcript.status} "
                         f"({result.transcript.abort_reason})")
    if len(result.scene.parts) != expect_parts:
        raise SystemExit(f"{name}: expected {expect_parts} parts, "
                         f"got {len(result.scene.parts)}")
    print(f"{name}: {len(list(store.glob('*.json')))} exchanges, "
          f"{len(result.scene.parts)} parts")


def main():
    record("chair", "chair", chair_sequence(), expect_parts=6)
    record("faulty_leg", "stool", faulty_leg_sequence(), expect_parts=2)


if __name__ == "__main__":
    main()
