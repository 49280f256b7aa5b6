from pathlib import Path

import pytest

from l3go.agents import (
    AgentConfig,
    AllSamplesUnparsableError,
    PartProposal,
    Session,
    UnknownBasePartError,
    UnparsableResponseError,
    parse_base_relation,
    parse_dims,
    parse_done,
    parse_kind,
    parse_part_name,
    parse_react_reply,
    parse_reflection,
    parse_verdict,
    run_l3go,
    run_react_b,
    run_reflexion_b,
    run_single_shot,
    sanitize_part_name,
    spec_from_proposal,
)
from l3go.blenv import contact_graph_connected, scene_to_json
from l3go.gateway import (
    Backend,
    BackendError,
    ReplayBackend,
    ResponseSequence,
    ScriptedBackend,
)
from l3go.geometry import Kind, Vec3
from l3go.transcript import (
    STATUS_ABORTED,
    STATUS_COMPLETED,
    STATUS_MAX_PARTS,
    replay_scene,
    transcript_to_jsonl,
)

ROOT = Path(__file__).resolve().parents[1]
CHAIR_STORE = ROOT / "fixtures" / "chair"
FAULTY_STORE = ROOT / "fixtures" / "faulty_leg"


def seq_backend(steps):
    return ScriptedBackend(ResponseSequence(steps))


def cfg_for(steps, **kw):
    return AgentConfig(backend=seq_backend(steps), **kw)


class FailingBackend(Backend):
    def _complete(self, req, req_hash, occurrence):
        raise BackendError("boom")


class CountingBackend(Backend):
    def __init__(self, inner):
        super().__init__()
        self.inner = inner
        self.calls = 0

    def _complete(self, req, req_hash, occurrence):
        self.calls += 1
        return self.inner._complete(req, req_hash, occurrence)


class TestReplyParsers:
    def test_part_name(self):
        assert parse_part_name("  seat.\n") == "seat"
        assert parse_part_name("'front right leg'") == "front right leg"
        assert parse_part_name("\n\n") is None

    def test_dims(self):
        assert parse_dims("0.4, 0.4, 0.05") == Vec3(0.4, 0.4, 0.05)
        assert parse_dims("w=1 d=2 h=3") == Vec3(1, 2, 3)
        assert parse_dims("just two: 1, 2") is None
        assert parse_dims("-1, 2, 3") is None

    def test_verdict(self):
        assert parse_verdict("APPROVE") == ("approve", "")
        assert parse_verdict("REVISE: too vague")[0] == "revise"
        assert parse_verdict("hmm")[0] == "unparsable"

    def test_base_relation(self):
        got = parse_base_relation("BASE: seat\nRELATION: under the left corner")
        assert got == ("seat", "under the left corner")
        assert parse_base_relation("no structure here") is None

    def test_kind(self):
        assert parse_kind("Cylinder.") is Kind.CYLINDER
        assert parse_kind("a cube, not a sphere") is Kind.CUBE
        assert parse_kind("dodecahedron") is None

    def test_done(self):
        assert parse_done("DONE") == "done"
        assert parse_done("CONTINUE") == "continue"
        assert parse_done("Done. Nothing is missing.") == "done"
        assert parse_done("the chair is not complete") == "continue"
        assert parse_done("the build is not yet finished") == "continue"
        assert parse_done("???") == "unparsable"

    def test_react_reply(self):
        thought, action = parse_react_reply("Thought: add the top\nAction: done")
        assert thought == "add the top"
        assert action == "done"
        _, action = parse_react_reply("no action here")
        assert action is None

    def test_reflection(self):
        assert parse_reflection("meh\nDecision: redo")[0] == "redo"
        assert parse_reflection("fine\nDecision: move on")[0] == "move_on"
        assert parse_reflection("silence")[0] == "move_on"

    def test_sanitize(self):
        assert sanitize_part_name("front right leg", set()) == "front_right_leg"
        assert sanitize_part_name("front right leg", {"front_right_leg"}) == "front_right_leg_2"
        assert sanitize_part_name("42nd part", set()) == "p_42nd_part"


class TestSpecFromProposal:
    def test_cube_scale_is_dims(self):
        spec = spec_from_proposal("slab", Kind.CUBE, Vec3(2, 1, 0.2), Vec3(0, 0, 0))
        assert spec.scale == Vec3(2, 1, 0.2)

    def test_cylinder_radius_from_min_footprint(self):
        spec = spec_from_proposal("leg", Kind.CYLINDER, Vec3(0.1, 0.2, 0.5), Vec3(0, 0, 0))
        assert spec.radius == pytest.approx(0.05)
        assert spec.depth == pytest.approx(0.5)

    def test_cone_apex_by_default_frustum_by_name(self):
        apex = spec_from_proposal("spike", Kind.CONE, Vec3(1, 1, 2), Vec3(0, 0, 0))
        assert apex.radius_top == 0.0
        frustum = spec_from_proposal("frustum base", Kind.CONE, Vec3(1, 1, 2), Vec3(0, 0, 0))
        assert frustum.radius_top == pytest.approx(0.25)

    def test_sphere_scaled_to_dims(self):
        from l3go.geometry import analytic_aabb

        spec = spec_from_proposal("blob", Kind.SPHERE, Vec3(1, 2, 0.5), Vec3(0, 0, 0))
        size = analytic_aabb(spec).size
        assert size.x == pytest.approx(1)
        assert size.y == pytest.approx(2)
        assert size.z == pytest.approx(0.5)

    def test_torus_clamped_valid(self):
        spec = spec_from_proposal("ring", Kind.TORUS, Vec3(0.5, 0.5, 2), Vec3(0, 0, 0))
        assert 0 < spec.minor_radius < spec.major_radius


class TestProposeAndCritique:
    def test_pivotal_part_for_chair(self):
        session = Session("chair", cfg_for([
            ("l3go_part_gen", "seat"),
            ("l3go_part_gen", "0.4, 0.4, 0.05"),
        ]))
        proposal = session.propose_part()
        assert proposal.name == "seat"
        assert proposal.dims == Vec3(0.4, 0.4, 0.05)
        assert "pivotal" in session.transcript.steps[0].prompt

    def test_garbled_name_aborts_after_reprompt(self):
        session = Session("chair", cfg_for([
            ("l3go_part_gen", ""),
            ("l3go_part_gen", "\n\n"),
        ]))
        with pytest.raises(UnparsableResponseError):
            session.propose_part()

    def test_run_aborts_on_unparsable(self):
        result = run_l3go("chair", cfg_for([
            ("l3go_part_gen", ""),
            ("l3go_part_gen", ""),
        ]))
        assert result.transcript.status == STATUS_ABORTED
        assert result.scene.parts == ()

    def test_revise_then_approve(self):
        session = Session("chair", cfg_for([
            ("l3go_part_gen", "leg"),
            ("l3go_part_gen", "0.05, 0.05, 0.4"),
            ("l3go_part_critic", "REVISE: which leg? add a spatial qualifier"),
            ("l3go_part_gen", "front right leg"),
            ("l3go_part_gen", "0.05, 0.05, 0.4"),
            ("l3go_part_critic", "APPROVE"),
        ]))
        proposal = session.propose_with_critique()
        assert proposal.name == "front right leg"
        critic_steps = [s for s in session.transcript.steps
                        if s.component == "l3go_part_critic"]
        assert [s.verdict for s in critic_steps] == ["revise", "approve"]

    def test_critic_cap_auto_approves_with_note(self):
        steps = []
        for i in range(4):
            steps.append(("l3go_part_gen", f"leg {i}"))
            steps.append(("l3go_part_gen", "0.1, 0.1, 0.1"))
            if i < 3:
                steps.append(("l3go_part_critic", "REVISE: still vague"))
        session = Session("chair", cfg_for(steps, part_critic_rounds=3))
        proposal = session.propose_with_critique()
        assert proposal.name == "leg 3"
        notes = [s for s in session.transcript.steps if s.component == "note"]
        assert any("auto-approved" in s.feedback for s in notes)


class TestPlanSpatial:
    def test_first_part_at_origin(self):
        session = Session("chair", cfg_for([("l3go_shape", "cube")]))
        spatial, center, kind = session.plan_spatial(
            PartProposal("seat", Vec3(0.4, 0.4, 0.05)))
        assert spatial is None
        assert center == Vec3(0, 0, 0)
        assert kind is Kind.CUBE

    def _seat_session(self, steps):
        session = Session("chair", cfg_for([
            ("l3go_part_gen", "seat"),
            ("l3go_part_gen", "0.9, 0.9, 0.12"),
            ("l3go_part_critic", "APPROVE"),
            ("l3go_shape", "cube"),
        ] + steps))
        proposal = session.propose_with_critique()
        _, center, kind = session.plan_spatial(proposal)
        session.apply_and_critique(proposal, center, kind)
        return session

    def test_vote_uses_agreeing_samples(self):
        agree = "x = base.min.x\ny = 0\nz = 0"
        outlier = "x = base.max.x\ny = 0\nz = 0"
        session = self._seat_session([
            ("l3go_spatial_gen", "BASE: seat\nRELATION: on the left side"),
            ("l3go_coord", agree),
            ("l3go_coord", outlier),
            ("l3go_coord", agree),
            ("l3go_shape", "cube"),
        ])
        _, center, _ = session.plan_spatial(PartProposal("left panel", Vec3(0.1, 0.9, 0.12)))
        assert center.x == pytest.approx(-0.45)

    def test_unparsable_sample_resampled_once(self):
        good = "x = base.min.x\ny = 0\nz = 0"
        session = self._seat_session([
            ("l3go_spatial_gen", "BASE: seat\nRELATION: on the left side"),
            ("l3go_coord", "garbage $$$"),
            ("l3go_coord", good),  # resample of slot 1
            ("l3go_coord", good),
            ("l3go_coord", good),
            ("l3go_shape", "cube"),
        ])
        _, center, _ = session.plan_spatial(PartProposal("panel", Vec3(0.1, 0.9, 0.12)))
        assert center.x == pytest.approx(-0.45)
        failed = [s for s in session.transcript.steps
                  if s.component == "l3go_coord" and s.verdict == "failed"]
        assert len(failed) == 1

    def test_all_samples_unparsable(self):
        session = self._seat_session([
            ("l3go_spatial_gen", "BASE: seat\nRELATION: on top"),
        ] + [("l3go_coord", "nope }{")] * 6)
        with pytest.raises(AllSamplesUnparsableError):
            session.plan_spatial(PartProposal("panel", Vec3(0.1, 0.9, 0.12)))

    def test_unknown_base_after_reprompt(self):
        session = self._seat_session([
            ("l3go_spatial_gen", "BASE: tabletop\nRELATION: under it"),
            ("l3go_spatial_gen", "BASE: tabletop\nRELATION: under it"),
        ])
        with pytest.raises(UnknownBasePartError):
            session.plan_spatial(PartProposal("leg", Vec3(0.05, 0.05, 0.4)))

    def test_bad_shape_defaults_to_cube(self):
        session = Session("chair", cfg_for([
            ("l3go_shape", "dodecahedron"),
            ("l3go_shape", "icosahedron"),
        ]))
        _, _, kind = session.plan_spatial(PartProposal("seat", Vec3(0.4, 0.4, 0.05)))
        assert kind is Kind.CUBE
        assert any("defaulted to cube" in s.feedback for s in session.transcript.steps
                   if s.component == "note")

    def test_literal_center_when_program_calc_ablated(self):
        session = self._seat_session([
            ("l3go_spatial_gen", "BASE: seat\nRELATION: on top"),
            ("l3go_coord", "0.0, 0.0, 0.31"),
            ("l3go_shape", "cube"),
        ])
        session.cfg.ablate_program_calc = True
        _, center, _ = session.plan_spatial(PartProposal("backrest", Vec3(0.9, 0.08, 0.5)))
        assert center == Vec3(0.0, 0.0, 0.31)


class TestApplyAndCritique:
    def test_containment_rejected_then_retried(self):
        session = Session("stool", cfg_for([
            ("l3go_part_gen", "base"),
            ("l3go_part_gen", "2, 2, 2"),
            ("l3go_part_critic", "APPROVE"),
            ("l3go_shape", "cylinder"),
            # tiny knob placed inside the base, then moved on top
            ("l3go_spatial_gen", "BASE: base\nRELATION: centered inside"),
            ("l3go_coord", "x = 0\ny = 0\nz = 0"),
            ("l3go_coord", "x = 0\ny = 0\nz = 0"),
            ("l3go_coord", "x = 0\ny = 0\nz = 0"),
            ("l3go_shape", "sphere"),
            ("l3go_spatial_gen", "BASE: base\nRELATION: on top"),
            ("l3go_coord", "x = 0\ny = 0\nz = base.max.z + part.size.z / 2"),
            ("l3go_coord", "x = 0\ny = 0\nz = base.max.z + part.size.z / 2"),
            ("l3go_coord", "x = 0\ny = 0\nz = base.max.z + part.size.z / 2"),
            ("l3go_shape", "sphere"),
        ]))
        proposal = session.propose_with_critique()
        _, center, kind = session.plan_spatial(proposal)
        session.apply_and_critique(proposal, center, kind)

        knob = PartProposal("knob", Vec3(0.2, 0.2, 0.2))
        _, center, kind = session.plan_spatial(knob)
        outcome = session.apply_and_critique(knob, center, kind)
        assert outcome.status == "accepted"
        assert outcome.attempts == 2
        env = [s for s in session.transcript.steps if s.component == "env.apply_action"]
        assert [s.verdict for s in env] == ["accepted", "rejected", "accepted"]
        assert "entirely contained within" in env[1].feedback

    def test_retry_cap_keeps_last_placement(self):
        plan = [
            ("l3go_spatial_gen", "BASE: base\nRELATION: floating above"),
            ("l3go_coord", "x = 0\ny = 0\nz = base.max.z + part.size.z / 2 + 1"),
            ("l3go_coord", "x = 0\ny = 0\nz = base.max.z + part.size.z / 2 + 1"),
            ("l3go_coord", "x = 0\ny = 0\nz = base.max.z + part.size.z / 2 + 1"),
            ("l3go_shape", "sphere"),
        ]
        session = Session("thing", cfg_for([
            ("l3go_part_gen", "base"),
            ("l3go_part_gen", "1, 1, 1"),
            ("l3go_part_critic", "APPROVE"),
            ("l3go_shape", "cube"),
        ] + plan * 3, spatial_retry_rounds=2))
        proposal = session.propose_with_critique()
        _, center, kind = session.plan_spatial(proposal)
        session.apply_and_critique(proposal, center, kind)

        knob = PartProposal("knob", Vec3(0.2, 0.2, 0.2))
        _, center, kind = session.plan_spatial(knob)
        outcome = session.apply_and_critique(knob, center, kind)
        assert outcome.status == "accepted_with_flags"
        assert outcome.attempts == 3
        assert len(session.state.parts) == 2
        assert any("retries exhausted" in s.feedback for s in session.transcript.steps
                   if s.component == "note")


class TestRunL3go:
    def test_chair_replay(self):
        result = run_l3go("chair", AgentConfig(backend=ReplayBackend(CHAIR_STORE)))
        assert result.transcript.status == STATUS_COMPLETED
        assert [p.name for p in result.scene.parts] == [
            "seat", "front_left_leg", "front_right_leg",
            "back_left_leg", "back_right_leg", "backrest"]
        assert contact_graph_connected(result.scene)

    def test_chair_replay_deterministic(self):
        r1 = run_l3go("chair", AgentConfig(backend=ReplayBackend(CHAIR_STORE)))
        r2 = run_l3go("chair", AgentConfig(backend=ReplayBackend(CHAIR_STORE)))
        assert transcript_to_jsonl(r1.transcript) == transcript_to_jsonl(r2.transcript)
        assert scene_to_json(r1.scene) == scene_to_json(r2.scene)

    def test_replay_closure(self):
        result = run_l3go("chair", AgentConfig(backend=ReplayBackend(CHAIR_STORE)))
        rebuilt = replay_scene(transcript_to_jsonl(result.transcript))
        assert scene_to_json(rebuilt) == scene_to_json(result.scene)

    def test_failing_backend_aborts_empty(self):
        result = run_l3go("chair", AgentConfig(backend=FailingBackend()))
        assert result.transcript.status == STATUS_ABORTED
        assert "backend" in result.transcript.abort_reason
        assert result.scene.parts == ()

    def test_every_llm_call_in_transcript_once(self):
        counting = CountingBackend(ReplayBackend(CHAIR_STORE))
        result = run_l3go("chair", AgentConfig(backend=counting))
        assert counting.calls == len(result.transcript.llm_steps())
        assert counting.calls == 50

    def test_faulty_leg_rejection_then_retry(self):
        result = run_l3go("stool", AgentConfig(backend=ReplayBackend(FAULTY_STORE)))
        env = [s for s in result.transcript.steps if s.component == "env.apply_action"]
        assert [s.verdict for s in env] == ["accepted", "rejected", "accepted"]
        assert result.transcript.status == STATUS_COMPLETED
        assert contact_graph_connected(result.scene)

    def test_spatial_ablation_accepts_floating_leg(self):
        base = run_l3go("stool", AgentConfig(backend=ReplayBackend(FAULTY_STORE)))
        ablated = run_l3go("stool", AgentConfig(backend=ReplayBackend(FAULTY_STORE),
                                                ablate_spatial_critic=True))
        assert ablated.transcript.status == STATUS_COMPLETED
        env = [s for s in ablated.transcript.steps if s.component == "env.apply_action"]
        assert [s.verdict for s in env] == ["accepted", "accepted"]
        assert not contact_graph_connected(ablated.scene)
        # disabling the critic never removes parts
        assert len(ablated.scene.parts) >= len(base.scene.parts)


TABLE_STEPS = [
    ("react", "Thought: start with the top\n"
              "Action: cube name=top location=(0,0,0.7) scale=(1.2,0.8,0.05)"),
    ("react", "Thought: front left leg\n"
              "Action: cube name=leg1 location=(-0.55,-0.35,0.3375) scale=(0.08,0.08,0.675)"),
    ("react", "Thought: front right leg\n"
              "Action: cube name=leg2 location=(0.55,-0.35,0.3375) scale=(0.08,0.08,0.675)"),
    ("react", "Thought: back left leg\n"
              "Action: cube name=leg3 location=(-0.55,0.35,0.3375) scale=(0.08,0.08,0.675)"),
    ("react", "Thought: back right leg\n"
              "Action: cube name=leg4 location=(0.55,0.35,0.3375) scale=(0.08,0.08,0.675)"),
    ("react", "Thought: the table is complete\nAction: done"),
]


class TestReactB:
    def test_table_fixture(self):
        result = run_react_b("table", cfg_for(TABLE_STEPS))
        assert result.transcript.status == STATUS_COMPLETED
        assert len(result.scene.parts) == 5
        assert contact_graph_connected(result.scene)

    def test_immediate_done(self):
        result = run_react_b("nothing", cfg_for([("react", "Thought: n/a\nAction: done")]))
        assert result.transcript.status == STATUS_COMPLETED
        assert result.scene.parts == ()

    def test_invalid_action_continues(self):
        result = run_react_b("table", cfg_for([
            ("react", "Thought: oops\nAction: pyramid name=p location=(0,0,0)"),
            ("react", "Thought: fixed\nAction: cube name=top location=(0,0,0)"),
            ("react", "Thought: finished\nAction: done"),
        ]))
        assert result.transcript.status == STATUS_COMPLETED
        assert len(result.scene.parts) == 1
        react_steps = [s for s in result.transcript.steps if s.component == "react"]
        assert "unknown primitive" in react_steps[1].prompt

    def test_step_cap(self):
        steps = [("react", f"Thought: more\nAction: cube name=c{i} location=({i},0,0)")
                 for i in range(4)]
        result = run_react_b("wall", cfg_for(steps, max_steps=4))
        assert result.transcript.status == STATUS_MAX_PARTS
        assert len(result.scene.parts) == 4

    def test_missing_action_line(self):
        result = run_react_b("x", cfg_for([
            ("react", "I will now ponder at length."),
            ("react", "Thought: done now\nAction: done"),
        ]))
        assert result.transcript.status == STATUS_COMPLETED


class TestReflexionB:
    def test_redo_keeps_only_corrected_part(self):
        result = run_reflexion_b("floor lamp", cfg_for([
            ("react", "Thought: pole first\n"
                      "Action: cube name=pole location=(0,0,2) scale=(0.1,0.1,1)"),
            ("reflexion_reflect", "The pole floats in the air.\nDecision: redo"),
            ("react", "Thought: rebuild lower\n"
                      "Action: cube name=pole location=(0,0,0.5) scale=(0.1,0.1,1)"),
            ("reflexion_reflect", "Grounded now.\nDecision: move on"),
            ("react", "Thought: finished\nAction: done"),
        ]))
        assert result.transcript.status == STATUS_COMPLETED
        assert len(result.scene.parts) == 1
        assert result.scene.parts[0].spec.location.z == pytest.approx(0.5)
        removes = [s for s in result.transcript.steps
                   if s.component == "env.remove_part"]
        assert len(removes) == 1
        # replay closure holds through removals
        rebuilt = replay_scene(transcript_to_jsonl(result.transcript))
        assert scene_to_json(rebuilt) == scene_to_json(result.scene)

    def test_always_move_on_matches_react(self):
        reflect_steps = []
        for tag, text in TABLE_STEPS:
            reflect_steps.append((tag, text))
            if "done" not in text.splitlines()[-1].lower():
                reflect_steps.append(("reflexion_reflect", "Fine.\nDecision: move on"))
        reflexion = run_reflexion_b("table", cfg_for(reflect_steps))
        react = run_react_b("table", cfg_for(TABLE_STEPS))
        assert scene_to_json(reflexion.scene) == scene_to_json(react.scene)

    def test_redo_with_nothing_to_remove(self):
        result = run_reflexion_b("x", cfg_for([
            ("react", "Thought: bad\nAction: pyramid name=p location=(0,0,0)"),
            ("reflexion_reflect", "That failed entirely.\nDecision: redo"),
            ("react", "Thought: stop\nAction: done"),
        ]))
        assert result.transcript.status == STATUS_COMPLETED
        assert result.scene.parts == ()
        assert any("no part to remove" in s.feedback for s in result.transcript.steps
                   if s.component == "note")


LAMP_SCRIPT = (
    "cylinder name=base radius=0.3 depth=0.05 location=(0,0,0.025)\n"
    "cylinder name=pole radius=0.03 depth=1 location=(0,0,0.55)\n"
    "cone name=shade radius_bottom=0.25 radius_top=0.05 depth=0.3 location=(0,0,1.2)\n"
)


class TestSingleShot:
    def test_lamp_script(self):
        result = run_single_shot("lamp", cfg_for([("single_shot", LAMP_SCRIPT)]))
        assert result.transcript.status == STATUS_COMPLETED
        assert [p.name for p in result.scene.parts] == ["base", "pole", "shade"]

    def test_bad_line_keeps_partial_scene(self):
        script = ("cube name=a location=(0,0,0)\n"
                  "cube name=b location=(0,0)\n"
                  "cube name=c location=(2,0,0)\n")
        result = run_single_shot("thing", cfg_for([("single_shot", script)]))
        assert result.transcript.status == STATUS_ABORTED
        assert "line 2" in result.transcript.abort_reason
        assert len(result.scene.parts) == 1

    def test_empty_response(self):
        result = run_single_shot("thing", cfg_for([("single_shot", "")]))
        assert result.transcript.status == STATUS_ABORTED
        assert result.scene.parts == ()

    def test_critics_disabled(self):
        script = ("cube name=a location=(0,0,0)\n"
                  "cube name=b location=(9,9,9)\n")
        result = run_single_shot("thing", cfg_for([("single_shot", script)]))
        assert result.transcript.status == STATUS_COMPLETED
        assert len(result.scene.parts) == 2


class TestCompletionCheck:
    def _session_with_parts(self, completion_reply, n_parts=1, max_parts=20):
        steps = []
        for i in range(n_parts):
            steps += [("l3go_part_gen", f"part {i}"),
                      ("l3go_part_gen", "1, 1, 1"),
                      ("l3go_part_critic", "APPROVE")]
            if i == 0:
                steps.append(("l3go_shape", "cube"))
            else:
                steps += [
                    ("l3go_spatial_gen", f"BASE: part_0\nRELATION: stack on top"),
                    ("l3go_coord", "x = 0\ny = 0\nz = base.max.z + part.size.z / 2"),
                    ("l3go_coord", "x = 0\ny = 0\nz = base.max.z + part.size.z / 2"),
                    ("l3go_coord", "x = 0\ny = 0\nz = base.max.z + part.size.z / 2"),
                    ("l3go_shape", "cube"),
                ]
        steps.append(("l3go_completion", completion_reply))
        session = Session("tower", cfg_for(steps, max_parts=max_parts))
        for _ in range(n_parts):
            proposal = session.propose_with_critique()
            _, center, kind = session.plan_spatial(proposal)
            session.apply_and_critique(proposal, center, kind)
        return session

    def test_continue(self):
        session = self._session_with_parts("CONTINUE")
        assert session.completion_check() == (False, False)

    def test_done(self):
        session = self._session_with_parts("DONE")
        assert session.completion_check() == (True, False)

    def test_cap_forces_done(self):
        session = self._session_with_parts("CONTINUE", n_parts=2, max_parts=2)
        assert session.completion_check() == (True, True)

    def test_unparsable_treated_as_continue(self):
        session = self._session_with_parts("perhaps")
        assert session.completion_check() == (False, False)
        assert any("unparsable" in s.feedback for s in session.transcript.steps
                   if s.component == "note")
