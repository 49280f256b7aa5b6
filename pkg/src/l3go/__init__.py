"""Part-by-part 3D construction agents and their evaluation harness."""

from .agents import (
    AgentConfig,
    PartProposal,
    SpatialSpec,
    run_l3go,
    run_react_b,
    run_reflexion_b,
    run_single_shot,
)
from .blenv import (
    SceneState,
    SpatialFlag,
    SpatialReport,
    apply_action,
    classify_spatial,
    contact_graph_connected,
    feedback_text,
    min_gap,
    parse_action_script,
    remove_part,
    scene_from_json,
    scene_to_json,
)
from .coord_dsl import (
    CoordProgram,
    VoteConfig,
    eval_program,
    majority_vote,
    make_bindings,
    parse_program,
)
from .evaluation import (
    EvalRecord,
    JudgeConfig,
    aggregate_accuracy,
    classify_mesh,
    cohens_kappa,
    load_categories,
    load_ufo_prompts,
    ufo_manifest,
)
from .gateway import (
    Backend,
    BackendSpec,
    ChatMessage,
    ChatRequest,
    HttpBackend,
    ReplayBackend,
    ScriptedBackend,
    make_backend,
    parse_backend_spec,
    record_session,
)
from .geometry import (
    Aabb,
    Kind,
    Mesh,
    PrimitiveSpec,
    Tessellation,
    Vec3,
    analytic_aabb,
    export_obj,
    generate_primitive,
    mesh_aabb,
)
from .render import CameraRig, encode_png, make_contact_sheet, make_gif, render_turntable
from .transcript import BuildResult, BuildTranscript, replay_scene, transcript_to_jsonl

__version__ = "0.1.0"
