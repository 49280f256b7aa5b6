"""Command-line entry point: build objects, evaluate, and replay.

Exit codes are a stable contract for CI: 0 success, 1 usage or config
error, 2 aborted run, 3 backend failure.
"""

import json
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click

from .agents import (
    AgentConfig,
    run_l3go,
    run_react_b,
    run_reflexion_b,
    run_single_shot,
)
from .blenv import scene_from_json, scene_to_json
from .coord_dsl import VoteConfig
from .evaluation import (
    JudgeConfig,
    MissingRunsError,
    aggregate_accuracy,
    classify_mesh,
    load_categories,
    load_ufo_prompts,
    ufo_manifest,
)
from .gateway import (
    BackendError,
    ExchangeLog,
    GatewayError,
    make_backend,
    parse_backend_spec,
)
from .geometry import Tessellation, export_obj, generate_primitive
from .render import CameraRig, encode_png, make_contact_sheet, make_gif, render_turntable
from .transcript import (
    BuildResult,
    CorruptTranscriptError,
    STATUS_ABORTED,
    replay_scene,
    transcript_to_jsonl,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ABORTED = 2
EXIT_BACKEND = 3

AGENTS = {
    "l3go": run_l3go,
    "react": run_react_b,
    "reflexion": run_reflexion_b,
    "single-shot": run_single_shot,
}


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        _fail(EXIT_USAGE, f"config file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        _fail(EXIT_USAGE, f"bad config file {path}: {exc}")


def _pick(flag, config: dict, section: str, key: str, default):
    """Flag beats config file beats default."""
    if flag is not None:
        return flag
    return config.get(section, {}).get(key, default)


def _make_backend_or_fail(spec_text: str, model: str, log: ExchangeLog | None = None):
    try:
        spec = parse_backend_spec(spec_text, model=model)
        return make_backend(spec, log=log)
    except (ValueError, BackendError) as exc:
        _fail(EXIT_USAGE, f"backend {spec_text!r}: {exc}")


def _rig_from(config: dict, views, resolution, elevation, margin) -> CameraRig:
    return CameraRig(
        n_views=_pick(views, config, "rig", "views", 10),
        elevation_deg=_pick(elevation, config, "rig", "elevation", 30.0),
        frame_margin=_pick(margin, config, "rig", "margin", 1.2),
        resolution=_pick(resolution, config, "rig", "resolution", 512),
    )


def write_build_artifacts(result: BuildResult, out_dir: Path, rig: CameraRig) -> None:
    """scene.json, model.obj, transcript.jsonl, renders/, sheet.png, turntable.gif."""
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "scene.json").write_text(scene_to_json(result.scene), encoding="utf-8")
    meshes = [(p.name, generate_primitive(p.spec)) for p in result.scene.parts]
    (out_dir / "model.obj").write_bytes(export_obj(meshes))
    (out_dir / "transcript.jsonl").write_text(
        transcript_to_jsonl(result.transcript), encoding="utf-8")
    if not result.scene.parts:
        return
    images = render_turntable(result.scene, rig)
    renders = out_dir / "renders"
    renders.mkdir(exist_ok=True)
    for i, image in enumerate(images):
        (renders / f"view_{i:02d}.png").write_bytes(encode_png(image))
    (out_dir / "sheet.png").write_bytes(encode_png(make_contact_sheet(images)))
    (out_dir / "turntable.gif").write_bytes(make_gif(images))


@click.group()
def cli():
    """Build 3D objects from text with LLM agents; render and evaluate them."""


@cli.command("build")
@click.argument("prompt")
@click.option("--agent", default=None, help="one of: l3go, react, reflexion, single-shot")
@click.option("--backend", "backend_spec", default=None,
              help="backend spec, e.g. replay:fixtures/chair or http:URL")
@click.option("--model", default=None, help="model name for http backends")
@click.option("--out", "out_dir", default=None, help="output directory")
@click.option("--seed", type=int, default=None)
@click.option("--max-parts", type=int, default=None)
@click.option("--max-steps", type=int, default=None)
@click.option("--touch-eps", type=float, default=None)
@click.option("--ablate-spatial-critic", is_flag=True, default=False)
@click.option("--ablate-program-calc", is_flag=True, default=False)
@click.option("--views", type=int, default=None)
@click.option("--resolution", type=int, default=None)
@click.option("--elevation", type=float, default=None)
@click.option("--margin", type=float, default=None)
@click.option("--config", "config_path", default=None, help="TOML config file")
def cmd_build(prompt, agent, backend_spec, model, out_dir, seed, max_parts,
              max_steps, touch_eps, ablate_spatial_critic, ablate_program_calc,
              views, resolution, elevation, margin, config_path):
    """Build one object from PROMPT and write all artifacts."""
    config = load_config_file(config_path)
    agent = _pick(agent, config, "agent", "agent", "l3go")
    if agent not in AGENTS:
        click.echo(f"unknown agent {agent!r}; choose from: {', '.join(AGENTS)}", err=True)
        sys.exit(EXIT_USAGE)
    backend_spec = _pick(backend_spec, config, "backend", "spec", None)
    if not backend_spec:
        _fail(EXIT_USAGE, "no backend given (use --backend or [backend] spec in config)")
    out = Path(_pick(out_dir, config, "agent", "out", "out"))
    out.mkdir(parents=True, exist_ok=True)
    gateway_log = out / "gateway.jsonl"
    gateway_log.unlink(missing_ok=True)  # the log is append-only within one run
    backend = _make_backend_or_fail(
        backend_spec, _pick(model, config, "backend", "model", "gpt-4"),
        log=ExchangeLog(gateway_log))
    agent_cfg = AgentConfig(
        backend=backend,
        max_parts=_pick(max_parts, config, "agent", "max_parts", 20),
        part_critic_rounds=_pick(None, config, "agent", "part_critic_rounds", 3),
        spatial_retry_rounds=_pick(None, config, "agent", "spatial_retry_rounds", 3),
        vote=VoteConfig(samples=_pick(None, config, "agent", "vote_samples", 3)),
        touch_eps=_pick(touch_eps, config, "agent", "touch_eps", 1e-3),
        ablate_spatial_critic=(ablate_spatial_critic
                               or config.get("agent", {}).get("ablate_spatial_critic", False)),
        ablate_program_calc=(ablate_program_calc
                             or config.get("agent", {}).get("ablate_program_calc", False)),
        seed=_pick(seed, config, "agent", "seed", 0),
        max_steps=_pick(max_steps, config, "agent", "max_steps", 15),
    )
    rig = _rig_from(config, views, resolution, elevation, margin)
    result = AGENTS[agent](prompt, agent_cfg)
    write_build_artifacts(result, out, rig)
    status = result.transcript.status
    click.echo(f"status: {status}"
               + (f" ({result.transcript.abort_reason})" if result.aborted else "")
               + f"; parts: {len(result.scene.parts)}; artifacts in {out}")
    if status == STATUS_ABORTED:
        if result.transcript.abort_reason.startswith("backend error"):
            sys.exit(EXIT_BACKEND)
        sys.exit(EXIT_ABORTED)
    sys.exit(EXIT_OK)


def _slug(text: str) -> str:
    return re.sub(r"[^a-z0-9]+", "_", text.lower()).strip("_")


# Coarser meshes for bulk evaluation renders; plenty at small resolutions.
EVAL_TESSELLATION = Tessellation(segments=16, rings=8)


def generate_run(prompt: str, run_dir: Path, agent: str, builder_spec: str,
                 rig: CameraRig, with_gif: bool = False) -> None:
    """Build one object into run_dir (scene + transcript, optionally a GIF)."""
    backend = make_backend(parse_backend_spec(builder_spec, model="gpt-4"))
    result = AGENTS[agent](prompt, AgentConfig(backend=backend))
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "scene.json").write_text(scene_to_json(result.scene), encoding="utf-8")
    (run_dir / "transcript.jsonl").write_text(
        transcript_to_jsonl(result.transcript), encoding="utf-8")
    if with_gif and result.scene.parts:
        images = render_turntable(result.scene, rig, EVAL_TESSELLATION)
        (run_dir / "turntable.gif").write_bytes(make_gif(images))


def eval_shapenet(out: Path, n: int, judge_spec: str, builder_spec: str, agent: str,
                  rig: CameraRig, generate: bool, jobs: int = 1):
    """Classify n generated objects per category with the configured judge."""
    categories = load_categories()
    judge_backend = make_backend(parse_backend_spec(judge_spec, model="gpt-4"))
    judge = JudgeConfig(backend=judge_backend, categories=tuple(categories))
    runs_dir = out / "runs"

    def one(category: str, index: int):
        object_id = f"{category}/{index}"
        run_dir = runs_dir / category / str(index)
        if generate and not (run_dir / "scene.json").exists():
            generate_run(f"a {category}", run_dir, agent, builder_spec, rig)
        scene_path = run_dir / "scene.json"
        if not scene_path.exists():
            raise MissingRunsError(object_id, "shapenet13")
        scene = scene_from_json(scene_path.read_text(encoding="utf-8"))
        images = render_turntable(scene, rig, EVAL_TESSELLATION)
        return classify_mesh(images, judge, object_id=object_id,
                             true_category=category)

    tasks = [(c, i) for c in categories for i in range(n)]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(lambda t: one(*t), tasks))
    else:
        records = [one(*t) for t in tasks]

    report = aggregate_accuracy(records)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "records.jsonl", "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.to_dict(), ensure_ascii=True) + "\n")
    (out / "report.json").write_text(json.dumps({
        "per_category": report.per_category,
        "mean": report.mean,
        "records": report.total_records,
    }, indent=2, sort_keys=True), encoding="utf-8")
    (out / "report.txt").write_text(report.table_text() + "\n", encoding="utf-8")
    return report


def eval_ufo(out: Path, model_a: str, dir_a: Path, model_b: str, dir_b: Path,
             builder_spec: str, agent: str, rig: CameraRig, generate: bool,
             seed: int):
    """Pair two models' UFO runs into a preference manifest."""
    prompts = load_ufo_prompts()
    runs = {}
    for model, base in ((model_a, dir_a), (model_b, dir_b)):
        paths = {}
        for prompt in prompts:
            gif = base / _slug(prompt) / "turntable.gif"
            if generate and not gif.exists():
                generate_run(prompt, gif.parent, agent, builder_spec, rig,
                             with_gif=True)
            if not gif.exists():
                raise MissingRunsError(prompt, model)
            paths[prompt] = gif
        runs[model] = paths
    rows = ufo_manifest(runs[model_a], runs[model_b], prompts,
                        model_a=model_a, model_b=model_b, seed=seed)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "ufo_manifest.jsonl", "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=True, sort_keys=True) + "\n")
    return rows


@cli.command("eval")
@click.argument("dataset")
@click.option("--out", "out_dir", default=None)
@click.option("--n", "n_per_category", type=int, default=None)
@click.option("--judge", "judge_spec", default=None)
@click.option("--builder", "builder_spec", default=None)
@click.option("--agent", default=None)
@click.option("--model-a", default=None, help="ufo: NAME=RUNS_DIR")
@click.option("--model-b", default=None, help="ufo: NAME=RUNS_DIR")
@click.option("--seed", type=int, default=None)
@click.option("--generate", is_flag=True, default=False,
              help="build any missing runs before evaluating")
@click.option("--jobs", type=int, default=None)
@click.option("--views", type=int, default=None)
@click.option("--resolution", type=int, default=None)
@click.option("--elevation", type=float, default=None)
@click.option("--margin", type=float, default=None)
@click.option("--config", "config_path", default=None)
def cmd_eval(dataset, out_dir, n_per_category, judge_spec, builder_spec, agent,
             model_a, model_b, seed, generate, jobs, views, resolution,
             elevation, margin, config_path):
    """Run the shapenet13 accuracy protocol or build the ufo pairing manifest."""
    config = load_config_file(config_path)
    if dataset not in ("shapenet13", "ufo"):
        _fail(EXIT_USAGE, f"unknown dataset {dataset!r}; choose shapenet13 or ufo")
    agent = _pick(agent, config, "eval", "agent", "single-shot")
    if agent not in AGENTS:
        _fail(EXIT_USAGE, f"unknown agent {agent!r}; choose from: {', '.join(AGENTS)}")
    out = Path(_pick(out_dir, config, "eval", "out", "eval_out"))
    builder = _pick(builder_spec, config, "eval", "builder", "scripted:tiny-builder")
    rig = _rig_from(config, views,
                    resolution if resolution is not None
                    else config.get("rig", {}).get("resolution", 64),
                    elevation, margin)
    try:
        if dataset == "shapenet13":
            judge = _pick(judge_spec, config, "eval", "judge", "scripted:oracle-judge")
            report = eval_shapenet(
                out, _pick(n_per_category, config, "eval", "n", 10), judge, builder,
                agent, rig, generate, jobs=_pick(jobs, config, "eval", "jobs", 1))
            click.echo((out / "report.txt").read_text(), nl=False)
            click.echo(f"mean accuracy: {report.mean:.3f} "
                       f"over {report.total_records} records")
        else:
            def parse_model(arg, fallback_name, fallback_dir):
                if arg is None:
                    return fallback_name, out / fallback_dir
                name, sep, path = arg.partition("=")
                if not sep:
                    _fail(EXIT_USAGE, f"--model-a/--model-b must be NAME=DIR, got {arg!r}")
                return name, Path(path)

            name_a, dir_a = parse_model(model_a, "model_a", "runs_a")
            name_b, dir_b = parse_model(model_b, "model_b", "runs_b")
            rows = eval_ufo(out, name_a, dir_a, name_b, dir_b, builder, agent, rig,
                            generate, _pick(seed, config, "eval", "seed", 0))
            click.echo(f"wrote {len(rows)} manifest rows to {out / 'ufo_manifest.jsonl'}")
    except MissingRunsError as exc:
        _fail(EXIT_USAGE, str(exc))
    except GatewayError as exc:
        _fail(EXIT_BACKEND, str(exc))
    sys.exit(EXIT_OK)


@cli.command("replay")
@click.argument("transcript_path")
@click.option("--out", "out_dir", default="replay_out")
@click.option("--touch-eps", type=float, default=1e-3)
def cmd_replay(transcript_path, out_dir, touch_eps):
    """Rebuild a scene from a transcript's accepted actions."""
    path = Path(transcript_path)
    if not path.exists():
        _fail(EXIT_USAGE, f"transcript not found: {path}")
    try:
        scene = replay_scene(path.read_text(encoding="utf-8"), touch_eps)
    except CorruptTranscriptError as exc:
        _fail(EXIT_USAGE, f"corrupt transcript: {exc}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "scene.json").write_text(scene_to_json(scene), encoding="utf-8")
    meshes = [(p.name, generate_primitive(p.spec)) for p in scene.parts]
    (out / "model.obj").write_bytes(export_obj(meshes))
    click.echo(f"rebuilt {len(scene.parts)} part(s) into {out}")
    sys.exit(EXIT_OK)


def main(argv=None):
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.UsageError as exc:
        exc.show()
        sys.exit(EXIT_USAGE)
    except click.ClickException as exc:
        exc.show()
        sys.exit(exc.exit_code)
    except click.exceptions.Abort:
        sys.exit(EXIT_USAGE)


if __name__ == "__main__":
    main()
