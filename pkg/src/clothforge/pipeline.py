"""Batch generation: template meshes, deformation, rendering with annotations.

Layout under the configured output directory:

    meshes/{category}/{id:05d}.obj      stage 1, flat template meshes
    deformed/{category}/{id:05d}.obj    stage 2, settled cloth states
    {category}/images/{id:05d}.png      stage 3, rendered frames
    {category}/annotations.json         stage 3, COCO document per category
    manifest.json                       config hash, master seed, all seeds

Each sample is an independent task keyed by (category, id); its per-stage
seeds derive from the config alone, so output bytes never depend on worker
count, execution order, or how many other samples exist.  Stages hand meshes
over through the OBJ files even when run back to back, so a split run
reproduces an `all` run byte for byte.  Files are written to a temporary
name and renamed into place: an interrupted run leaves only complete files.
"""
from __future__ import annotations

import json
import multiprocessing
import os
import platform
import statistics
import tempfile
import time
from pathlib import Path

import numpy as np

from .annotate import AnnotationRecord, annotate_scene, dumps_coco
from .config import PipelineConfig
from .errors import StageOrderError, WriteError
from .materials import PROCEDURES
from .objio import load_obj, save_obj
from .render import build_scene_geometry, render, save_png
from .scene import compose_scene
from .simulator import deform_procedure
from .templates import ClothCategory, sample_template, template_to_mesh

STAGES = ("meshes", "deform", "render")
MANIFEST_TAG = "clothforge-manifest/1"


# ---------------------------------------------------------------------------
# layout


def mesh_path(output_dir, category: ClothCategory, sample_id: int) -> Path:
    return Path(output_dir) / "meshes" / category.value / f"{sample_id:05d}.obj"


def deformed_path(output_dir, category: ClothCategory, sample_id: int) -> Path:
    return Path(output_dir) / "deformed" / category.value / f"{sample_id:05d}.obj"


def image_path(output_dir, category: ClothCategory, sample_id: int) -> Path:
    return Path(output_dir) / category.value / "images" / f"{sample_id:05d}.png"


def annotations_path(output_dir, category: ClothCategory) -> Path:
    return Path(output_dir) / category.value / "annotations.json"


def manifest_path(output_dir) -> Path:
    return Path(output_dir) / "manifest.json"


def _tmp_name(path: Path) -> Path:
    # keep the real suffix last so format-sniffing writers still work
    return path.with_name(path.stem + ".tmp" + path.suffix)


def _atomic_text(path: Path, text: str) -> None:
    tmp = _tmp_name(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp.write_text(text, encoding="utf-8")
        os.replace(tmp, path)
    except OSError as exc:
        raise WriteError(f"cannot write {path}: {exc}") from exc


def _atomic_file(path: Path, writer) -> None:
    """Run ``writer(tmp_path)`` then rename the result into place."""
    tmp = _tmp_name(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        writer(tmp)
        os.replace(tmp, path)
    except OSError as exc:
        raise WriteError(f"cannot write {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# per-sample stage work


def _pick_procedure(weights: dict[str, float], rng: np.random.Generator) -> str:
    """One weighted draw over the fixed procedure order (dict order is
    irrelevant, so user files cannot perturb the stream)."""
    names = [name for name in PROCEDURES if weights.get(name, 0.0) > 0.0]
    probs = np.array([weights[name] for name in names])
    return names[int(rng.choice(len(names), p=probs / probs.sum()))]


def _stage_meshes(cfg: PipelineConfig, category: ClothCategory,
                  sample_id: int) -> None:
    rng = np.random.default_rng(cfg.sample_seed(category, sample_id, "meshes"))
    template = sample_template(category, rng, cfg.param_ranges(),
                               cfg.boundary_spacing)
    mesh = template_to_mesh(template, cfg.max_edge)
    _atomic_file(mesh_path(cfg.output_dir, category, sample_id),
                 lambda tmp: save_obj(mesh, tmp))


def _stage_deform(cfg: PipelineConfig, category: ClothCategory,
                  sample_id: int) -> None:
    src = mesh_path(cfg.output_dir, category, sample_id)
    if not src.exists():
        raise StageOrderError(
            f"deform stage input missing: {src} (run the meshes stage first)")
    mesh = load_obj(src)
    rng = np.random.default_rng(cfg.sample_seed(category, sample_id, "deform"))
    deformed, _ = deform_procedure(mesh, cfg.deform_config(), rng)
    _atomic_file(deformed_path(cfg.output_dir, category, sample_id),
                 lambda tmp: save_obj(deformed, tmp))


def _stage_render(cfg: PipelineConfig, category: ClothCategory,
                  sample_id: int) -> AnnotationRecord:
    src = deformed_path(cfg.output_dir, category, sample_id)
    if not src.exists():
        raise StageOrderError(
            f"render stage input missing: {src} (run the deform stage first)")
    mesh = load_obj(src)
    rng = np.random.default_rng(cfg.sample_seed(category, sample_id, "render"))
    procedure = _pick_procedure(cfg.material_weights, rng)
    scene = compose_scene(mesh, procedure, cfg.scene_config(), rng)
    geometry = build_scene_geometry(scene)
    image = render(scene, geometry)
    _atomic_file(image_path(cfg.output_dir, category, sample_id),
                 lambda tmp: save_png(image, tmp))
    return annotate_scene(scene, geometry, image_id=sample_id,
                          file_name=f"images/{sample_id:05d}.png")


_STAGE_FUNCS = {"meshes": _stage_meshes, "deform": _stage_deform,
                "render": _stage_render}


def _run_sample(doc: dict, category_value: str, sample_id: int,
                stages: tuple[str, ...]):
    """Worker task: run the requested stages for one sample."""
    cfg = PipelineConfig(doc)  # doc was validated in the parent
    category = ClothCategory(category_value)
    record = None
    for stage in stages:
        out = _STAGE_FUNCS[stage](cfg, category, sample_id)
        if stage == "render":
            record = out
    return category_value, sample_id, record


def _execute(cfg: PipelineConfig, tasks, stages: tuple[str, ...]):
    args = [(cfg.doc, cat, sid, stages) for cat, sid in tasks]
    if cfg.workers <= 1 or len(args) <= 1:
        return [_run_sample(*a) for a in args]
    method = "fork" if "fork" in multiprocessing.get_all_start_methods() \
        else None
    ctx = multiprocessing.get_context(method)
    with ctx.Pool(min(cfg.workers, len(args))) as pool:
        return pool.starmap(_run_sample, args, chunksize=1)


# ---------------------------------------------------------------------------
# orchestration


def _sample_tasks(cfg: PipelineConfig) -> list[tuple[str, int]]:
    counts = cfg.counts
    return [(c.value, i) for c in ClothCategory for i in range(counts[c])]


def _check_stage_inputs(cfg: PipelineConfig, first_stage: str, tasks) -> None:
    """Fail fast, before any workers start, if the feeding stage never ran."""
    if first_stage == "meshes":
        return
    where, feeder = ((mesh_path, "meshes") if first_stage == "deform"
                     else (deformed_path, "deform"))
    for cat, sid in tasks:
        path = where(cfg.output_dir, ClothCategory(cat), sid)
        if not path.exists():
            raise StageOrderError(
                f"{first_stage} stage input missing: {path} "
                f"(run the {feeder} stage first)")


def manifest_doc(cfg: PipelineConfig) -> dict:
    samples = []
    for cat, sid in _sample_tasks(cfg):
        samples.append({
            "category": cat,
            "id": sid,
            "seeds": {stage: cfg.sample_seed(cat, sid, stage)
                      for stage in STAGES},
        })
    return {
        "schema": MANIFEST_TAG,
        "config_hash": cfg.hash(),
        "master_seed": cfg.master_seed,
        "samples": samples,
    }


def write_manifest(cfg: PipelineConfig) -> Path:
    path = manifest_path(cfg.output_dir)
    _atomic_text(path, json.dumps(manifest_doc(cfg), indent=2,
                                  sort_keys=True) + "\n")
    return path


def generate(cfg: PipelineConfig, stage: str = "all") -> dict[str, int]:
    """Run the requested stage (or the whole pipeline) over every sample.

    Returns the number of samples processed per category.  The render stage
    finishes with a single-threaded pass that sorts each category's records
    by sample id and writes the COCO document, then the manifest.
    """
    if stage != "all" and stage not in STAGES:
        raise ValueError(f"unknown stage {stage!r}")
    stages = STAGES if stage == "all" else (stage,)
    tasks = _sample_tasks(cfg)
    _check_stage_inputs(cfg, stages[0], tasks)

    results = _execute(cfg, tasks, stages)

    if "render" in stages:
        per_category: dict[str, list[AnnotationRecord]] = {}
        for cat, _, record in results:
            per_category.setdefault(cat, []).append(record)
        for cat, records in per_category.items():
            records.sort(key=lambda r: r.image_id)
            _atomic_text(annotations_path(cfg.output_dir, ClothCategory(cat)),
                         dumps_coco(records))
    write_manifest(cfg)

    counts = {c.value: 0 for c in ClothCategory}
    for cat, _, _ in results:
        counts[cat] += 1
    return counts


# ---------------------------------------------------------------------------
# benchmarking


def machine_info() -> dict:
    return {
        "platform": platform.platform(),
        "processor": platform.processor() or platform.machine(),
        "cpu_count": os.cpu_count(),
        "python": platform.python_version(),
    }


def bench(cfg: PipelineConfig, samples: int = 5, parallel_samples: int = 20,
          parallel_workers: int = 4) -> dict:
    """Time the three stages per sample and the worker-pool scaling.

    Runs ``samples`` towels end to end in a scratch directory, reporting the
    median wall-clock seconds of each stage, then times ``parallel_samples``
    towels with 1 worker and with ``parallel_workers`` workers.  Pass
    ``parallel_samples=0`` to skip the scaling measurement.
    """
    report = {"machine": machine_info(), "samples": samples,
              "resolution": list(cfg.scene_config().resolution)}

    with tempfile.TemporaryDirectory(prefix="clothforge-bench-") as scratch:
        timed = cfg.with_overrides(
            output_dir=scratch, workers=1,
            counts={"towel": samples, "tshirt": 0, "shorts": 0})
        durations = {stage: [] for stage in STAGES}
        for sid in range(samples):
            for stage in STAGES:
                start = time.perf_counter()
                _STAGE_FUNCS[stage](timed, ClothCategory.TOWEL, sid)
                durations[stage].append(time.perf_counter() - start)
        report["median_seconds"] = {
            stage: statistics.median(values)
            for stage, values in durations.items()
        }

    if parallel_samples > 0:
        walls = {}
        for workers in (1, parallel_workers):
            with tempfile.TemporaryDirectory(
                    prefix="clothforge-bench-") as scratch:
                run = cfg.with_overrides(
                    output_dir=scratch, workers=workers,
                    counts={"towel": parallel_samples,
                            "tshirt": 0, "shorts": 0})
                start = time.perf_counter()
                generate(run, "all")
                walls[workers] = time.perf_counter() - start
        report["parallel"] = {
            "samples": parallel_samples,
            "workers": parallel_workers,
            "single_seconds": walls[1],
            "parallel_seconds": walls[parallel_workers],
            "speedup": walls[1] / walls[parallel_workers],
        }

    return report


__all__ = [
    "MANIFEST_TAG",
    "STAGES",
    "annotations_path",
    "bench",
    "deformed_path",
    "generate",
    "image_path",
    "machine_info",
    "manifest_doc",
    "manifest_path",
    "mesh_path",
    "write_manifest",
]
