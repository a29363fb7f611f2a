# Airway OCT Reconstruction - 3D airway geometry from anatomic OCT pull-backs.
# Copyright (C) 2025 Pramit Sharma
#
# This file is part of airway_recon.
#
# airway_recon is free software: you can redistribute it and/or modify
# it under the terms of the GNU Affero General Public License as published by
# the Free Software Foundation, either version 3 of the License, or (at your
# option) any later version.
#
# airway_recon is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU Affero General Public License for more details.
#
# You should have received a copy of the GNU Affero General Public License
# along with this program.  If not, see <https://www.gnu.org/licenses/>.

"""
Pipeline stages and their file contract.

    simulate  -> simulate/frames/frame_NNNN.pgm, simulate/masks/mask_NNNN.pgm,
                 simulate/boundaries.csv, simulate/scan.json
    extract   -> extract/boundaries.csv, extract/cloud.ply
    fit       -> fit/model.aoct, fit/model.json, fit/transform.json, fit/training_log.csv
    mesh      -> mesh/mesh.obj, mesh/mesh.ply
    resample  -> resample/boundaries.csv
    metrics   -> metrics/report.json, metrics/per_frame.csv

Every stage reads only files written by earlier stages (or external masks).
"""

import json
import time
from pathlib import Path
from typing import Callable, Dict, List, Tuple

import numpy as np
from celery.utils.log import get_task_logger
from django.db import DatabaseError
from django.utils import timezone

from airway_recon.exceptions import AoctError, ConfigError, StageDependencyError, TrainingDivergedError
from airway_recon.extract.boundary import (
    SOURCE_GROUND_TRUTH,
    SOURCE_RESAMPLED,
    ALineBoundary,
    boundary_from_intensity,
    boundary_from_mask,
    boundary_to_mask,
)
from airway_recon.extract.cloud import PointCloud, normalize_pointcloud, pointcloud_from_scan
from airway_recon.geometry.intensity import normalize_intensity
from airway_recon.geometry.types import PolarFrame
from airway_recon.metrics.aline import aline_errors, boundary_total_variation, frame_segmentation_metrics
from airway_recon.metrics.mesh_distance import point_to_mesh
from airway_recon.metrics.report import MetricsReport, reconstruction_metrics
from airway_recon.models import StageRun
from airway_recon.neural.model_io import export_json, load_model, save_model
from airway_recon.neural.training import train_with_log
from airway_recon.pipeline.config import STAGES, PipelineConfig
from airway_recon.pipeline.manifest import OutputLock, RunManifest, StageRecord, file_digest
from airway_recon.pipeline.parallel import (
    frame_chunks,
    joined_boundaries,
    resample_frames_task,
    run_chunks,
    simulate_frames_task,
)
from airway_recon.pipeline.validation import validate_config
from airway_recon.storage.cloud_utils import read_ply, write_ply
from airway_recon.storage.csv_utils import read_boundaries, write_boundaries, write_csv
from airway_recon.storage.ground_truth import write_scan_metadata
from airway_recon.storage.image_utils import indexed_files, read_image, read_masks
from airway_recon.storage.mesh_utils import read_mesh, write_mesh
from airway_recon.surface.marching import extract_mesh

logger = get_task_logger(__name__)

StageResult = Tuple[List[Path], List[Path], List[str]]  # inputs, outputs, warnings


def stage_dir(cfg: PipelineConfig, stage: str) -> Path:
    return cfg.out_dir / stage


def _require(path: Path, producer: str) -> Path:
    if not path.exists():
        raise StageDependencyError(f"missing input {path}", producer)
    return path


def _files_under(directory: Path) -> List[Path]:
    return sorted(p for p in directory.rglob("*") if p.is_file())


def _absent_warnings(boundaries: List[ALineBoundary], label: str) -> List[str]:
    warnings = []
    for b in boundaries:
        absent = int((~b.present).sum())
        if absent:
            warnings.append(f"{label} frame {b.frame_index}: {absent} columns without a wall")
    return warnings


# Stages


def simulate_stage(cfg: PipelineConfig) -> StageResult:
    out = stage_dir(cfg, "simulate")
    out.mkdir(parents=True, exist_ok=True)
    scan = cfg.scan.to_dict()
    phantom = cfg.phantom.to_dict()
    noise = cfg.noise.to_dict()
    signatures = [
        simulate_frames_task.s(phantom, scan, noise, cfg.seed, chunk, str(out))  # type:ignore
        for chunk in frame_chunks(cfg.scan.n_frames)
    ]
    logger.info(f"Dispatching {len(signatures)} simulation chunks")
    frames, rows = joined_boundaries(run_chunks(signatures))
    boundaries = [ALineBoundary(int(i), row, SOURCE_GROUND_TRUTH) for i, row in zip(frames, rows)]

    write_boundaries(out / "boundaries.csv", boundaries, cfg.scan)
    write_scan_metadata(out / "scan.json", scan, phantom, noise, cfg.seed, len(boundaries))
    return [], _files_under(out), _absent_warnings(boundaries, "simulate")


def _load_mask_boundaries(cfg: PipelineConfig) -> Tuple[List[ALineBoundary], List[Path]]:
    mask_dir = Path(cfg.paths.mask_dir) if cfg.paths.mask_dir else stage_dir(cfg, "simulate") / "masks"
    if not mask_dir.is_dir():
        raise StageDependencyError(f"no mask directory at {mask_dir}", "simulate")
    masks = read_masks(mask_dir)
    params = cfg.extract.mask_params()
    boundaries = [boundary_from_mask(mask, cfg.scan, params) for mask in masks]
    return boundaries, [path for _, path in indexed_files(mask_dir, "mask")]


def _load_intensity_boundaries(cfg: PipelineConfig) -> Tuple[List[ALineBoundary], List[Path]]:
    frame_dir = Path(cfg.paths.frame_dir) if cfg.paths.frame_dir else stage_dir(cfg, "simulate") / "frames"
    files = indexed_files(frame_dir, "frame")
    if not files:
        raise StageDependencyError(f"no 'frame_NNNN' images in {frame_dir}", "simulate")
    params = cfg.extract.intensity_params()
    boundaries = []
    for index, path in files:
        frame = PolarFrame(read_image(path).astype(np.float64) / 255.0, index)
        boundaries.append(boundary_from_intensity(normalize_intensity(frame), cfg.scan, params))
    return boundaries, [path for _, path in files]


def extract_stage(cfg: PipelineConfig) -> StageResult:
    out = stage_dir(cfg, "extract")
    out.mkdir(parents=True, exist_ok=True)
    if cfg.extract.method == "mask":
        boundaries, inputs = _load_mask_boundaries(cfg)
    else:
        boundaries, inputs = _load_intensity_boundaries(cfg)
    if len(boundaries) != cfg.scan.n_frames:
        raise ConfigError(f"found {len(boundaries)} frames, scan declares {cfg.scan.n_frames}")

    cloud = pointcloud_from_scan(boundaries, cfg.scan)
    warnings = _absent_warnings(boundaries, "extract")
    low = sum(int(b.low_confidence.sum()) for b in boundaries)
    if low:
        warnings.append(f"extract: {low} columns held more than one lumen run")
    outputs = [
        write_boundaries(out / "boundaries.csv", boundaries, cfg.scan),
        write_ply(out / "cloud.ply", cloud),
    ]
    logger.info(f"Extracted {len(cloud)} wall points from {len(boundaries)} frames")
    return inputs, outputs, warnings


def fit_stage(cfg: PipelineConfig) -> StageResult:
    cloud_path = _require(stage_dir(cfg, "extract") / "cloud.ply", "extract")
    out = stage_dir(cfg, "fit")
    out.mkdir(parents=True, exist_ok=True)
    unit_cloud, transform = normalize_pointcloud(read_ply(cloud_path))
    try:
        net, log = train_with_log(unit_cloud, cfg.train, transform)
    except TrainingDivergedError as exc:
        if exc.checkpoint is not None:
            save_model(exc.checkpoint, out / "model.diverged.aoct")
            logger.error(f"Training diverged at step {exc.step}; last good model saved", exc_info=True)
        raise

    (out / "transform.json").write_text(json.dumps(transform.to_dict(), indent=2, sort_keys=True) + "\n")
    outputs = [
        save_model(net, out / "model.aoct"),
        export_json(net, out / "model.json"),
        out / "transform.json",
        write_csv(out / "training_log.csv", log),
    ]
    warnings = []
    skipped = int(log["skipped"].sum()) if len(log) else 0
    if skipped:
        warnings.append(f"fit: {skipped} queries skipped for a vanishing field gradient")
    return [cloud_path], outputs, warnings


def mesh_stage(cfg: PipelineConfig) -> StageResult:
    model_path = _require(stage_dir(cfg, "fit") / "model.aoct", "fit")
    out = stage_dir(cfg, "mesh")
    out.mkdir(parents=True, exist_ok=True)
    net = load_model(model_path)
    z_crop = cfg.scan.z_range if cfg.mesh.crop_to_scan else None
    mesh = extract_mesh(net, cfg.mesh.grid, z_crop)
    outputs = [write_mesh(out / "mesh.obj", mesh), write_mesh(out / "mesh.ply", mesh)]
    return [model_path], outputs, []


def resample_stage(cfg: PipelineConfig) -> StageResult:
    model_path = _require(stage_dir(cfg, "fit") / "model.aoct", "fit")
    out = stage_dir(cfg, "resample")
    out.mkdir(parents=True, exist_ok=True)
    scan = cfg.scan.to_dict()
    signatures = [
        resample_frames_task.s(str(model_path), scan, chunk)  # type:ignore
        for chunk in frame_chunks(cfg.scan.n_frames)
    ]
    frames, rows = joined_boundaries(run_chunks(signatures))
    boundaries = [ALineBoundary(int(i), row, SOURCE_RESAMPLED) for i, row in zip(frames, rows)]
    outputs = [write_boundaries(out / "boundaries.csv", boundaries, cfg.scan)]
    return [model_path], outputs, _absent_warnings(boundaries, "resample")


def metrics_stage(cfg: PipelineConfig) -> StageResult:
    gt_path = _require(stage_dir(cfg, "simulate") / "boundaries.csv", "simulate")
    extracted_path = _require(stage_dir(cfg, "extract") / "boundaries.csv", "extract")
    cloud_path = _require(stage_dir(cfg, "extract") / "cloud.ply", "extract")
    model_path = _require(stage_dir(cfg, "fit") / "model.aoct", "fit")
    mesh_path = _require(stage_dir(cfg, "mesh") / "mesh.ply", "mesh")
    resampled_path = _require(stage_dir(cfg, "resample") / "boundaries.csv", "resample")
    inputs = [gt_path, extracted_path, cloud_path, model_path, mesh_path, resampled_path]
    out = stage_dir(cfg, "metrics")
    out.mkdir(parents=True, exist_ok=True)

    scan = cfg.scan
    gt = read_boundaries(gt_path, scan)
    extracted = read_boundaries(extracted_path, scan)
    resampled = read_boundaries(resampled_path, scan)
    transform = load_model(model_path).unit_transform
    mesh = read_mesh(mesh_path)
    cloud: PointCloud = read_ply(cloud_path)

    report = MetricsReport(
        provenance={
            "config_hash": cfg.config_hash(),
            "inputs": {_relative(p, cfg.out_dir): file_digest(p) for p in inputs},
        }
    )
    resampled_errors = aline_errors(gt, resampled)
    report.add_aline_errors(resampled_errors)
    report.add_aline_errors(aline_errors(gt, extracted), prefix="extract_")

    gt_masks = [boundary_to_mask(b, scan) for b in gt]
    frames = frame_segmentation_metrics(gt, resampled, scan, gt_masks, cfg.metrics.emd_cap, cfg.seed)
    report.add_frame_table(frames)

    report.add_point_to_mesh(point_to_mesh(cloud.points, mesh))
    reconstruction_metrics(report, cloud, mesh, transform, cfg.metrics.mesh_samples, cfg.metrics.emd_cap, cfg.seed)

    tv_raw = np.array([boundary_total_variation(b) for b in extracted])
    tv_resampled = np.array([boundary_total_variation(b) for b in resampled])
    report.add("total_variation_extract_mm", tv_raw.mean())
    report.add("total_variation_resample_mm", tv_resampled.mean())
    report.add("smoother_frame_fraction", float((tv_resampled < tv_raw).mean()))

    per_frame = resampled_errors.per_frame.merge(frames, on="frame", how="left")
    per_frame["tv_extract_mm"] = tv_raw
    per_frame["tv_resample_mm"] = tv_resampled
    report.per_frame = per_frame
    outputs = [report.write_json(out / "report.json"), report.write_csv(out / "per_frame.csv")]
    logger.info(
        f"mu_dist {report.values['mu_dist_mm']:.4f} mm, max_dist {report.values['max_dist_mm']:.4f} mm"
    )
    warnings = []
    if resampled_errors.coverage_deficit:
        warnings.append(f"metrics: coverage deficit of {resampled_errors.coverage_deficit} columns")
    return inputs, outputs, warnings


STAGE_FUNCTIONS: Dict[str, Callable[[PipelineConfig], StageResult]] = {
    "simulate": simulate_stage,
    "extract": extract_stage,
    "fit": fit_stage,
    "mesh": mesh_stage,
    "resample": resample_stage,
    "metrics": metrics_stage,
}


# Orchestration


def _history(run_id: str, stage: str, cfg: PipelineConfig):
    try:
        return StageRun.objects.create(run_id=run_id, stage=stage, output_dir=str(cfg.out_dir))
    except DatabaseError as e:
        logger.warning(f"Run history unavailable ({e}); run 'migrate' to record stage runs")
        return None


def _finish(row, status: str, delta: str) -> None:
    if row is None:
        return
    try:
        row.status = status
        row.manifest_delta = delta
        row.completed_at = timezone.now()
        row.save()
    except DatabaseError as e:
        logger.warning(f"Could not update run history: {e}")


def run_stage(name: str, cfg: PipelineConfig, lock: bool = True) -> StageRecord:
    """Run one stage, record its digests in the manifest, return the manifest delta."""
    if name not in STAGE_FUNCTIONS:
        raise ConfigError(f"unknown stage '{name}'; expected one of {STAGES}")
    problems = validate_config(cfg, (name,))
    if problems:
        raise ConfigError("; ".join(problems))
    if lock:
        with OutputLock(cfg.out_dir):
            return run_stage(name, cfg, lock=False)

    run_id = cfg.config_hash()[:16]
    row = _history(run_id, name, cfg)
    logger.info(f"Stage '{name}' starting (run {run_id}, output {cfg.out_dir})")
    started = time.perf_counter()
    try:
        inputs, outputs, warnings = STAGE_FUNCTIONS[name](cfg)

        for warning in warnings[:20]:
            logger.warning(warning)
        if len(warnings) > 20:
            logger.warning(f"... and {len(warnings) - 20} more warnings (see manifest)")

        out_dir = cfg.out_dir
        record = StageRecord(
            stage=name,
            inputs={_relative(p, out_dir): file_digest(p) for p in inputs},
            outputs={_relative(p, out_dir): file_digest(p) for p in outputs},
            wall_clock_s=round(time.perf_counter() - started, 3),
            warnings=warnings,
        )
        manifest = RunManifest.load(out_dir)
        manifest.config = cfg.snapshot()
        manifest.config_hash = cfg.config_hash()
        manifest.merge(record)
        manifest.save(out_dir)
    except AoctError as e:
        logger.error(f"Stage '{name}' failed: {e}", exc_info=True)
        _finish(row, StageRun.StatusChoices.FAILED, str(e))
        raise
    except Exception as e:
        logger.error(f"Unexpected error in stage '{name}': {e}", exc_info=True)
        _finish(row, StageRun.StatusChoices.FAILED, f"Error: {e}")
        raise

    _finish(row, StageRun.StatusChoices.COMPLETE, json.dumps(record.to_dict(), sort_keys=True))
    logger.info(f"Stage '{name}' complete in {record.wall_clock_s:.1f} s ({len(outputs)} files)")
    return record


def _relative(path: Path, out_dir: Path) -> str:
    try:
        return str(Path(path).resolve().relative_to(Path(out_dir).resolve()))
    except ValueError:
        return str(Path(path).resolve())


def run_pipeline(cfg: PipelineConfig) -> List[StageRecord]:
    """Run the configured stages in order under one lock."""
    problems = validate_config(cfg)
    if problems:
        raise ConfigError("; ".join(problems))
    with OutputLock(cfg.out_dir):
        return [run_stage(name, cfg, lock=False) for name in cfg.stages]
