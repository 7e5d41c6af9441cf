"""
BetaGanLab - the experiment runner behind the command-line interface.

Creates synthetic datasets, trains annealed or vanilla GANs with all their
artifacts, evaluates sample files and runs seed sweeps.
"""

import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import yaml

from . import __version__
from .config import ExperimentConfig, parse_config, write_manifest
from .diagnostics import (
    frozen_noise_score,
    mode_coverage,
    stability_report,
    uniformity_score,
)
from .models import (
    BetaGanError,
    BoxDomain,
    ConfigError,
    ContractError,
    CubesSpec,
    DataFormatError,
    Dataset,
    MixtureSpec,
    ModeCoverageReport,
    PretrainResult,
    TrainingFault,
    TrainingMode,
    TrainingTrace,
)
from .networks import Mlp, build_mlp, generate, save_checkpoint, validate_pairing
from .synthetic import (
    DatasetDescription,
    distance_to_wireframe,
    make_layout,
    nearest_cube,
    place_layout,
    read_sidecar,
    sample_layout,
    sample_nested_cubes,
    sidecar_path,
    write_sidecar,
)
from .target import reflect_into_box, rescale_dataset
from .trainer import AdversarialTrainer, annealed_tau_budget
from .utils.csv_io import format_float, read_matrix, write_matrix, write_rows

LOG_ENV = "BETAGAN_LOG"
LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}

TRACE_HEADER = ("step", "beta", "loss_d", "loss_g", "d_real", "d_fake", "tau")
SUMMARY_HEADER = ("seed", "mode", "covered_modes", "total_modes", "final_gap", "frozen_noise", "tau")

COVERAGE_RADIUS_SIGMAS = 3.0
COVERAGE_THRESHOLD = 0.02
WIREFRAME_TOLERANCE_NOISE = 5.0
STABILITY_WINDOW = 100


def setup_logging(level: Optional[str] = None) -> logging.Logger:
    """
    Install the package log handler once.

    The level comes from the argument, else BETAGAN_LOG, else info.
    """
    logger = logging.getLogger("betagan")
    if not logger.handlers:
        handler = logging.StreamHandler()
        formatter = logging.Formatter(
            '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
        )
        handler.setFormatter(formatter)
        logger.addHandler(handler)

    name = (level or os.getenv(LOG_ENV) or "info").strip().lower()
    if name not in LOG_LEVELS:
        logger.setLevel(logging.INFO)
        logger.warning(f"Unknown {LOG_ENV} level '{name}', using info")
    else:
        logger.setLevel(LOG_LEVELS[name])
    return logger


def write_trace(trace: TrainingTrace, path: Union[str, Path]) -> Path:
    """Trace CSV; beta is 0 for the uniform stage and inf for the data stage."""
    rows = (
        (r.step, float(r.beta), r.loss_d, r.loss_g, r.d_real, r.d_fake, r.tau)
        for r in trace.records
    )
    return write_rows(path, rows, header=TRACE_HEADER)


def write_stage_table(trace: TrainingTrace, path: Union[str, Path]) -> Path:
    """One row per finished stage: label, last step index (exclusive) and tau at that point."""
    rows = []
    for label, end in trace.stage_boundaries:
        tau = trace.records[end - 1].tau if end > 0 else 0
        rows.append((label, end, tau))
    return write_rows(path, rows, header=("stage", "end_step", "tau"))


def _blank_none(value: Any) -> Any:
    return "" if value is None else value


def _seed_streams(seed: int) -> Tuple[int, int, np.random.Generator]:
    """Initialization seeds for G and D and the sample-dump stream, disjoint from the trainer's."""
    children = np.random.SeedSequence(seed).spawn(6)
    g_seed = int(children[3].generate_state(1)[0])
    d_seed = int(children[4].generate_state(1)[0])
    return g_seed, d_seed, np.random.default_rng(children[5])


@dataclass
class EvaluationReport:
    """Everything `betagan eval` measures on one sample file."""
    n_samples: int
    coverage: ModeCoverageReport
    frozen_noise: float
    ks: Optional[Tuple[float, ...]] = None
    max_abs_correlation: Optional[float] = None
    wireframe_fraction: Optional[float] = None
    cube_shares: Optional[Tuple[float, float]] = None

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "n_samples": self.n_samples,
            "coverage": {
                "covered_count": self.coverage.covered_count,
                "total_modes": self.coverage.total_modes,
                "fractions": list(self.coverage.fractions),
                "unassigned_fraction": self.coverage.unassigned_fraction,
            },
            "frozen_noise_score": self.frozen_noise,
        }
        if self.ks is not None:
            data["uniformity"] = {
                "ks": list(self.ks),
                "max_ks": max(self.ks),
                "max_abs_correlation": self.max_abs_correlation,
            }
        if self.wireframe_fraction is not None:
            data["wireframe"] = {
                "fraction_within_tolerance": self.wireframe_fraction,
                "outer_share": self.cube_shares[0],
                "inner_share": self.cube_shares[1],
            }
        return data


@dataclass
class RunResult:
    """Artifacts and outcome of one training run."""
    out_dir: Path
    mode: TrainingMode
    trace: TrainingTrace
    generator: Mlp
    discriminator: Mlp
    description: Optional[DatasetDescription] = None
    pretrain: Optional[PretrainResult] = None
    stage_files: List[Path] = field(default_factory=list)
    final_samples: Optional[np.ndarray] = None

    @property
    def tau(self) -> int:
        return self.trace.tau


def evaluate_samples(samples: np.ndarray, description: DatasetDescription) -> EvaluationReport:
    """
    Score box-space samples against the layout a dataset was drawn from.

    Samples are mapped back to the layout's own coordinates before measuring
    coverage; uniformity and frozen noise are measured in the box.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    if samples.shape[1] != description.box.dim:
        raise DataFormatError(
            f"Samples have {samples.shape[1]} columns but the dataset has {description.box.dim}"
        )
    raw = description.to_raw(samples)
    spec = description.spec
    n = samples.shape[0]

    wireframe_fraction = None
    cube_shares = None
    if isinstance(spec, MixtureSpec):
        radius = COVERAGE_RADIUS_SIGMAS * spec.sigma if spec.sigma > 0 else 1e-9
        coverage = mode_coverage(raw, np.asarray(spec.centers), radius, COVERAGE_THRESHOLD)
    else:
        distances = distance_to_wireframe(raw, spec)
        tolerance = WIREFRAME_TOLERANCE_NOISE * spec.edge_noise if spec.edge_noise > 0 else 1e-9
        on_frame = distances <= tolerance
        cubes = nearest_cube(raw, spec)
        counts = np.bincount(cubes[on_frame], minlength=2)
        fractions = tuple(float(c) / n for c in counts)
        wireframe_fraction = float(on_frame.mean())
        cube_shares = (float(np.mean(cubes == 0)), float(np.mean(cubes == 1)))
        coverage = ModeCoverageReport(
            fractions=fractions,
            covered_count=int(sum(f >= COVERAGE_THRESHOLD for f in fractions)),
            total_modes=2,
            unassigned_fraction=float(1.0 - wireframe_fraction),
        )

    frozen = frozen_noise_score(samples, description.box) if n >= 2 else 0.0
    report = EvaluationReport(
        n_samples=n,
        coverage=coverage,
        frozen_noise=float(frozen),
        wireframe_fraction=wireframe_fraction,
        cube_shares=cube_shares,
    )
    if n >= 100:
        uniformity = uniformity_score(samples, description.box)
        report.ks = uniformity.ks
        report.max_abs_correlation = uniformity.max_abs_correlation
    return report


def _run_replica(config_data: Dict[str, Any], paired: bool, show_progress: bool) -> List[Dict[str, Any]]:
    """Process-pool entry point: one seed, one or both modes."""
    lab = BetaGanLab(show_progress=show_progress)
    config = parse_config(config_data)
    base = Path(config.out)
    modes = [TrainingMode.BETA_GAN, TrainingMode.VANILLA] if paired else [config.mode]

    rows = []
    tau_budget = config.tau_budget
    for mode in modes:
        run_config = config.with_overrides(out=str(base / mode.value / f"seed_{config.seed}"), mode=mode)
        if mode is TrainingMode.VANILLA and tau_budget is not None:
            run_config = run_config.model_copy(update={"tau_budget": tau_budget})
        result = lab.train(run_config)
        if mode is TrainingMode.BETA_GAN:
            tau_budget = result.tau
        rows.append(lab.summarize(result, config.seed))
    return rows


class BetaGanLab:
    """
    Annealed adversarial training laboratory.

    Main interface for generating toy datasets, training beta-GAN and
    vanilla runs with full artifacts, and scoring generated samples.
    """

    def __init__(self, show_progress: bool = False, log_level: Optional[str] = None):
        self.logger = setup_logging(log_level)
        self.show_progress = show_progress

    def synth(
        self,
        layout: str,
        n_points: int,
        seed: int,
        out_path: Union[str, Path],
        rescale: bool = False,
        balanced_edges: bool = False,
    ) -> Path:
        """
        Write a synthetic dataset CSV and its sidecar description.

        Points are written in the layout's own coordinates unless rescale is
        set, in which case they go through place_layout onto [-1, 1]^d and the
        transform is recorded in the sidecar.
        """
        spec = make_layout(layout)
        rng = np.random.default_rng(seed)
        if isinstance(spec, CubesSpec) and balanced_edges:
            raw = sample_nested_cubes(spec, n_points, rng, balanced_edges=True)
        else:
            raw = sample_layout(spec, n_points, rng)

        box = BoxDomain(dim=raw.shape[1])
        transform = None
        points = raw
        if rescale:
            dataset = place_layout(raw, box)
            points, transform = dataset.points, dataset.transform

        out_path = Path(out_path)
        write_matrix(out_path, points)
        description = DatasetDescription(layout, spec, n_points, seed, box, transform)
        write_sidecar(description, sidecar_path(out_path))
        self.logger.info(f"Wrote {n_points} points of layout '{layout}' to {out_path}")
        return out_path

    def load_data(self, config: ExperimentConfig) -> Tuple[Dataset, Optional[DatasetDescription]]:
        """Materialize the configured dataset inside the configured box."""
        source = config.dataset
        if source.layout is not None:
            spec = make_layout(source.layout)
            raw = sample_layout(spec, source.n_points, np.random.default_rng(source.seed))
            box = config.build_box(raw.shape[1])
            if source.rescale:
                dataset = place_layout(raw, box)
            else:
                # edge jitter can leave the box by a hair
                dataset = Dataset(points=reflect_into_box(raw, box), box=box)
            description = DatasetDescription(
                source.layout, spec, source.n_points, source.seed, box, dataset.transform
            )
            return dataset, description

        path = Path(source.path)
        raw = read_matrix(path)
        box = config.build_box(raw.shape[1])
        description = None
        if sidecar_path(path).exists():
            description = self._read_description(sidecar_path(path))
        already_rescaled = description is not None and description.transform is not None
        rescale = source.rescale and not already_rescaled
        if already_rescaled and source.rescale:
            self.logger.info(f"{path} is already in box coordinates; not rescaling again")
        if rescale and description is not None:
            dataset = place_layout(raw, box)
        elif rescale:
            dataset = rescale_dataset(raw, box)
        else:
            try:
                dataset = Dataset(points=raw, box=box)
            except ContractError as e:
                raise ConfigError(f"{path}: {e}; set dataset.rescale to map the data into the box")
        if description is not None:
            description = DatasetDescription(
                description.layout,
                description.spec,
                description.n_points,
                description.seed,
                box,
                dataset.transform if rescale else description.transform,
            )
        self.logger.info(f"Loaded {dataset.size} points in {dataset.dim} dimensions from {path}")
        return dataset, description

    def _read_description(self, path: Path) -> DatasetDescription:
        try:
            return read_sidecar(path)
        except (ContractError, yaml.YAMLError) as e:
            raise DataFormatError(str(e), path=str(path))

    def _build_networks(self, config: ExperimentConfig, dim: int) -> Tuple[Mlp, Mlp, np.random.Generator]:
        try:
            config.check_architecture(dim)
            g_spec = config.build_generator_spec(dim)
            d_spec = config.build_discriminator_spec(dim)
        except BetaGanError as e:
            raise ConfigError(f"Invalid network configuration: {e}")
        g_seed, d_seed, dump_rng = _seed_streams(config.seed)
        return build_mlp(g_spec, g_seed), build_mlp(d_spec, d_seed), dump_rng

    def train(self, config: ExperimentConfig) -> RunResult:
        """
        Run one experiment end to end.

        beta_gan mode pretrains on the uniform distribution and then anneals;
        vanilla mode trains fresh networks on the data with the same tau
        budget. Writes manifest.yaml, trace.csv, stages.csv, checkpoints/ and
        samples/ under config.out. A training fault keeps everything written
        so far and is re-raised.
        """
        start_time = time.time()
        out_dir = Path(config.out)
        out_dir.mkdir(parents=True, exist_ok=True)

        dataset, description = self.load_data(config)
        dim = dataset.dim
        g_net, d_net, dump_rng = self._build_networks(config, dim)
        prior = config.build_prior(dim)
        validate_pairing(g_net, prior, dataset.box)
        schedule = config.build_schedule()
        trainer_config = config.build_trainer_config()

        if description is not None:
            write_matrix(out_dir / "data.csv", dataset.points)
            write_sidecar(description, out_dir / "data.yaml")

        metadata: Dict[str, Any] = {
            "version": __version__,
            "mode": config.mode.value,
            "generator": g_net.spec.describe(),
            "discriminator": d_net.spec.describe(),
            "status": "running",
        }
        write_manifest(config, out_dir / "manifest.yaml", metadata)

        stage_files: List[Path] = []
        last_samples: Dict[str, np.ndarray] = {}

        def dump_stage(label, beta, g_stage, d_stage):
            index = len(stage_files)
            name = f"stage_{index:02d}_{label}"
            samples = generate(g_stage, prior, config.stage_samples, dump_rng)
            stage_files.append(write_matrix(out_dir / "samples" / f"{name}.csv", samples))
            save_checkpoint(g_stage, out_dir / "checkpoints" / f"{name}.G.ckpt")
            save_checkpoint(d_stage, out_dir / "checkpoints" / f"{name}.D.ckpt")
            last_samples["final"] = samples

        trainer = AdversarialTrainer(
            trainer_config, dataset.box, prior, on_stage_end=dump_stage, show_progress=self.show_progress
        )
        self.logger.info(f"Training {config.mode.value}: {g_net.spec.describe()} vs {d_net.spec.describe()}")

        try:
            if config.mode is TrainingMode.BETA_GAN:
                g_net, d_net, _, pretrain = trainer.pretrain_uniform(g_net, d_net)
                metadata["pretrain_success"] = pretrain.success
                metadata["pretrain_steps"] = pretrain.steps
                g_net, d_net, _ = trainer.run_annealed(g_net, d_net, dataset, schedule)
            else:
                budget = config.tau_budget or annealed_tau_budget(trainer_config, schedule)
                metadata["tau_budget"] = budget
                g_net, d_net, _ = trainer.run_vanilla_baseline(g_net, d_net, dataset, budget)
        except TrainingFault:
            metadata["status"] = "fault"
            self._finish(config, trainer.trace, metadata, out_dir)
            raise

        metadata["status"] = "complete"
        self._finish(config, trainer.trace, metadata, out_dir)
        if "final" in last_samples:
            write_matrix(out_dir / "samples" / "final.csv", last_samples["final"])

        self.logger.info(
            f"Run finished in {time.time() - start_time:.1f}s: {len(trainer.trace)} steps, tau={trainer.trace.tau}"
        )
        return RunResult(
            out_dir=out_dir,
            mode=config.mode,
            trace=trainer.trace,
            generator=g_net,
            discriminator=d_net,
            description=description,
            pretrain=trainer.pretrain_result,
            stage_files=stage_files,
            final_samples=last_samples.get("final"),
        )

    def _finish(self, config: ExperimentConfig, trace: TrainingTrace, metadata: Dict[str, Any], out_dir: Path) -> None:
        metadata["tau"] = trace.tau
        metadata["steps"] = len(trace)
        metadata["generator_loss"] = trace.metadata.get("generator_loss")
        write_trace(trace, out_dir / "trace.csv")
        write_stage_table(trace, out_dir / "stages.csv")
        write_manifest(config, out_dir / "manifest.yaml", metadata)

    def evaluate(
        self,
        samples_path: Union[str, Path],
        dataset_spec_path: Union[str, Path],
        report_path: Union[str, Path],
    ) -> EvaluationReport:
        """Score a sample CSV; writes report.yaml-style text and mode_fractions.csv beside it."""
        description = self._read_description(Path(dataset_spec_path))
        samples = read_matrix(samples_path, expected_columns=description.box.dim)
        report = evaluate_samples(samples, description)

        report_path = Path(report_path)
        report_path.parent.mkdir(parents=True, exist_ok=True)
        data = report.to_dict()
        data["samples"] = str(samples_path)
        data["layout"] = description.layout
        with open(report_path, "w", encoding="utf-8") as f:
            yaml.safe_dump(data, f, sort_keys=True, default_flow_style=False)
        write_rows(
            report_path.parent / "mode_fractions.csv",
            ((i, fraction) for i, fraction in enumerate(report.coverage.fractions)),
            header=("mode", "fraction"),
        )
        self.logger.info(
            f"Evaluated {report.n_samples} samples: {report.coverage.covered_count}/"
            f"{report.coverage.total_modes} modes covered, frozen-noise={format_float(report.frozen_noise)}"
        )
        return report

    def summarize(self, result: RunResult, seed: int) -> Dict[str, Any]:
        """One sweep_summary.csv row for a finished run."""
        covered, total, frozen = None, None, None
        if result.description is not None and result.final_samples is not None:
            report = evaluate_samples(result.final_samples, result.description)
            covered, total, frozen = report.coverage.covered_count, report.coverage.total_modes, report.frozen_noise
        window = min(STABILITY_WINDOW, len(result.trace))
        final_gap = stability_report(result.trace, window).final_gap if window > 0 else None
        return {
            "seed": seed,
            "mode": result.mode.value,
            "covered_modes": covered,
            "total_modes": total,
            "final_gap": final_gap,
            "frozen_noise": frozen,
            "tau": result.tau,
        }

    def sweep(
        self,
        config: ExperimentConfig,
        seeds: Sequence[int],
        paired: bool = False,
        workers: Optional[int] = None,
    ) -> List[Dict[str, Any]]:
        """
        Run seed replicas in a process pool, each under <out>/<mode>/seed_<s>/.

        With paired, every seed runs beta_gan and then vanilla with the tau
        the beta_gan run actually spent. Writes <out>/sweep_summary.csv.
        """
        if not seeds:
            raise ContractError("A sweep needs at least one seed")
        base = Path(config.out)
        jobs = [config.with_overrides(seed=s).model_dump(mode="json") for s in seeds]

        rows: List[Dict[str, Any]] = []
        with ProcessPoolExecutor(max_workers=workers) as executor:
            futures = {executor.submit(_run_replica, job, paired, False): job["seed"] for job in jobs}
            for future in as_completed(futures):
                seed = futures[future]
                try:
                    rows.extend(future.result())
                    self.logger.info(f"Seed {seed} finished")
                except TrainingFault as e:
                    self.logger.error(f"Seed {seed} hit a training fault: {e}")
                    rows.append({"seed": seed, "mode": "fault"})

        rows.sort(key=lambda row: (row["seed"], row["mode"]))
        write_rows(
            base / "sweep_summary.csv",
            ([_blank_none(row.get(key)) for key in SUMMARY_HEADER] for row in rows),
            header=SUMMARY_HEADER,
        )
        return rows
