"""
Long statistical runs over seed replicas.

Deselected by default; run with ``pytest -m slow``.
"""

import numpy as np
import pytest

from betagan import BetaGanLab
from betagan.config import parse_config
from betagan.models import (
    BoxDomain,
    Dataset,
    GeneratorLoss,
    InverseTemperature,
    LatentPrior,
    MlpSpec,
    NetworkRole,
    TrainerConfig,
)
from betagan.networks import build_mlp, parse_layers
from betagan.target import sample_heated
from betagan.trainer import AdversarialTrainer, discriminator_step, generator_step

from .test_trainer import discriminator_objective, generator_loss_value, numeric_parameter_gradient

SEEDS = range(10)
WIDE_DISCRIMINATOR = "tanh 128 | tanh 128 | tanh 128"

pytestmark = pytest.mark.slow


def experiment(out, layout: str, seed: int, **overrides) -> dict:
    data = {
        "dataset": {"layout": layout, "seed": seed},
        "networks": {"generator": "relu 128 | relu 128", "discriminator": WIDE_DISCRIMINATOR},
        "seed": seed,
        "out": str(out),
        "stage_samples": 10_000,
    }
    data.update(overrides)
    return data


def pretrain(hidden: str, dim: int, seed: int, allow_smooth_hidden: bool = False):
    g_spec = MlpSpec(dim, parse_layers(f"{hidden} | linear {dim}"), NetworkRole.GENERATOR, allow_smooth_hidden)
    d_spec = MlpSpec(dim, parse_layers(f"{WIDE_DISCRIMINATOR} | sigmoid 1"), NetworkRole.DISCRIMINATOR)
    trainer = AdversarialTrainer(TrainerConfig(seed=seed), BoxDomain(dim=dim), LatentPrior(dim))
    _, _, _, result = trainer.pretrain_uniform(build_mlp(g_spec, 1000 + seed), build_mlp(d_spec, 2000 + seed))
    return result


class TestGradients:
    """Autodiff against finite differences on random small pairs."""

    @pytest.mark.parametrize("loss", [GeneratorLoss.SATURATING, GeneratorLoss.NON_SATURATING])
    def test_random_pairs(self, loss):
        rng = np.random.default_rng(0)
        lr = 1e-3
        for trial in range(50):
            dim = int(rng.integers(1, 4))
            width = int(rng.integers(2, 6))
            g = build_mlp(MlpSpec(dim, parse_layers(f"relu {width} | linear {dim}"), NetworkRole.GENERATOR), trial)
            d = build_mlp(MlpSpec(dim, parse_layers(f"tanh {width} | sigmoid 1"), NetworkRole.DISCRIMINATOR), trial)
            real, z = rng.uniform(-1, 1, size=(5, dim)), rng.uniform(-1, 1, size=(5, dim))

            new_g, _ = generator_step(d, g, z, lr, loss)
            numeric = numeric_parameter_gradient(lambda: generator_loss_value(g, d, z, loss), g, step=1e-5)
            for old, new, expected in zip(g.parameters, new_g.parameters, numeric):
                np.testing.assert_allclose((old.data - new.data) / lr, expected, rtol=1e-5, atol=1e-8)

            new_d, _ = discriminator_step(d, g, real, z, lr)
            numeric = numeric_parameter_gradient(lambda: discriminator_objective(d, g, real, z), d, step=1e-5)
            for old, new, expected in zip(d.parameters, new_d.parameters, numeric):
                np.testing.assert_allclose((new.data - old.data) / lr, expected, rtol=1e-5, atol=1e-8)


class TestHeatedMoments:
    """Mean squared displacement of the heated sampler."""

    @pytest.mark.parametrize("dim", [1, 3])
    @pytest.mark.parametrize("beta", [1.0, 4.0, 25.0])
    def test_second_moment(self, dim, beta):
        data = Dataset(points=np.zeros((1, dim)), box=BoxDomain(-10.0, 10.0, dim))
        samples = sample_heated(data, InverseTemperature.finite(beta), 1_000_000, np.random.default_rng(17))
        assert np.mean(np.sum(samples ** 2, axis=1)) == pytest.approx(dim / beta, rel=0.02)


class TestPretraining:
    """Uniform pretraining and the frozen-noise failure."""

    def test_relu_generator_learns_uniform(self):
        passed = sum(pretrain("relu 128 | relu 128", 3, seed).success for seed in SEEDS)
        assert passed >= 8

    def test_smooth_generator_freezes(self):
        frozen = sum(pretrain("tanh 128 | tanh 128", 8, seed, True).frozen_noise < 0.2 for seed in SEEDS)
        healthy = sum(pretrain("relu 128 | relu 128", 8, seed).frozen_noise > 0.5 for seed in SEEDS)
        assert frozen >= 8
        assert healthy >= 8


class TestTraining:
    """Annealed runs against the tau-matched vanilla baseline."""

    def setup_method(self):
        self.lab = BetaGanLab()

    def paired_runs(self, tmp_path, layout: str, seed: int):
        annealed = self.lab.train(parse_config(experiment(tmp_path / f"beta_{seed}", layout, seed)))
        vanilla = self.lab.train(
            parse_config(experiment(tmp_path / f"vanilla_{seed}", layout, seed, mode="vanilla", tau_budget=annealed.tau))
        )
        assert vanilla.tau == annealed.tau - annealed.tau % 2
        return self.lab.summarize(annealed, seed), self.lab.summarize(vanilla, seed)

    def test_mode_coverage(self, tmp_path):
        annealed_full, vanilla_full = 0, 0
        for seed in SEEDS:
            annealed, vanilla = self.paired_runs(tmp_path, "mog5", seed)
            annealed_full += annealed["covered_modes"] == 5
            vanilla_full += vanilla["covered_modes"] == 5
        assert annealed_full >= 8
        assert vanilla_full <= 4

    def test_nested_cubes(self, tmp_path):
        good = 0
        for seed in SEEDS:
            result = self.lab.train(parse_config(experiment(tmp_path / f"cubes_{seed}", "cubes", seed)))
            report = self.lab.evaluate(
                result.out_dir / "samples" / "final.csv",
                result.out_dir / "data.yaml",
                result.out_dir / "report.yaml",
            )
            good += report.wireframe_fraction >= 0.95 and min(report.cube_shares) >= 0.2
        assert good >= 8

    def test_stability(self, tmp_path):
        steadier = 0
        for seed in SEEDS:
            annealed, vanilla = self.paired_runs(tmp_path, "mog10", seed)
            steadier += annealed["final_gap"] < vanilla["final_gap"]
        assert steadier >= 8
