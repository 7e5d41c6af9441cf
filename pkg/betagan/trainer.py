"""
Annealed adversarial training.

Runs the full procedure: learn the uniform distribution on the box, then
anneal the target through the geometric schedule while training, and finish
on the empirical distribution. A vanilla single-stage baseline with the
non-saturating generator loss is provided for comparison.
"""

import logging
from dataclasses import dataclass, replace
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.special import expit

from .autodiff import Direction, Optimizer, Tape, backward, log_sigmoid, mean, ordered_gradients, sgd_step
from .autodiff import Tensor
from .diagnostics import frozen_noise_score, passes_uniformity, uniformity_score
from .models import (
    BoxDomain,
    ContractError,
    Dataset,
    DimensionError,
    GeneratorLoss,
    InverseTemperature,
    LatentPrior,
    PretrainResult,
    TraceRecord,
    TrainerConfig,
    TrainingFault,
    TrainingMode,
    TrainingTrace,
)
from .networks import Mlp, discriminator_logits, forward_generator, generate, validate_pairing
from .schedule import AnnealingSchedule
from .target import sample_target
from .utils.progress import ProgressReporter

logger = logging.getLogger("betagan.trainer")

StageCallback = Callable[[str, InverseTemperature, Mlp, Mlp], None]


@dataclass(frozen=True)
class StepStats:
    """Loss and mean discriminator outputs of one update."""
    loss: float
    d_real: float
    d_fake: float


def _frozen(net: Mlp) -> Mlp:
    """Same parameters, excluded from differentiation."""
    return net.with_parameters([Tensor(p.data, requires_grad=False, name=p.name) for p in net.parameters])


def _check_finite(value: float, what: str) -> None:
    if not np.isfinite(value):
        raise TrainingFault(f"Non-finite {what}: {value}")


def _apply(
    net: Mlp,
    grads,
    learning_rate: float,
    direction: Direction,
    optimizer: Optional[Optimizer],
) -> Mlp:
    gradients = ordered_gradients(net.parameters, grads)
    for grad in gradients:
        if not np.all(np.isfinite(grad)):
            raise TrainingFault(f"Non-finite gradient in {net.spec.role.value} update")
    if optimizer is None:
        updated = sgd_step(net.parameters, gradients, learning_rate, direction)
    else:
        updated = optimizer.step(net.parameters, gradients)
    return net.with_parameters(updated)


def discriminator_step(
    d_net: Mlp,
    g_net: Mlp,
    real_batch: np.ndarray,
    z_batch: np.ndarray,
    lr_d: float,
    optimizer: Optional[Optimizer] = None,
) -> Tuple[Mlp, StepStats]:
    """
    One ascent step on (1/m) sum [log D(x) + log(1 - D(G(z)))].

    Only the discriminator's parameters change. The reported loss is the
    negated objective (binary cross-entropy).
    """
    real_batch = np.asarray(real_batch, dtype=np.float64)
    z_batch = np.asarray(z_batch, dtype=np.float64)
    if real_batch.shape[0] != z_batch.shape[0]:
        raise DimensionError(
            f"Real batch {real_batch.shape} and noise batch {z_batch.shape} must have the same size m"
        )

    fake_batch = forward_generator(_frozen(g_net), z_batch).data
    with Tape() as tape:
        real_logits = discriminator_logits(d_net, real_batch)
        fake_logits = discriminator_logits(d_net, fake_batch)
        objective = mean(log_sigmoid(real_logits)) + mean(log_sigmoid(-fake_logits))
    value = objective.item()
    _check_finite(value, "discriminator objective")

    grads = backward(objective, tape)
    updated = _apply(d_net, grads, lr_d, Direction.ASCEND, optimizer)
    stats = StepStats(
        loss=-value,
        d_real=float(np.mean(expit(real_logits.data))),
        d_fake=float(np.mean(expit(fake_logits.data))),
    )
    return updated, stats


def generator_step(
    d_net: Mlp,
    g_net: Mlp,
    z_batch: np.ndarray,
    lr_g: float,
    loss: GeneratorLoss = GeneratorLoss.SATURATING,
    optimizer: Optional[Optimizer] = None,
) -> Tuple[Mlp, StepStats]:
    """
    One descent step on the generator loss.

    SATURATING minimizes (1/m) sum log(1 - D(G(z))), the unmodified minimax
    loss; NON_SATURATING minimizes -(1/m) sum log D(G(z)) and is used only by
    the vanilla baseline. Only the generator's parameters change.
    """
    z_batch = np.asarray(z_batch, dtype=np.float64)
    critic = _frozen(d_net)
    with Tape() as tape:
        fake = forward_generator(g_net, z_batch)
        logits = discriminator_logits(critic, fake)
        if loss is GeneratorLoss.SATURATING:
            value_tensor = mean(log_sigmoid(-logits))
        else:
            value_tensor = -mean(log_sigmoid(logits))
    value = value_tensor.item()
    _check_finite(value, "generator loss")

    grads = backward(value_tensor, tape)
    updated = _apply(g_net, grads, lr_g, Direction.DESCEND, optimizer)
    d_fake = float(np.mean(expit(logits.data)))
    return updated, StepStats(loss=value, d_real=float("nan"), d_fake=d_fake)


class AdversarialTrainer:
    """
    Owns one training run: its random streams, optimizers and trace.

    Random streams are spawned from config.seed, so two trainers built from
    equal configs produce bit-identical traces.
    """

    def __init__(
        self,
        config: TrainerConfig,
        box: BoxDomain,
        prior: LatentPrior,
        on_stage_end: Optional[StageCallback] = None,
        show_progress: bool = False,
    ):
        self.config = config
        self.box = box
        self.prior = prior
        self.on_stage_end = on_stage_end
        self.show_progress = show_progress
        self.trace = TrainingTrace()
        self.pretrain_result: Optional[PretrainResult] = None

        noise_seq, data_seq, eval_seq = np.random.SeedSequence(config.seed).spawn(3)
        self._z_rng = np.random.default_rng(noise_seq)
        self._data_rng = np.random.default_rng(data_seq)
        self._eval_rng = np.random.default_rng(eval_seq)
        self._d_optimizer = self._make_optimizer(config.lr_d, Direction.ASCEND)
        self._g_optimizer = self._make_optimizer(config.lr_g, Direction.DESCEND)

    def _make_optimizer(self, learning_rate: float, direction: Direction) -> Optional[Optimizer]:
        if self.config.optimizer == "sgd":
            return None
        return Optimizer(
            kind=self.config.optimizer,
            learning_rate=learning_rate,
            direction=direction,
            momentum=self.config.momentum,
            beta1=self.config.adam_beta1,
            beta2=self.config.adam_beta2,
        )

    def _iteration(
        self,
        g_net: Mlp,
        d_net: Mlp,
        data: Optional[Dataset],
        beta: InverseTemperature,
        loss: GeneratorLoss,
    ) -> Tuple[Mlp, Mlp]:
        """config.d_steps discriminator updates followed by one generator update."""
        m = self.config.m
        d_stats = None
        try:
            for _ in range(self.config.d_steps):
                real = sample_target(data, self.box, beta, m, self._data_rng)
                z = self.prior.sample(m, self._z_rng)
                d_net, d_stats = discriminator_step(d_net, g_net, real, z, self.config.lr_d, self._d_optimizer)
                self.trace.count_update()
            z = self.prior.sample(m, self._z_rng)
            g_net, g_stats = generator_step(d_net, g_net, z, self.config.lr_g, loss, self._g_optimizer)
            self.trace.count_update()
        except TrainingFault as fault:
            fault.trace = self.trace
            logger.error(f"Training fault at step {self.trace.next_step} (beta={beta.label}): {fault}")
            raise

        record = TraceRecord(
            step=self.trace.next_step,
            beta=beta,
            loss_d=d_stats.loss,
            loss_g=g_stats.loss,
            d_real=d_stats.d_real,
            d_fake=d_stats.d_fake,
            tau=self.trace.tau,
        )
        self.trace.append(record)
        logger.debug(
            f"step={record.step} beta={beta.label} loss_d={record.loss_d:.4f} "
            f"loss_g={record.loss_g:.4f} d_real={record.d_real:.3f} d_fake={record.d_fake:.3f}"
        )
        return g_net, d_net

    def _run_stage(
        self,
        g_net: Mlp,
        d_net: Mlp,
        data: Optional[Dataset],
        beta: InverseTemperature,
        iterations: int,
        loss: GeneratorLoss,
    ) -> Tuple[Mlp, Mlp]:
        start = len(self.trace)
        if self.show_progress:
            with ProgressReporter(iterations, f"beta={beta.label}") as progress:
                for _ in range(iterations):
                    g_net, d_net = self._iteration(g_net, d_net, data, beta, loss)
                    progress.update(1)
        else:
            for _ in range(iterations):
                g_net, d_net = self._iteration(g_net, d_net, data, beta, loss)

        self.trace.mark_stage(beta.label)
        stage = self.trace.records[start:]
        if stage:
            logger.info(
                f"Stage beta={beta.label} done: {len(stage)} steps, tau={self.trace.tau}, "
                f"mean D_real={np.mean([r.d_real for r in stage]):.3f}, "
                f"mean D_fake={np.mean([r.d_fake for r in stage]):.3f}"
            )
        if self.on_stage_end is not None:
            self.on_stage_end(beta.label, beta, g_net, d_net)
        return g_net, d_net

    def evaluate_uniformity(self, g_net: Mlp) -> Tuple[bool, PretrainResult]:
        """Score generated samples against the pretraining criterion."""
        samples = generate(g_net, self.prior, self.config.pretrain_eval_samples, self._eval_rng)
        if not np.all(np.isfinite(samples)):
            raise TrainingFault("Generator produced non-finite samples", trace=self.trace)
        uniformity = uniformity_score(samples, self.box)
        frozen = frozen_noise_score(samples, self.box)
        passed = passes_uniformity(
            uniformity,
            frozen,
            self.config.ks_threshold,
            self.config.correlation_threshold,
            self.config.frozen_noise_threshold,
        )
        return passed, PretrainResult(success=passed, steps=0, uniformity=uniformity, frozen_noise=frozen)

    def pretrain_uniform(self, g_net: Mlp, d_net: Mlp) -> Tuple[Mlp, Mlp, TrainingTrace, PretrainResult]:
        """
        Train against the uniform distribution on the box until it is learned.

        Uniformity is checked before the first step and every
        config.pretrain_check_every iterations. Running out of the
        n_pretrain budget is reported through the result's success flag.
        """
        validate_pairing(g_net, self.prior, self.box)
        self.trace.metadata["generator_loss"] = GeneratorLoss.SATURATING.value
        uniform = InverseTemperature.uniform()

        passed, result = self.evaluate_uniformity(g_net)
        steps = 0
        while not passed and steps < self.config.n_pretrain:
            g_net, d_net = self._iteration(g_net, d_net, None, uniform, GeneratorLoss.SATURATING)
            steps += 1
            if steps % self.config.pretrain_check_every == 0 or steps == self.config.n_pretrain:
                passed, result = self.evaluate_uniformity(g_net)
                logger.info(
                    f"Pretraining check at step {steps}: max KS={result.uniformity.max_ks:.4f}, "
                    f"max |corr|={result.uniformity.max_abs_correlation:.4f}, "
                    f"frozen-noise={result.frozen_noise:.3f}"
                )

        result = replace(result, success=passed, steps=steps)
        self.pretrain_result = result
        self.trace.mark_stage(uniform.label)
        self.trace.metadata["pretrain_steps"] = steps
        self.trace.metadata["pretrain_success"] = passed
        if passed:
            logger.info(f"Uniform pretraining converged after {steps} steps")
        else:
            logger.warning(f"Uniform pretraining did not converge within {self.config.n_pretrain} steps")
        if self.on_stage_end is not None:
            self.on_stage_end(uniform.label, uniform, g_net, d_net)
        return g_net, d_net, self.trace, result

    def run_annealed(
        self,
        g_net: Mlp,
        d_net: Mlp,
        data: Dataset,
        schedule: AnnealingSchedule,
    ) -> Tuple[Mlp, Mlp, TrainingTrace]:
        """n iterations at each visited beta, then n_final iterations at beta = infinity."""
        if data.dim != self.box.dim:
            raise DimensionError(f"Dataset dimension {data.dim} does not match box dimension {self.box.dim}")
        self.trace.metadata["generator_loss"] = GeneratorLoss.SATURATING.value
        self.trace.metadata["mode"] = TrainingMode.BETA_GAN.value

        logger.info(
            f"Annealing over {schedule.K} stages, beta {schedule.beta_1} -> {schedule.final_finite_beta:.6g} "
            f"(alpha={schedule.alpha:.6g}), then beta=inf"
        )
        for beta in schedule.stages[:-1]:
            g_net, d_net = self._run_stage(g_net, d_net, data, beta, self.config.n, GeneratorLoss.SATURATING)
        g_net, d_net = self._run_stage(
            g_net, d_net, data, InverseTemperature.infinity(), self.config.n_final, GeneratorLoss.SATURATING
        )
        return g_net, d_net, self.trace

    def run_vanilla_baseline(
        self,
        g_net: Mlp,
        d_net: Mlp,
        data: Dataset,
        tau_budget: int,
    ) -> Tuple[Mlp, Mlp, TrainingTrace]:
        """Train directly on the empirical distribution with the non-saturating loss."""
        if self.config.baseline_mode is not TrainingMode.VANILLA:
            raise ContractError("run_vanilla_baseline requires baseline_mode = vanilla")
        validate_pairing(g_net, self.prior, self.box)
        per_iteration = self.config.d_steps + 1
        iterations = tau_budget // per_iteration
        if iterations < 1:
            raise ContractError(f"tau budget {tau_budget} is too small for one iteration")
        self.trace.metadata["generator_loss"] = GeneratorLoss.NON_SATURATING.value
        self.trace.metadata["mode"] = TrainingMode.VANILLA.value
        self.trace.metadata["tau_budget"] = tau_budget

        logger.info(f"Vanilla baseline: {iterations} iterations on the empirical distribution (tau={tau_budget})")
        g_net, d_net = self._run_stage(
            g_net, d_net, data, InverseTemperature.infinity(), iterations, GeneratorLoss.NON_SATURATING
        )
        return g_net, d_net, self.trace


def annealed_tau_budget(config: TrainerConfig, schedule: AnnealingSchedule, pretrain_steps: Optional[int] = None) -> int:
    """Gradient evaluations of an annealed run; pretrain_steps defaults to the full n_pretrain budget."""
    steps = config.n_pretrain if pretrain_steps is None else pretrain_steps
    return (config.d_steps + 1) * (steps + schedule.K * config.n + config.n_final)


def _prior_for(g_net: Mlp) -> LatentPrior:
    return LatentPrior(dim=g_net.spec.input_dim)


def pretrain_uniform(
    g_net: Mlp,
    d_net: Mlp,
    box: BoxDomain,
    config: TrainerConfig,
) -> Tuple[Mlp, Mlp, TrainingTrace, PretrainResult]:
    """Uniform pretraining with a fresh trainer; see AdversarialTrainer.pretrain_uniform."""
    trainer = AdversarialTrainer(config, box, _prior_for(g_net))
    return trainer.pretrain_uniform(g_net, d_net)


def run_annealed(
    g_net: Mlp,
    d_net: Mlp,
    data: Dataset,
    schedule: AnnealingSchedule,
    config: TrainerConfig,
) -> Tuple[Mlp, Mlp, TrainingTrace]:
    """Annealed stages with a fresh trainer; see AdversarialTrainer.run_annealed."""
    trainer = AdversarialTrainer(config, data.box, _prior_for(g_net))
    return trainer.run_annealed(g_net, d_net, data, schedule)


def run_vanilla_baseline(
    g_net: Mlp,
    d_net: Mlp,
    data: Dataset,
    config: TrainerConfig,
    tau_budget: Optional[int] = None,
    schedule: Optional[AnnealingSchedule] = None,
) -> Tuple[Mlp, Mlp, TrainingTrace]:
    """
    Vanilla GAN with the same gradient-evaluation budget as an annealed run.

    Pass tau_budget from a finished annealed run to match it exactly;
    otherwise the budget is derived from schedule via annealed_tau_budget.
    """
    if tau_budget is None:
        if schedule is None:
            raise ContractError("run_vanilla_baseline needs a tau_budget or a schedule to derive one")
        tau_budget = annealed_tau_budget(config, schedule)
    trainer = AdversarialTrainer(config, data.box, _prior_for(g_net))
    return trainer.run_vanilla_baseline(g_net, d_net, data, tau_budget)
