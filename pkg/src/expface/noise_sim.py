"""Synthetic noisy-label dataset and a small deterministic trainer.

The dataset places one identity direction per class on the input-space
unit sphere and perturbs it per sample. Two corruption types are
injected at generation time: Type-I samples carry a fresh identity that
belongs to no class (an outsider labeled as a class member), and Type-II
classes come in pairs that share a single identity (one identity split
across two labels). Training a small tanh network with a margin loss
then reveals the characteristic drift: Type-I samples end far from
their labeled center and far from everything else; Type-II samples end
close to both their own and their twin's center.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError, PreconditionError, TrainingDivergedError
from .margin_core import Angle, BatchInput, Family, LossSpec, batch_loss
from .gradient_engine import backward

import enum


class NoiseLabel(enum.Enum):
    """Provenance of one sample: clean, Type-I, or Type-II noise."""

    CLEAN = "clean"
    TYPE_I = "type1"
    TYPE_II = "type2"


@dataclass(frozen=True)
class ToySpec:
    """Full description of a synthetic dataset and training run.

    Defaults are the desk-scale reference run: 16 classes of 20 samples
    in a 32-dimensional input space, embedded into 8 dimensions, 10%
    Type-I corruption, 2 Type-II pairs, trained 100 epochs with the
    reference expface loss.

    Attributes:
        input_dim: raw sample dimension.
        embed_dim: embedding dimension d.
        class_count: number of classes C.
        samples_per_class: samples drawn per class.
        type1_fraction: fraction of each unpaired class replaced by
            fresh off-class identities (floor of fraction*samples).
        type2_pair_count: number of class pairs sharing one identity.
        dispersion: scale of the Gaussian within-identity perturbation.
        loss: margin loss to train with.
        learning_rate: plain gradient-descent step size.
        epochs: number of passes over the data.
        batch_size: minibatch size.
        seed: 64-bit unsigned seed; fixes dataset and training exactly.
    """

    input_dim: int = 32
    embed_dim: int = 8
    class_count: int = 16
    samples_per_class: int = 20
    type1_fraction: float = 0.1
    type2_pair_count: int = 2
    dispersion: float = 0.3
    loss: LossSpec = field(default_factory=lambda: LossSpec.default(Family.EXPFACE))
    learning_rate: float = 0.01
    epochs: int = 100
    batch_size: int = 64
    seed: int = 7

    def __post_init__(self):
        if self.input_dim < 2 or self.embed_dim < 2:
            raise ConfigError("input_dim and embed_dim must be >= 2")
        if self.class_count < 2 or self.samples_per_class < 1:
            raise ConfigError("need class_count >= 2 and samples_per_class >= 1")
        if not 0.0 <= self.type1_fraction < 1.0:
            raise ConfigError(
                f"type1_fraction must lie in [0, 1), got {self.type1_fraction!r}"
            )
        if self.type2_pair_count < 0 or 2 * self.type2_pair_count > self.class_count:
            raise ConfigError(
                f"type2_pair_count {self.type2_pair_count!r} needs "
                f"2*pairs <= class_count ({self.class_count})"
            )
        if not self.dispersion > 0.0:
            raise ConfigError(f"dispersion must be > 0, got {self.dispersion!r}")
        if not self.learning_rate >= 0.0:
            raise ConfigError(f"learning_rate must be >= 0, got {self.learning_rate!r}")
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("need epochs >= 1 and batch_size >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")


@dataclass(frozen=True)
class Dataset:
    """Generated samples with class labels and per-sample noise labels."""

    samples: np.ndarray
    labels: np.ndarray
    noise: tuple


@dataclass(frozen=True)
class AngularTrajectory:
    """Per-epoch (theta_pos, theta_neg_mean) record of one sample."""

    sample_id: int
    noise: NoiseLabel
    per_epoch: tuple


@dataclass(frozen=True)
class TrainingRun:
    """Trajectories plus the mean minibatch loss of each epoch."""

    trajectories: tuple
    epoch_losses: tuple


def _unit_rows(rng, count, dim):
    v = rng.standard_normal((count, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def generate_dataset(spec):
    """Draw the synthetic dataset deterministically from spec.seed.

    Per class: an identity direction uniform on the sphere; each sample
    is the identity plus Gaussian noise of scale ``dispersion``,
    renormalized. The first 2*type2_pair_count classes form pairs that
    share one identity and are marked Type-II throughout. In every
    remaining class, the last floor(type1_fraction*samples_per_class)
    sample slots are replaced by samples of fresh, unassigned identities
    and marked Type-I.
    """
    rng = np.random.default_rng([int(spec.seed), 0])
    pairs = spec.type2_pair_count
    paired_classes = 2 * pairs
    pair_ids = _unit_rows(rng, pairs, spec.input_dim)
    solo_ids = _unit_rows(rng, spec.class_count - paired_classes, spec.input_dim)

    n_type1 = int(np.floor(spec.type1_fraction * spec.samples_per_class + 1e-9))
    samples, labels, noise = [], [], []
    for cls in range(spec.class_count):
        if cls < paired_classes:
            identity = pair_ids[cls // 2]
            kind = NoiseLabel.TYPE_II
        else:
            identity = solo_ids[cls - paired_classes]
            kind = NoiseLabel.CLEAN
        for slot in range(spec.samples_per_class):
            direction = identity
            sample_kind = kind
            if kind is NoiseLabel.CLEAN and slot >= spec.samples_per_class - n_type1:
                direction = _unit_rows(rng, 1, spec.input_dim)[0]
                sample_kind = NoiseLabel.TYPE_I
            raw = direction + spec.dispersion * rng.standard_normal(spec.input_dim)
            samples.append(raw / np.linalg.norm(raw))
            labels.append(cls)
            noise.append(sample_kind)
    return Dataset(
        samples=np.array(samples),
        labels=np.array(labels, dtype=np.int64),
        noise=tuple(noise),
    )


def training_run(spec):
    """Train the toy model and return trajectories plus epoch losses.

    The model is input_dim -> 2*embed_dim (tanh) -> embed_dim with no
    biases, plus a center matrix, all updated by plain minibatch
    gradient descent. After each epoch, every sample's angle to its
    labeled center and mean angle to the other centers are recorded.

    Raises:
        TrainingDivergedError: a minibatch loss, a parameter, or the
            model's feature geometry became non-finite or degenerate
            (names the 1-based epoch).
    """
    data = generate_dataset(spec)
    rng = np.random.default_rng([int(spec.seed), 1])
    hidden = 2 * spec.embed_dim
    w1 = rng.uniform(-1.0, 1.0, (spec.input_dim, hidden)) / np.sqrt(spec.input_dim)
    w2 = rng.uniform(-1.0, 1.0, (hidden, spec.embed_dim)) / np.sqrt(hidden)
    centers = rng.standard_normal((spec.embed_dim, spec.class_count))
    centers = centers / np.linalg.norm(centers, axis=0, keepdims=True)

    n = data.samples.shape[0]
    rows = np.arange(n)
    theta_pos_hist = np.empty((spec.epochs, n))
    theta_neg_hist = np.empty((spec.epochs, n))
    epoch_losses = []

    for epoch in range(1, spec.epochs + 1):
        order = rng.permutation(n)
        batch_values = []
        for start in range(0, n, spec.batch_size):
            idx = order[start : start + spec.batch_size]
            x = data.samples[idx]
            with np.errstate(over="ignore", invalid="ignore"):
                hidden_act = np.tanh(x @ w1)
                feats = hidden_act @ w2
            try:
                batch = BatchInput(feats, centers, data.labels[idx])
            except DomainError as exc:
                # Exploding weights surface here as non-finite or
                # zero-norm features; that is divergence, not misuse.
                raise TrainingDivergedError(
                    f"model state degenerated at epoch {epoch}: {exc}"
                ) from exc
            value = batch_loss(batch, spec.loss)
            if not np.isfinite(value):
                raise TrainingDivergedError(f"loss became non-finite at epoch {epoch}")
            grad_feats, grad_centers = backward(batch, spec.loss)
            with np.errstate(over="ignore", invalid="ignore"):
                grad_w2 = hidden_act.T @ grad_feats
                grad_hidden = (grad_feats @ w2.T) * (1.0 - hidden_act**2)
                grad_w1 = x.T @ grad_hidden
                w1 = w1 - spec.learning_rate * grad_w1
                w2 = w2 - spec.learning_rate * grad_w2
                centers = centers - spec.learning_rate * grad_centers
            if not (
                np.isfinite(w1).all()
                and np.isfinite(w2).all()
                and np.isfinite(centers).all()
            ):
                raise TrainingDivergedError(
                    f"parameters became non-finite at epoch {epoch}"
                )
            batch_values.append(value)
        epoch_losses.append(float(np.mean(batch_values)))

        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            feats = np.tanh(data.samples @ w1) @ w2
            norms = np.linalg.norm(feats, axis=1, keepdims=True)
            unit_centers = centers / np.linalg.norm(centers, axis=0, keepdims=True)
            angles = np.arccos(np.clip((feats / norms) @ unit_centers, -1.0, 1.0))
        if not np.isfinite(angles).all():
            raise TrainingDivergedError(
                f"recorded angles became non-finite at epoch {epoch}"
            )
        pos = angles[rows, data.labels]
        theta_pos_hist[epoch - 1] = pos
        theta_neg_hist[epoch - 1] = (angles.sum(axis=1) - pos) / (spec.class_count - 1)

    trajectories = tuple(
        AngularTrajectory(
            sample_id=i,
            noise=data.noise[i],
            per_epoch=tuple(
                (Angle(float(theta_pos_hist[e, i])), Angle(float(theta_neg_hist[e, i])))
                for e in range(spec.epochs)
            ),
        )
        for i in range(n)
    )
    return TrainingRun(trajectories=trajectories, epoch_losses=tuple(epoch_losses))


def train(spec):
    """Train per ``training_run`` and return only the trajectories."""
    return list(training_run(spec).trajectories)


@dataclass(frozen=True)
class DriftRow:
    """Final-epoch summary for one noise kind.

    Quadrant counts split samples at pi/2 on both axes, with theta_pos
    horizontal and theta_neg_mean vertical: upper_right means
    theta_pos > pi/2 and theta_neg_mean > pi/2.
    """

    kind: NoiseLabel
    count: int
    median_theta_pos: float
    median_theta_neg_mean: float
    mean_theta_pos: float
    mean_theta_neg_mean: float
    lower_left: int
    lower_right: int
    upper_left: int
    upper_right: int


@dataclass(frozen=True)
class DriftStatistics:
    """Per-noise-kind rows keyed by NoiseLabel, in enum order."""

    rows: dict


def drift_statistics(trajectories):
    """Summarize final-epoch positions per noise kind.

    Raises:
        PreconditionError: on an empty trajectory list.
    """
    if not trajectories:
        raise PreconditionError("need at least one trajectory")
    rows = {}
    for kind in NoiseLabel:
        finals = [t.per_epoch[-1] for t in trajectories if t.noise is kind]
        if not finals:
            continue
        pos = np.array([p.value for p, _ in finals])
        neg = np.array([q.value for _, q in finals])
        half = np.pi / 2
        rows[kind] = DriftRow(
            kind=kind,
            count=len(finals),
            median_theta_pos=float(np.median(pos)),
            median_theta_neg_mean=float(np.median(neg)),
            mean_theta_pos=float(np.mean(pos)),
            mean_theta_neg_mean=float(np.mean(neg)),
            lower_left=int(np.sum((pos <= half) & (neg <= half))),
            lower_right=int(np.sum((pos > half) & (neg <= half))),
            upper_left=int(np.sum((pos <= half) & (neg > half))),
            upper_right=int(np.sum((pos > half) & (neg > half))),
        )
    return DriftStatistics(rows=rows)
