"""Margin-embedded similarity functions and the batch margin-softmax loss.

Six similarity families T(theta) over angles theta in [0, pi]:

    plain           cos(theta)
    sphereface      (-1)^k cos(m*theta) - 2k,  k = floor(m*theta/pi)
    cosface         cos(theta) - m
    arcface         cos(theta + m)
    expface_naive   cos(theta^m)
    expface         cos(pi * (theta/pi)^m)

The expface form normalizes theta by pi, exponentiates, and rescales by
pi ("shrink-then-expand"), which pins T(0)=1 and T(pi)=-1 for every
margin while penalizing the whole interior for m < 1. The naive form
cos(theta^m) loses the penalty for large theta, which is exactly the
pathology the corrected form removes.

The batch loss is softmax cross-entropy over scaled cosine logits where
the positive logit uses s*T(theta) instead of s*cos(theta).
"""

import enum
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .errors import ConfigError, DomainError

#: Interior clamp for angle matrices on gradient-bearing paths. Kept off
#: the pure similarity path so the endpoint identities stay exact.
EPSILON = 1e-7

#: Tolerance for treating an out-of-range angle as a rounding artifact.
ANGLE_SLACK = 1e-9


class Family(enum.Enum):
    """One of the six supported similarity families."""

    PLAIN = "plain"
    SPHEREFACE = "sphereface"
    COSFACE = "cosface"
    ARCFACE = "arcface"
    EXPFACE_NAIVE = "expface_naive"
    EXPFACE = "expface"

    @property
    def code(self):
        """Integer code understood by the kernel backends."""
        return _FAMILY_CODES[self]

    @classmethod
    def parse(cls, text):
        """Parse a family name, case-insensitively, tolerating -/_ variants.

        Raises:
            ConfigError: if the name matches no family.
        """
        key = str(text).strip().lower().replace("-", "_")
        if key == "expfacenaive":
            key = "expface_naive"
        for fam in cls:
            if fam.value == key:
                return fam
        names = ", ".join(f.value for f in cls)
        raise ConfigError(f"unknown loss family {text!r} (expected one of: {names})")


_FAMILY_CODES = {
    Family.PLAIN: kernels.PLAIN,
    Family.SPHEREFACE: kernels.SPHEREFACE,
    Family.COSFACE: kernels.COSFACE,
    Family.ARCFACE: kernels.ARCFACE,
    Family.EXPFACE_NAIVE: kernels.EXPFACE_NAIVE,
    Family.EXPFACE: kernels.EXPFACE,
}

#: Reference margins: sphereface 1.7, cosface 0.4, arcface 0.5, expface 0.7.
DEFAULT_MARGINS = {
    Family.PLAIN: 0.0,
    Family.SPHEREFACE: 1.7,
    Family.COSFACE: 0.4,
    Family.ARCFACE: 0.5,
    Family.EXPFACE_NAIVE: 0.7,
    Family.EXPFACE: 0.7,
}

#: Reference scales: 64 everywhere except sphereface's 32.
DEFAULT_SCALES = {
    Family.PLAIN: 64.0,
    Family.SPHEREFACE: 32.0,
    Family.COSFACE: 64.0,
    Family.ARCFACE: 64.0,
    Family.EXPFACE_NAIVE: 64.0,
    Family.EXPFACE: 64.0,
}


@dataclass(frozen=True)
class Angle:
    """An angle in radians, clamped to [0, pi] at construction.

    Values outside [0, pi] by more than ``ANGLE_SLACK`` are rejected as
    domain errors rather than silently clamped.
    """

    value: float

    def __post_init__(self):
        v = float(self.value)
        if not np.isfinite(v):
            raise DomainError(f"angle must be finite, got {v!r}")
        clamped = min(max(v, 0.0), np.pi)
        if abs(v - clamped) > ANGLE_SLACK:
            raise DomainError(f"angle {v!r} outside [0, pi] by more than {ANGLE_SLACK}")
        object.__setattr__(self, "value", clamped)

    def __float__(self):
        return self.value


def as_angle(theta):
    """Coerce a float or Angle to Angle, validating the range."""
    if isinstance(theta, Angle):
        return theta
    return Angle(float(theta))


@dataclass(frozen=True)
class LossSpec:
    """Which margin family to use, its margin value, and the scale s.

    Margin ranges: sphereface m >= 1; cosface m >= 0; arcface m in
    [0, pi); expface and expface_naive m in [0.3, 10]. Plain ignores the
    margin. For the exponential families, m < 1 penalizes (T <= cos)
    while m > 1 is a relaxation (T >= cos); both are permitted.

    Attributes:
        family: the similarity family.
        margin: margin hyperparameter, interpreted per family.
        scale: logit scale s > 0.
    """

    family: Family
    margin: float = 0.0
    scale: float = 64.0

    def __post_init__(self):
        margin = float(self.margin)
        scale = float(self.scale)
        if not np.isfinite(scale) or scale <= 0.0:
            raise ConfigError(f"scale must be a positive real, got {scale!r}")
        if not np.isfinite(margin):
            raise ConfigError(f"margin must be finite, got {margin!r}")
        fam = self.family
        if fam is Family.SPHEREFACE and margin < 1.0:
            raise ConfigError(f"sphereface margin must be >= 1, got {margin!r}")
        if fam is Family.COSFACE and margin < 0.0:
            raise ConfigError(f"cosface margin must be >= 0, got {margin!r}")
        if fam is Family.ARCFACE and not 0.0 <= margin < np.pi:
            raise ConfigError(f"arcface margin must be in [0, pi), got {margin!r}")
        if fam in (Family.EXPFACE, Family.EXPFACE_NAIVE) and not 0.3 <= margin <= 10.0:
            raise ConfigError(
                f"{fam.value} margin must be in [0.3, 10], got {margin!r}"
            )
        object.__setattr__(self, "margin", margin)
        object.__setattr__(self, "scale", scale)

    @classmethod
    def default(cls, family):
        """The reference configuration for a family (margin and scale)."""
        return cls(family, DEFAULT_MARGINS[family], DEFAULT_SCALES[family])


@dataclass(frozen=True)
class BatchInput:
    """A batch of raw feature vectors, class-center columns, and labels.

    Attributes:
        features: (N, d) array, one raw feature vector per row.
        centers: (d, C) array, one raw class-center vector per column.
        labels: (N,) integer array of class indices in [0, C).
    """

    features: np.ndarray
    centers: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        cents = np.asarray(self.centers, dtype=np.float64)
        labels = np.asarray(self.labels)
        if feats.ndim != 2 or cents.ndim != 2:
            raise DomainError("features and centers must be 2-D arrays")
        n, d = feats.shape
        d_c, c = cents.shape
        if d != d_c:
            raise DomainError(
                f"feature dimension {d} does not match center dimension {d_c}"
            )
        if n < 1 or c < 2 or d < 2:
            raise DomainError(f"need N >= 1, C >= 2, d >= 2; got N={n}, C={c}, d={d}")
        if labels.shape != (n,) or not np.issubdtype(labels.dtype, np.integer):
            raise DomainError(f"labels must be {n} integers, got {labels.shape}")
        if labels.min() < 0 or labels.max() >= c:
            raise DomainError(f"labels must lie in [0, {c})")
        if not (np.isfinite(feats).all() and np.isfinite(cents).all()):
            raise DomainError("features and centers must be finite")
        norms_x = np.linalg.norm(feats, axis=1)
        norms_w = np.linalg.norm(cents, axis=0)
        bad = np.nonzero(norms_x <= 0.0)[0]
        if bad.size:
            raise DomainError(f"feature row {bad[0]} has zero norm")
        bad = np.nonzero(norms_w <= 0.0)[0]
        if bad.size:
            raise DomainError(f"center column {bad[0]} has zero norm")
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "centers", cents)
        object.__setattr__(self, "labels", labels.astype(np.int64))


def _normalized_angles(batch):
    """Shared forward geometry for batch_loss and the backward pass.

    Returns:
        Tuple (x_hat, w_hat, norms_x, norms_w, cos_matrix, theta_matrix)
        where theta is clamped to [EPSILON, pi - EPSILON] so derivative
        factors 1/sin(theta) stay finite downstream.
    """
    norms_x = np.linalg.norm(batch.features, axis=1)
    norms_w = np.linalg.norm(batch.centers, axis=0)
    x_hat = batch.features / norms_x[:, None]
    w_hat = batch.centers / norms_w[None, :]
    cos_matrix = np.clip(x_hat @ w_hat, -1.0, 1.0)
    theta = np.clip(np.arccos(cos_matrix), EPSILON, np.pi - EPSILON)
    return x_hat, w_hat, norms_x, norms_w, cos_matrix, theta


def _logits(batch, spec, theta):
    """Scaled logits: s*cos(theta) off-label, s*T(theta) on-label."""
    rows = np.arange(theta.shape[0])
    logits = spec.scale * np.cos(theta)
    pos = kernels.similarity(spec.family.code, spec.margin, theta[rows, batch.labels])
    logits[rows, batch.labels] = spec.scale * pos
    return logits


def similarity(spec, theta):
    """Margin-embedded similarity T(theta) for a single angle.

    Args:
        spec: LossSpec selecting the family and margin.
        theta: Angle or float in [0, pi] (within rounding slack).

    Returns:
        float T(theta).
    """
    t = as_angle(theta).value
    out = kernels.similarity(spec.family.code, spec.margin, np.array([t]))
    return float(out[0])


def batch_loss(batch, spec):
    """Mean margin-softmax cross-entropy over a batch.

    Features and centers are L2-normalized, angles are the arccos of
    clamped dot products, and the softmax uses a max-shifted
    log-sum-exp so the result stays finite for large scales.

    Returns:
        float mean negative log positive-class probability.
    """
    _, _, _, _, _, theta = _normalized_angles(batch)
    logits = _logits(batch, spec, theta)
    rows = np.arange(theta.shape[0])
    shift = logits.max(axis=1, keepdims=True)
    lse = shift[:, 0] + np.log(np.exp(logits - shift).sum(axis=1))
    return float(np.mean(lse - logits[rows, batch.labels]))


def angle_between(u, v):
    """Angle between two vectors after unit normalization.

    Raises:
        DomainError: if either vector has zero norm.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu <= 0.0:
        raise DomainError("first vector has zero norm")
    if nv <= 0.0:
        raise DomainError("second vector has zero norm")
    dot = float(np.clip(np.dot(u / nu, v / nv), -1.0, 1.0))
    return Angle(float(np.arccos(dot)))
