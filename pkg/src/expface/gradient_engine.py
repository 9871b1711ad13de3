"""Analytic derivatives, the scalar loss model, and gradient verification.

The scalar loss collapses the batch softmax to one angle by treating all
C-1 negative classes as sitting at a common angle b:

    L(theta) = ln(1 + exp(-s*T(theta) + s*cos(b) + ln(C-1)))

Its derivative -s*T'(theta)*sigmoid(-s*T(theta) + s*cos(b) + ln(C-1))
is what the gradient-curve analysis plots. ``backward`` differentiates
the full batch loss through L2 normalization for the toy trainer, and
``finite_diff_check`` is the independent numerical oracle.
"""

from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .errors import ConfigError, NonDifferentiablePointError, PreconditionError
from .margin_core import (
    EPSILON,
    Angle,
    Family,
    _logits,
    _normalized_angles,
    as_angle,
)

#: Radius around a sphereface breakpoint k*pi/m where the analytic
#: derivative is refused.
BREAKPOINT_TOL = 1e-9

#: Half-width of the breakpoint exclusion zone in finite_diff_check,
#: wide enough that probe points stay on one piece.
BREAKPOINT_EXCLUSION = 1e-4

#: Central-difference step for scalar curves.
FD_STEP = 1e-6

#: Central-difference step for batch-loss coordinates.
FD_STEP_BATCH = 1e-5


@dataclass(frozen=True)
class TransitionContext:
    """The (b, C, s) triple defining the scalar loss.

    Attributes:
        b: common angle to the negative class centers, in (0, pi).
        class_count: number of classes C >= 2.
        scale: logit scale s > 0.
    """

    b: float = np.pi / 2
    class_count: int = 10573
    scale: float = 64.0

    def __post_init__(self):
        b = float(self.b)
        if not np.isfinite(b) or not 0.0 < b < np.pi:
            raise ConfigError(f"b must lie in (0, pi), got {b!r}")
        if int(self.class_count) < 2:
            raise ConfigError(f"class_count must be >= 2, got {self.class_count!r}")
        scale = float(self.scale)
        if not np.isfinite(scale) or scale <= 0.0:
            raise ConfigError(f"scale must be a positive real, got {scale!r}")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "class_count", int(self.class_count))
        object.__setattr__(self, "scale", scale)

    def bias(self):
        """The constant s*cos(b) + ln(C-1) added to the positive logit."""
        return self.scale * np.cos(self.b) + np.log(self.class_count - 1.0)


@dataclass
class GradientCheckReport:
    """Result of comparing analytic and finite-difference gradients.

    ``max_rel_err`` is max|analytic - numeric| normalized by the largest
    gradient magnitude on the grid (max over both columns). A pointwise
    ratio would be meaningless near the interval edges, where the loss
    is O(100) but its slope underflows toward zero and finite-difference
    roundoff dominates any denominator.
    """

    grid: list = field(default_factory=list)
    analytic: list = field(default_factory=list)
    numeric: list = field(default_factory=list)
    max_rel_err: float = 0.0
    max_abs_err: float = 0.0


def _check_breakpoint(spec, theta):
    if spec.family is not Family.SPHEREFACE:
        return
    k = round(spec.margin * theta / np.pi)
    if k >= 1 and abs(theta - k * np.pi / spec.margin) <= BREAKPOINT_TOL:
        raise NonDifferentiablePointError(
            f"sphereface T is not differentiable within {BREAKPOINT_TOL} of "
            f"theta = {k}*pi/{spec.margin}"
        )


def dT_dtheta(spec, theta):
    """Analytic derivative of the similarity T at one angle.

    For the exponential families with margin < 1 the derivative diverges
    at theta -> 0; callers should keep theta in [EPSILON, pi - EPSILON].

    Raises:
        NonDifferentiablePointError: sphereface within BREAKPOINT_TOL of
            a breakpoint k*pi/m, k >= 1.
    """
    t = as_angle(theta).value
    _check_breakpoint(spec, t)
    out = kernels.similarity_derivative(spec.family.code, spec.margin, np.array([t]))
    return float(out[0])


def scalar_loss(spec, theta, ctx):
    """Single-angle loss ln(1 + exp(-s*T(theta) + s*cos(b) + ln(C-1))).

    Computed as a stable softplus; s is taken from ``ctx``. Strictly
    positive for all inputs.
    """
    t = as_angle(theta).value
    out = kernels.scalar_loss(
        spec.family.code, spec.margin, ctx.scale, ctx.bias(), np.array([t])
    )
    return float(out[0])


def dL_dtheta(spec, theta, ctx):
    """Exact derivative of scalar_loss with respect to theta.

    Raises:
        NonDifferentiablePointError: as dT_dtheta.
    """
    t = as_angle(theta).value
    _check_breakpoint(spec, t)
    out = kernels.loss_gradient(
        spec.family.code, spec.margin, ctx.scale, ctx.bias(), np.array([t])
    )
    return float(out[0])


def backward(batch, spec):
    """Exact gradients of batch_loss w.r.t. raw features and centers.

    Chains through L2 normalization: for a raw vector v with unit
    direction v_hat and a unit partner w_hat, the gradient of their
    cosine is (w_hat - (v_hat . w_hat) v_hat)/||v||. On positive logits
    the chain continues through T'(theta). At a sphereface breakpoint
    the one-sided derivatives of T coincide at zero, which is the value
    the formula yields there.

    Returns:
        Tuple (grad_features, grad_centers) with the shapes of
        batch.features and batch.centers.
    """
    x_hat, w_hat, norms_x, norms_w, cos_matrix, theta = _normalized_angles(batch)
    logits = _logits(batch, spec, theta)
    n = theta.shape[0]
    rows = np.arange(n)

    shift = logits.max(axis=1, keepdims=True)
    ez = np.exp(logits - shift)
    p = ez / ez.sum(axis=1, keepdims=True)

    # dL/d(cos theta_ji): negatives reduce to (s/N) p_ji because the
    # -1/sin factor from d theta/d cos cancels the -sin in dz/d theta.
    grad_cos = (spec.scale / n) * p
    theta_pos = theta[rows, batch.labels]
    dT = kernels.similarity_derivative(spec.family.code, spec.margin, theta_pos)
    grad_cos[rows, batch.labels] = (
        (p[rows, batch.labels] - 1.0) / n * spec.scale * dT * (-1.0 / np.sin(theta_pos))
    )

    ray = (grad_cos * cos_matrix).sum(axis=1, keepdims=True)
    grad_features = (grad_cos @ w_hat.T - ray * x_hat) / norms_x[:, None]
    ray_w = (grad_cos * cos_matrix).sum(axis=0, keepdims=True)
    grad_centers = (x_hat.T @ grad_cos - w_hat * ray_w) / norms_w[None, :]
    return grad_features, grad_centers


def sphereface_breakpoints(margin, lo=0.0, hi=np.pi):
    """All sphereface breakpoints k*pi/margin, k >= 1, inside [lo, hi]."""
    out = []
    k = 1
    while k * np.pi / margin <= hi:
        point = k * np.pi / margin
        if point >= lo:
            out.append(point)
        k += 1
    return out


def finite_diff_check(spec, ctx, grid_size):
    """Compare dL_dtheta with central finite differences of scalar_loss.

    The grid is uniform over [EPSILON, pi - EPSILON]; for sphereface,
    points within BREAKPOINT_EXCLUSION of a breakpoint are dropped. The
    step is FD_STEP, shrunk near the interval ends so both probes stay
    inside [0, pi].

    Args:
        spec: loss family and margin under test.
        ctx: transition context supplying s, b, C.
        grid_size: number of grid points before exclusions, >= 3.

    Returns:
        GradientCheckReport with the normalized maximum error.
    """
    if int(grid_size) < 3:
        raise PreconditionError(f"grid_size must be >= 3, got {grid_size!r}")
    grid = np.linspace(EPSILON, np.pi - EPSILON, int(grid_size))
    if spec.family is Family.SPHEREFACE:
        keep = np.ones(grid.shape, dtype=bool)
        for point in sphereface_breakpoints(spec.margin):
            keep &= np.abs(grid - point) > BREAKPOINT_EXCLUSION
        grid = grid[keep]

    code, margin = spec.family.code, spec.margin
    bias = ctx.bias()
    analytic = kernels.loss_gradient(code, margin, ctx.scale, bias, grid)
    h = np.minimum(FD_STEP, np.minimum(grid / 2.0, (np.pi - grid) / 2.0))
    hi = kernels.scalar_loss(code, margin, ctx.scale, bias, grid + h)
    lo = kernels.scalar_loss(code, margin, ctx.scale, bias, grid - h)
    numeric = (hi - lo) / (2.0 * h)

    abs_err = np.abs(analytic - numeric)
    max_abs = float(abs_err.max()) if abs_err.size else 0.0
    denom = max(float(np.abs(analytic).max(initial=0.0)), float(np.abs(numeric).max(initial=0.0)))
    max_rel = max_abs / denom if denom > 0.0 else 0.0
    return GradientCheckReport(
        grid=[Angle(float(t)) for t in grid],
        analytic=[float(v) for v in analytic],
        numeric=[float(v) for v in numeric],
        max_rel_err=max_rel,
        max_abs_err=max_abs,
    )
