"""Curve sweeps, transition angles, extrema structure, and margin fields.

The transition angle is the theta where the predicted positive-class
probability under the scalar loss equals 1/2, i.e. the solution of
T(theta) = cos(b) + ln(C-1)/s. The boundary margin measures how far the
binary decision boundary T(theta_pos) = cos(theta_neg) displaces
theta_pos below theta_neg; sweeping theta_neg yields the margin field.
"""

from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .errors import DomainError, PreconditionError
from .gradient_engine import BREAKPOINT_TOL, sphereface_breakpoints
from .margin_core import EPSILON, Angle, Family, as_angle

#: Interval width at which the bisection solvers stop.
BISECTION_TOL = 1e-10

#: Runs of values closer than this are one plateau in extrema detection.
PLATEAU_TOL = 1e-12


@dataclass(frozen=True)
class CurveSample:
    """One (theta, value) point of a similarity, gradient, or margin sweep.

    ``flagged`` marks gradient samples whose value was substituted from a
    neighboring grid point because theta sat on a sphereface breakpoint.
    """

    theta: Angle
    value: float
    flagged: bool = False


@dataclass(frozen=True)
class ExtremaReport:
    """Structure of a sampled curve: local extrema and signed/monotone runs."""

    maxima: tuple
    minima: tuple
    negative_intervals: tuple
    monotone_decreasing_intervals: tuple


@dataclass(frozen=True)
class MarginFieldPoint:
    """Decision-boundary displacement at one negative-center angle.

    ``angular_margin`` equals theta_neg - theta_pos_boundary except in
    the pinned regime (cos(theta_neg) > T(0)), where the boundary sits
    at theta_pos = 0 and the margin saturates at arccos(T(0)) — the
    continuous extension of the unpinned field.
    """

    theta_neg: Angle
    theta_pos_boundary: Angle
    angular_margin: float


def _monotone_branch_end(spec):
    """Right end of the decreasing branch of T that starts at theta = 0."""
    fam, m = spec.family, spec.margin
    if fam is Family.ARCFACE:
        return np.pi - m
    if fam is Family.SPHEREFACE:
        return np.pi / m
    if fam is Family.EXPFACE_NAIVE:
        return min(np.pi, np.pi ** (1.0 / m))
    return np.pi


def _similarity_scalar(spec, theta):
    return float(kernels.similarity(spec.family.code, spec.margin, np.array([theta]))[0])


def _bisect_decreasing(spec, target, lo, hi):
    """Solve T(theta) = target for T decreasing on [lo, hi].

    Assumes T(lo) >= target >= T(hi); converges unconditionally to
    within BISECTION_TOL.
    """
    while hi - lo > BISECTION_TOL:
        mid = 0.5 * (lo + hi)
        if _similarity_scalar(spec, mid) >= target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def transition_angle(spec, ctx):
    """Closed-form solution of T(theta) = cos(b) + ln(C-1)/s, or None.

    None signals the saturated regime where no angle attains the target
    similarity (e.g. cosface with m >= 1 under default context). The
    sphereface inverse is taken on the k=0 branch first; higher branches
    top out at 1-2k < -1 and are unreachable for any valid context.
    """
    y = np.cos(ctx.b) + np.log(ctx.class_count - 1.0) / ctx.scale
    fam, m = spec.family, spec.margin
    if fam is Family.PLAIN:
        return Angle(float(np.arccos(y))) if -1.0 <= y <= 1.0 else None
    if fam is Family.COSFACE:
        shifted = y + m
        return Angle(float(np.arccos(shifted))) if -1.0 <= shifted <= 1.0 else None
    if fam is Family.ARCFACE:
        if not -1.0 <= y <= 1.0:
            return None
        t = float(np.arccos(y)) - m
        return Angle(t) if t >= 0.0 else None
    if fam is Family.EXPFACE:
        if not -1.0 <= y <= 1.0:
            return None
        return Angle(float(np.pi * (np.arccos(y) / np.pi) ** (1.0 / m)))
    if fam is Family.EXPFACE_NAIVE:
        if not -1.0 <= y <= 1.0:
            return None
        t = float(np.arccos(y) ** (1.0 / m))
        return Angle(t) if t <= np.pi else None
    # sphereface: branch k covers T in [-1-2k, 1-2k] on [k*pi/m, (k+1)*pi/m]
    k = 0
    while k * np.pi / m <= np.pi:
        shifted = y + 2.0 * k
        if -1.0 <= shifted <= 1.0:
            t = (k * np.pi + float(np.arccos(shifted))) / m
            if t <= np.pi:
                return Angle(t)
        k += 1
    return None


def transition_angle_bisect(spec, ctx):
    """Bisection twin of transition_angle on the branch starting at 0.

    Returns None under exactly the same saturation conditions as the
    closed form; used as its independent cross-check.
    """
    y = np.cos(ctx.b) + np.log(ctx.class_count - 1.0) / ctx.scale
    hi = _monotone_branch_end(spec)
    top = _similarity_scalar(spec, 0.0)
    bottom = _similarity_scalar(spec, hi)
    if y > top or y < bottom:
        return None
    return Angle(_bisect_decreasing(spec, y, 0.0, hi))


def sweep_similarity(spec, grid_size):
    """similarity(spec, theta) on a uniform inclusive grid over [0, pi]."""
    if int(grid_size) < 2:
        raise PreconditionError(f"grid_size must be >= 2, got {grid_size!r}")
    grid = np.linspace(0.0, np.pi, int(grid_size))
    values = kernels.similarity(spec.family.code, spec.margin, grid)
    return [CurveSample(Angle(float(t)), float(v)) for t, v in zip(grid, values)]


def sweep_gradient(spec, ctx, grid_size):
    """dL_dtheta(spec, theta, ctx) on a uniform grid over [eps, pi - eps].

    Sphereface grid points within BREAKPOINT_TOL of a breakpoint take
    the value of the nearest off-breakpoint grid point (left preferred
    on ties) and are flagged.
    """
    if int(grid_size) < 2:
        raise PreconditionError(f"grid_size must be >= 2, got {grid_size!r}")
    grid = np.linspace(EPSILON, np.pi - EPSILON, int(grid_size))
    values = kernels.loss_gradient(
        spec.family.code, spec.margin, ctx.scale, ctx.bias(), grid
    )
    on_break = np.zeros(grid.shape, dtype=bool)
    if spec.family is Family.SPHEREFACE:
        for point in sphereface_breakpoints(spec.margin):
            on_break |= np.abs(grid - point) <= BREAKPOINT_TOL
        for i in np.nonzero(on_break)[0]:
            for offset in range(1, grid.size):
                for j in (i - offset, i + offset):
                    if 0 <= j < grid.size and not on_break[j]:
                        values[i] = values[j]
                        break
                else:
                    continue
                break
    return [
        CurveSample(Angle(float(t)), float(v), bool(f))
        for t, v, f in zip(grid, values, on_break)
    ]


def analyze_extrema(samples):
    """Locate extrema, negative runs, and decreasing runs of a curve.

    Interior extrema are strict sign changes of the discrete first
    difference; runs of equal values (within PLATEAU_TOL) collapse to a
    single extremum at the plateau midpoint. The first and last samples
    also count: a curve that opens falling has a maximum at its left
    edge, one that ends rising has a maximum at its right edge (and
    symmetrically for minima), so peaks that emerge at the boundary of
    the sampled domain are reported rather than dropped. Negative
    intervals are maximal runs of value < 0; monotone decreasing
    intervals are maximal runs of consecutive differences below
    -PLATEAU_TOL.

    Raises:
        PreconditionError: fewer than 3 samples or thetas not strictly
            increasing.
    """
    if len(samples) < 3:
        raise PreconditionError("need at least 3 samples")
    thetas = np.array([s.theta.value for s in samples])
    values = np.array([s.value for s in samples])
    if np.any(np.diff(thetas) <= 0.0):
        raise PreconditionError("samples must be sorted by strictly increasing theta")

    diffs = np.diff(values)
    signs = np.where(diffs > PLATEAU_TOL, 1, np.where(diffs < -PLATEAU_TOL, -1, 0))
    moves = np.nonzero(signs)[0]

    maxima, minima = [], []
    if moves.size:
        # Left edge: the opening plateau spans samples 0 .. moves[0].
        mid = 0.5 * (thetas[0] + thetas[moves[0]])
        (maxima if signs[moves[0]] < 0 else minima).append(Angle(float(mid)))
    for a, b in zip(moves[:-1], moves[1:]):
        if signs[a] == signs[b]:
            continue
        # plateau spans samples a+1 .. b (a single point when b == a+1)
        mid = 0.5 * (thetas[a + 1] + thetas[b])
        (maxima if signs[a] > 0 else minima).append(Angle(float(mid)))
    if moves.size:
        # Right edge: the closing plateau spans samples moves[-1]+1 .. end.
        mid = 0.5 * (thetas[moves[-1] + 1] + thetas[-1])
        (maxima if signs[moves[-1]] > 0 else minima).append(Angle(float(mid)))

    def runs(mask):
        out = []
        start = None
        for i, flag in enumerate(mask):
            if flag and start is None:
                start = i
            elif not flag and start is not None:
                out.append((start, i - 1))
                start = None
        if start is not None:
            out.append((start, len(mask) - 1))
        return out

    negative = [
        (Angle(float(thetas[i])), Angle(float(thetas[j])))
        for i, j in runs(values < 0.0)
    ]
    decreasing = [
        (Angle(float(thetas[i])), Angle(float(thetas[j + 1])))
        for i, j in runs(signs == -1)
    ]
    return ExtremaReport(
        maxima=tuple(maxima),
        minima=tuple(minima),
        negative_intervals=tuple(negative),
        monotone_decreasing_intervals=tuple(decreasing),
    )


def boundary_margin(spec, theta_neg):
    """Displacement of the binary decision boundary at one theta_neg.

    Solves T(theta_pos) = cos(theta_neg) by bisection on the decreasing
    branch of T nearest 0 and returns theta_neg - theta_pos. When
    cos(theta_neg) > T(0) the boundary is pinned at theta_pos = 0 and
    the margin saturates at arccos(T(0)), the value the unpinned field
    attains exactly at the pinning threshold. When cos(theta_neg) falls
    below the branch minimum (possible only for the non-penalizing
    exponential configurations), theta_pos pins to the branch end and
    the margin goes negative.

    Args:
        spec: loss family and margin.
        theta_neg: angle to the negative center, in (0, pi].

    Returns:
        MarginFieldPoint; never None in practice, the pinned regime is
        reported as the saturated point described above.
    """
    t_neg = as_angle(theta_neg).value
    if t_neg <= 0.0:
        raise DomainError(f"theta_neg must lie in (0, pi], got {t_neg!r}")
    target = float(np.cos(t_neg))
    hi = _monotone_branch_end(spec)
    top = _similarity_scalar(spec, 0.0)
    bottom = _similarity_scalar(spec, hi)
    if target > top:
        saturated = float(np.arccos(np.clip(top, -1.0, 1.0)))
        return MarginFieldPoint(Angle(t_neg), Angle(0.0), saturated)
    if target < bottom:
        return MarginFieldPoint(Angle(t_neg), Angle(hi), t_neg - hi)
    t_pos = _bisect_decreasing(spec, target, 0.0, hi)
    return MarginFieldPoint(Angle(t_neg), Angle(t_pos), t_neg - t_pos)


def margin_field(spec, grid_size):
    """boundary_margin on a uniform interior grid of theta_neg over (0, pi)."""
    if int(grid_size) < 2:
        raise PreconditionError(f"grid_size must be >= 2, got {grid_size!r}")
    grid = np.linspace(0.0, np.pi, int(grid_size) + 2)[1:-1]
    return [boundary_margin(spec, float(t)) for t in grid]
