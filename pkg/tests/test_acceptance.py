"""Acceptance gate: the eleven primary criteria, one pass/fail line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines; each criterion is also a separate test so the verbose listing doubles
as the pass/fail report.
"""

import math
import time

import numpy as np
import pytest

from expface import (
    Angle,
    BatchInput,
    Family,
    LossSpec,
    NoiseLabel,
    ToySpec,
    TransitionContext,
    analyze_extrema,
    backward,
    batch_loss,
    dL_dtheta,
    drift_statistics,
    finite_diff_check,
    main,
    margin_field,
    scalar_loss,
    similarity,
    sweep_gradient,
    sweep_similarity,
    training_run,
    transition_angle,
    transition_angle_bisect,
)

SEEDS = (1, 2, 3, 4, 5)
EPS = 1e-7


class _criterion:
    """Prints one ``[criterion NN] PASS/FAIL — text`` line per criterion."""

    def __init__(self, num, text):
        self.num = num
        self.text = text

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        status = "PASS" if exc_type is None else "FAIL"
        print(f"[criterion {self.num:02d}] {status} — {self.text}", flush=True)
        return False


@pytest.fixture(scope="module")
def desk_runs():
    """Default desk-spec training runs for seeds 1..5 under both losses."""
    exp_runs, cos_runs, durations = {}, {}, {}
    for seed in SEEDS:
        start = time.perf_counter()
        exp_runs[seed] = training_run(ToySpec(seed=seed))
        durations[seed] = time.perf_counter() - start
        cos_runs[seed] = training_run(
            ToySpec(loss=LossSpec(Family.COSFACE, 0.4, 64.0), seed=seed)
        )
    return exp_runs, cos_runs, durations


def test_criterion_01_endpoint_identity():
    with _criterion(1, "ExpFace endpoints: T(0)=1 and T(pi)=-1 to 1e-12 for all margins"):
        for m in (0.3, 0.5, 0.7, 1.0, 2.0, 5.0, 10.0):
            spec = LossSpec(Family.EXPFACE, m, 64.0)
            assert abs(float(similarity(spec, Angle(0.0))) - 1.0) <= 1e-12
            assert abs(float(similarity(spec, Angle(math.pi))) + 1.0) <= 1e-12


def test_criterion_02_identity_reduction():
    with _criterion(2, "ExpFace m=1 equals cos theta to 1e-12 on a 10,001-point grid"):
        samples = sweep_similarity(LossSpec(Family.EXPFACE, 1.0, 64.0), 10001)
        thetas = np.array([float(s.theta) for s in samples])
        values = np.array([s.value for s in samples])
        assert np.max(np.abs(values - np.cos(thetas))) <= 1e-12


def test_criterion_03_penalty_dominance():
    with _criterion(3, "ExpFace 0.7 lies below cos (strict interior); 0.5 below 0.7"):
        sweep07 = sweep_similarity(LossSpec(Family.EXPFACE, 0.7, 64.0), 10001)
        sweep05 = sweep_similarity(LossSpec(Family.EXPFACE, 0.5, 64.0), 10001)
        thetas = np.array([float(s.theta) for s in sweep07])
        t07 = np.array([s.value for s in sweep07])
        t05 = np.array([s.value for s in sweep05])
        cos = np.cos(thetas)
        assert np.all(t07 <= cos)
        assert np.all(t07[1:-1] < cos[1:-1])
        assert np.all(t05 <= t07)


def test_criterion_04_naive_form_failure():
    with _criterion(4, "naive form rises above cos somewhere on (pi/2, pi)"):
        samples = sweep_similarity(LossSpec(Family.EXPFACE_NAIVE, 0.7, 64.0), 10001)
        thetas = np.array([float(s.theta) for s in samples])
        values = np.array([s.value for s in samples])
        interior = (thetas > math.pi / 2) & (thetas < math.pi)
        assert np.any(values[interior] > np.cos(thetas[interior]))


def _fd_grads(features, centers, labels, spec, h=1e-5):
    grad_features = np.zeros_like(features)
    for i in range(features.shape[0]):
        for j in range(features.shape[1]):
            up, dn = features.copy(), features.copy()
            up[i, j] += h
            dn[i, j] -= h
            grad_features[i, j] = (
                batch_loss(BatchInput(up, centers, labels), spec)
                - batch_loss(BatchInput(dn, centers, labels), spec)
            ) / (2 * h)
    grad_centers = np.zeros_like(centers)
    for i in range(centers.shape[0]):
        for j in range(centers.shape[1]):
            up, dn = centers.copy(), centers.copy()
            up[i, j] += h
            dn[i, j] -= h
            grad_centers[i, j] = (
                batch_loss(BatchInput(features, up, labels), spec)
                - batch_loss(BatchInput(features, dn, labels), spec)
            ) / (2 * h)
    return grad_features, grad_centers


def test_criterion_05_gradient_correctness():
    with _criterion(5, "finite_diff_check <= 1e-6 per family; batch backward FD <= 1e-5"):
        for family in Family:
            spec = LossSpec.default(family)
            ctx = TransitionContext(scale=spec.scale)
            report = finite_diff_check(spec, ctx, 1001)
            assert report.max_rel_err <= 1e-6, family

        rng = np.random.default_rng(1)
        features = rng.standard_normal((3, 8))
        centers = rng.standard_normal((8, 5))
        labels = rng.integers(0, 5, size=3)
        spec = LossSpec(Family.EXPFACE, 0.7, 64.0)
        analytic_f, analytic_c = backward(BatchInput(features, centers, labels), spec)
        numeric_f, numeric_c = _fd_grads(features, centers, labels, spec)
        for analytic, numeric in ((analytic_f, numeric_f), (analytic_c, numeric_c)):
            denom = max(np.max(np.abs(analytic)), np.max(np.abs(numeric)))
            assert np.max(np.abs(analytic - numeric)) / denom <= 1e-5


def test_criterion_06_transition_angle():
    with _criterion(6, "closed vs bisected transition <= 1e-9; Plain < pi/2; ln 2; CosFace saturation"):
        rng = np.random.default_rng(0)
        families = (Family.PLAIN, Family.SPHEREFACE, Family.COSFACE,
                    Family.ARCFACE, Family.EXPFACE_NAIVE, Family.EXPFACE)
        for i in range(50):
            family = families[i % len(families)]
            ctx = TransitionContext(
                b=0.05 + rng.random() * (math.pi - 0.1),
                class_count=int(rng.integers(2, 50001)),
                scale=1.0 + rng.random() * 511.0,
            )
            if family is Family.SPHEREFACE:
                margin = 1.0 + 2.0 * rng.random()
            elif family is Family.COSFACE:
                margin = 1.5 * rng.random()
            elif family is Family.ARCFACE:
                margin = 3.0 * rng.random()
            elif family is Family.PLAIN:
                margin = 0.0
            else:
                margin = 0.3 + 9.7 * rng.random()
            spec = LossSpec(family, margin, ctx.scale)
            closed = transition_angle(spec, ctx)
            bisected = transition_angle_bisect(spec, ctx)
            assert (closed is None) == (bisected is None)
            if closed is not None:
                assert abs(float(closed) - float(bisected)) <= 1e-9

        ctx = TransitionContext()
        plain = transition_angle(LossSpec(Family.PLAIN, scale=64.0), ctx)
        assert float(plain) < math.pi / 2

        for spec in (
            LossSpec(Family.PLAIN, scale=64.0),
            LossSpec(Family.COSFACE, 0.4, 64.0),
            LossSpec(Family.ARCFACE, 0.5, 64.0),
            LossSpec(Family.EXPFACE, 0.7, 64.0),
            LossSpec(Family.SPHEREFACE, 1.7, 32.0),
        ):
            spec_ctx = TransitionContext(scale=spec.scale)
            trans = transition_angle(spec, spec_ctx)
            assert abs(scalar_loss(spec, trans, spec_ctx) - math.log(2.0)) <= 1e-9

        for m in (1.0, 1.2, 2.0):
            spec = LossSpec(Family.COSFACE, m, 64.0)
            assert transition_angle(spec, ctx) is None
            assert transition_angle_bisect(spec, ctx) is None


def test_criterion_07_gradient_curve_pathologies():
    with _criterion(7, "SphereFace peaks, ArcFace negativity, CosFace/ExpFace argmax laws"):
        ctx32 = TransitionContext(scale=32.0)
        peaks = analyze_extrema(
            sweep_gradient(LossSpec(Family.SPHEREFACE, 1.7, 32.0), ctx32, 2001)
        )
        assert len(peaks.maxima) >= 2
        single = analyze_extrema(
            sweep_gradient(LossSpec(Family.SPHEREFACE, 1.0, 32.0), ctx32, 2001)
        )
        assert len(single.maxima) == 1

        ctx = TransitionContext()
        arc = sweep_gradient(LossSpec(Family.ARCFACE, 0.5, 64.0), ctx, 2001)
        tail = [s.value for s in arc if float(s.theta) > math.pi - 0.5]
        assert min(tail) < 0.0

        for m in (0.0, 0.2, 0.4, 0.8):
            samples = sweep_gradient(LossSpec(Family.COSFACE, m, 64.0), ctx, 1001)
            thetas = np.array([float(s.theta) for s in samples])
            values = np.array([s.value for s in samples])
            step = thetas[1] - thetas[0]
            assert abs(thetas[int(np.argmax(values))] - math.pi / 2) <= step * 1.0001

        argmaxes = []
        for m in (1.0, 0.85, 0.7):
            samples = sweep_gradient(LossSpec(Family.EXPFACE, m, 64.0), ctx, 10001)
            thetas = np.array([float(s.theta) for s in samples])
            values = np.array([s.value for s in samples])
            argmaxes.append(thetas[int(np.argmax(values))])
        assert argmaxes[0] > argmaxes[1] > argmaxes[2]


def test_criterion_08_boundary_margin_shape_laws():
    with _criterion(8, "margin-field shapes: sphere rising, arc flat, cos edges, exp unimodal"):
        sphere = margin_field(LossSpec(Family.SPHEREFACE, 1.7, 32.0), 1001)
        sphere_vals = np.array([p.angular_margin for p in sphere])
        assert np.all(np.diff(sphere_vals) > 0.0)

        arc = margin_field(LossSpec(Family.ARCFACE, 0.5, 64.0), 1001)
        for point in arc:
            if float(point.theta_neg) >= 0.5:
                assert abs(point.angular_margin - 0.5) <= 1e-9
            else:
                assert point.angular_margin <= 0.5 + 1e-9

        cos_field = margin_field(LossSpec(Family.COSFACE, 0.4, 64.0), 1001)
        cos_vals = np.array([p.angular_margin for p in cos_field])
        thetas = np.array([float(p.theta_neg) for p in cos_field])
        mid = int(np.argmin(np.abs(thetas - math.pi / 2)))
        assert cos_vals[0] > cos_vals[mid]
        assert cos_vals[-1] > cos_vals[mid]

        exp_field = margin_field(LossSpec(Family.EXPFACE, 0.7, 64.0), 1001)
        exp_vals = np.array([p.angular_margin for p in exp_field])
        assert np.all(exp_vals >= 0.0)
        assert exp_vals[0] < 0.02 and exp_vals[-1] < 0.02
        diffs = np.diff(exp_vals)
        assert np.all(diffs != 0.0)
        flips = np.nonzero(np.sign(diffs[1:]) != np.sign(diffs[:-1]))[0]
        assert len(flips) == 1 and diffs[flips[0]] > 0.0 > diffs[flips[0] + 1]


def test_criterion_09_noise_drift_orderings(desk_runs):
    with _criterion(9, "desk-spec drift orderings hold for >= 4 of seeds 1..5, each run < 60 s"):
        exp_runs, _, durations = desk_runs
        assert max(durations.values()) < 60.0
        hits = 0
        for seed in SEEDS:
            rows = drift_statistics(exp_runs[seed].trajectories).rows
            clean, type1 = rows[NoiseLabel.CLEAN], rows[NoiseLabel.TYPE_I]
            type2 = rows[NoiseLabel.TYPE_II]
            pos_ordering = clean.median_theta_pos < type1.median_theta_pos
            neg_ordering = type2.mean_theta_neg_mean < clean.mean_theta_neg_mean
            hits += pos_ordering and neg_ordering
        assert hits >= 4, f"orderings held for only {hits} of 5 seeds"


def test_criterion_10_noise_suppression(desk_runs):
    with _criterion(10, "mean |dL/dtheta| at TypeI final theta_pos: ExpFace(0.7) < CosFace(0.4)"):
        exp_runs, cos_runs, _ = desk_runs
        ctx = TransitionContext(b=math.pi / 2, class_count=16, scale=64.0)
        exp_spec = LossSpec(Family.EXPFACE, 0.7, 64.0)
        cos_spec = LossSpec(Family.COSFACE, 0.4, 64.0)

        def mean_grad_magnitude(run_record, spec):
            magnitudes = []
            for traj in run_record.trajectories:
                if traj.noise is NoiseLabel.TYPE_I:
                    theta = min(max(float(traj.per_epoch[-1][0]), EPS), math.pi - EPS)
                    magnitudes.append(abs(dL_dtheta(spec, Angle(theta), ctx)))
            return float(np.mean(magnitudes))

        exp_mean = np.mean([mean_grad_magnitude(exp_runs[s], exp_spec) for s in SEEDS])
        cos_mean = np.mean([mean_grad_magnitude(cos_runs[s], cos_spec) for s in SEEDS])
        assert exp_mean < cos_mean, f"ExpFace {exp_mean} vs CosFace {cos_mean}"


def test_criterion_11_determinism(tmp_path, capsys):
    with _criterion(11, "identical configs produce byte-identical CSVs"):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        for out in (out_a, out_b):
            assert main(["gradients", "--family", "cosface", "--grid-size", "101",
                         "--output-dir", str(out)]) == 0
            assert main([
                "simulate",
                "--toy-input-dim", "8", "--toy-embed-dim", "4",
                "--toy-class-count", "4", "--toy-samples-per-class", "3",
                "--toy-type2-pair-count", "1", "--toy-epochs", "3",
                "--toy-batch-size", "8",
                "--output-dir", str(out),
            ]) == 0
        capsys.readouterr()
        for name in ("gradients_cosface_m0.4.csv", "simulate_expface_m0.7.csv"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()
