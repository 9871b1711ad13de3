"""Pure-numpy kernels for the margin similarity functions and their calculus.

This module is the fallback twin of ``_kernels_cy``; both expose the same
four array functions over integer family codes so the rest of the package
is backend-agnostic. All inputs are 1-D float64 arrays of angles in
radians; outputs are freshly allocated float64 arrays.

Family codes: 0 plain, 1 sphereface, 2 cosface, 3 arcface,
4 expface-naive, 5 expface.
"""

import numpy as np

BACKEND_NAME = "python"

PLAIN = 0
SPHEREFACE = 1
COSFACE = 2
ARCFACE = 3
EXPFACE_NAIVE = 4
EXPFACE = 5


def similarity(family, margin, theta):
    """Margin-embedded similarity T(theta) for one family.

    Args:
        family: integer family code.
        margin: the family's margin hyperparameter (ignored for plain).
        theta: 1-D float64 array of angles in [0, pi].

    Returns:
        float64 array of T(theta) values.
    """
    theta = np.asarray(theta, dtype=np.float64)
    if family == PLAIN:
        return np.cos(theta)
    if family == SPHEREFACE:
        k = np.floor(margin * theta / np.pi)
        sign = np.where(np.mod(k, 2.0) == 0.0, 1.0, -1.0)
        return sign * np.cos(margin * theta) - 2.0 * k
    if family == COSFACE:
        return np.cos(theta) - margin
    if family == ARCFACE:
        return np.cos(theta + margin)
    if family == EXPFACE_NAIVE:
        return np.cos(theta**margin)
    if family == EXPFACE:
        u = theta / np.pi
        return np.cos(np.pi * u**margin)
    raise ValueError(f"unknown family code {family}")


def similarity_derivative(family, margin, theta):
    """Analytic dT/dtheta; callers must keep theta off the endpoints.

    For the two exponential families with margin < 1 the derivative
    diverges as theta -> 0, so theta = 0 yields non-finite output.
    """
    theta = np.asarray(theta, dtype=np.float64)
    if family == PLAIN or family == COSFACE:
        return -np.sin(theta)
    if family == SPHEREFACE:
        k = np.floor(margin * theta / np.pi)
        sign = np.where(np.mod(k, 2.0) == 0.0, 1.0, -1.0)
        return -sign * margin * np.sin(margin * theta)
    if family == ARCFACE:
        return -np.sin(theta + margin)
    if family == EXPFACE_NAIVE:
        with np.errstate(divide="ignore", invalid="ignore"):
            return -np.sin(theta**margin) * margin * theta ** (margin - 1.0)
    if family == EXPFACE:
        u = theta / np.pi
        with np.errstate(divide="ignore", invalid="ignore"):
            return -np.sin(np.pi * u**margin) * margin * u ** (margin - 1.0)
    raise ValueError(f"unknown family code {family}")


def scalar_loss(family, margin, scale, bias, theta):
    """Stable softplus loss ln(1 + exp(-scale*T(theta) + bias)).

    ``bias`` is the precomputed constant scale*cos(b) + ln(C-1).
    """
    x = -scale * similarity(family, margin, theta) + bias
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def loss_gradient(family, margin, scale, bias, theta):
    """Exact derivative of scalar_loss: -scale * T'(theta) * sigmoid(x)."""
    x = -scale * similarity(family, margin, theta) + bias
    sig = np.empty_like(x)
    pos = x >= 0.0
    sig[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    sig[~pos] = ex / (1.0 + ex)
    return -scale * similarity_derivative(family, margin, theta) * sig
