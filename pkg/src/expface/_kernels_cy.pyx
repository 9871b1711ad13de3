# cython: boundscheck=False, wraparound=False, cdivision=True
"""Cython kernels: compiled twin of ``_kernels_py``.

Same four array functions over the same integer family codes, evaluated
in serial C loops for determinism. Only elementwise math lives here;
matrix work stays in numpy regardless of backend.
"""

import numpy as np

from libc.math cimport cos, exp, fabs, floor, log1p, pow, sin

BACKEND_NAME = "cython"

PLAIN = 0
SPHEREFACE = 1
COSFACE = 2
ARCFACE = 3
EXPFACE_NAIVE = 4
EXPFACE = 5

cdef double PI = 3.141592653589793238462643383279502884


cdef inline double _similarity(int family, double margin, double theta) nogil:
    cdef double k, sign, u
    if family == 0:
        return cos(theta)
    if family == 1:
        k = floor(margin * theta / PI)
        sign = 1.0 if ((<long> k) % 2 == 0) else -1.0
        return sign * cos(margin * theta) - 2.0 * k
    if family == 2:
        return cos(theta) - margin
    if family == 3:
        return cos(theta + margin)
    if family == 4:
        return cos(pow(theta, margin))
    u = theta / PI
    return cos(PI * pow(u, margin))


cdef inline double _derivative(int family, double margin, double theta) nogil:
    cdef double k, sign, u
    if family == 0 or family == 2:
        return -sin(theta)
    if family == 1:
        k = floor(margin * theta / PI)
        sign = 1.0 if ((<long> k) % 2 == 0) else -1.0
        return -sign * margin * sin(margin * theta)
    if family == 3:
        return -sin(theta + margin)
    if family == 4:
        return -sin(pow(theta, margin)) * margin * pow(theta, margin - 1.0)
    u = theta / PI
    return -sin(PI * pow(u, margin)) * margin * pow(u, margin - 1.0)


cdef inline double _softplus(double x) nogil:
    if x > 0.0:
        return x + log1p(exp(-x))
    return log1p(exp(x))


cdef inline double _sigmoid(double x) nogil:
    cdef double e
    if x >= 0.0:
        return 1.0 / (1.0 + exp(-x))
    e = exp(x)
    return e / (1.0 + e)


def similarity(int family, double margin, theta):
    """Margin-embedded similarity T(theta); see ``_kernels_py.similarity``."""
    cdef double[::1] t = np.ascontiguousarray(theta, dtype=np.float64)
    out_arr = np.empty(t.shape[0], dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    if family < 0 or family > 5:
        raise ValueError(f"unknown family code {family}")
    for i in range(t.shape[0]):
        out[i] = _similarity(family, margin, t[i])
    return out_arr


def similarity_derivative(int family, double margin, theta):
    """Analytic dT/dtheta; see ``_kernels_py.similarity_derivative``."""
    cdef double[::1] t = np.ascontiguousarray(theta, dtype=np.float64)
    out_arr = np.empty(t.shape[0], dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    if family < 0 or family > 5:
        raise ValueError(f"unknown family code {family}")
    for i in range(t.shape[0]):
        out[i] = _derivative(family, margin, t[i])
    return out_arr


def scalar_loss(int family, double margin, double scale, double bias, theta):
    """Stable softplus loss ln(1 + exp(-scale*T(theta) + bias))."""
    cdef double[::1] t = np.ascontiguousarray(theta, dtype=np.float64)
    out_arr = np.empty(t.shape[0], dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    if family < 0 or family > 5:
        raise ValueError(f"unknown family code {family}")
    for i in range(t.shape[0]):
        out[i] = _softplus(-scale * _similarity(family, margin, t[i]) + bias)
    return out_arr


def loss_gradient(int family, double margin, double scale, double bias, theta):
    """Exact derivative of scalar_loss: -scale * T'(theta) * sigmoid(x)."""
    cdef double[::1] t = np.ascontiguousarray(theta, dtype=np.float64)
    out_arr = np.empty(t.shape[0], dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    cdef double x
    if family < 0 or family > 5:
        raise ValueError(f"unknown family code {family}")
    for i in range(t.shape[0]):
        x = -scale * _similarity(family, margin, t[i]) + bias
        out[i] = -scale * _derivative(family, margin, t[i]) * _sigmoid(x)
    return out_arr
