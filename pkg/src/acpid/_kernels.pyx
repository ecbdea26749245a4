# cython: language_level=3
"""Compiled hot loops: dense MLP forward/backward, ADAM, quadrotor RK4.

Every function mirrors one in ``acpid._fallback`` with the same signature and
the same floating-point formulas. Outputs are written into caller-owned
buffers.
"""
from libc.math cimport cos, sin, tanh, sqrt, isfinite

cdef enum:
    LINEAR = 0
    SIGMOID = 1
    TANH = 2


cdef inline double _act(double z, Py_ssize_t code) noexcept nogil:
    if code == SIGMOID:
        return 0.5 * (1.0 + tanh(0.5 * z))
    elif code == TANH:
        return tanh(z)
    return z


cdef inline double _dact(double y, Py_ssize_t code) noexcept nogil:
    # derivative expressed through the activation output
    if code == SIGMOID:
        return y * (1.0 - y)
    elif code == TANH:
        return 1.0 - y * y
    return 1.0


def mlp_forward(const double[::1] params, const Py_ssize_t[::1] sizes,
                const Py_ssize_t[::1] acts, const double[::1] x,
                double[::1] pre, double[::1] post):
    """pre: concatenated layer pre-activations; post: input followed by every layer output."""
    cdef Py_ssize_t n_layers = acts.shape[0]
    cdef Py_ssize_t k, i, j, n_in, n_out, w_off = 0, in_off = 0, out_off, pre_off = 0
    cdef double z
    with nogil:
        for i in range(sizes[0]):
            post[i] = x[i]
        out_off = sizes[0]
        for k in range(n_layers):
            n_in = sizes[k]
            n_out = sizes[k + 1]
            for i in range(n_out):
                z = params[w_off + n_out * n_in + i]
                for j in range(n_in):
                    z = z + params[w_off + i * n_in + j] * post[in_off + j]
                pre[pre_off + i] = z
                post[out_off + i] = _act(z, acts[k])
            w_off += n_out * n_in + n_out
            in_off = out_off
            out_off += n_out
            pre_off += n_out


def mlp_backward(const double[::1] params, const Py_ssize_t[::1] sizes,
                 const Py_ssize_t[::1] acts, const double[::1] post,
                 const double[::1] grad_out, double[::1] grad_params,
                 double[::1] grad_in, double[::1] work):
    """Reverse pass. ``work`` must hold at least 2 * max(sizes) doubles."""
    cdef Py_ssize_t n_layers = acts.shape[0]
    cdef Py_ssize_t k, i, j, n_in, n_out, w_off, in_off, out_off, width = 0
    cdef Py_ssize_t cur = 0, nxt
    cdef double acc
    for k in range(n_layers + 1):
        if sizes[k] > width:
            width = sizes[k]
    nxt = width
    with nogil:
        # offsets of the last layer
        w_off = 0
        out_off = sizes[0]
        for k in range(n_layers - 1):
            w_off += sizes[k + 1] * sizes[k] + sizes[k + 1]
            out_off += sizes[k + 1]
        n_out = sizes[n_layers]
        for i in range(n_out):
            work[cur + i] = grad_out[i] * _dact(post[out_off + i], acts[n_layers - 1])
        for k in range(n_layers - 1, -1, -1):
            n_in = sizes[k]
            n_out = sizes[k + 1]
            in_off = out_off - n_in
            for i in range(n_out):
                grad_params[w_off + n_out * n_in + i] = work[cur + i]
                for j in range(n_in):
                    grad_params[w_off + i * n_in + j] = work[cur + i] * post[in_off + j]
            for j in range(n_in):
                acc = 0.0
                for i in range(n_out):
                    acc = acc + params[w_off + i * n_in + j] * work[cur + i]
                if k > 0:
                    work[nxt + j] = acc * _dact(post[in_off + j], acts[k - 1])
                else:
                    grad_in[j] = acc
            if k > 0:
                cur, nxt = nxt, cur
                out_off = in_off
                w_off -= sizes[k] * sizes[k - 1] + sizes[k]


def adam_update(const double[::1] params, const double[::1] grads,
                const double[::1] m, const double[::1] v, long t,
                double lr, double beta1, double beta2, double eps,
                double[::1] out_params, double[::1] out_m, double[::1] out_v):
    """One bias-corrected ADAM step; returns index of first non-finite parameter or -1."""
    cdef Py_ssize_t i, n = params.shape[0], bad = -1
    cdef double c1 = 1.0 - beta1 ** t
    cdef double c2 = 1.0 - beta2 ** t
    cdef double mi, vi
    with nogil:
        for i in range(n):
            mi = beta1 * m[i] + (1.0 - beta1) * grads[i]
            vi = beta2 * v[i] + (1.0 - beta2) * grads[i] * grads[i]
            out_m[i] = mi
            out_v[i] = vi
            out_params[i] = params[i] - lr * (mi / c1) / sqrt(vi / c2 + eps)
            if bad < 0 and not isfinite(out_params[i]):
                bad = i
    return bad


cdef void _rhs(const double* s, const double* u, const double* p,
               const double* d, double* out) noexcept nogil:
    # p = (m, g, l, Jx, Jy, Jz)
    cdef double m = p[0], g = p[1], l = p[2], jx = p[3], jy = p[4], jz = p[5]
    cdef double cphi = cos(s[3]), sphi = sin(s[3])
    cdef double cth = cos(s[4]), sth = sin(s[4])
    cdef double cpsi = cos(s[5]), spsi = sin(s[5])
    cdef double thrust = u[0] / m
    cdef Py_ssize_t i
    for i in range(6):
        out[i] = s[i + 6]
    out[6] = thrust * (cphi * sth * cpsi + sphi * spsi)
    out[7] = thrust * (cphi * sth * spsi - sphi * cpsi)
    out[8] = thrust * cphi * cth - g
    out[9] = s[10] * s[11] * (jy - jz) / jx + l / jx * u[1] + d[0]
    out[10] = s[9] * s[11] * (jz - jx) / jy + l / jy * u[2] + d[1]
    out[11] = s[9] * s[10] * (jx - jy) / jz + 1.0 / jz * u[3] + d[2]


def quad_rhs(const double[::1] state, const double[::1] u, const double[::1] phys,
             const double[::1] gust, double[::1] out):
    _rhs(&state[0], &u[0], &phys[0], &gust[0], &out[0])


def rk4_step(const double[::1] state, const double[::1] u, const double[::1] phys,
             const double[::1] gust, double dt, double[::1] out):
    cdef double k1[12]
    cdef double k2[12]
    cdef double k3[12]
    cdef double k4[12]
    cdef double tmp[12]
    cdef Py_ssize_t i
    cdef double h = 0.5 * dt
    with nogil:
        _rhs(&state[0], &u[0], &phys[0], &gust[0], k1)
        for i in range(12):
            tmp[i] = state[i] + h * k1[i]
        _rhs(tmp, &u[0], &phys[0], &gust[0], k2)
        for i in range(12):
            tmp[i] = state[i] + h * k2[i]
        _rhs(tmp, &u[0], &phys[0], &gust[0], k3)
        for i in range(12):
            tmp[i] = state[i] + dt * k3[i]
        _rhs(tmp, &u[0], &phys[0], &gust[0], k4)
        for i in range(12):
            out[i] = state[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
