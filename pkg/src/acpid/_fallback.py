"""Numpy implementations of the hot kernels.

Signatures match ``acpid._kernels`` exactly, including the caller-owned output
buffers, so the two are interchangeable behind ``acpid._backend``.
"""
import numpy as np

LINEAR, SIGMOID, TANH = 0, 1, 2


def _act(z, code):
    if code == SIGMOID:
        return 0.5 * (1.0 + np.tanh(0.5 * z))
    if code == TANH:
        return np.tanh(z)
    return z


def _dact(y, code):
    if code == SIGMOID:
        return y * (1.0 - y)
    if code == TANH:
        return 1.0 - y * y
    return np.ones_like(y)


def mlp_forward(params, sizes, acts, x, pre, post):
    n0 = sizes[0]
    post[:n0] = x
    w_off = in_off = pre_off = 0
    out_off = n0
    for k, code in enumerate(acts):
        n_in, n_out = sizes[k], sizes[k + 1]
        w = params[w_off:w_off + n_out * n_in].reshape(n_out, n_in)
        b = params[w_off + n_out * n_in:w_off + n_out * n_in + n_out]
        z = w @ post[in_off:in_off + n_in] + b
        pre[pre_off:pre_off + n_out] = z
        post[out_off:out_off + n_out] = _act(z, code)
        w_off += n_out * n_in + n_out
        in_off = out_off
        out_off += n_out
        pre_off += n_out


def mlp_backward(params, sizes, acts, post, grad_out, grad_params, grad_in, work):
    n_layers = len(acts)
    offsets = [0]
    for k in range(n_layers):
        offsets.append(offsets[-1] + sizes[k + 1] * sizes[k] + sizes[k + 1])
    post_off = np.concatenate(([0], np.cumsum(sizes)))
    delta = grad_out * _dact(post[post_off[n_layers]:post_off[n_layers + 1]], acts[-1])
    for k in range(n_layers - 1, -1, -1):
        n_in, n_out = sizes[k], sizes[k + 1]
        w_off = offsets[k]
        h = post[post_off[k]:post_off[k + 1]]
        grad_params[w_off:w_off + n_out * n_in] = np.outer(delta, h).ravel()
        grad_params[w_off + n_out * n_in:w_off + n_out * n_in + n_out] = delta
        w = params[w_off:w_off + n_out * n_in].reshape(n_out, n_in)
        back = w.T @ delta
        if k > 0:
            delta = back * _dact(h, acts[k - 1])
        else:
            grad_in[:] = back


def adam_update(params, grads, m, v, t, lr, beta1, beta2, eps, out_params, out_m, out_v):
    c1 = 1.0 - beta1 ** t
    c2 = 1.0 - beta2 ** t
    out_m[:] = beta1 * m + (1.0 - beta1) * grads
    out_v[:] = beta2 * v + (1.0 - beta2) * grads * grads
    out_params[:] = params - lr * (out_m / c1) / np.sqrt(out_v / c2 + eps)
    bad = np.flatnonzero(~np.isfinite(out_params))
    return int(bad[0]) if bad.size else -1


def _rhs(s, u, p, d):
    m, g, l, jx, jy, jz = p
    cphi, sphi = np.cos(s[3]), np.sin(s[3])
    cth, sth = np.cos(s[4]), np.sin(s[4])
    cpsi, spsi = np.cos(s[5]), np.sin(s[5])
    thrust = u[0] / m
    out = np.empty(12)
    out[:6] = s[6:]
    out[6] = thrust * (cphi * sth * cpsi + sphi * spsi)
    out[7] = thrust * (cphi * sth * spsi - sphi * cpsi)
    out[8] = thrust * cphi * cth - g
    out[9] = s[10] * s[11] * (jy - jz) / jx + l / jx * u[1] + d[0]
    out[10] = s[9] * s[11] * (jz - jx) / jy + l / jy * u[2] + d[1]
    out[11] = s[9] * s[10] * (jx - jy) / jz + 1.0 / jz * u[3] + d[2]
    return out


def quad_rhs(state, u, phys, gust, out):
    out[:] = _rhs(state, u, phys, gust)


def rk4_step(state, u, phys, gust, dt, out):
    h = 0.5 * dt
    k1 = _rhs(state, u, phys, gust)
    k2 = _rhs(state + h * k1, u, phys, gust)
    k3 = _rhs(state + h * k2, u, phys, gust)
    k4 = _rhs(state + dt * k3, u, phys, gust)
    out[:] = state + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
