"""Pure numpy versions of the compiled kernels (same signatures)."""

import numpy as np


def evolve(programs, x_init, tau_eff, lambda_f, eta_f, floor,
           lambda_rate, eta, t_pulse, x_min, x_max, v_write, c2c=None):
    N, D, T = programs.shape
    drive = t_pulse * (lambda_rate * np.asarray(lambda_f)) * np.sinh((eta * np.asarray(eta_f)) * v_write)
    leak = -np.expm1(-t_pulse / np.asarray(tau_eff))
    x = np.broadcast_to(np.asarray(x_init, dtype=float), (N, D)).copy()
    lo = np.broadcast_to(np.asarray(floor, dtype=float), (N, D))
    for t in range(T):
        bit = programs[:, :, t].astype(bool)
        up = (1.0 - np.exp(3.0 * (x - x_max))) * drive
        down = (x - x_min) * leak
        if c2c is not None:
            m = c2c[:, :, t]
            x = np.where(bit, x + m * up, x - m * down)
        else:
            x = np.where(bit, x + up, x - down)
        np.clip(x, lo, x_max, out=x)
    return x


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def sgd_epoch(W, X, y, order, lr, with_loss=True):
    C = W.shape[1]
    total = 0.0
    target = np.zeros(C)
    for i in order:
        f = X[i]
        nz = np.flatnonzero(f)
        fz = f[nz]
        z = fz @ W[nz]
        target[:] = 0.0
        target[y[i]] = 1.0
        g = _sigmoid(z) - target
        if with_loss:
            total += float(np.sum(np.log1p(np.exp(-np.abs(z))) + np.maximum(z, 0.0) - target * z))
        W[nz] -= np.outer(lr * fz, g)
    return total
