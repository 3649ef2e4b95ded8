"""Pure numpy LSTM sequence kernels (the fallback backend).

Both backends share the same contract:

    lstm_forward(x, w_x, w_h, b) -> (h, cache)
    lstm_backward(dh_out, cache, w_x, w_h) -> (dx, dw_x, dw_h, db)

with x (B, T, D) float64, fused gate weights w_x (4H, D), w_h (4H, H),
b (4H,), gate row order [input, forget, output, candidate], and the
recurrence starting from zero h/c state.  The cache is backend-specific
and opaque to callers.
"""

import numpy as np
from scipy.special import expit as sigmoid  # stable logistic, single C pass

NAME = "pure"


def lstm_forward(x, w_x, w_h, b):
    x = np.ascontiguousarray(x, dtype=np.float64)
    B, T, D = x.shape
    H4 = w_x.shape[0]
    H = H4 // 4
    h = np.zeros((B, T, H))
    i = np.empty((B, T, H))
    f = np.empty((B, T, H))
    o = np.empty((B, T, H))
    g = np.empty((B, T, H))
    c = np.empty((B, T, H))
    if B == 0 or T == 0:
        return h, (x, h, i, f, o, g, c)

    # input projections for every timestep in one matmul
    zx = x.reshape(B * T, D) @ w_x.T
    zx += b
    zx = zx.reshape(B, T, H4)

    w_h_t = np.ascontiguousarray(w_h.T)
    h_t = np.zeros((B, H))
    c_t = np.zeros((B, H))
    for t in range(T):
        z = zx[:, t] + h_t @ w_h_t
        i_t = sigmoid(z[:, :H])
        f_t = sigmoid(z[:, H:2 * H])
        o_t = sigmoid(z[:, 2 * H:3 * H])
        g_t = np.tanh(z[:, 3 * H:])
        c_t = f_t * c_t + i_t * g_t
        h_t = o_t * np.tanh(c_t)
        i[:, t] = i_t
        f[:, t] = f_t
        o[:, t] = o_t
        g[:, t] = g_t
        c[:, t] = c_t
        h[:, t] = h_t
    return h, (x, h, i, f, o, g, c)


def lstm_backward(dh_out, cache, w_x, w_h):
    x, h, i, f, o, g, c = cache
    B, T, H = h.shape
    D = x.shape[2]
    H4 = 4 * H
    if B == 0 or T == 0:
        return (np.zeros_like(x), np.zeros_like(w_x), np.zeros_like(w_h),
                np.zeros(H4))

    dz = np.empty((B, T, H4))
    dh_rec = np.zeros((B, H))
    dc = np.zeros((B, H))
    for t in range(T - 1, -1, -1):
        i_t, f_t, o_t, g_t = i[:, t], f[:, t], o[:, t], g[:, t]
        dh = dh_out[:, t] + dh_rec
        tc = np.tanh(c[:, t])
        dc = dc + dh * o_t * (1.0 - tc * tc)
        c_prev = c[:, t - 1] if t > 0 else 0.0
        dz_t = dz[:, t]
        dz_t[:, :H] = (dc * g_t) * i_t * (1.0 - i_t)
        dz_t[:, H:2 * H] = (dc * c_prev) * f_t * (1.0 - f_t)
        dz_t[:, 2 * H:3 * H] = (dh * tc) * o_t * (1.0 - o_t)
        dz_t[:, 3 * H:] = (dc * i_t) * (1.0 - g_t * g_t)
        dh_rec = dz_t @ w_h
        dc = dc * f_t

    dz2 = dz.reshape(B * T, H4)
    dx = (dz2 @ w_x).reshape(B, T, D)
    dw_x = dz2.T @ x.reshape(B * T, D)
    h_prev = np.concatenate([np.zeros((B, 1, H)), h[:, :-1]], axis=1)
    dw_h = dz2.T @ h_prev.reshape(B * T, H)
    db = dz2.sum(axis=0)
    return dx, dw_x, dw_h, db
