"""Scalar-loop LSTM oracle used to cross-check the vectorized kernels.

Plain python floats and math functions only; no numpy in the arithmetic.
"""

import math


def sig(z):
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def cell_step(x_t, h_prev, c_prev, w_xi, w_xf, w_xo, w_xg,
              w_hi, w_hf, w_ho, w_hg, b_i, b_f, b_o, b_g):
    """One recurrence step; all weights are lists of lists, vectors are lists."""
    hidden = len(b_i)

    def affine(w_x, w_h, b, j):
        z = b[j]
        for k, xv in enumerate(x_t):
            z += w_x[j][k] * xv
        for k, hv in enumerate(h_prev):
            z += w_h[j][k] * hv
        return z

    h_new = [0.0] * hidden
    c_new = [0.0] * hidden
    for j in range(hidden):
        i_j = sig(affine(w_xi, w_hi, b_i, j))
        f_j = sig(affine(w_xf, w_hf, b_f, j))
        o_j = sig(affine(w_xo, w_ho, b_o, j))
        g_j = math.tanh(affine(w_xg, w_hg, b_g, j))
        c_new[j] = f_j * c_prev[j] + i_j * g_j
        h_new[j] = o_j * math.tanh(c_new[j])
    return h_new, c_new


def run_sequence(xs, params):
    """Full unrolled pass from zero state; returns list of (h, c) per step."""
    hidden = len(params["b_i"])
    h = [0.0] * hidden
    c = [0.0] * hidden
    states = []
    for x_t in xs:
        h, c = cell_step(
            x_t, h, c,
            params["w_xi"], params["w_xf"], params["w_xo"], params["w_xg"],
            params["w_hi"], params["w_hf"], params["w_ho"], params["w_hg"],
            params["b_i"], params["b_f"], params["b_o"], params["b_g"])
        states.append((h, c))
    return states
