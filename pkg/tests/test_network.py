import numpy as np
import pytest

from opscan.errors import DimensionMismatch, LengthMismatch, StaleCache
from opscan.model import network, ops
from opscan.model.adam import adam_step, AdamState
from opscan.model.network import CellState, backward, forward, lstm_cell, predict
from opscan.model.params import LstmLayerParams, ModelDims, init_params

from lstm_oracle import run_sequence


def toy_params(seed=0, vocab=12, embed=8, h1=8, h2=4, max_len=12):
    return init_params(ModelDims(vocab, embed, h1, h2, max_len), seed=seed)


def layer_as_lists(layer):
    return {
        "w_xi": layer.w_xi.tolist(), "w_xf": layer.w_xf.tolist(),
        "w_xo": layer.w_xo.tolist(), "w_xg": layer.w_xg.tolist(),
        "w_hi": layer.w_hi.tolist(), "w_hf": layer.w_hf.tolist(),
        "w_ho": layer.w_ho.tolist(), "w_hg": layer.w_hg.tolist(),
        "b_i": layer.b_i.tolist(), "b_f": layer.b_f.tolist(),
        "b_o": layer.b_o.tolist(), "b_g": layer.b_g.tolist(),
    }


# --- lstm_cell ---

def test_cell_saturated_forget_keeps_memory():
    hidden, inp = 3, 2
    layer = LstmLayerParams(w_x=np.zeros((4 * hidden, inp)),
                            w_h=np.zeros((4 * hidden, hidden)),
                            b=np.zeros(4 * hidden))
    layer.b_f[:] = 50.0   # forget gate pinned open
    layer.b_i[:] = -50.0  # input gate pinned shut
    prev = CellState(h=np.zeros(hidden), c=np.array([0.3, -1.2, 2.0]))
    out = lstm_cell(np.ones(inp), prev, layer)
    assert np.allclose(out.c, prev.c, atol=1e-6)


def test_cell_saturated_memory_over_1600_steps():
    hidden, inp = 4, 3
    layer = LstmLayerParams(w_x=np.zeros((4 * hidden, inp)),
                            w_h=np.zeros((4 * hidden, hidden)),
                            b=np.zeros(4 * hidden))
    layer.b_f[:] = 50.0
    layer.b_i[:] = -50.0
    c0 = np.array([0.5, -0.5, 1.0, -1.0])
    state = CellState(h=np.zeros(hidden), c=c0.copy())
    for _ in range(1600):
        state = lstm_cell(np.zeros(inp), state, layer)
    assert np.max(np.abs(state.c - c0)) < 1e-4


def test_cell_all_zero_params_gives_zero_h():
    hidden, inp = 5, 3
    layer = LstmLayerParams(w_x=np.zeros((4 * hidden, inp)),
                            w_h=np.zeros((4 * hidden, hidden)),
                            b=np.zeros(4 * hidden))
    out = lstm_cell(np.zeros(inp), CellState.zeros(hidden), layer)
    assert np.array_equal(out.h, np.zeros(hidden))  # o=0.5 but tanh(c)=0


def test_cell_matches_scalar_oracle(rng):
    inp, hidden = 3, 2
    layer = LstmLayerParams(
        w_x=rng.normal(size=(4 * hidden, inp)),
        w_h=rng.normal(size=(4 * hidden, hidden)),
        b=rng.normal(size=4 * hidden))
    xs = [rng.normal(size=inp).tolist() for _ in range(4)]
    states = run_sequence(xs, layer_as_lists(layer))
    state = CellState.zeros(hidden)
    for x_t, (h_exp, c_exp) in zip(xs, states):
        state = lstm_cell(np.array(x_t), state, layer)
        assert np.allclose(state.h, h_exp, atol=1e-12, rtol=0)
        assert np.allclose(state.c, c_exp, atol=1e-12, rtol=0)


def test_cell_gate_ranges(rng):
    inp, hidden = 4, 6
    layer = LstmLayerParams(
        w_x=rng.normal(size=(4 * hidden, inp)) * 3,
        w_h=rng.normal(size=(4 * hidden, hidden)) * 3,
        b=rng.normal(size=4 * hidden))
    state = CellState.zeros(hidden)
    for _ in range(20):
        state = lstm_cell(rng.normal(size=inp) * 5, state, layer)
        assert np.all(np.abs(state.h) <= 1.0)


def test_cell_dimension_mismatch():
    layer = LstmLayerParams(w_x=np.zeros((8, 3)), w_h=np.zeros((8, 2)),
                            b=np.zeros(8))
    with pytest.raises(DimensionMismatch):
        lstm_cell(np.zeros(5), CellState.zeros(2), layer)
    with pytest.raises(DimensionMismatch):
        lstm_cell(np.zeros(3), CellState.zeros(4), layer)


# --- forward ---

def test_forward_all_pad_returns_sigmoid_bout(backend):
    params = toy_params()
    params.b_out[0] = 0.7
    tokens = np.zeros((2, params.dims.max_len), dtype=np.int64)
    cache = forward(params, tokens=tokens)
    assert np.allclose(cache.a, ops.sigmoid(0.7), atol=1e-15)


def test_forward_all_pad_zero_bias_is_half(backend):
    params = toy_params()
    cache = forward(params, tokens=np.zeros((1, params.dims.max_len), dtype=int))
    assert cache.a[0] == pytest.approx(0.5, abs=1e-15)


def test_forward_trailing_pad_invariance(backend, rng):
    # batching a short row with a longer one forces the recurrence to run
    # past the short row's end; its probability must not move
    params = toy_params(max_len=10)
    short = np.zeros((1, 10), dtype=np.int64)
    short[0, :6] = rng.integers(2, params.dims.vocab_size, size=6)
    a_solo = forward(params, tokens=short).a[0]
    longer = rng.integers(2, params.dims.vocab_size, size=(1, 10))
    a_batched = forward(params, tokens=np.concatenate([short, longer])).a[0]
    assert a_batched == pytest.approx(a_solo, abs=1e-12)


def test_forward_matches_scalar_oracle_three_steps(rng):
    dims = ModelDims(vocab_size=9, embed_dim=3, hidden1=2, hidden2=2, max_len=3)
    params = init_params(dims, seed=5)
    tokens = np.array([[2, 5, 8]])
    cache = forward(params, tokens=tokens)

    xs = [params.embedding.values[:, t].tolist() for t in tokens[0]]
    states1 = run_sequence(xs, layer_as_lists(params.layer1))
    states2 = run_sequence([h for h, _ in states1], layer_as_lists(params.layer2))
    h2_last = np.array(states2[-1][0])
    expected = ops.sigmoid(float(h2_last @ params.w_out + params.b_out[0]))
    assert cache.a[0] == pytest.approx(expected, abs=1e-12)


def test_forward_rejects_wrong_length():
    params = toy_params(max_len=12)
    with pytest.raises(DimensionMismatch):
        forward(params, tokens=np.zeros((1, 5), dtype=int))


def test_forward_vector_input_equals_embedded_tokens(backend, rng):
    params = toy_params(max_len=8)
    tokens = np.zeros((1, 8), dtype=np.int64)
    tokens[0, :5] = rng.integers(2, params.dims.vocab_size, size=5)
    by_tokens = forward(params, tokens=tokens).a
    vectors = params.embedding.values.T[tokens[0]]
    by_vectors = forward(params, vectors=vectors[None]).a
    assert np.allclose(by_tokens, by_vectors, atol=0, rtol=0)


# --- backward / gradients ---

def numeric_grad(params, tokens, y, name, arr, eps=1e-4):
    grad = np.zeros_like(arr)
    flat = arr.ravel()
    gflat = grad.ravel()
    for k in range(flat.size):
        orig = flat[k]
        flat[k] = orig + eps
        lp = ops.bce_loss(forward(params, tokens=tokens).a, y)
        flat[k] = orig - eps
        lm = ops.bce_loss(forward(params, tokens=tokens).a, y)
        flat[k] = orig
        gflat[k] = (lp - lm) / (2 * eps)
    return grad


def relative_error(a, b, floor=1e-7):
    """Max of |a-b| / max(|a|, |b|, floor).

    The floor covers entries smaller than central differences can resolve
    (FD noise is ~1e-12 absolute here); for those the metric degrades to
    an absolute bound of floor * threshold, still far below any real
    gradient defect.
    """
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return np.max(np.abs(a - b) / denom)


def test_gradients_match_finite_differences_quick(backend):
    params = toy_params(seed=3, vocab=7, embed=4, h1=4, h2=3, max_len=6)
    rng = np.random.default_rng(0)
    tokens = rng.integers(2, 7, size=(3, 6))
    tokens[0, 4:] = 0  # one shorter row to exercise masking
    y = np.array([1.0, 0.0, 1.0])
    cache = forward(params, tokens=tokens)
    grads = backward(params, cache, y)
    for name, arr in params.param_items():
        num = numeric_grad(params, tokens, y, name, arr)
        assert relative_error(grads[name], num) < 1e-4, name


def test_pad_embedding_column_gradient_zero(backend, rng):
    params = toy_params(max_len=6)
    tokens = rng.integers(2, params.dims.vocab_size, size=(2, 6))
    tokens[:, 3:] = 0
    cache = forward(params, tokens=tokens)
    grads = backward(params, cache, np.array([1.0, 0.0]))
    assert np.array_equal(grads["embedding"][:, 0], np.zeros(params.dims.embed_dim))


def test_trailing_pad_never_changes_gradients(backend, rng):
    # gradients are additive over samples, so the batched gradient must be
    # the mean of the single-row gradients even though batching makes the
    # short row sit through five extra PAD timesteps
    params = toy_params(max_len=9)
    short = np.zeros((1, 9), dtype=np.int64)
    short[0, :4] = rng.integers(2, params.dims.vocab_size, size=4)
    long_row = rng.integers(2, params.dims.vocab_size, size=(1, 9))
    g_short = backward(params, forward(params, tokens=short), np.array([1.0]))
    g_long = backward(params, forward(params, tokens=long_row), np.array([0.0]))
    both = np.concatenate([short, long_row])
    g_both = backward(params, forward(params, tokens=both), np.array([1.0, 0.0]))
    for name in g_both:
        combined = (g_short[name] + g_long[name]) / 2.0
        assert np.allclose(g_both[name], combined, atol=1e-12, rtol=1e-9), name


def test_saturated_perfect_predictions_give_tiny_gradient(backend):
    params = toy_params(max_len=4)
    params.w_out[:] = 0.0
    params.b_out[0] = 60.0  # a == 1 for every row
    tokens = np.full((3, 4), 5, dtype=np.int64)
    cache = forward(params, tokens=tokens)
    grads = backward(params, cache, np.ones(3))
    assert ops.global_norm(list(grads.values())) < 1e-6


def test_stale_cache_detected(backend, rng):
    params = toy_params(max_len=5)
    tokens = rng.integers(2, params.dims.vocab_size, size=(2, 5))
    cache = forward(params, tokens=tokens)
    state = AdamState.init(params)
    grads = backward(params, cache, np.array([1.0, 0.0]))
    adam_step(params, grads, state)
    with pytest.raises(StaleCache):
        backward(params, cache, np.array([1.0, 0.0]))


def test_backward_label_length_mismatch(backend):
    params = toy_params(max_len=4)
    cache = forward(params, tokens=np.full((2, 4), 3, dtype=int))
    with pytest.raises(LengthMismatch):
        backward(params, cache, np.array([1.0]))


# --- predict ---

def test_predict_boundary_probability_is_positive(backend):
    params = toy_params(max_len=4)
    params.b_out[0] = 0.0  # all-PAD rows score exactly 0.5
    labels, probs = predict(params, tokens=np.zeros((1, 4), dtype=int))
    assert probs[0] == 0.5
    assert labels[0] == 1  # a >= threshold rule


def test_predict_threshold_zero_always_positive(backend, rng):
    params = toy_params(max_len=6)
    tokens = rng.integers(0, params.dims.vocab_size, size=(5, 6))
    labels, _ = predict(params, tokens=tokens, threshold=0.0)
    assert np.all(labels == 1)
