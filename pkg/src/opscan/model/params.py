"""Model parameter containers and initialization."""

from dataclasses import dataclass, field

import numpy as np

from ..encoding import EmbeddingMatrix

# serialization / optimizer traversal order, fixed for checkpoint stability
PARAM_ORDER = ("embedding", "l1.w_x", "l1.w_h", "l1.b",
               "l2.w_x", "l2.w_h", "l2.b", "w_out", "b_out")

WEIGHT_SCALE = 0.08
FORGET_BIAS = 1.0


@dataclass(frozen=True)
class ModelDims:
    vocab_size: int = 152
    embed_dim: int = 150
    hidden1: int = 128
    hidden2: int = 64
    max_len: int = 1600


@dataclass
class LstmLayerParams:
    """Fused gate parameters, row blocks ordered [input, forget, output, candidate].

    w_x is (4H x input), w_h is (4H x H), b is (4H,); the per-gate views
    below slice into the fused storage.
    """

    w_x: np.ndarray
    w_h: np.ndarray
    b: np.ndarray

    @property
    def hidden(self) -> int:
        return self.w_h.shape[1]

    def _gate(self, arr, k):
        h = self.hidden
        return arr[k * h:(k + 1) * h]

    @property
    def w_xi(self): return self._gate(self.w_x, 0)
    @property
    def w_xf(self): return self._gate(self.w_x, 1)
    @property
    def w_xo(self): return self._gate(self.w_x, 2)
    @property
    def w_xg(self): return self._gate(self.w_x, 3)
    @property
    def w_hi(self): return self._gate(self.w_h, 0)
    @property
    def w_hf(self): return self._gate(self.w_h, 1)
    @property
    def w_ho(self): return self._gate(self.w_h, 2)
    @property
    def w_hg(self): return self._gate(self.w_h, 3)
    @property
    def b_i(self): return self._gate(self.b, 0)
    @property
    def b_f(self): return self._gate(self.b, 1)
    @property
    def b_o(self): return self._gate(self.b, 2)
    @property
    def b_g(self): return self._gate(self.b, 3)

    @classmethod
    def init_random(cls, input_size: int, hidden: int, rng) -> "LstmLayerParams":
        w_x = rng.uniform(-WEIGHT_SCALE, WEIGHT_SCALE, size=(4 * hidden, input_size))
        w_h = rng.uniform(-WEIGHT_SCALE, WEIGHT_SCALE, size=(4 * hidden, hidden))
        b = np.zeros(4 * hidden)
        b[hidden:2 * hidden] = FORGET_BIAS  # keeps early memory open
        return cls(w_x=w_x, w_h=w_h, b=b)


@dataclass
class ModelParams:
    embedding: EmbeddingMatrix
    layer1: LstmLayerParams
    layer2: LstmLayerParams
    w_out: np.ndarray          # (hidden2,)
    b_out: np.ndarray          # (1,)
    dims: ModelDims
    version: int = field(default=0, compare=False)  # bumped on optimizer steps

    def param_items(self):
        """(name, array) pairs in PARAM_ORDER; arrays are live references."""
        return [
            ("embedding", self.embedding.values),
            ("l1.w_x", self.layer1.w_x), ("l1.w_h", self.layer1.w_h), ("l1.b", self.layer1.b),
            ("l2.w_x", self.layer2.w_x), ("l2.w_h", self.layer2.w_h), ("l2.b", self.layer2.b),
            ("w_out", self.w_out), ("b_out", self.b_out),
        ]

    def num_params(self) -> int:
        return sum(arr.size for _, arr in self.param_items())

    def copy(self) -> "ModelParams":
        return ModelParams(
            embedding=EmbeddingMatrix(values=self.embedding.values.copy()),
            layer1=LstmLayerParams(self.layer1.w_x.copy(), self.layer1.w_h.copy(),
                                   self.layer1.b.copy()),
            layer2=LstmLayerParams(self.layer2.w_x.copy(), self.layer2.w_h.copy(),
                                   self.layer2.b.copy()),
            w_out=self.w_out.copy(),
            b_out=self.b_out.copy(),
            dims=self.dims,
            version=self.version,
        )


def init_params(dims: ModelDims, seed: int = 0,
                embedding: EmbeddingMatrix | None = None) -> ModelParams:
    """Fresh model; pass an embedding to reuse one prepared during resampling."""
    rng = np.random.default_rng(seed)
    if embedding is None:
        embedding = EmbeddingMatrix.init_random(dims.vocab_size, dims.embed_dim,
                                                seed=seed)
    else:
        if embedding.values.shape != (dims.embed_dim, dims.vocab_size):
            from ..errors import ShapeMismatch
            raise ShapeMismatch(
                f"embedding {embedding.values.shape} does not match dims "
                f"({dims.embed_dim}, {dims.vocab_size})")
        embedding = EmbeddingMatrix(values=embedding.values.copy())
    layer1 = LstmLayerParams.init_random(dims.embed_dim, dims.hidden1, rng)
    layer2 = LstmLayerParams.init_random(dims.hidden1, dims.hidden2, rng)
    w_out = rng.uniform(-WEIGHT_SCALE, WEIGHT_SCALE, size=dims.hidden2)
    b_out = np.zeros(1)
    return ModelParams(embedding=embedding, layer1=layer1, layer2=layer2,
                       w_out=w_out, b_out=b_out, dims=dims)
