"""The LoGo forecaster.

Two relational-temporal branches encode the query's own complex event (local
context) and the merged timeline of all events (global context). Each branch
runs ``L`` relational graph convolution layers per snapshot, sums the layer
outputs, and evolves the entity table with a GRU across the last ``T``
snapshots. The branch outputs are summed and scored with a ConvTransE decoder.

Matrices act on row vectors: a layer weight ``W`` maps ``x`` to ``x @ W``.
"""

from dataclasses import dataclass, field, fields

import numpy as np

from .autodiff import Tensor, xavier_init
from .autodiff import ops
from .autodiff.tensor import as_tensor
from .errors import EmptyBatch, ShapeMismatch, UnknownVariant
from .seeding import rng_for

VARIANTS = ("full", "local", "global", "share", "late")
RRELU_LOWER, RRELU_UPPER = 1.0 / 8.0, 1.0 / 3.0
DEFAULT_SLOPE = (RRELU_LOWER + RRELU_UPPER) / 2.0
GRU_GATES = ("z", "r", "h")


@dataclass
class ModelConfig:
    n_entities: int
    n_relations: int
    d: int = 32
    L_local: int = 2
    L_global: int = 2
    T_local: int = 5
    T_global: int = 5
    variant: str = "full"
    slope: float = DEFAULT_SLOPE
    sample_slope: bool = False
    channels: int = 32
    kernel: int = 3

    def validate(self):
        if self.variant not in VARIANTS:
            raise UnknownVariant(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        for name in ("n_entities", "n_relations", "d", "L_local", "L_global", "T_local", "T_global", "channels"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not 0.0 < self.slope < 1.0:
            raise ValueError("activation slope must lie in (0, 1)")
        if self.kernel < 1 or self.kernel % 2 == 0:
            raise ValueError("decoder kernel width must be odd")
        return self

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class BranchParams:
    entity_table: Tensor
    relation_table: Tensor
    rgcn_layers: list
    gru: dict

    @classmethod
    def init(cls, n_entities, n_relations, d, L, rng):
        layers = [(xavier_init((d, d), rng), xavier_init((d, d), rng)) for _ in range(L)]
        gru = {}
        for g in GRU_GATES:
            gru[f"W{g}"] = xavier_init((d, d), rng)
            gru[f"U{g}"] = xavier_init((d, d), rng)
            gru[f"b{g}"] = Tensor(np.zeros(d), requires_grad=True)
        return cls(xavier_init((n_entities, d), rng), xavier_init((n_relations, d), rng), layers, gru)

    @property
    def L(self):
        return len(self.rgcn_layers)

    def named(self, prefix):
        out = {f"{prefix}.entity_table": self.entity_table, f"{prefix}.relation_table": self.relation_table}
        for l, (w1, w2) in enumerate(self.rgcn_layers):
            out[f"{prefix}.rgcn{l}.W1"] = w1
            out[f"{prefix}.rgcn{l}.W2"] = w2
        for k, v in self.gru.items():
            out[f"{prefix}.gru.{k}"] = v
        return out


@dataclass
class DecoderParams:
    conv_w: Tensor
    conv_b: Tensor
    proj: Tensor
    proj_b: Tensor

    @classmethod
    def init(cls, d, channels, kernel, rng):
        return cls(xavier_init((channels, 2, kernel), rng),
                   Tensor(np.zeros(channels), requires_grad=True),
                   xavier_init((channels * d, d), rng),
                   Tensor(np.zeros(d), requires_grad=True))

    def named(self, prefix):
        return {f"{prefix}.{f.name}": getattr(self, f.name) for f in fields(self)}


def _activation(x, slope):
    s = slope(x.shape) if callable(slope) else slope
    return ops.leaky_relu(x, s)


def rgcn_layer(snapshot, E_in, R, W1, W2, slope=DEFAULT_SLOPE):
    """One propagation layer over a snapshot's events.

    Each object receives the degree-normalized mean of ``(e_s + r) @ W1`` over
    its incoming events plus the unnormalized self term ``e_o @ W2``.
    """
    E_in, R, W1, W2 = (as_tensor(t) for t in (E_in, R, W1, W2))
    n, d = E_in.shape
    if R.shape[1] != d or W1.shape != (d, d) or W2.shape != (d, d):
        raise ShapeMismatch(f"rgcn_layer: E {E_in.shape}, R {R.shape}, W1 {W1.shape}, W2 {W2.shape}")
    s, r, o = snapshot.arrays if hasattr(snapshot, "arrays") else snapshot
    pre = E_in @ W2
    if len(o):
        deg = np.bincount(o, minlength=n).astype(np.float64)
        msgs = (ops.gather_rows(E_in, s) + ops.gather_rows(R, r)) @ W1
        msgs = msgs * (1.0 / deg[o])[:, None]
        pre = pre + ops.segment_sum(msgs, o, n)
    return _activation(pre, slope)


def aggregate_layers(layer_outputs, E0):
    """Sum the layer-0 input and every layer output."""
    return ops.add_n([E0, *layer_outputs])


def gru_step(E_input, H_prev, gru):
    E_input, H_prev = as_tensor(E_input), as_tensor(H_prev)
    if E_input.shape != H_prev.shape:
        raise ShapeMismatch(f"gru_step input {E_input.shape} vs state {H_prev.shape}")
    x, h = E_input, H_prev
    z = ops.sigmoid(x @ gru["Wz"] + h @ gru["Uz"] + gru["bz"])
    rg = ops.sigmoid(x @ gru["Wr"] + h @ gru["Ur"] + gru["br"])
    cand = ops.tanh(x @ gru["Wh"] + (rg * h) @ gru["Uh"] + gru["bh"])
    return (1.0 - z) * h + z * cand


def encode_branch(window, params, L=None, slope=DEFAULT_SLOPE):
    """Evolve the entity table through ``window``; returns ``(E, R)``."""
    L = params.L if L is None else L
    if L > params.L:
        raise ShapeMismatch(f"branch has {params.L} layers, {L} requested")
    H = params.entity_table
    R = params.relation_table
    for snap in window:
        x, outs = H, []
        for W1, W2 in params.rgcn_layers[:L]:
            x = rgcn_layer(snap, x, R, W1, W2, slope)
            outs.append(x)
        H = gru_step(aggregate_layers(outs, H), H, params.gru)
    return H, R


def conv_trans_e(e_s, r, dec):
    """ConvTransE: stack subject and relation as 2 x d, convolve, flatten, project to d."""
    B, d = e_s.shape
    grid = ops.stack([e_s, r], axis=1)
    feat = ops.relu(ops.conv1d_same(grid, dec.conv_w, dec.conv_b))
    return ops.reshape(feat, (B, -1)) @ dec.proj + dec.proj_b


@dataclass
class Contexts:
    """Encoded ``(E, R)`` pairs; either side may be ``None`` when unused."""

    local: tuple = None
    global_: tuple = None


@dataclass
class ModelParams:
    local: BranchParams = None
    global_: BranchParams = None
    decoder: DecoderParams = None
    decoder_global: DecoderParams = None
    extra: dict = field(default_factory=dict)


def _query_arrays(queries):
    if not len(queries):
        raise EmptyBatch("no queries")
    arr = np.asarray([(q[0], q[1]) for q in queries], dtype=np.int64)
    return arr[:, 0], arr[:, 1]


def forward_logits(variant, queries, contexts, params):
    """Unnormalized candidate scores, shape (len(queries), |E|)."""
    if variant not in VARIANTS:
        raise UnknownVariant(f"unknown variant {variant!r}")
    s, r = _query_arrays(queries)
    if variant == "local":
        E, R = contexts.local
        return conv_trans_e(E[s], R[r], params.decoder) @ E.T
    if variant == "global":
        E, R = contexts.global_
        return conv_trans_e(E[s], R[r], params.decoder) @ E.T
    (Ec, Rc), (Eg, Rg) = contexts.local, contexts.global_
    E_hat = Ec + Eg
    if variant == "late":
        v = conv_trans_e(Ec[s], Rc[r], params.decoder) + conv_trans_e(Eg[s], Rg[r], params.decoder_global)
        return v @ E_hat.T
    e_hat = Ec[s] + Eg[s]
    r_hat = Rc[r] + Rg[r]
    return conv_trans_e(e_hat, r_hat, params.decoder) @ E_hat.T


def forward_variant(variant, queries, contexts, params):
    """Probability vectors over all entities, one row per query."""
    return ops.softmax_np(forward_logits(variant, queries, contexts, params).data)


def fuse_and_score(query, local, global_, decoder, variant="full", decoder_global=None):
    """Probability vector for a single query given encoded branch outputs."""
    params = ModelParams(decoder=decoder, decoder_global=decoder_global)
    return forward_variant(variant, [query], Contexts(local, global_), params)[0]


def loss(queries, logits):
    """Summed cross-entropy of the gold objects."""
    if not len(queries):
        raise EmptyBatch("loss over an empty batch")
    gold = np.asarray([q.gold for q in queries], dtype=np.int64)
    return ops.softmax_cross_entropy(logits, gold)


class LoGo:
    """Parameters plus the windowing logic that turns queries into scores."""

    def __init__(self, config, seed=0, params=None):
        self.config = config.validate()
        self.seed = seed
        self.params = params if params is not None else self._init_params()
        self._slope_rng = rng_for(seed, "rrelu")
        self.training = False

    def _init_params(self):
        c = self.config
        v = c.variant
        p = ModelParams()
        if v in ("full", "local", "share", "late"):
            p.local = BranchParams.init(c.n_entities, c.n_relations, c.d, c.L_local, rng_for(self.seed, "init/local"))
        if v == "share":
            L = max(c.L_local, c.L_global)
            if L > c.L_local:
                p.local = BranchParams.init(c.n_entities, c.n_relations, c.d, L, rng_for(self.seed, "init/local"))
            p.global_ = p.local
        elif v in ("full", "global", "late"):
            p.global_ = BranchParams.init(c.n_entities, c.n_relations, c.d, c.L_global, rng_for(self.seed, "init/global"))
        p.decoder = DecoderParams.init(c.d, c.channels, c.kernel, rng_for(self.seed, "init/decoder"))
        if v == "late":
            p.decoder_global = DecoderParams.init(c.d, c.channels, c.kernel, rng_for(self.seed, "init/decoder_global"))
        return p

    @property
    def uses_local(self):
        return self.config.variant != "global"

    @property
    def uses_global(self):
        return self.config.variant != "local"

    def named_parameters(self):
        p = self.params
        out = {}
        if p.local is not None:
            out.update(p.local.named("local"))
        if p.global_ is not None and p.global_ is not p.local:
            out.update(p.global_.named("global"))
        out.update(p.decoder.named("decoder"))
        if p.decoder_global is not None:
            out.update(p.decoder_global.named("decoder_global"))
        return out

    def state_dict(self):
        return {k: v.data.copy() for k, v in self.named_parameters().items()}

    def load_state_dict(self, state):
        named = self.named_parameters()
        if set(named) != set(state):
            missing = sorted(set(named) ^ set(state))
            raise ShapeMismatch(f"checkpoint tensors differ from model: {missing[:5]}")
        for k, t in named.items():
            if t.data.shape != state[k].shape:
                raise ShapeMismatch(f"{k}: checkpoint {state[k].shape} vs model {t.data.shape}")
            t.data = np.array(state[k], dtype=np.float64)

    def _slope(self):
        if self.training and self.config.sample_slope:
            rng = self._slope_rng
            return lambda shape: rng.uniform(RRELU_LOWER, RRELU_UPPER, size=shape)
        return self.config.slope

    def encode(self, local_window, global_window):
        c, p, slope = self.config, self.params, self._slope()
        ctx = Contexts()
        if self.uses_local:
            ctx.local = encode_branch(local_window, p.local, c.L_local, slope)
        if self.uses_global:
            ctx.global_ = encode_branch(global_window, p.global_, c.L_global, slope)
        return ctx

    def encode_global(self, global_window):
        if not self.uses_global:
            return None
        return encode_branch(global_window, self.params.global_, self.config.L_global, self._slope())

    def encode_local(self, local_window):
        if not self.uses_local:
            return None
        return encode_branch(local_window, self.params.local, self.config.L_local, self._slope())

    def logits(self, queries, contexts):
        return forward_logits(self.config.variant, queries, contexts, self.params)
