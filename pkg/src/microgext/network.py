"""Multi-task recognition network with a hand-written backward pass.

Architecture (fixed, widths from the hyperparameters):

    input (T, J, D)
      -> per-joint linear D -> H, ReLU, layer norm (no affine)
      -> + spatial embedding (per joint)       -> mean-pool joints   = h0
      -> + temporal embedding (per frame)                            = h
      -> single-head scaled dot-product self-attention over frames   = a
      static branch:  mean-pool frames -> FC(H -> 8) -> / tau -> softmax
      dynamic branch: concat(a_t, h0_t) -> shared FC(2H -> 5) per frame
      contrastive:    mean-pool frames -> FC(H -> H) -> L2 normalize

The temperature tau only rescales logits for the calibrated probabilities;
it never changes the argmax and is excluded from gradient-based training.

Reverse-mode gradients are derived manually for this fixed graph; the test
suite checks every parameter tensor against central finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import losses

LN_EPS = 1e-5

# input conditioning: wrist-relative positions are a few centimeters while
# quaternion components are O(1); scaling positions up front keeps the
# sub-state signal (thumb translation) from drowning in the projection
POS_SCALE = 10.0
_INPUT_SCALE = np.array([POS_SCALE, POS_SCALE, POS_SCALE, 1.0, 1.0, 1.0, 1.0])


class ShapeMismatch(ValueError):
    pass


class NonFiniteActivation(FloatingPointError):
    pass


@dataclass(frozen=True)
class HyperParams:
    t_window: int = 20
    n_joints: int = 11
    n_features: int = 7
    hidden: int = 256
    n_classes: int = 8
    n_states: int = 5
    alpha: float = 0.6
    beta: float = 0.2
    gamma: float = 0.2
    learning_rate: float = 0.001
    batch_size: int = 32
    plateau_patience: int = 5
    plateau_factor: float = 0.5
    plateau_threshold: float = 1e-4
    min_learning_rate: float = 1e-5
    max_epochs: int = 60
    contrastive_temperature: float = 0.1
    master_seed: int = 0
    val_fraction: float = 0.15

    def __post_init__(self):
        if abs(self.alpha + self.beta + self.gamma - 1.0) > 1e-9:
            raise ValueError("loss weights must sum to 1")
        for name in ("t_window", "n_joints", "n_features", "hidden", "n_classes", "n_states",
                     "alpha", "beta", "gamma", "learning_rate", "batch_size",
                     "plateau_patience", "plateau_factor", "max_epochs", "contrastive_temperature"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


PARAM_NAMES = (
    "w_in", "b_in", "spatial_embed", "temporal_embed",
    "wq", "wk", "wv",
    "w_state", "b_state", "w_class", "b_class", "w_embed", "b_embed",
)


def param_shapes(hp: HyperParams) -> dict[str, tuple[int, ...]]:
    h = hp.hidden
    return {
        "w_in": (hp.n_features, h),
        "b_in": (h,),
        "spatial_embed": (hp.n_joints, h),
        "temporal_embed": (hp.t_window, h),
        "wq": (h, h),
        "wk": (h, h),
        "wv": (h, h),
        "w_state": (2 * h, hp.n_states),
        "b_state": (hp.n_states,),
        "w_class": (h, hp.n_classes),
        "b_class": (hp.n_classes,),
        "w_embed": (h, h),
        "b_embed": (h,),
    }


@dataclass(frozen=True)
class ModelParams:
    hp: HyperParams
    tensors: dict[str, np.ndarray]
    tau: float = 1.0

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("temperature must be positive")
        shapes = param_shapes(self.hp)
        if set(self.tensors) != set(shapes):
            raise ShapeMismatch("parameter tensor names do not match the architecture")
        for name, shape in shapes.items():
            t = self.tensors[name]
            if t.shape != shape:
                raise ShapeMismatch(f"{name}: expected {shape}, got {t.shape}")
            if not np.all(np.isfinite(t)):
                raise NonFiniteActivation(f"{name}: non-finite parameter values")

    def with_tau(self, tau: float) -> "ModelParams":
        return replace(self, tau=float(tau))


@dataclass(frozen=True)
class ModelOutput:
    class_logits: np.ndarray  # (8,) pre-temperature
    class_probs: np.ndarray  # (8,) softmax(class_logits / tau)
    state_logits: np.ndarray  # (T, 5)
    embedding: np.ndarray  # (H,) L2-normalized


def init_params(hp: HyperParams, seed: int = 0) -> ModelParams:
    rng = np.random.Generator(np.random.PCG64(seed))
    h = hp.hidden
    scale = {
        "w_in": 1.0 / np.sqrt(hp.n_features),
        "spatial_embed": 0.02,
        "temporal_embed": 0.02,
        "wq": 1.0 / np.sqrt(h),
        "wk": 1.0 / np.sqrt(h),
        "wv": 1.0 / np.sqrt(h),
        "w_state": 1.0 / np.sqrt(2 * h),
        "w_class": 1.0 / np.sqrt(h),
        "w_embed": 1.0 / np.sqrt(h),
    }
    tensors = {}
    for name, shape in param_shapes(hp).items():
        if name.startswith("b_"):
            tensors[name] = np.zeros(shape)
        else:
            tensors[name] = rng.normal(0.0, scale[name], shape)
    return ModelParams(hp, tensors, tau=1.0)


def _layer_norm(r: np.ndarray):
    mu = r.mean(axis=-1, keepdims=True)
    d = r - mu
    var = (d * d).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + LN_EPS)
    return d * inv, inv


def forward_batch(params: ModelParams, x: np.ndarray, want_cache: bool = False):
    """Run the network on a batch (B, T, J, D).

    Returns a dict with class_logits (B, 8), class_probs (B, 8),
    state_logits (B, T, 5) and embedding (B, H); with want_cache, every
    intermediate needed by the backward pass is included.
    """
    hp = params.hp
    x = np.asarray(x, dtype=np.float64)
    expected = (hp.t_window, hp.n_joints, hp.n_features)
    if x.ndim != 4 or x.shape[1:] != expected:
        raise ShapeMismatch(f"expected batch of {expected}, got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NonFiniteActivation("non-finite values in input window")
    if hp.n_features == _INPUT_SCALE.shape[0]:
        x = x * _INPUT_SCALE
    p = params.tensors

    lin = x @ p["w_in"] + p["b_in"]  # (B, T, J, H)
    r = np.maximum(lin, 0.0)
    z, inv = _layer_norm(r)
    s = z + p["spatial_embed"]
    h0 = s.mean(axis=2)  # (B, T, H)
    h = h0 + p["temporal_embed"]

    q = h @ p["wq"]
    k = h @ p["wk"]
    v = h @ p["wv"]
    scale = 1.0 / np.sqrt(hp.hidden)
    scores = np.einsum("bth,bsh->bts", q, k) * scale
    attn = losses.softmax(scores)
    a = np.einsum("bts,bsh->bth", attn, v)

    g = a.mean(axis=1)  # (B, H)
    class_logits = g @ p["w_class"] + p["b_class"]
    u_cat = np.concatenate([a, h0], axis=-1)  # (B, T, 2H)
    state_logits = u_cat @ p["w_state"] + p["b_state"]
    e_raw = g @ p["w_embed"] + p["b_embed"]
    norms = np.linalg.norm(e_raw, axis=-1, keepdims=True)
    norms = np.maximum(norms, 1e-12)
    embedding = e_raw / norms
    class_probs = losses.softmax(class_logits / params.tau)

    if not np.all(np.isfinite(class_logits)) or not np.all(np.isfinite(state_logits)):
        raise NonFiniteActivation("non-finite activations in forward pass")

    out = {
        "class_logits": class_logits,
        "class_probs": class_probs,
        "state_logits": state_logits,
        "embedding": embedding,
    }
    if want_cache:
        out.update(
            x=x, lin=lin, r=r, z=z, inv=inv, h0=h0, h=h,
            q=q, k=k, v=v, attn=attn, a=a, g=g, u_cat=u_cat,
            e_raw=e_raw, e_norms=norms,
        )
    return out


def forward(params: ModelParams, window) -> ModelOutput:
    """Single-window forward pass; accepts a FeatureWindow or (T, J, D) array."""
    data = getattr(window, "data", window)
    out = forward_batch(params, np.asarray(data)[None, ...])
    return ModelOutput(
        class_logits=out["class_logits"][0],
        class_probs=out["class_probs"][0],
        state_logits=out["state_logits"][0],
        embedding=out["embedding"][0],
    )


def batch_loss(params: ModelParams, x, class_labels, state_labels, hp: HyperParams) -> float:
    """Total training loss of a batch; the finite-difference tests probe this."""
    out = forward_batch(params, x)
    with np.errstate(all="raise"):
        total, _ = losses.total_loss(
            out["class_logits"], out["state_logits"], out["embedding"],
            class_labels, state_labels, hp,
        )
    return float(total)


def loss_and_grads(params: ModelParams, x, class_labels, state_labels, hp: HyperParams):
    """Total loss, per-component values, and gradients for every tensor.

    This is the reverse-mode pass for the fixed architecture above. tau takes
    no gradient: cross-entropies act on pre-temperature logits and the
    temperature is fit post hoc.
    """
    cache = forward_batch(params, x, want_cache=True)
    p = params.tensors
    hidden = hp.hidden
    b_sz, t_len = cache["h0"].shape[0], cache["h0"].shape[1]

    total, components, (d_class_logits, d_state_logits, d_emb) = losses.total_loss(
        cache["class_logits"], cache["state_logits"], cache["embedding"],
        class_labels, state_labels, hp, return_grads=True,
    )

    grads = {}

    # embedding head: e = e_raw / ||e_raw||
    e, norms = cache["embedding"], cache["e_norms"]
    d_e_raw = (d_emb - (d_emb * e).sum(axis=-1, keepdims=True) * e) / norms
    grads["w_embed"] = cache["g"].T @ d_e_raw
    grads["b_embed"] = d_e_raw.sum(axis=0)
    d_g = d_e_raw @ p["w_embed"].T

    # static head
    grads["w_class"] = cache["g"].T @ d_class_logits
    grads["b_class"] = d_class_logits.sum(axis=0)
    d_g = d_g + d_class_logits @ p["w_class"].T

    # dynamic head
    u_flat = cache["u_cat"].reshape(-1, 2 * hidden)
    d_state_flat = d_state_logits.reshape(-1, hp.n_states)
    grads["w_state"] = u_flat.T @ d_state_flat
    grads["b_state"] = d_state_flat.sum(axis=0)
    d_u = d_state_logits @ p["w_state"].T  # (B, T, 2H)

    # pooled attention output feeds both heads; per-frame slice feeds dynamic
    d_a = np.repeat(d_g[:, None, :] / t_len, t_len, axis=1) + d_u[..., :hidden]
    d_h0_direct = d_u[..., hidden:]

    # attention backward
    attn, v, q, k = cache["attn"], cache["v"], cache["q"], cache["k"]
    scale = 1.0 / np.sqrt(hidden)
    d_attn = np.einsum("bth,bsh->bts", d_a, v)
    d_v = np.einsum("bts,bth->bsh", attn, d_a)
    d_scores = attn * (d_attn - (attn * d_attn).sum(axis=-1, keepdims=True))
    d_q = np.einsum("bts,bsh->bth", d_scores, k) * scale
    d_k = np.einsum("bts,bth->bsh", d_scores, q) * scale

    h = cache["h"]
    h_flat = h.reshape(-1, hidden)
    grads["wq"] = h_flat.T @ d_q.reshape(-1, hidden)
    grads["wk"] = h_flat.T @ d_k.reshape(-1, hidden)
    grads["wv"] = h_flat.T @ d_v.reshape(-1, hidden)
    d_h = d_q @ p["wq"].T + d_k @ p["wk"].T + d_v @ p["wv"].T

    grads["temporal_embed"] = d_h.sum(axis=0)
    d_h0 = d_h + d_h0_direct

    # joint mean-pool and spatial embedding
    n_joints = hp.n_joints
    d_s = np.repeat(d_h0[:, :, None, :] / n_joints, n_joints, axis=2)
    grads["spatial_embed"] = d_s.sum(axis=(0, 1))

    # layer norm (no affine): dr = inv * (dz - mean(dz) - z * mean(dz * z))
    z, inv = cache["z"], cache["inv"]
    d_z = d_s
    d_r = inv * (d_z - d_z.mean(axis=-1, keepdims=True) - z * (d_z * z).mean(axis=-1, keepdims=True))
    d_lin = d_r * (cache["lin"] > 0.0)

    grads["w_in"] = np.einsum("btjd,btjh->dh", cache["x"], d_lin)
    grads["b_in"] = d_lin.sum(axis=(0, 1, 2))

    return float(total), components, grads
