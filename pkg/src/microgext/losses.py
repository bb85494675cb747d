"""Training objective: weighted class, per-frame state, and contrastive terms.

The total loss is 0.6 * class cross-entropy + 0.2 * state cross-entropy
(averaged over frames) + 0.2 * a supervised normalized-temperature
contrastive term over in-batch pairs. Cross-entropies are computed on
pre-temperature logits; the temperature is fit post hoc by calibration and
never participates in training.

Each term also exposes its gradient w.r.t. its input, which the network's
hand-written backward pass consumes.
"""

from __future__ import annotations

import warnings

import numpy as np


class BatchTooSmallForContrastive(UserWarning):
    """No positive pair in the batch: the contrastive term is set to 0."""


def log_softmax(logits: np.ndarray) -> np.ndarray:
    m = logits.max(axis=-1, keepdims=True)
    shifted = logits - m
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def softmax(logits: np.ndarray) -> np.ndarray:
    m = logits.max(axis=-1, keepdims=True)
    e = np.exp(logits - m)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean cross-entropy over all leading axes.

    Returns (loss, dloss/dlogits); the gradient already carries the 1/N of
    the mean so callers only scale by their loss weight.
    """
    labels = np.asarray(labels)
    lsm = log_softmax(logits)
    flat_lsm = lsm.reshape(-1, logits.shape[-1])
    flat_y = labels.reshape(-1)
    n = flat_y.shape[0]
    loss = -float(flat_lsm[np.arange(n), flat_y].mean())
    grad = softmax(logits).reshape(-1, logits.shape[-1])
    grad[np.arange(n), flat_y] -= 1.0
    grad = (grad / n).reshape(logits.shape)
    return loss, grad


def contrastive_loss(
    embeddings: np.ndarray,
    class_labels: np.ndarray,
    temperature: float = 0.1,
    return_grad: bool = False,
):
    """Supervised NT-Xent over in-batch pairs of L2-normalized embeddings.

    For each anchor i the positives are the same-class samples j != i:

        L_i = -log( sum_pos exp(sim/kappa) / sum_{j != i} exp(sim/kappa) )

    with sim the dot product. Anchors with no positive are skipped; when no
    anchor has one, the loss is 0 and a BatchTooSmallForContrastive warning
    is emitted.
    """
    e = np.asarray(embeddings, dtype=np.float64)
    y = np.asarray(class_labels)
    b = e.shape[0]
    if b < 2:
        raise ValueError("contrastive loss needs a batch of at least 2")

    sims = (e @ e.T) / temperature
    eye = np.eye(b, dtype=bool)
    pos = (y[:, None] == y[None, :]) & ~eye
    valid = pos.any(axis=1)
    n_valid = int(valid.sum())
    if n_valid == 0:
        warnings.warn("no positive pair in batch; contrastive term set to 0", BatchTooSmallForContrastive)
        if return_grad:
            return 0.0, np.zeros_like(e)
        return 0.0

    neg_inf = -np.inf
    all_logits = np.where(eye, neg_inf, sims)
    pos_logits = np.where(pos, sims, neg_inf)

    def _lse(x):
        m = np.max(x, axis=1)
        return m + np.log(np.exp(x - m[:, None]).sum(axis=1))

    loss_rows = _lse(all_logits[valid]) - _lse(pos_logits[valid])
    loss = float(loss_rows.mean())
    if not return_grad:
        return loss

    # dL/dsims: softmax over all non-self minus softmax over positives,
    # per valid anchor, averaged
    p_all = softmax(all_logits)
    p_pos = np.zeros_like(sims)
    p_pos[valid] = softmax(pos_logits[valid])
    g = np.zeros_like(sims)
    g[valid] = (p_all[valid] - p_pos[valid]) / n_valid
    demb = (g @ e + g.T @ e) / temperature
    return loss, demb


def total_loss(
    class_logits: np.ndarray,
    state_logits: np.ndarray,
    embeddings: np.ndarray,
    class_labels: np.ndarray,
    state_labels: np.ndarray,
    hp,
    return_grads: bool = False,
):
    """Weighted sum of the three terms.

    Returns (loss, components) or, with return_grads, additionally the
    gradients w.r.t. (class_logits, state_logits, embeddings), each already
    scaled by its loss weight.
    """
    b = class_logits.shape[0]
    l_class, d_class = cross_entropy(class_logits, class_labels)
    l_state, d_state = cross_entropy(state_logits, state_labels)
    if b >= 2:
        l_contr, d_emb = contrastive_loss(
            embeddings, class_labels, hp.contrastive_temperature, return_grad=True
        )
    else:
        warnings.warn("batch of 1: contrastive term set to 0", BatchTooSmallForContrastive)
        l_contr, d_emb = 0.0, np.zeros_like(embeddings)

    total = hp.alpha * l_class + hp.beta * l_state + hp.gamma * l_contr
    components = {"class": l_class, "state": l_state, "contrastive": l_contr}
    if not return_grads:
        return total, components
    return total, components, (hp.alpha * d_class, hp.beta * d_state, hp.gamma * d_emb)
