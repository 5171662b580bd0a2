"""Consistency losses for semi-supervised training.

Two perturbation schemes, each with two ways of comparing the clean and
perturbed predictions:

* Pi-style: a stochastic second pass (input Gaussian noise at this scale,
  since the MLP has no dropout). Consistency is either the squared L2
  distance between softmax outputs or the KL divergence between the two
  induced Dirichlet distributions.
* VAT: the perturbation is the adversarial direction that maximally changes
  the prediction inside an epsilon-ball, estimated by power iteration on the
  input gradient of the divergence.

In both schemes the clean (non-stochastic) pass is the reference: it comes
first in the KL and is treated as a constant, so no gradient flows through
it. Divergence gradients are taken with respect to the perturbed pass only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bmloss import LossConfig, bm_batch, softmax, softmax_ce_batch
from .nn import MLP
from .specfn import digamma

SOFTMAX_KL = "softmax-kl"
SOFTMAX_L2 = "softmax-l2"
DIRICHLET_KL = "dirichlet-kl"

VAT_DEFAULT_COEFF = 0.03
PI_DEFAULT_COEFF = 0.5


@dataclass(frozen=True)
class VatConfig:
    """Adversarial-perturbation knobs.

    epsilon: radius of the perturbation ball.
    xi: finite-difference probe scale for power iteration.
    power_iters: number of power-iteration refinements of the direction.
    consistency: softmax-kl or dirichlet-kl.
    """

    epsilon: float = 0.5
    xi: float = 1e-6
    power_iters: int = 1
    consistency: str = SOFTMAX_KL

    def __post_init__(self):
        if self.epsilon <= 0 or self.xi <= 0 or self.power_iters < 1:
            raise ValueError("epsilon, xi must be > 0 and power_iters >= 1")
        if self.consistency not in (SOFTMAX_KL, DIRICHLET_KL):
            raise ValueError(f"unknown consistency {self.consistency!r}")


@dataclass(frozen=True)
class PiConfig:
    """Stochastic-pass knobs: input noise scale and the consistency measure."""

    noise_sd: float = 0.1
    consistency: str = SOFTMAX_L2

    def __post_init__(self):
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be >= 0")
        if self.consistency not in (SOFTMAX_L2, DIRICHLET_KL):
            raise ValueError(f"unknown consistency {self.consistency!r}")


def _alpha(logits: np.ndarray, loss_cfg: LossConfig) -> np.ndarray:
    return np.exp(np.clip(logits, -loss_cfg.logit_clamp, loss_cfg.logit_clamp))


def _divergence_rows(
    f_ref: np.ndarray, f_other: np.ndarray, kind: str, loss_cfg: LossConfig
) -> np.ndarray:
    """Per-row divergence between reference and perturbed logits."""
    if f_ref.shape != f_other.shape:
        raise ValueError(f"dimension mismatch: {f_ref.shape} vs {f_other.shape}")
    if kind == SOFTMAX_L2:
        diff = softmax(f_ref) - softmax(f_other)
        return (diff * diff).sum(axis=-1)
    if kind == SOFTMAX_KL:
        p = softmax(f_ref)
        logp = f_ref - f_ref.max(axis=-1, keepdims=True)
        logp = logp - np.log(np.exp(logp).sum(axis=-1, keepdims=True))
        logq = f_other - f_other.max(axis=-1, keepdims=True)
        logq = logq - np.log(np.exp(logq).sum(axis=-1, keepdims=True))
        return (p * (logp - logq)).sum(axis=-1)
    if kind == DIRICHLET_KL:
        from .specfn import lgamma

        a = _alpha(f_ref, loss_cfg)
        b = _alpha(f_other, loss_cfg)
        a0 = a.sum(axis=-1)
        b0 = b.sum(axis=-1)
        kl = lgamma(a0) - lgamma(b0) - (lgamma(a) - lgamma(b)).sum(axis=-1)
        kl += ((a - b) * (digamma(a) - digamma(a0)[..., None])).sum(axis=-1)
        return kl
    raise ValueError(f"unknown consistency {kind!r}")


def _divergence_grad_rows(
    f_ref: np.ndarray, f_other: np.ndarray, kind: str, loss_cfg: LossConfig
) -> np.ndarray:
    """Per-row gradient of the divergence w.r.t. the perturbed logits.

    The reference pass is a constant; its logits carry no gradient.
    """
    if kind == SOFTMAX_L2:
        p_ref = softmax(f_ref)
        p = softmax(f_other)
        dl_dp = 2.0 * (p - p_ref)
        return p * (dl_dp - (dl_dp * p).sum(axis=-1, keepdims=True))
    if kind == SOFTMAX_KL:
        return softmax(f_other) - softmax(f_ref)
    if kind == DIRICHLET_KL:
        a = _alpha(f_ref, loss_cfg)
        b = _alpha(f_other, loss_cfg)
        a0 = a.sum(axis=-1, keepdims=True)
        b0 = b.sum(axis=-1, keepdims=True)
        active = np.abs(f_other) < loss_cfg.logit_clamp
        return b * (digamma(b) - digamma(b0) - digamma(a) + digamma(a0)) * active
    raise ValueError(f"unknown consistency {kind!r}")


def pi_consistency(f_clean, f_noisy, cfg: PiConfig, loss_cfg: LossConfig = LossConfig()) -> float:
    """Consistency between a clean and a stochastic prediction (one sample)."""
    fc = np.asarray(f_clean, dtype=np.float64)
    fn = np.asarray(f_noisy, dtype=np.float64)
    return float(_divergence_rows(fc, fn, cfg.consistency, loss_cfg))


def vat_direction(
    model: MLP,
    x: np.ndarray,
    cfg: VatConfig,
    rng: np.random.Generator,
    loss_cfg: LossConfig = LossConfig(),
):
    """Adversarial perturbations of norm epsilon, one per input row.

    Power iteration: starting from a random unit direction d, repeatedly
    replace d with the normalized input gradient of divergence(pred(x),
    pred(x + xi d)). Rows where the divergence is flat (zero gradient) keep
    their random direction and are flagged in the returned boolean mask.

    Returns (r, flagged) with r of shape x.shape, each row of norm epsilon.
    """
    x = np.asarray(x, dtype=np.float64)
    d = rng.standard_normal(x.shape)
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    f_ref = model.forward(x)
    flagged = np.zeros(len(x), dtype=bool)
    for _ in range(cfg.power_iters):
        f_pert = model.forward(x + cfg.xi * d)
        g_logits = _divergence_grad_rows(f_ref, f_pert, cfg.consistency, loss_cfg)
        _, g_input = model.backward(g_logits)
        norms = np.linalg.norm(g_input, axis=1, keepdims=True)
        flagged = norms[:, 0] < 1e-30
        d = np.where(flagged[:, None], d, g_input / np.where(norms > 0, norms, 1.0))
    return cfg.epsilon * d, flagged


def vat_loss(
    model: MLP,
    x: np.ndarray,
    cfg: VatConfig,
    rng: np.random.Generator,
    loss_cfg: LossConfig = LossConfig(),
) -> float:
    """Mean divergence between predictions at x and at x + r (adversarial r)."""
    r, _ = vat_direction(model, x, cfg, rng, loss_cfg)
    f_ref = model.forward(np.asarray(x, dtype=np.float64))
    f_pert = model.forward(x + r)
    return float(_divergence_rows(f_ref, f_pert, cfg.consistency, loss_cfg).mean())


def _consistency_loss_and_param_grads(
    model: MLP,
    x_unlabeled: np.ndarray,
    method_cfg,
    rng: np.random.Generator,
    loss_cfg: LossConfig,
):
    """Mean consistency over a batch plus parameter grads (perturbed pass only)."""
    n = len(x_unlabeled)
    f_ref = model.forward(x_unlabeled)
    if isinstance(method_cfg, VatConfig):
        r, _ = vat_direction(model, x_unlabeled, method_cfg, rng, loss_cfg)
        x_pert = x_unlabeled + r
    else:
        x_pert = x_unlabeled + method_cfg.noise_sd * rng.standard_normal(x_unlabeled.shape)
    f_pert = model.forward(x_pert)
    rows = _divergence_rows(f_ref, f_pert, method_cfg.consistency, loss_cfg)
    g_logits = _divergence_grad_rows(f_ref, f_pert, method_cfg.consistency, loss_cfg)
    param_grads, _ = model.backward(g_logits / n)
    return float(rows.mean()), param_grads


def semisup_objective(
    model: MLP,
    labeled,
    unlabeled: np.ndarray,
    coeff: float,
    base_loss: str,
    method_cfg,
    rng: np.random.Generator,
    loss_cfg: LossConfig = LossConfig(),
) -> float:
    """Supervised loss plus coeff times the mean consistency on unlabeled data.

    base_loss is "softmax-ce" or "bm" (the minimization form, -elbo_lambda).
    method_cfg selects the perturbation scheme (PiConfig or VatConfig).
    """
    if coeff < 0:
        raise ValueError("consistency coefficient must be >= 0")
    logits = model.forward(labeled.inputs)
    if base_loss == "softmax-ce":
        sup, _ = softmax_ce_batch(logits, labeled.labels)
    elif base_loss == "bm":
        sup, _ = bm_batch(logits, labeled.labels, loss_cfg)
    else:
        raise ValueError(f"unknown base loss {base_loss!r}")
    if coeff == 0.0:
        return sup
    if isinstance(method_cfg, VatConfig):
        cons = vat_loss(model, unlabeled, method_cfg, rng, loss_cfg)
    else:
        noisy = unlabeled + method_cfg.noise_sd * rng.standard_normal(unlabeled.shape)
        f_ref = model.forward(unlabeled)
        f_pert = model.forward(noisy)
        cons = float(_divergence_rows(f_ref, f_pert, method_cfg.consistency, loss_cfg).mean())
    return sup + coeff * cons


@dataclass(frozen=True)
class SemisupTrainConfig:
    """Recipe for consistency-regularized training on mostly-unlabeled data."""

    epochs: int = 40
    batch_size: int = 64
    lr: float = 3e-4
    coeff: float = VAT_DEFAULT_COEFF
    base_loss: str = "bm"
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.lr <= 0 or self.coeff < 0:
            raise ValueError("invalid semi-supervised training config")


def train_semisup(
    model: MLP,
    labeled,
    unlabeled: np.ndarray,
    cfg: SemisupTrainConfig,
    method_cfg,
    loss_cfg: LossConfig = LossConfig(),
):
    """Adam training on supervised loss + coeff * consistency.

    Every step uses the full labeled set (it is tiny by construction) and one
    shuffled minibatch of unlabeled inputs. Returns per-epoch mean objective
    values. coeff = 0 reduces to supervised-only training with the same
    batch/step structure, which makes ablation comparisons clean.
    """
    from .nn import Adam, clip_grad_norm

    rng = np.random.default_rng(cfg.seed)
    opt = Adam()
    n = len(unlabeled)
    if cfg.base_loss == "softmax-ce":
        sup_fn = softmax_ce_batch
    else:
        sup_fn = lambda logits, ys: bm_batch(logits, ys, loss_cfg)
    history = []
    for _ in range(cfg.epochs):
        perm = rng.permutation(n)
        obj_sum = 0.0
        steps = 0
        for start in range(0, n, cfg.batch_size):
            batch = unlabeled[perm[start : start + cfg.batch_size]]
            logits = model.forward(labeled.inputs)
            sup, g_sup = sup_fn(logits, labeled.labels)
            grads, _ = model.backward(g_sup)
            cons = 0.0
            if cfg.coeff > 0.0:
                cons, g_cons = _consistency_loss_and_param_grads(
                    model, batch, method_cfg, rng, loss_cfg
                )
                grads = [g + cfg.coeff * gc for g, gc in zip(grads, g_cons)]
            grads = clip_grad_norm(grads, 1.0)
            opt.step(model, grads, cfg.lr)
            obj_sum += sup + cfg.coeff * cons
            steps += 1
        history.append(obj_sum / steps)
    return history
