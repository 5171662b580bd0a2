"""Finite-difference verification suites for every analytic gradient.

Each suite returns the worst relative error observed, where the error of a
gradient g against its central finite-difference estimate g_fd is
max|g - g_fd| / max(max|g_fd|, 1e-10). Suites draw their own cases from a
seeded generator, so a fixed seed gives a byte-identical report.

For the network suite, cases whose ReLU pre-activations sit within 1e-3 of
zero are redrawn: a central difference straddling a kink measures the
average of two slopes, not the derivative, so such cases are outside the
contract being checked.
"""

from __future__ import annotations

import numpy as np

from . import bmloss, semisup
from .nn import MLP

FD_STEP = 1e-5
BM_GRAD_TOL = 1e-6
NN_GRAD_TOL = 1e-5
SEMISUP_GRAD_TOL = 1e-5


def fd_gradient(fun, x: np.ndarray, step: float = FD_STEP) -> np.ndarray:
    """Central finite-difference gradient of a scalar function of a vector."""
    x = np.array(x, dtype=np.float64)  # private copy; perturbed in place below
    g = np.zeros_like(x)
    flat = g.reshape(-1)
    xf = x.reshape(-1)
    for i in range(xf.size):
        orig = xf[i]
        xf[i] = orig + step
        fp = fun(x)
        xf[i] = orig - step
        fm = fun(x)
        xf[i] = orig
        flat[i] = (fp - fm) / (2.0 * step)
    return g


def rel_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    denom = max(float(np.abs(numeric).max()), 1e-10)
    return float(np.abs(analytic - numeric).max()) / denom


def suite_bmloss(seed: int = 0, trials: int = 100) -> float:
    """Check d elbo / d alpha and d elbo_lambda / d logits against FD."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        k = int(rng.integers(2, 11))
        y = int(rng.integers(k))
        prior = rng.uniform(0.1, 50.0, k)
        alpha = rng.uniform(0.1, 50.0, k)
        g = bmloss.grad_alpha(alpha, y, prior)
        g_fd = fd_gradient(lambda a: bmloss._elbo_alpha(a, y, 1.0, prior), alpha)
        worst = max(worst, rel_error(g, g_fd))

        cfg = bmloss.LossConfig(lam=float(rng.uniform(0.005, 1.0)))
        f = np.log(rng.uniform(0.1, 50.0, k))
        g = bmloss.grad_logits_lambda(f, y, cfg)
        g_fd = fd_gradient(lambda ff: bmloss.elbo_lambda(ff, y, cfg), f)
        worst = max(worst, rel_error(g, g_fd))
    return worst


def _draw_network_case(rng: np.random.Generator, dims, batch: int):
    """Random net and batch with all ReLU pre-activations clear of zero."""
    while True:
        model = MLP.init(dims, rng)
        x = rng.standard_normal((batch, dims[0]))
        ys = rng.integers(dims[-1], size=batch)
        model.forward(x)
        activations, preacts = model._cache
        margin = min(float(np.abs(z).min()) for z in preacts[:-1])
        if margin > 1e-3:
            return model, x, ys


def _param_fd(model: MLP, x, loss_of_logits, step: float = FD_STEP):
    """FD gradient of loss_of_logits(forward(x)) w.r.t. every parameter."""
    grads = []
    for p in model.params():
        g = np.zeros_like(p)
        flat_p = p.reshape(-1)
        flat_g = g.reshape(-1)
        for i in range(flat_p.size):
            orig = flat_p[i]
            flat_p[i] = orig + step
            fp = loss_of_logits(model.forward(x))
            flat_p[i] = orig - step
            fm = loss_of_logits(model.forward(x))
            flat_p[i] = orig
            flat_g[i] = (fp - fm) / (2.0 * step)
        grads.append(g)
    return grads


def suite_nn(seed: int = 0, trials: int = 10, dims=(2, 16, 16, 3), batch: int = 8) -> float:
    """End-to-end backprop check for both losses on a small MLP."""
    rng = np.random.default_rng(seed)
    bm_cfg = bmloss.LossConfig(lam=0.01)
    losses = [
        lambda logits, ys: bmloss.softmax_ce_batch(logits, ys),
        lambda logits, ys: bmloss.bm_batch(logits, ys, bm_cfg),
    ]
    worst = 0.0
    for _ in range(trials):
        model, x, ys = _draw_network_case(rng, dims, batch)
        for loss_fn in losses:
            logits = model.forward(x)
            _, g_logits = loss_fn(logits, ys)
            analytic, _ = model.backward(g_logits)
            numeric = _param_fd(model, x, lambda lg: loss_fn(lg, ys)[0])
            for ga, gn in zip(analytic, numeric):
                worst = max(worst, rel_error(ga, gn))
    return worst


def suite_semisup(seed: int = 0, trials: int = 30) -> float:
    """Check consistency-divergence gradients w.r.t. the perturbed logits."""
    rng = np.random.default_rng(seed)
    loss_cfg = bmloss.LossConfig()
    kinds = (semisup.SOFTMAX_L2, semisup.SOFTMAX_KL, semisup.DIRICHLET_KL)
    worst = 0.0
    for _ in range(trials):
        k = int(rng.integers(2, 8))
        f_ref = rng.uniform(-4.0, 4.0, k)
        f_other = rng.uniform(-4.0, 4.0, k)
        for kind in kinds:
            g = semisup._divergence_grad_rows(f_ref, f_other, kind, loss_cfg)
            g_fd = fd_gradient(
                lambda fo: float(semisup._divergence_rows(f_ref, fo, kind, loss_cfg)), f_other
            )
            worst = max(worst, rel_error(g, g_fd))
    return worst


def run_all(seed: int = 0, trials: int = 100) -> dict:
    """Run every suite; returns {suite: max relative error} plus pass flags."""
    nn_trials = max(1, trials // 10)
    semisup_trials = max(1, trials // 3)
    report = {
        "bmloss": {"max_rel_err": suite_bmloss(seed, trials), "tol": BM_GRAD_TOL},
        "nn": {"max_rel_err": suite_nn(seed, nn_trials), "tol": NN_GRAD_TOL},
        "semisup": {"max_rel_err": suite_semisup(seed, semisup_trials), "tol": SEMISUP_GRAD_TOL},
    }
    for entry in report.values():
        entry["pass"] = entry["max_rel_err"] <= entry["tol"]
    return report
