"""Distinguisher attacks: threshold scans, trained MLPs, and F-IPM reports.

The MLP path follows the reference protocol: width-200 ReLU discriminators of
1 to 4 hidden layers with a sigmoid head, trained one step per batch on the
DCGAN objective with Adam.  The reported test loss is

    E[-log D(X)] + E[-log(1 - D(G(z)))] - 2 log 2,

which is zero exactly when D outputs 1/2 everywhere; a discriminator that
cannot find signal stays near or above zero, one that separates the
distributions drives it far negative.  Evaluation uses fixed held-out sample
sets so that two runs with the same config and samplers produce bit-identical
loss curves.

Samplers passed in must be deterministic callables n -> (n, d) float64; they
own their randomness (seed them from a master seed when reproducibility
matters, as the CLI does).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import UserInputError
from .samples import SampleSet, make_rng

TRAIN_CHUNK = 100  # fused steps per kernel call, bounds batch-buffer memory


@dataclass(frozen=True)
class TrainConfig:
    hidden_layers: int
    width: int = 200
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    batch: int = 128
    steps: int = 20000
    rng: int = 0
    eval_every: int = 500
    eval_n: int = 16384
    final_eval_n: int = 100000

    def __post_init__(self):
        if not 1 <= self.hidden_layers <= 4:
            raise UserInputError("hidden_layers must lie in 1..4")
        if self.lr <= 0 or self.batch < 1 or self.steps < 1 or self.width < 1:
            raise UserInputError("lr > 0 and width/batch/steps >= 1 required")
        if self.eval_every < 1 or self.eval_n < 1 or self.final_eval_n < 1:
            raise UserInputError("evaluation sizes must be >= 1")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in (
            "hidden_layers", "width", "lr", "beta1", "beta2", "adam_eps",
            "batch", "steps", "rng", "eval_every", "eval_n", "final_eval_n")}


@dataclass
class AttackReport:
    method: str
    advantage: float
    ci_low: float
    ci_high: float
    n_gen: int
    n_target: int
    loss_curve: list | None = None
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n_gen < 1 or self.n_target < 1:
            raise UserInputError("sample counts must be >= 1")
        if not self.ci_low <= self.advantage <= self.ci_high:
            raise UserInputError("advantage must lie inside its CI")

    def to_json_dict(self) -> dict:
        return {"schema": "attack-report/1", "method": self.method,
                "advantage": self.advantage, "ci_low": self.ci_low,
                "ci_high": self.ci_high, "n_gen": self.n_gen,
                "n_target": self.n_target,
                "loss_curve": self.loss_curve, "details": self.details}

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, sort_keys=True, indent=1)

    def curve_csv(self, path):
        if self.loss_curve is None:
            raise UserInputError("this report carries no loss curve")
        with open(path, "w") as fh:
            fh.write("step,test_loss,accuracy\n")
            for step, loss, acc in self.loss_curve:
                fh.write(f"{step},{loss!r},{acc!r}\n")


# -- threshold scan ------------------------------------------------------------------


def threshold_scan(x_samples, y_samples, window=None) -> AttackReport:
    """Best single-threshold test between two scalar samples.

    Scans every midpoint of the pooled sorted values and reports
    max_t |Pr[X > t] - Pr[Y > t]| with a DKW 95% confidence band
    (each empirical CDF gets half the error budget).
    """
    x = np.sort(np.asarray(x_samples, dtype=np.float64).ravel())
    y = np.sort(np.asarray(y_samples, dtype=np.float64).ravel())
    if len(x) == 0 or len(y) == 0:
        raise UserInputError("both sample sets must be nonempty")
    pooled = np.unique(np.concatenate([x, y]))
    if len(pooled) == 1:
        thresholds = pooled
    else:
        thresholds = (pooled[:-1] + pooled[1:]) / 2.0
    if window is not None:
        lo, hi = window
        kept = thresholds[(thresholds >= lo) & (thresholds <= hi)]
        if len(kept):
            thresholds = kept
    fx = np.searchsorted(x, thresholds, side="right") / len(x)
    fy = np.searchsorted(y, thresholds, side="right") / len(y)
    gaps = np.abs(fy - fx)
    best = int(np.argmax(gaps))
    adv = float(gaps[best])
    slack = _dkw(len(x), 0.025) + _dkw(len(y), 0.025)
    return AttackReport(
        method="threshold-scan", advantage=adv,
        ci_low=max(0.0, adv - slack), ci_high=min(1.0, adv + slack),
        n_gen=len(x), n_target=len(y),
        details={"threshold": float(thresholds[best]), "dkw_slack": slack,
                 "window": list(window) if window is not None else None})


def _dkw(n: int, delta: float) -> float:
    return math.sqrt(math.log(2.0 / delta) / (2.0 * n))


def subgaussian_scale(lipschitz: float, n: int) -> float:
    """sigma = Lambda sqrt(2 n): sub-Gaussian scale of a Lambda-Lipschitz map
    of n independent +-1 bits; sets the width of a sensible scan window."""
    if lipschitz <= 0 or n <= 0:
        raise UserInputError("need lipschitz > 0 and n > 0")
    return float(lipschitz) * math.sqrt(2.0 * n)


# -- trained MLP discriminators -------------------------------------------------------


class MlpNet:
    """Plain float64 MLP with ReLU hidden layers and a scalar logit head."""

    def __init__(self, Ws, bs):
        self.Ws = [np.ascontiguousarray(W, dtype=np.float64) for W in Ws]
        self.bs = [np.ascontiguousarray(b, dtype=np.float64) for b in bs]
        for W, b in zip(self.Ws, self.bs):
            if W.shape[0] != b.shape[0]:
                raise UserInputError("weight/bias shapes disagree")

    @property
    def d_in(self) -> int:
        return int(self.Ws[0].shape[1])

    def logits(self, X: np.ndarray) -> np.ndarray:
        return _kernels.mlp_logits(np.ascontiguousarray(X, np.float64),
                                   self.Ws, self.bs)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return _sigmoid(self.logits(X))

    def eval_float_batch(self, X: np.ndarray) -> np.ndarray:
        return self.logits(X)[:, None]

    def lipschitz_bound(self) -> float:
        prod = 1.0
        for W in self.Ws:
            prod *= float(np.linalg.norm(W, 2))
        return prod


def init_mlp(d_in: int, hidden_layers: int, width: int, rng) -> MlpNet:
    """He-uniform weights, zero biases, deterministic in the seed."""
    rng = make_rng(rng)
    dims = [d_in] + [width] * hidden_layers + [1]
    Ws, bs = [], []
    for fan_in, fan_out in zip(dims, dims[1:]):
        limit = math.sqrt(6.0 / fan_in)
        Ws.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        bs.append(np.zeros(fan_out))
    return MlpNet(Ws, bs)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def dcgan_test_loss(logits_target: np.ndarray, logits_gen: np.ndarray) -> float:
    """E[-log D(X)] + E[-log(1 - D(G(z)))] - 2 log 2, in stable softplus form.

    Non-finite logits yield a non-finite loss; callers treat that as
    divergence rather than an error.
    """
    with np.errstate(invalid="ignore"):
        loss_t = float(np.mean(np.logaddexp(0.0, -logits_target)))
        loss_g = float(np.mean(np.logaddexp(0.0, logits_gen)))
    return loss_t + loss_g - 2.0 * math.log(2.0)


def balanced_accuracy(logits_target: np.ndarray, logits_gen: np.ndarray) -> float:
    tpr = float(np.mean(logits_target > 0))
    tnr = float(np.mean(logits_gen <= 0))
    return 0.5 * (tpr + tnr)


def train_discriminator(cfg: TrainConfig, gen_sampler, target_sampler
                        ) -> tuple[MlpNet, AttackReport]:
    """One Adam step per mixed batch (target labeled 1, generator 0).

    The loss curve holds (step, test_loss, balanced_accuracy) at every
    eval_every steps, measured on held-out sets of eval_n per side drawn
    before training; final metrics use final_eval_n fresh samples per side.
    """
    eval_t = np.ascontiguousarray(target_sampler(cfg.eval_n), np.float64)
    eval_g = np.ascontiguousarray(gen_sampler(cfg.eval_n), np.float64)
    if eval_t.shape[1] != eval_g.shape[1]:
        raise UserInputError("samplers disagree on dimension")
    d = eval_t.shape[1]
    net = init_mlp(d, cfg.hidden_layers, cfg.width, cfg.rng)
    Ws, bs = net.Ws, net.bs
    mWs = [np.zeros_like(W) for W in Ws]
    vWs = [np.zeros_like(W) for W in Ws]
    mbs = [np.zeros_like(b) for b in bs]
    vbs = [np.zeros_like(b) for b in bs]
    n_batch = 2 * cfg.batch
    y = np.concatenate([np.ones(cfg.batch), np.zeros(cfg.batch)])
    dims = [d] + [cfg.width] * cfg.hidden_layers
    acts = [np.empty((n_batch, w)) for w in dims]
    curve = []
    diverged = None
    t_adam = 0
    done = 0
    while done < cfg.steps:
        upto = min(cfg.steps, (done // cfg.eval_every + 1) * cfg.eval_every)
        while done < upto:
            chunk = min(TRAIN_CHUNK, upto - done)
            real = target_sampler(chunk * cfg.batch).reshape(chunk, cfg.batch, d)
            fake = gen_sampler(chunk * cfg.batch).reshape(chunk, cfg.batch, d)
            batches = np.ascontiguousarray(
                np.concatenate([real, fake], axis=1), np.float64)
            t_adam = _kernels.mlp_train_chunk(
                Ws, bs, mWs, vWs, mbs, vbs, batches, y, acts, t_adam,
                cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps)
            done += chunk
        lt, lg = net.logits(eval_t), net.logits(eval_g)
        loss = dcgan_test_loss(lt, lg)
        acc = balanced_accuracy(lt, lg)
        curve.append((done, loss, acc))
        if not math.isfinite(loss):
            diverged = done
            break

    if diverged is not None:
        report = AttackReport(
            method=f"mlp-depth-{cfg.hidden_layers}", advantage=0.0,
            ci_low=0.0, ci_high=1.0, n_gen=cfg.eval_n, n_target=cfg.eval_n,
            loss_curve=curve,
            details={"failed": True, "diverged_at_step": diverged,
                     "config": cfg.to_dict()})
        return net, report

    fin_t = np.ascontiguousarray(target_sampler(cfg.final_eval_n), np.float64)
    fin_g = np.ascontiguousarray(gen_sampler(cfg.final_eval_n), np.float64)
    lt, lg = net.logits(fin_t), net.logits(fin_g)
    tpr = float(np.mean(lt > 0))
    tnr = float(np.mean(lg <= 0))
    acc = 0.5 * (tpr + tnr)
    adv = abs(2.0 * acc - 1.0)
    sigma_acc = 0.5 * math.sqrt(
        tpr * (1 - tpr) / len(lt) + tnr * (1 - tnr) / len(lg))
    slack = 2.0 * 1.96 * sigma_acc
    report = AttackReport(
        method=f"mlp-depth-{cfg.hidden_layers}", advantage=adv,
        ci_low=max(0.0, adv - slack), ci_high=min(1.0, adv + slack),
        n_gen=len(lg), n_target=len(lt), loss_curve=curve,
        details={
            "balanced_accuracy": acc, "true_positive_rate": tpr,
            "true_negative_rate": tnr, "final_test_loss": curve[-1][1],
            "config": cfg.to_dict(),
            "protocol": "dcgan objective, 1 discriminator step per batch, "
                        "no label smoothing, held-out eval sets",
        })
    return net, report


# -- fixed-family IPM reports ----------------------------------------------------------


def _scalar_outputs(f, X: np.ndarray) -> np.ndarray:
    out = f.eval_float_batch(X) if hasattr(f, "eval_float_batch") else f(X)
    out = np.asarray(out, dtype=np.float64)
    if out.ndim == 2:
        if out.shape[1] != 1:
            raise UserInputError("IPM family members must be scalar-valued")
        out = out[:, 0]
    return out


def _lipschitz_of(f) -> float:
    if hasattr(f, "profile"):
        return float(f.profile.lam)
    if hasattr(f, "lipschitz_bound"):
        return float(f.lipschitz_bound())
    return math.inf


def ipm_report(f_family, p: SampleSet, q: SampleSet) -> AttackReport:
    """max_f |mean_p f - mean_q f| over a fixed family, with Hoeffding CIs.

    Each member's value range is bounded by its Lipschitz constant times the
    pooled data diameter (plus its value at a pooled anchor); the slack is
    Bonferroni-corrected across the family.
    """
    f_family = list(f_family)
    if not f_family:
        raise UserInputError("empty family")
    P, Q = p.data, q.data
    if P.shape[1] != Q.shape[1]:
        raise UserInputError("sample sets must share their dimension")
    pooled_norm = max(float(np.linalg.norm(P, axis=1).max()),
                      float(np.linalg.norm(Q, axis=1).max()))
    diam = 2.0 * pooled_norm
    delta = 0.05 / len(f_family)
    gaps, slacks = [], []
    for f in f_family:
        vp = _scalar_outputs(f, P)
        vq = _scalar_outputs(f, Q)
        gap = abs(float(vp.mean()) - float(vq.mean()))
        rng_f = _lipschitz_of(f) * diam
        slack = rng_f * (math.sqrt(math.log(2.0 / delta) / (2 * len(vp)))
                         + math.sqrt(math.log(2.0 / delta) / (2 * len(vq))))
        gaps.append(gap)
        slacks.append(slack)
    best = int(np.argmax(gaps))
    adv = gaps[best]
    slack = slacks[best]
    return AttackReport(
        method="ipm-fixed-family", advantage=adv,
        ci_low=max(0.0, adv - slack),
        ci_high=adv + slack,
        n_gen=len(Q), n_target=len(P),
        details={"family_size": len(f_family), "best_index": best,
                 "per_member_gap": gaps, "per_member_slack": slacks,
                 "data_diameter_bound": diam})
