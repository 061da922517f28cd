"""Distinguishing CLWE from the null distribution with a learned hypothesis.

The learner sees m samples whose labels are mapped through cos(2 pi .) and
returns a hypothesis. Its empirical loss on m held-out samples from the
unknown source is compared with its loss on m fresh null samples, and the
answer is YES when the unknown-source loss is smaller by at least eps/4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .._validation import ConfigError
from ..recovery import RecoveryConfig, recover_clwe
from ..sampling import SampleBatch, clwe_batch, null_batch

__all__ = [
    "DetectionResult",
    "clwe_detection_test",
    "recovery_learner",
    "constant_learner",
    "oracle_learner",
    "clwe_source",
    "null_source",
]


@dataclass
class DetectionResult:
    decision: str
    loss_unknown: float
    loss_null: float
    eps: float
    learner_failed: bool = False
    info: dict = field(default_factory=dict)

    @property
    def yes(self) -> bool:
        return self.decision == "YES"


def _mapped(batch: SampleBatch):
    z = batch.z
    if batch.high_precision:
        z = np.array([float(v.context.cos(2 * v.context.pi * v)) for v in z])
    else:
        z = np.cos(2 * np.pi * np.asarray(z, dtype=float))
    return batch.X, z


def clwe_detection_test(learner: Callable, unknown_source: Callable, null_source: Callable, m: int,
                        eps: float) -> DetectionResult:
    """Run the held-out loss comparison.

    ``learner(train_batch)`` returns a callable ``X -> predictions``; its
    outputs are clipped to [-1, 1]. Sources are callables ``n -> SampleBatch``.
    A learner that raises counts as a NO with ``learner_failed`` set.
    """
    if m < 1:
        raise ConfigError("m must be positive")
    data = unknown_source(2 * m)
    train, held = data[:m], data[m:]
    try:
        h = learner(train)
    except Exception as exc:  # the test must not crash on a bad learner
        return DetectionResult("NO", math.nan, math.nan, eps, True, {"error": repr(exc)})
    Xd, yd = _mapped(held)
    Xq, yq = _mapped(null_source(m))
    pd = np.clip(np.asarray(h(Xd), dtype=float), -1.0, 1.0)
    pq = np.clip(np.asarray(h(Xq), dtype=float), -1.0, 1.0)
    loss_d = float(np.mean((pd - yd) ** 2))
    loss_q = float(np.mean((pq - yq) ** 2))
    info = getattr(h, "info", {})
    return DetectionResult("YES" if loss_d <= loss_q - eps / 4 else "NO", loss_d, loss_q, eps, False, dict(info))


class _Hypothesis:
    def __init__(self, fn, info):
        self.fn = fn
        self.info = info

    def __call__(self, X):
        return self.fn(np.asarray(X, dtype=float))


def constant_learner(value: float = 0.0) -> Callable:
    return lambda train: _Hypothesis(lambda X: np.full(X.shape[0], value), {"kind": "constant"})


def oracle_learner(w, gamma: float) -> Callable:
    """Ground-truth hypothesis cos(2 pi gamma <w, x>), ignoring the training data."""
    w = np.asarray(w, dtype=float)
    return lambda train: _Hypothesis(lambda X: np.cos(2 * np.pi * gamma * (X @ w)), {"kind": "oracle"})


def recovery_learner(d: int, beta: float = 0.0, attempts: int = 3, config: Optional[RecoveryConfig] = None) -> Callable:
    """Learner built on lattice recovery from d+1 CLWE samples.

    Tries up to ``attempts`` disjoint blocks of d+1 training samples and keeps
    the first recovered vector whose training loss beats the zero predictor;
    otherwise the hypothesis is the constant 0.
    """
    cfg = config or RecoveryConfig.noisy(d, beta)

    def learn(train: SampleBatch):
        X, y = _mapped(train)
        base = float(np.mean(y ** 2))
        for a in range(attempts):
            block = train[a * (d + 1) : (a + 1) * (d + 1)]
            if len(block) < d + 1:
                break
            out = recover_clwe(block, cfg)
            if not out.success:
                continue
            w_hat = out.w_scaled
            loss = float(np.mean((np.cos(2 * np.pi * (X @ w_hat)) - y) ** 2))
            if loss < base:
                return _Hypothesis(lambda Z, w_hat=w_hat: np.cos(2 * np.pi * (Z @ w_hat)),
                                   {"kind": "recovered", "attempt": a, "train_loss": loss})
        return _Hypothesis(lambda Z: np.zeros(Z.shape[0]), {"kind": "fallback"})

    return learn


def clwe_source(inst, rng, precision_bits: int = 256) -> Callable:
    return lambda n: clwe_batch(inst, rng, n, precision_bits=precision_bits)


def null_source(d: int, rng) -> Callable:
    return lambda n: null_batch(rng, d, n)
