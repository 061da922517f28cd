"""Samplers for cosine-neuron, CLWE, null, phaseless-CLWE and phase-retrieval data.

Every sampler draws the Gaussian design first (``m x d`` standard normals from
the supplied generator) and the noise second, so two samplers fed the same
seed see the same covariates. Labels are float64 by default. Passing
``precision_bits > 53`` computes them with mpmath at that precision from the
exact float64 design, which the lattice pipeline needs when it truncates to
far more than 53 bits.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import IO, Iterable, List, Optional, Sequence

import mpmath
import numpy as np

from ._validation import ConfigError, DomainError, check_finite, check_positive_int, check_rng, check_vector

__all__ = [
    "Instance",
    "LabeledSample",
    "NoiseModel",
    "SampleBatch",
    "make_instance",
    "sample_hidden_direction",
    "sample_cosine",
    "sample_clwe",
    "sample_null",
    "sample_phaseless_clwe",
    "sample_phase_retrieval",
    "cosine_batch",
    "clwe_batch",
    "null_batch",
    "phaseless_clwe_batch",
    "phase_retrieval_batch",
    "label_cosine",
    "label_clwe",
    "label_phase_retrieval",
    "mod_one",
    "mod_one_array",
    "write_jsonl",
    "read_jsonl",
]

UNIT_TOL = 2.0 ** -48
_MPF = mpmath.ctx_mp_python._mpf


@dataclass(frozen=True)
class Instance:
    """Hidden unit direction ``w`` with frequency ``gamma`` and noise level ``beta``."""

    w: np.ndarray
    gamma: float
    beta: float = 0.0

    def __post_init__(self):
        w = check_vector(self.w, "w")
        if w.size == 0:
            raise ConfigError("w must be non-empty")
        if abs(float(np.linalg.norm(w)) - 1.0) > UNIT_TOL:
            raise ConfigError("w must have unit norm")
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise ConfigError(f"gamma must be positive, got {self.gamma}")
        if not (math.isfinite(self.beta) and self.beta >= 0):
            raise ConfigError(f"beta must be non-negative, got {self.beta}")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "beta", float(self.beta))

    @property
    def d(self) -> int:
        return int(self.w.shape[0])

    def scaled_direction(self, precision_bits: int = 128) -> list:
        """gamma * w as mpmath numbers; the products are exact from 106 bits up."""
        ctx = _ctx(max(int(precision_bits), 106))
        g = ctx.mpf(self.gamma)
        return [g * ctx.mpf(float(v)) for v in self.w]


@dataclass(frozen=True)
class LabeledSample:
    x: np.ndarray
    z: object


@dataclass(frozen=True)
class NoiseModel:
    """Label noise: ``none``, ``uniform`` on [-b, b], ``constant`` +b, or ``gaussian`` with std b."""

    kind: str = "none"
    scale: float = 0.0

    KINDS = ("none", "uniform", "constant", "gaussian")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ConfigError(f"unknown noise kind {self.kind!r}; expected one of {self.KINDS}")
        if not (math.isfinite(self.scale) and self.scale >= 0):
            raise ConfigError(f"noise scale must be non-negative, got {self.scale}")

    @classmethod
    def none(cls) -> "NoiseModel":
        return cls("none", 0.0)

    @classmethod
    def uniform(cls, beta: float) -> "NoiseModel":
        return cls("uniform", float(beta))

    @classmethod
    def constant(cls, beta: float) -> "NoiseModel":
        return cls("constant", float(beta))

    @classmethod
    def gaussian(cls, sigma: float) -> "NoiseModel":
        return cls("gaussian", float(sigma))

    @property
    def bounded(self) -> bool:
        return self.kind != "gaussian"

    @property
    def bound(self) -> float:
        return math.inf if self.kind == "gaussian" else self.scale

    def draw(self, rng: np.random.Generator, m: int) -> np.ndarray:
        if self.kind == "none":
            return np.zeros(m)
        if self.kind == "uniform":
            return rng.uniform(-self.scale, self.scale, size=m)
        if self.kind == "constant":
            return np.full(m, self.scale)
        return self.scale * rng.standard_normal(m)


@dataclass
class SampleBatch:
    """``m`` labelled samples: design ``X`` (m x d) and labels ``z``.

    ``z`` is a float64 array, or an object array of mpmath numbers when the
    labels were generated above double precision.
    """

    X: np.ndarray
    z: np.ndarray
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return int(self.X.shape[0])

    def __getitem__(self, i) -> "LabeledSample | SampleBatch":
        if isinstance(i, slice):
            return SampleBatch(self.X[i], self.z[i], dict(self.meta))
        return LabeledSample(self.X[i], self.z[i])

    def __iter__(self):
        for i in range(len(self)):
            yield LabeledSample(self.X[i], self.z[i])

    @property
    def d(self) -> int:
        return int(self.X.shape[1])

    @property
    def high_precision(self) -> bool:
        return self.z.dtype == object

    def labels_float(self) -> np.ndarray:
        return np.array([float(v) for v in self.z]) if self.high_precision else self.z


def sample_hidden_direction(rng, d: int) -> np.ndarray:
    """Uniform unit vector in R^d (a normalized standard Gaussian)."""
    d = check_positive_int(d, "d")
    rng = check_rng(rng)
    while True:
        g = rng.standard_normal(d)
        nrm = np.linalg.norm(g)
        if nrm > 0:
            return g / nrm


def make_instance(d: int, gamma: float, beta: float = 0.0, rng=None) -> Instance:
    return Instance(sample_hidden_direction(check_rng(rng), d), gamma, beta)


def mod_one(t):
    """Representative of t mod 1 in [-1/2, 1/2).

    Both the float path (``fmod`` then a shift by one) and the mpmath path
    (exact subtraction of the nearest integer) are free of rounding, so the
    result is exactly congruent to ``t``. Works on floats and mpmath numbers.
    """
    if isinstance(t, _MPF):
        ctx = t.context
        if not ctx.isfinite(t):
            raise DomainError("mod_one needs a finite input")
        r = ctx.fsub(t, ctx.nint(t), exact=True)
        return -r if r == 0.5 else r
    else:
        check_finite(t, "t")
        r = math.fmod(t, 1.0)
    if r >= 0.5:
        return r - 1
    if r < -0.5:
        return r + 1
    return r


def mod_one_array(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)):
        raise DomainError("mod_one needs finite inputs")
    r = np.fmod(t, 1.0)
    return np.where(r >= 0.5, r - 1.0, np.where(r < -0.5, r + 1.0, r))


def _ctx(precision_bits: int):
    ctx = mpmath.MPContext()
    ctx.prec = precision_bits
    return ctx


def _hp_inner(ctx, X: np.ndarray, w: np.ndarray) -> list:
    wm = [ctx.mpf(float(v)) for v in w]
    return [ctx.fsum(ctx.mpf(float(a)) * b for a, b in zip(row, wm)) for row in X]


def _object_array(values: Iterable) -> np.ndarray:
    vals = list(values)
    out = np.empty(len(vals), dtype=object)
    out[:] = vals
    return out


def label_cosine(w, gamma: float, X, xi=None, precision_bits: int = 53) -> np.ndarray:
    """z = cos(2 pi gamma <w, x>) + xi, row by row."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    w = np.asarray(w, dtype=float)
    xi = np.zeros(X.shape[0]) if xi is None else np.asarray(xi, dtype=float)
    if precision_bits <= 53:
        return np.cos(2 * np.pi * gamma * (X @ w)) + xi
    ctx = _ctx(precision_bits)
    g = ctx.mpf(float(gamma))
    two_pi = 2 * ctx.pi
    return _object_array(
        ctx.cos(two_pi * g * ip) + ctx.mpf(float(e)) for ip, e in zip(_hp_inner(ctx, X, w), xi)
    )


def label_clwe(w, gamma: float, X, xi=None, precision_bits: int = 53) -> np.ndarray:
    """z = (gamma <w, x> + xi) mod 1, representatives in [-1/2, 1/2)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    w = np.asarray(w, dtype=float)
    xi = np.zeros(X.shape[0]) if xi is None else np.asarray(xi, dtype=float)
    if precision_bits <= 53:
        return mod_one_array(gamma * (X @ w) + xi)
    ctx = _ctx(precision_bits)
    g = ctx.mpf(float(gamma))
    return _object_array(mod_one(g * ip + ctx.mpf(float(e))) for ip, e in zip(_hp_inner(ctx, X, w), xi))


def label_phase_retrieval(w, X, xi=None, precision_bits: int = 53) -> np.ndarray:
    """z = |<w, x>| + xi, row by row."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    w = np.asarray(w, dtype=float)
    xi = np.zeros(X.shape[0]) if xi is None else np.asarray(xi, dtype=float)
    if precision_bits <= 53:
        return np.abs(X @ w) + xi
    ctx = _ctx(precision_bits)
    return _object_array(abs(ip) + ctx.mpf(float(e)) for ip, e in zip(_hp_inner(ctx, X, w), xi))


def _meta(dist: str, gamma, beta, seed, precision_bits: int) -> dict:
    meta = {"dist": dist, "gamma": gamma, "beta": beta, "seed": seed}
    if precision_bits > 53:
        meta["precision_bits"] = precision_bits
    return meta


def _check_noise(noise: NoiseModel, beta: float) -> NoiseModel:
    if noise is None:
        return NoiseModel.none()
    if not isinstance(noise, NoiseModel):
        raise ConfigError("noise must be a NoiseModel")
    if noise.bounded and noise.bound > beta * (1 + 1e-12):
        raise ConfigError(f"noise bound {noise.bound} exceeds the instance beta {beta}")
    return noise


def cosine_batch(inst: Instance, rng, m: int, noise: Optional[NoiseModel] = None,
                 precision_bits: int = 53, seed=None) -> SampleBatch:
    m = check_positive_int(m, "m")
    rng = check_rng(rng)
    noise = _check_noise(noise, inst.beta)
    X = rng.standard_normal((m, inst.d))
    xi = noise.draw(rng, m)
    z = label_cosine(inst.w, inst.gamma, X, xi, precision_bits)
    return SampleBatch(X, z, _meta("cosine", inst.gamma, inst.beta, seed, precision_bits))


def clwe_batch(inst: Instance, rng, m: int, precision_bits: int = 53, seed=None) -> SampleBatch:
    m = check_positive_int(m, "m")
    rng = check_rng(rng)
    X = rng.standard_normal((m, inst.d))
    xi = inst.beta * rng.standard_normal(m)
    z = label_clwe(inst.w, inst.gamma, X, xi, precision_bits)
    return SampleBatch(X, z, _meta("clwe", inst.gamma, inst.beta, seed, precision_bits))


def null_batch(rng, d: int, m: int, seed=None) -> SampleBatch:
    d = check_positive_int(d, "d")
    m = check_positive_int(m, "m")
    rng = check_rng(rng)
    X = rng.standard_normal((m, d))
    z = rng.uniform(-0.5, 0.5, size=m)
    # uniform() is half-open [low, high), matching the representative range
    return SampleBatch(X, z, _meta("null", None, None, seed, 53))


def phaseless_clwe_batch(inst: Instance, rng, m: int, noise: Optional[NoiseModel] = None,
                         precision_bits: int = 53, seed=None) -> SampleBatch:
    m = check_positive_int(m, "m")
    rng = check_rng(rng)
    noise = NoiseModel.none() if noise is None else noise
    X = rng.standard_normal((m, inst.d))
    xi = noise.draw(rng, m)
    z = label_clwe(inst.w, inst.gamma, X, xi, precision_bits)
    z = _object_array(abs(v) for v in z) if z.dtype == object else np.abs(z)
    return SampleBatch(X, z, _meta("phaseless", inst.gamma, inst.beta, seed, precision_bits))


def phase_retrieval_batch(w, beta: float, rng, m: int, noise: Optional[NoiseModel] = None,
                          precision_bits: int = 53, seed=None) -> SampleBatch:
    w = check_vector(w, "w")
    if not np.linalg.norm(w) > 0:
        raise ConfigError("w must be non-zero")
    m = check_positive_int(m, "m")
    rng = check_rng(rng)
    noise = _check_noise(noise, beta)
    X = rng.standard_normal((m, w.shape[0]))
    xi = noise.draw(rng, m)
    z = label_phase_retrieval(w, X, xi, precision_bits)
    return SampleBatch(X, z, _meta("phase", float(np.linalg.norm(w)), beta, seed, precision_bits))


def sample_cosine(inst: Instance, rng, noise: Optional[NoiseModel] = None) -> LabeledSample:
    return cosine_batch(inst, rng, 1, noise)[0]


def sample_clwe(inst: Instance, rng) -> LabeledSample:
    return clwe_batch(inst, rng, 1)[0]


def sample_null(rng, d: int) -> LabeledSample:
    return null_batch(rng, d, 1)[0]


def sample_phaseless_clwe(inst: Instance, rng, noise: Optional[NoiseModel] = None) -> LabeledSample:
    return phaseless_clwe_batch(inst, rng, 1, noise)[0]


def sample_phase_retrieval(w, beta: float, rng, noise: Optional[NoiseModel] = None) -> LabeledSample:
    return phase_retrieval_batch(w, beta, rng, 1, noise)[0]


def _label_to_json(z):
    if isinstance(z, _MPF):
        digits = int(math.ceil(z.context.prec * math.log10(2))) + 3
        return mpmath.nstr(z, digits, strip_zeros=False, min_fixed=-math.inf, max_fixed=math.inf)
    return float(z)


def write_jsonl(batch: SampleBatch, fh: IO[str]) -> None:
    """One JSON object per sample: {"x": [...], "z": ..., "meta": {...}}.

    High-precision labels are written as decimal strings with enough digits
    to round-trip at their working precision.
    """
    meta = dict(batch.meta)
    for x, z in zip(batch.X, batch.z):
        fh.write(json.dumps({"x": [float(v) for v in x], "z": _label_to_json(z), "meta": meta}) + "\n")


def read_jsonl(lines: Iterable[str]) -> SampleBatch:
    xs: List[List[float]] = []
    zs: list = []
    meta: dict = {}
    for line in lines:
        line = line.strip()
        if not line:
            continue
        rec = json.loads(line)
        xs.append(rec["x"])
        zs.append(rec["z"])
        meta = rec.get("meta", meta)
    if not xs:
        raise ConfigError("no samples found")
    X = np.asarray(xs, dtype=float)
    if any(isinstance(z, str) for z in zs):
        ctx = _ctx(int(meta.get("precision_bits", 256)))
        z = _object_array(ctx.mpf(v) for v in zs)
    else:
        z = np.asarray(zs, dtype=float)
    return SampleBatch(X, z, meta)
