"""Standard normal kernels and the seeded random-stream contract.

The quantile uses the Wichura AS241 (PPND16) rational approximation followed
by one Newton step against :func:`std_normal_cdf`.  All random numbers in the
package come from :class:`RandomStream`, a value type keyed by
``(seed, stream_index, *path)``: two streams with the same key replay the same
sequence, different keys give independent sequences.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc

from .exceptions import ConfigurationError, DomainError

_SQRT2 = np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)
_UINT64 = (1 << 64) - 1

# AS241 PPND16 coefficients
_A = (3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
      1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
      3.3430575583588128105e4, 2.5090809287301226727e3)
_B = (1.0, 4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
      2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
      5.2264952788528545610e3)
_C = (1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
      3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4)
_D = (1.0, 2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
      1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
      1.05075007164441684324e-9)
_E = (6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
      2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7)
_F = (1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
      7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
      2.04426310338993978564e-15)


def _poly(coef, x):
    out = np.full_like(x, coef[-1])
    for c in coef[-2::-1]:
        out = out * x + c
    return out


def std_normal_pdf(x):
    x = np.asarray(x, dtype=float)
    return _INV_SQRT_2PI * np.exp(-0.5 * x * x)


def std_normal_cdf(x):
    """Standard normal distribution function, ``0.5 * erfc(-x / sqrt(2))``.

    Raises
    ------
    DomainError
        If any input is NaN or infinite.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("std_normal_cdf requires finite input")
    out = 0.5 * erfc(-x / _SQRT2)
    return out if out.ndim else float(out)


def _ppnd16_lower(r):
    # r in (0, 0.5]; returns z <= 0 with Phi(z) ~= r
    q = r - 0.5
    z = np.empty_like(r)
    central = np.abs(q) <= 0.425
    if np.any(central):
        qc = q[central]
        t = 0.180625 - qc * qc
        z[central] = qc * _poly(_A, t) / _poly(_B, t)
    tail = ~central
    if np.any(tail):
        s = np.sqrt(-np.log(r[tail]))
        near = s <= 5.0
        zt = np.empty_like(s)
        sn = s[near] - 1.6
        zt[near] = _poly(_C, sn) / _poly(_D, sn)
        sf = s[~near] - 5.0
        zt[~near] = _poly(_E, sf) / _poly(_F, sf)
        z[tail] = -zt
    return z


def std_normal_quantile(p):
    """Inverse of the standard normal distribution function.

    AS241 rational approximation on the lower tail ``min(p, 1 - p)`` (exact
    in floating point for ``p >= 0.5``), polished by one Newton step.

    Raises
    ------
    DomainError
        If any ``p`` is outside the open interval (0, 1).
    """
    p = np.asarray(p, dtype=float)
    if not np.all((p > 0.0) & (p < 1.0)):
        raise DomainError("std_normal_quantile requires 0 < p < 1")
    scalar = p.ndim == 0
    p = np.atleast_1d(p)
    upper = p > 0.5
    r = np.where(upper, 1.0 - p, p)
    z = _ppnd16_lower(r)
    z = z - (0.5 * erfc(-z / _SQRT2) - r) / std_normal_pdf(z)
    z = np.where(upper, -z, z)
    return float(z[0]) if scalar else z


def _spawn_key(stream_index, path):
    return tuple(int(k) & _UINT64 for k in (stream_index, *path))


@dataclass(frozen=True)
class RandomStream:
    """Immutable key for an independent pseudo-random sequence.

    Every call to :meth:`generator` returns a fresh generator positioned at the
    start of the sequence, so a stream can be moved between workers and
    replayed bit-identically.
    """

    seed: int
    stream_index: int = 0
    path: tuple = field(default=())

    def __post_init__(self):
        if self.stream_index < 0:
            raise ConfigurationError("stream_index must be nonnegative")

    def child(self, *keys) -> "RandomStream":
        """Independent sub-stream identified by additional integer keys."""
        return RandomStream(self.seed, self.stream_index, self.path + tuple(int(k) for k in keys))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(int(self.seed) & _UINT64,
                                     spawn_key=_spawn_key(self.stream_index, self.path))
        return np.random.Generator(np.random.PCG64(seq))


def open_uniform(gen: np.random.Generator, size):
    """Uniform draws on the open interval (0, 1) (midpoints of the 2**-53 grid)."""
    return gen.random(size) + 2.0 ** -54


def standard_normal(gen: np.random.Generator, size):
    """Standard normal draws by inverse-CDF transform of open uniforms."""
    return std_normal_quantile(open_uniform(gen, size))


def draw(stream: RandomStream, kind: str, count: int) -> np.ndarray:
    """Draw ``count`` values of the given kind from the start of ``stream``.

    ``kind`` is ``"uniform01"`` or ``"standard-normal"``.
    """
    if count < 0:
        raise ConfigurationError("count must be nonnegative")
    if count == 0:
        return np.empty(0)
    gen = stream.generator()
    if kind == "uniform01":
        return open_uniform(gen, count)
    if kind == "standard-normal":
        return standard_normal(gen, count)
    raise ConfigurationError(f"unknown draw kind {kind!r}")


def derive_seed(seed: int, *keys) -> int:
    """Deterministic 64-bit seed for the sub-task identified by ``keys``."""
    seq = np.random.SeedSequence(int(seed) & _UINT64, spawn_key=_spawn_key(keys[0], keys[1:]) if keys else ())
    lo, hi = seq.generate_state(2, dtype=np.uint32)
    return int(lo) | (int(hi) << 32)
