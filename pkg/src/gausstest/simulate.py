"""Seeded generators for the ten benchmark designs.

Examples 1-5 produce ``(X, Y)`` pairs for the independence test and
Examples 6-10 produce ``(X, Y, Z)`` triples for the conditional tests.
Every random ingredient of a design (a "component") has its own stream
``RandomStream(seed, rep).child(component_id)``, so replacing one component
never moves the others.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._normal import RandomStream, open_uniform, standard_normal
from .exceptions import ConfigurationError

IND_EXAMPLES = (1, 2, 3, 4, 5)
CI_EXAMPLES = (6, 7, 8, 9, 10)
_GAMMA_DF = 64

# component ids; a design only uses some of them
COMPONENTS = {"x": 1, "y": 2, "z": 3, "tau": 4, "nu": 5, "u": 6, "xt": 7, "yt": 8,
              "positions": 10, "magnitudes": 11}


def t_draw(df: float, stream: RandomStream, count) -> np.ndarray:
    """Student-t variates ``N / sqrt(chi2_df / df)``.

    The normal and, for integer ``df <= 64``, the chi-square (as a sum of
    ``df`` squared normals) come from inverse-CDF draws of one stream.  Other
    ``df`` use a gamma draw for the chi-square.
    """
    if not df > 0:
        raise ConfigurationError("df must be positive")
    gen = stream.generator()
    shape = (count,) if np.isscalar(count) else tuple(count)
    z = standard_normal(gen, shape)
    if float(df).is_integer() and df <= _GAMMA_DF:
        k = int(df)
        g = standard_normal(gen, shape + (k,))
        chi2 = np.einsum("...k,...k->...", g, g)
    else:
        chi2 = 2.0 * gen.standard_gamma(df / 2.0, size=shape)
    return z / np.sqrt(chi2 / df)


def uniform_draw(stream: RandomStream, shape, low=0.0, high=1.0) -> np.ndarray:
    return low + (high - low) * open_uniform(stream.generator(), shape)


def normal_draw(stream: RandomStream, shape) -> np.ndarray:
    return standard_normal(stream.generator(), shape)


def safe_exp(x):
    """``exp`` made finite and nonzero by a strictly increasing squeeze of the
    argument beyond ``|x| > 600`` (only reached by extreme heavy-tailed draws)."""
    x = np.asarray(x, dtype=float)
    big = np.abs(x) > 600.0
    if np.any(big):
        x = x.copy()
        a = np.abs(x[big]) - 600.0
        x[big] = np.sign(x[big]) * (600.0 + np.log1p(np.log1p(a)))
    return np.exp(x)


@dataclass(frozen=True)
class ScenarioSpec:
    """One simulation cell.

    ``signal`` is ``K`` (Examples 1-3, 6, 8-10), ``rho`` (Example 7) or
    0/1 for null/alternative (Examples 4-5).  ``q = p`` throughout.
    """

    example: int
    n: int
    p: int
    m: int = 0
    signal: float = 0
    seed: int = 0
    rep: int = 0

    def validate(self) -> "ScenarioSpec":
        ex, p, n, m, s = self.example, self.p, self.n, self.m, self.signal
        if ex not in IND_EXAMPLES + CI_EXAMPLES:
            raise ConfigurationError(f"example must be 1..10, got {ex}")
        if n < 3 or p < 1:
            raise ConfigurationError("need n >= 3 and p >= 1")
        if ex in (1, 2, 3):
            _check_k(s, p, (20, 10), ex)
        elif ex in (4, 5):
            if s not in (0, 1):
                raise ConfigurationError(f"Example {ex}: signal must be 0 (null) or 1 (alternative)")
            if p < 2 and s == 1:
                raise ConfigurationError(f"Example {ex}: the alternative needs p*q >= 4")
        else:
            if not 1 <= m <= p:
                raise ConfigurationError(f"Example {ex}: need 1 <= m <= p, got m={m}, p={p}")
            if ex == 7:
                if s not in (0, 0.7, 0.8):
                    raise ConfigurationError("Example 7: rho must be one of 0, 0.7, 0.8")
            else:
                _check_k(s, p, (10, 5), ex)
            if ex == 10:
                if p % 4:
                    raise ConfigurationError("Example 10: p must be divisible by 4 (L = p/4)")
                if s > p // 4:
                    raise ConfigurationError(f"Example 10: K = {s} exceeds L = p/4 = {p // 4}")
        return self

    @property
    def q(self) -> int:
        return self.p


def _check_k(k, p, denominators, ex):
    allowed = [Fraction(0)] + [Fraction(p, d) for d in denominators]
    if Fraction(k).limit_denominator() not in allowed or not float(k).is_integer():
        labels = ", ".join(["0"] + [f"p/{d}" for d in denominators])
        raise ConfigurationError(f"Example {ex}: K must be one of {{{labels}}} "
                                 f"(integer for p = {p}), got {k}")


def signal_value(label, p: int) -> float:
    """Parse ``"0"``, ``"p/20"``, ``"null"``, ``"alt"`` or a number."""
    s = str(label).strip().lower()
    if s in ("null", "h0"):
        return 0
    if s in ("alt", "alternative", "h1"):
        return 1
    if s.startswith("p/"):
        k = Fraction(p, int(s[2:]))
        return int(k) if k.denominator == 1 else float(k)
    v = float(s)
    return int(v) if v.is_integer() else v


@dataclass
class Dataset:
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray | None = None


class _Streams:
    def __init__(self, spec, perturb):
        self.base = RandomStream(spec.seed, spec.rep)
        self.perturb = set(perturb or ())

    def __call__(self, name):
        s = self.base.child(COMPONENTS[name])
        return s.child(1) if name in self.perturb else s


def generate(spec: ScenarioSpec, perturb=None) -> Dataset:
    """Draw one dataset of the given design.

    ``perturb`` names components whose stream is swapped for an independent
    one; it exists for structural dependence checks.
    """
    spec.validate()
    st = _Streams(spec, perturb)
    return _GENERATORS[spec.example](spec, st)


def _ex1(s, st):
    n, p, k = s.n, s.p, int(s.signal)
    x = t_draw(1, st("x"), (n, p))
    yt = t_draw(1, st("yt"), (n, p - k))
    y = np.hstack([safe_exp(x[:, :k]), yt])
    return Dataset(x, y)


def _ex2(s, st):
    n, p, k = s.n, s.p, int(s.signal)
    phi = t_draw(1, st("x"), (n, p))
    phit = t_draw(1, st("y"), (n, p))
    tau = normal_draw(st("tau"), n)[:, None]
    ind = (np.arange(p) < k).astype(float)[None, :]
    return Dataset(0.2 * phi + tau * ind, 0.2 * phit + tau * ind)


def _ex3(s, st):
    n, p, k = s.n, s.p, int(s.signal)
    xt = uniform_draw(st("xt"), (n, p), 0.0, 2 * math.pi)
    yt = uniform_draw(st("yt"), (n, p), 0.0, 2 * math.pi)
    tau = uniform_draw(st("tau"), (n, k), 0.0, 2 * math.pi)
    x, y = xt.copy(), yt.copy()
    x[:, :k] = np.sin(tau) ** 2
    y[:, :k] = np.cos(tau) ** 2
    return Dataset(x, y)


def cross_perturbation(p: int, q: int, stream_pos: RandomStream, stream_mag: RandomStream):
    """Four random positions of the ``p x q`` block and their U(0, 1) magnitudes,
    plus the shift ``upsilon`` that makes ``(1 + upsilon) I + Delta`` positive definite."""
    pos = stream_pos.generator().choice(p * q, size=4, replace=False)
    rows, cols = pos // q, pos % q
    mags = open_uniform(stream_mag.generator(), 4)
    d12 = np.zeros((p, q))
    d12[rows, cols] = mags
    r_idx, c_idx = np.unique(rows), np.unique(cols)
    # eigenvalues of Delta are +-singular values of Delta12
    smax = np.linalg.svd(d12[np.ix_(r_idx, c_idx)], compute_uv=False).max()
    lam_min = 1.0 - smax
    upsilon = (-lam_min + 0.05) if lam_min <= 0 else 0.0
    return rows, cols, mags, upsilon


def correlation_matrix(p, q, rows, cols, mags, upsilon) -> np.ndarray:
    """Dense ``(1 + upsilon) I + Delta`` (for inspection; generation stays sparse)."""
    r = (1.0 + upsilon) * np.eye(p + q)
    r[rows, p + cols] = mags
    r[p + cols, rows] = mags
    return r


def _gaussian_block(s, st):
    n, p = s.n, s.p
    # X and Y halves come from their own streams, so the null shares nothing
    g = np.hstack([normal_draw(st("x"), (n, p)), normal_draw(st("y"), (n, p))])
    if s.signal == 0:
        return g
    rows, cols, mags, ups = cross_perturbation(p, p, st("positions"), st("magnitudes"))
    idx = np.unique(np.concatenate([rows, p + cols]))
    sub = correlation_matrix(p, p, rows, cols, mags, ups)[np.ix_(idx, idx)]
    out = g * math.sqrt(1.0 + ups)
    out[:, idx] = g[:, idx] @ np.linalg.cholesky(sub).T
    return out


def _ex4(s, st):
    phi = _gaussian_block(s, st)
    return Dataset(phi[:, :s.p], phi[:, s.p:])


def _ex5(s, st):
    theta = np.cbrt(_gaussian_block(s, st))
    return Dataset(theta[:, :s.p], theta[:, s.p:])


def _pairs(m, count):
    out = [(a, b) for a in range(m) for b in range(a + 1, m)]
    return out[:count]


def _ex6(s, st):
    n, p, m, k = s.n, s.p, s.m, int(s.signal)
    st_count = min(m * (m - 1) // 2, p)
    z = t_draw(2, st("z"), (n, m))
    xt = t_draw(2, st("xt"), (n, p - st_count))
    yt = t_draw(2, st("yt"), (n, p - st_count))
    tau = t_draw(1, st("tau"), (n, k))
    w = tau + 3.0 * tau ** 3
    pairs = _pairs(m, st_count)
    a = np.array([i for i, _ in pairs], dtype=int)
    b = np.array([j for _, j in pairs], dtype=int)
    x = np.hstack([z[:, a] * z[:, b], xt])
    y = np.hstack([z[:, a] + z[:, b], yt])
    x[:, :k] += w
    y[:, :k] += w
    return Dataset(x, y, z)


def _ex7(s, st):
    n, p, m, rho = s.n, s.p, s.m, float(s.signal)
    beta = 5.0 * rho / (2.0 * math.sqrt(1.0 - rho ** 2))
    z = uniform_draw(st("z"), (n, m), -1.0, 1.0)
    xt = normal_draw(st("xt"), (n, p - m))
    u = normal_draw(st("u"), (n, p))
    tau = normal_draw(st("tau"), (n, p - m))
    nu = uniform_draw(st("nu"), (n, m, 48), -0.25, 0.25).sum(axis=2)
    x = np.hstack([z + 0.25 * z ** 2 + nu, xt])
    y = beta * x + u
    y[:, :m] += z
    y[:, m:] += tau
    return Dataset(x, y, z)


def _ex8(s, st):
    n, p, m, k = s.n, s.p, s.m, int(s.signal)
    z = normal_draw(st("z"), (n, m))
    xt = normal_draw(st("xt"), (n, p - m))
    yt = normal_draw(st("yt"), (n, p - m))
    nu = normal_draw(st("nu"), (n, m))
    u = normal_draw(st("u"), (n, m))
    tau = t_draw(1, st("tau"), (n, k))
    phi = 0.7 * (z ** 3 / 5 + z / 2) + np.tanh(nu)
    phit = (z ** 3 / 4 + z) / 3 + u
    x = np.hstack([phi + phi ** 3 / 3 + np.tanh(phi / 3) / 2, xt])
    y = np.hstack([(phit + np.tanh(phit / 3)) ** 3, yt])
    x[:, :k] += 3.0 * tau
    y[:, :k] += 3.0 * tau
    return Dataset(x, y, z)


def _ex9(s, st):
    n, p, m, k = s.n, s.p, s.m, int(s.signal)
    z = normal_draw(st("z"), (n, m))
    xt = normal_draw(st("xt"), (n, p - m))
    yt = normal_draw(st("yt"), (n, p - m))
    nu = normal_draw(st("nu"), (n, m))
    u = normal_draw(st("u"), (n, m))
    tau = normal_draw(st("tau"), (n, k))
    phi = 0.5 * (z ** 3 / 7 + z / 2) + np.tanh(nu)
    phit = (z ** 3 / 2 + z) / 3 + u
    x = np.hstack([phi + phi ** 3 / 3, xt])
    y = np.hstack([phit + np.tanh(phit / 3), yt])
    x[:, :k] = 0.5 * x[:, :k] + 3.0 * np.cosh(tau)
    y[:, :k] = 0.5 * y[:, :k] + 3.0 * np.cosh(tau ** 2)
    return Dataset(x, y, z)


def _ex10(s, st):
    n, p, m, k = s.n, s.p, s.m, int(s.signal)
    L = p // 4
    z = normal_draw(st("z"), (n, m))
    xt = normal_draw(st("xt"), (n, p - L))
    yt = normal_draw(st("yt"), (n, p - L))
    nu = normal_draw(st("nu"), (n, L))
    u = normal_draw(st("u"), (n, L))
    tau = normal_draw(st("tau"), (n, k))
    zbar = z.mean(axis=1, keepdims=True)
    shock = np.zeros((n, L))
    shock[:, :k] = 3.0 * tau
    x = np.hstack([np.tanh(zbar + nu + shock), xt])
    y = np.hstack([(zbar + u + shock) ** 3, yt])
    return Dataset(x, y, z)


_GENERATORS = {1: _ex1, 2: _ex2, 3: _ex3, 4: _ex4, 5: _ex5,
               6: _ex6, 7: _ex7, 8: _ex8, 9: _ex9, 10: _ex10}


def write_csv(path, data: Dataset):
    """Write ``[X | Y | Z]`` with a header naming the blocks."""
    blocks = [("x", data.x), ("y", data.y)] + ([("z", data.z)] if data.z is not None else [])
    header = [f"{name}{j + 1}" for name, b in blocks for j in range(b.shape[1])]
    values = np.hstack([b for _, b in blocks])
    np.savetxt(path, values, delimiter=",", header=",".join(header), comments="", fmt="%.17g")
