"""Monte-Carlo size/power harness over the simulation designs."""
from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

from ._normal import derive_seed
from ._validation import check_multiplier
from .ci_fnn import ci_fnn_test
from .ci_lasso import ci_lasso_residuals
from .exceptions import ConfigurationError
from .independence import independence_test, kronecker_test
from .simulate import IND_EXAMPLES, ScenarioSpec, generate

TESTS = ("ind", "ci-lasso", "ci-fnn")


@dataclass
class BenchResult:
    scenario: ScenarioSpec
    test: str
    multiplier: str
    replications: int
    rejections: int
    wall_time: float

    @property
    def rejection_rate(self) -> float:
        return self.rejections / self.replications

    @property
    def std_error(self) -> float:
        r = self.rejection_rate
        return math.sqrt(r * (1.0 - r) / self.replications)

    def row(self) -> dict:
        """Table row with rates in percent (one decimal)."""
        s = self.scenario
        return {"example": s.example, "n": s.n, "p": s.p, "m": s.m, "signal": s.signal,
                "test": self.test, "multiplier": self.multiplier,
                "replications": self.replications,
                "rate_pct": round(100.0 * self.rejection_rate, 1),
                "se_pct": round(100.0 * self.std_error, 1),
                "wall_time": round(self.wall_time, 2)}


@dataclass(frozen=True)
class _Job:
    spec: ScenarioSpec
    test: str
    multipliers: tuple
    n_bootstrap: int
    alpha: float
    options: tuple  # extra keyword arguments for the test, as sorted items


def _one_replication(job: _Job, rep: int) -> tuple:
    spec = ScenarioSpec(**{**asdict(job.spec), "rep": rep})
    data = generate(spec)
    seed = derive_seed(spec.seed, 1, rep)
    opts = dict(job.options)
    kw = dict(n_bootstrap=job.n_bootstrap, alpha=job.alpha, seed=seed)
    if job.test == "ind":
        return tuple(independence_test(data.x, data.y, multiplier=k, **kw, **opts).reject
                     for k in job.multipliers)
    if job.test == "ci-lasso":
        eps, delta, _, m = ci_lasso_residuals(data.x, data.y, data.z, seed=seed, **opts)
        return tuple(kronecker_test(eps, delta, test="ci-lasso", multiplier=k, m=m, **kw).reject
                     for k in job.multipliers)
    return tuple(ci_fnn_test(data.x, data.y, data.z, multiplier=k, **kw, **opts).reject
                 for k in job.multipliers)


def _run_chunk(args):
    job, reps = args
    return [_one_replication(job, r) for r in reps]


def run_bench(spec: ScenarioSpec, replications: int, test: str = "ind",
              multipliers=("rademacher",), n_bootstrap: int = 5000, alpha: float = 0.05,
              workers: int = 1, **test_options) -> list[BenchResult]:
    """Rejection rates of ``replications`` generate-then-test cycles.

    Replication ``r`` draws its data with ``ScenarioSpec(..., rep=r)`` and
    bootstraps with a seed derived from ``(spec.seed, r)``, so the result does
    not depend on ``workers``.  All multipliers are applied to the same data.
    """
    if replications < 1:
        raise ConfigurationError("replications must be at least 1")
    if test not in TESTS:
        raise ConfigurationError(f"test must be one of {TESTS}")
    spec.validate()
    if (test == "ind") != (spec.example in IND_EXAMPLES):
        family = "ind" if spec.example in IND_EXAMPLES else "ci-lasso or ci-fnn"
        raise ConfigurationError(f"Example {spec.example} is run with the {family} test")
    if isinstance(multipliers, str):
        multipliers = (multipliers,)
    for k in multipliers:
        check_multiplier(k)
    job = _Job(spec, test, tuple(multipliers), n_bootstrap, alpha,
               tuple(sorted(test_options.items())))
    start = time.perf_counter()
    reps = list(range(replications))
    if workers > 1:
        chunks = [reps[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, [(job, c) for c in chunks]))
        outcome = [None] * replications
        for c, part in zip(chunks, parts):
            for r, o in zip(c, part):
                outcome[r] = o
    else:
        outcome = _run_chunk((job, reps))
    wall = time.perf_counter() - start
    return [BenchResult(spec, test, k, replications, sum(bool(o[i]) for o in outcome), wall)
            for i, k in enumerate(multipliers)]

