"""Series construction: Poisson environments and field evaluation.

An environment is the full set of random ingredients for one realization:
arrival times Gamma_i (unit-rate Poisson), points V_i drawn from m-hat,
Rademacher signs gamma_i, and the weights w(V_i).  Field values are the
truncated sums

    X(t,u) = b(u) C_alpha(u)^(1/alpha(u))
             * sum_i gamma_i Gamma_i^(-1/alpha(u)) w(V_i)^(1/alpha(u)) f(t,u,V_i)

in ascending index order, and the diagonal path is Y(t) = X(t,t).

Each environment owns four independent generator substreams keyed by
(seed, index, stream): arrivals, points, signs, and the Gaussian draw used
by the optional truncation-tail completion.  Substreams make results
independent of batching: the same (seed, index) always yields the same
environment no matter how many workers produced its neighbours, and a
doubled-length environment extends the shorter one exactly (same prefix).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import zeta

from .kernels import ProcessSpec, pair_integral
from .stable import c_alpha

__all__ = [
    "PoissonEnvironment",
    "build_environment",
    "eval_field",
    "eval_diagonal_path",
    "PathSample",
    "TruncationReport",
    "truncation_diagnostic",
    "tail_covariance",
    "tail_sqrt",
    "tail_draw",
]

_STREAM_ARRIVALS = 0
_STREAM_POINTS = 1
_STREAM_SIGNS = 2
_STREAM_TAIL = 3


def _substream(seed: int, index: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, index, stream)))


@dataclass(frozen=True)
class PoissonEnvironment:
    arrivals: np.ndarray  # Gamma_1 < Gamma_2 < ... (ascending, length n_terms)
    points: np.ndarray    # V_i
    signs: np.ndarray     # gamma_i in {-1, +1}
    weights: np.ndarray   # w(V_i)
    n_terms: int
    seed: int
    index: int


def build_environment(spec: ProcessSpec, n_terms: int, seed: int,
                      index: int = 0) -> PoissonEnvironment:
    if n_terms < 1:
        raise ValueError(f"n_terms must be >= 1, got {n_terms!r}")
    g_arr = _substream(seed, index, _STREAM_ARRIVALS)
    g_pts = _substream(seed, index, _STREAM_POINTS)
    g_sgn = _substream(seed, index, _STREAM_SIGNS)
    arrivals = np.cumsum(g_arr.standard_exponential(n_terms))
    points, weights = spec.measure.sample(g_pts, n_terms)
    signs = np.where(g_sgn.random(n_terms) < 0.5, -1.0, 1.0)
    return PoissonEnvironment(arrivals=arrivals, points=points, signs=signs,
                              weights=weights, n_terms=n_terms, seed=seed,
                              index=index)


def _scale_at(spec: ProcessSpec, u: float) -> tuple[float, float]:
    """(prefactor b(u) C_alpha^(1/alpha), exponent 1/alpha(u))."""
    a = spec.alpha(u)
    if not 0.0 < a < 2.0:
        raise ValueError(f"alpha({u!r}) = {a!r} outside (0,2)")
    s = 1.0 / a
    return spec.b(u) * c_alpha(a) ** s, s


def eval_field(env: PoissonEnvironment, spec: ProcessSpec,
               t: float, u: float) -> float:
    """Truncated series value X(t,u) for one environment."""
    pref, s = _scale_at(spec, u)
    f = spec.kernel.evaluate(t, u, env.points)
    terms = env.signs * env.arrivals ** (-s) * env.weights ** s * f
    return pref * float(np.sum(terms))


@dataclass(frozen=True)
class PathSample:
    grid: np.ndarray
    values: np.ndarray
    n_terms: int
    seed: int
    index: int


def eval_diagonal_path(env: PoissonEnvironment, spec: ProcessSpec,
                       grid: Sequence[float]) -> PathSample:
    """Y(t) = X(t,t) on an arbitrary grid, one shared environment."""
    grid = np.asarray(grid, dtype=float)
    log_arr = np.log(env.arrivals)
    log_w = np.log(env.weights)
    values = np.empty(grid.shape[0])
    for i, t in enumerate(grid):
        pref, s = _scale_at(spec, float(t))
        f = spec.kernel.evaluate(float(t), float(t), env.points)
        values[i] = pref * float(np.sum(
            env.signs * np.exp(s * (log_w - log_arr)) * f))
    return PathSample(grid=grid, values=values, n_terms=env.n_terms,
                      seed=env.seed, index=env.index)


# ---------------------------------------------------------------------------
# truncation tail


def tail_covariance(spec: ProcessSpec, points: Sequence[tuple[float, float]],
                    n_terms: int) -> np.ndarray:
    """Covariance of the discarded series tail across field points (t,u).

    Conditionally on the Poisson points beyond the truncation index, each
    tail sum is a sign-symmetric sum of ~Gamma_i^(-1/alpha) factors; summing
    the per-index second moments gives

        Cov(T_A, T_B) = pref_A pref_B zeta(s_A + s_B, N+1) R_AB

    with R_AB the measure-weighted kernel pair integral.  The Hurwitz zeta
    uses E[Gamma_i^(-c)] ~ i^(-c) for the high arrival indices.
    """
    G = len(points)
    prefs = np.empty(G)
    ss = np.empty(G)
    for i, (t, u) in enumerate(points):
        prefs[i], ss[i] = _scale_at(spec, u)
    cov = np.empty((G, G))
    for i in range(G):
        for j in range(i, G):
            sbar = 0.5 * (ss[i] + ss[j])
            r = pair_integral(spec, points[i][0], points[i][1],
                              points[j][0], points[j][1], sbar)
            cov[i, j] = cov[j, i] = (prefs[i] * prefs[j]
                                     * zeta(ss[i] + ss[j], n_terms + 1.0) * r)
    return cov


def tail_sqrt(cov: np.ndarray) -> np.ndarray:
    """Matrix square root L with L L^T = cov.  Plain Cholesky when the
    covariance is positive definite; the eigenvalue square root otherwise
    (nearly-coincident grid points make these matrices rank deficient, and a
    zero row, e.g. the origin of a path, must stay exactly zero)."""
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        vals, vecs = np.linalg.eigh(cov)
        vals = np.clip(vals, 0.0, None)
        return vecs * np.sqrt(vals)[None, :]


def tail_draw(cov_chol: np.ndarray, seed: int, index: int) -> np.ndarray:
    """Gaussian tail-completion sample for one environment (stream 3)."""
    g = _substream(seed, index, _STREAM_TAIL)
    return cov_chol @ g.standard_normal(cov_chol.shape[0])


# ---------------------------------------------------------------------------
# diagnostics


@dataclass(frozen=True)
class TruncationReport:
    n_terms: int
    pilot: int
    max_discrepancy: float  # coupled N vs 2N path difference, sup over grid
    tail_proxy: float       # zeta-based tail sd bound scaled by max |w^s f|


def truncation_diagnostic(spec: ProcessSpec, grid: Sequence[float],
                          n_terms: int, seed: int,
                          pilot: int = 8) -> TruncationReport:
    """Compare pilot paths at N terms against the same environments extended
    to 2N (substreams share prefixes, so the extension is exact)."""
    grid = np.asarray(grid, dtype=float)
    worst = 0.0
    max_term = 0.0
    for p in range(pilot):
        env2 = build_environment(spec, 2 * n_terms, seed, p)
        env1 = PoissonEnvironment(
            arrivals=env2.arrivals[:n_terms], points=env2.points[:n_terms],
            signs=env2.signs[:n_terms], weights=env2.weights[:n_terms],
            n_terms=n_terms, seed=seed, index=p)
        y1 = eval_diagonal_path(env1, spec, grid).values
        y2 = eval_diagonal_path(env2, spec, grid).values
        worst = max(worst, float(np.max(np.abs(y2 - y1))))
        for t in grid:
            _, s = _scale_at(spec, float(t))
            f = spec.kernel.evaluate(float(t), float(t), env2.points)
            max_term = max(max_term, float(np.max(
                np.abs(env2.weights ** s * f))))
    tail_sum = float(zeta(2.0 / spec.d, n_terms + 1.0))
    return TruncationReport(n_terms=n_terms, pilot=pilot,
                            max_discrepancy=worst,
                            tail_proxy=math.sqrt(tail_sum) * max_term)
