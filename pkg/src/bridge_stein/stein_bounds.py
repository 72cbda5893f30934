"""Wasserstein bounds between bridge laws.

Closed forms
------------
* Poisson pair conditioned on the diagonal, products ``lam1*lam2`` vs
  ``mu1*mu2``: ``9 |lam1 lam2 - mu1 mu2|``.
* Hypercube bridges with rates ``alpha`` and ``beta``:
  ``9/2 |alpha^2 - beta^2|``, summed over coordinates in dimension ``d``.
* Lattice bridges with rates ``(j+, j-)`` and ``(h+, h-)``:
  ``9 |j+ j- - h+ h-|``, summed over coordinates in dimension ``d``.
* Reversible walks with ``|Xi(j+1) - Xi(j)| <= kappa`` against the simple
  walk: ``9 (2 (e^kappa - 1 - kappa) / kappa^2 - 1)``.
* Constant-speed walks with ``nu <= a(j) b(j+1) <= mu``:
  ``9 (mu I0(2 mu / sqrt(nu)) / I0(2 sqrt(nu)) - sqrt(mu nu) + |1 - sqrt(mu nu)|)``.
* Discretisation with ``N`` steps:
  ``9 (9N^3 - 54N^2 + 64N - 16) / (N (N - 2)^3)``.

Monte Carlo
-----------
For general level-dependent rates the bound is
``9 E[sup_{u,v} |H(U, u, v) - 1|]`` under the bridge law, estimated
from Metropolis-Hastings draws.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exact_oracles import bessel_I0, sample_nonhomogeneous_bridge_mh
from .rates import RateFamily, addition_log_ratio_grid, addition_log_ratio_range

__all__ = ["BoundReport", "bound_homogeneous", "bound_reversible",
           "bound_constant_speed", "bound_scheme", "estimate_bound_nonhomogeneous"]


@dataclass
class BoundReport:
    """A bound value with the inputs that produced it.

    Attributes
    ----------
    variant : str
    inputs : dict
    value : float
    se : float or None
        Standard error, present for Monte Carlo estimates only.
    extras : dict
        Intermediate quantities and diagnostics.
    """

    variant: str
    inputs: dict
    value: float
    se: Optional[float] = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.value >= 0:
            raise ValueError(f"bound value must be nonnegative, got {self.value!r}")

    def to_dict(self) -> dict:
        out = {"variant": self.variant, "inputs": self.inputs,
               "value": self.value, "se": self.se}
        if self.extras:
            out["extras"] = self.extras
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=False)


def _positive(name, x):
    if not x > 0:
        raise ValueError(f"{name} must be positive, got {x!r}")


def bound_homogeneous(variant: str, params: dict) -> BoundReport:
    """Closed-form bound between two homogeneous bridge laws.

    Parameters
    ----------
    variant : {'poisson', 'hypercube', 'lattice', 'hypercube_d', 'lattice_d'}
    params : dict
        ``poisson``: ``lam`` and ``mu``, the two products.
        ``hypercube``: ``alpha``, ``beta``.
        ``lattice``: ``j_plus``, ``j_minus``, ``h_plus``, ``h_minus``.
        ``hypercube_d``: sequences ``alpha``, ``beta``.
        ``lattice_d``: sequences ``j_plus``, ``j_minus``, ``h_plus``,
        ``h_minus``.

    Examples
    --------
    >>> bound_homogeneous("hypercube", {"alpha": 2.0, "beta": 1.0}).value
    13.5
    """
    p = dict(params)
    if variant == "poisson":
        _positive("lam", p["lam"])
        _positive("mu", p["mu"])
        value = 9.0 * abs(p["lam"] - p["mu"])
    elif variant == "hypercube":
        _positive("alpha", p["alpha"])
        _positive("beta", p["beta"])
        value = 4.5 * abs(p["alpha"] ** 2 - p["beta"] ** 2)
    elif variant == "lattice":
        for k in ("j_plus", "j_minus", "h_plus", "h_minus"):
            _positive(k, p[k])
        value = 9.0 * abs(p["j_plus"] * p["j_minus"] - p["h_plus"] * p["h_minus"])
    elif variant == "hypercube_d":
        a = list(p["alpha"])
        b = list(p["beta"])
        if len(a) != len(b) or not a:
            raise ValueError("alpha and beta must have the same nonzero length")
        for x in a + b:
            _positive("rate", x)
        value = 4.5 * sum(abs(x * x - y * y) for x, y in zip(a, b))
        p = {"alpha": a, "beta": b}
    elif variant == "lattice_d":
        cols = [list(p[k]) for k in ("j_plus", "j_minus", "h_plus", "h_minus")]
        if len({len(c) for c in cols}) != 1 or not cols[0]:
            raise ValueError("rate vectors must have the same nonzero length")
        for c in cols:
            for x in c:
                _positive("rate", x)
        value = 9.0 * sum(abs(jp * jm - hp * hm) for jp, jm, hp, hm in zip(*cols))
        p = dict(zip(("j_plus", "j_minus", "h_plus", "h_minus"), cols))
    else:
        raise ValueError(f"unknown homogeneous variant {variant!r}")
    return BoundReport(variant, p, float(value))


def bound_reversible(kappa: float) -> BoundReport:
    """``9 (2 (e^kappa - 1 - kappa) / kappa^2 - 1)``, zero at ``kappa = 0``.

    For small ``kappa`` the bracket is evaluated from its series
    ``kappa/3 + kappa^2/12 + kappa^3/60 + ...`` to avoid cancellation.
    """
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    if kappa < 1e-3:
        # 2 (e^k - 1 - k)/k^2 - 1 = sum_{n>=1} 2 k^n / (n+2)!
        inner = 0.0
        term = 1.0
        for n in range(1, 12):
            term *= kappa
            inner += 2.0 * term / math.factorial(n + 2)
    else:
        inner = 2.0 * (math.expm1(kappa) - kappa) / (kappa * kappa) - 1.0
    return BoundReport("reversible", {"kappa": kappa}, 9.0 * inner)


def bound_constant_speed(mu: float, nu: float) -> BoundReport:
    """Bound for constant-speed walks with ``nu <= a(j) b(j+1) <= mu``."""
    _positive("nu", nu)
    if mu < nu:
        raise ValueError("need mu >= nu")
    ratio = bessel_I0(2.0 * mu / math.sqrt(nu)) / bessel_I0(2.0 * math.sqrt(nu))
    g = math.sqrt(mu * nu)
    value = 9.0 * (mu * ratio - g + abs(1.0 - g))
    return BoundReport("constant_speed", {"mu": mu, "nu": nu}, value,
                       extras={"bessel_ratio": ratio})


def bound_scheme(N: int) -> BoundReport:
    """``9 (9N^3 - 54N^2 + 64N - 16) / (N (N - 2)^3)`` for ``N >= 3``.

    Examples
    --------
    >>> round(bound_scheme(10).value, 12)
    7.425
    """
    if int(N) != N or N < 3:
        raise ValueError("N must be an integer >= 3")
    N = int(N)
    num = 9 * (9 * N ** 3 - 54 * N ** 2 + 64 * N - 16)
    return BoundReport("scheme", {"N": N}, num / (N * (N - 2) ** 3))


def _sup_abs_h_minus_one(config, rates, probe):
    lo, hi = addition_log_ratio_range(config, rates)
    if probe:
        g = addition_log_ratio_grid(config, rates, probe)
        if g.size:
            lo = min(lo, float(g.min()))
            hi = max(hi, float(g.max()))
    return max(math.expm1(hi), -math.expm1(lo))


def _mean_abs_h_minus_one(config, rates, gen, n_points):
    from .rates import _Tables  # closed-form evaluator shared with the sup search

    total = 0.0
    u = gen.random(n_points)
    v = gen.random(n_points)
    for direction in (1, -1):
        tab = _Tables(config, rates, direction)
        mask = (u < v) if direction > 0 else (u > v)
        left = np.minimum(u, v)[mask]
        right = np.maximum(u, v)[mask]
        i = np.searchsorted(tab.edges, left, side="right") - 1
        j = np.searchsorted(tab.edges, right, side="right") - 1
        total += float(np.abs(np.expm1(tab.value(i, left, j, right))).sum())
    return total / n_points


def _batch_se(x, batches=20):
    x = np.asarray(x, dtype=float)
    if len(x) < 2 * batches:
        return float(x.std(ddof=1) / math.sqrt(len(x)))
    means = np.array([b.mean() for b in np.array_split(x, batches)])
    return float(means.std(ddof=1) / math.sqrt(batches))


def estimate_bound_nonhomogeneous(rates: RateFamily, samples: int, seed,
                                  functional: str = "sup", probe: int = 32,
                                  thin: int = 10, burn_in: int = 1000,
                                  integral_points: int = 4096) -> BoundReport:
    """Monte Carlo bound for a walk with level-dependent rates.

    Estimates ``9 E[S(U)]`` under the bridge law of ``rates``, with

    * ``functional="sup"``: ``S(U) = sup_{u,v} |H(U, u, v) - 1|``, found
      exactly from the cell corners and cross-checked on a ``probe x
      probe`` grid;
    * ``functional="integral"``: ``S(U) = int int |H(U, u, v) - 1| du dv``,
      by Monte Carlo over ``(u, v)``.

    The sup version is never smaller than the integral version.

    Parameters
    ----------
    rates : RateFamily
    samples : int
        Number of retained bridge draws.
    seed : int or numpy.random.Generator
    functional : {'sup', 'integral'}
    probe : int
        Grid size of the safety-net search (0 disables).
    thin, burn_in : int
        Passed to the Metropolis-Hastings sampler.
    integral_points : int
        Points per configuration for the integral functional.

    Returns
    -------
    BoundReport
        ``se`` is a batch-means standard error.  ``extras`` holds the
        sampler acceptance rate and a heavy-tail flag set when the top 1%
        of draws carry more than half of the mean.
    """
    from .rng import as_generator

    if functional not in ("sup", "integral"):
        raise ValueError("functional must be 'sup' or 'integral'")
    if samples < 2:
        raise ValueError("samples must be >= 2")
    gen = as_generator(seed)
    iterations = max(1000, samples * thin)
    run = sample_nonhomogeneous_bridge_mh(rates, iterations, gen, burn_in=burn_in, thin=thin)
    draws = run.samples[:samples]
    if functional == "sup":
        vals = np.array([_sup_abs_h_minus_one(c, rates, probe) for c in draws])
    else:
        vals = np.array([_mean_abs_h_minus_one(c, rates, gen, integral_points)
                         for c in draws])
    if not np.isfinite(vals).all():
        raise FloatingPointError("inner evaluation produced a non-finite value")
    mean = float(vals.mean())
    top = np.sort(vals)[::-1][:max(1, len(vals) // 100)]
    heavy = bool(mean > 0 and top.sum() / vals.sum() > 0.5)
    inputs = {"rates": rates.name, **rates.params, "samples": len(draws),
              "functional": functional}
    return BoundReport("nonhomogeneous", inputs, 9.0 * mean, 9.0 * _batch_se(vals),
                       extras={"acceptance_rate": run.acceptance_rate,
                               "heavy_tail": heavy})
