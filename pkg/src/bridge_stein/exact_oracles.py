"""Closed-form laws and independent exact samplers.

These are the ground truth the dynamics are checked against: the law of
the number of jump pairs of each bridge, samplers that draw bridges
directly rather than by running a chain, an independence
Metropolis-Hastings sampler for bridges of walks with level-dependent
rates, the exact 1-Wasserstein distance between integer laws, and the
solution of the Stein equation of the birth-death chain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .config_space import HypercubeConfig, LatticeConfig
from .rates import RateFamily, log_density_M
from .rng import as_generator

__all__ = [
    "IntegerLaw",
    "bessel_I0",
    "bessel_I0_quadrature",
    "poisson_diag_pmf",
    "poisson_diag_law",
    "hypercube_pair_law",
    "sample_bridge_exact",
    "sample_scheme_bridge_exact",
    "scheme_acceptance_probability",
    "MHRun",
    "sample_nonhomogeneous_bridge_mh",
    "exact_w1_integer",
    "solve_birth_death_stein",
]

TAIL = 1e-12


@dataclass(frozen=True)
class IntegerLaw:
    """Probability law on ``{0, 1, ..., len(pmf) - 1}``.

    Attributes
    ----------
    pmf : numpy.ndarray
        Probabilities of ``0, 1, ...``.
    tail_bound : float
        Upper bound on the mass beyond the last entry.
    """

    pmf: np.ndarray
    tail_bound: float = 0.0

    def __post_init__(self):
        pmf = np.asarray(self.pmf, dtype=float)
        if pmf.ndim != 1 or len(pmf) == 0:
            raise ValueError("pmf must be a nonempty vector")
        if (pmf < 0).any():
            raise ValueError("pmf entries must be nonnegative")
        if abs(pmf.sum() - 1.0) > self.tail_bound + 1e-12:
            raise ValueError("pmf does not sum to 1 within its tail bound")
        object.__setattr__(self, "pmf", pmf)

    def cdf(self) -> np.ndarray:
        return np.cumsum(self.pmf)

    def mean(self) -> float:
        return float(np.dot(np.arange(len(self.pmf)), self.pmf))

    def shifted(self, k: int) -> "IntegerLaw":
        """Law of ``X + k`` for a nonnegative integer ``k``."""
        return IntegerLaw(np.concatenate((np.zeros(k), self.pmf)), self.tail_bound)

    def sample(self, gen: np.random.Generator, size=None):
        """Inverse-CDF sampling."""
        cdf = self.cdf()
        cdf[-1] = 1.0
        u = gen.random(size)
        return np.searchsorted(cdf, u, side="right")


def bessel_I0(x: float) -> float:
    """Modified Bessel function of the first kind of order zero.

    Sums ``(x/2)^(2k) / (k!)^2`` until the next term drops below
    ``1e-16`` times the partial sum.

    Examples
    --------
    >>> bessel_I0(0.0)
    1.0
    """
    if x < 0:
        raise ValueError("bessel_I0 is defined here for x >= 0")
    q = 0.25 * x * x
    term = 1.0
    total = 1.0
    k = 0
    while True:
        k += 1
        term *= q / (k * k)
        total += term
        if term < 1e-16 * total:
            return total


def bessel_I0_quadrature(x: float) -> float:
    """``(1/pi) * int_0^pi exp(x cos t) dt`` by adaptive quadrature."""
    from scipy.integrate import quad

    val, _ = quad(lambda t: math.exp(x * math.cos(t)), 0.0, math.pi,
                  epsabs=0.0, epsrel=1e-13, limit=200)
    return val / math.pi


def _ratio_law(ratio: Callable[[int], float]) -> IntegerLaw:
    """Normalised law from successive weight ratios ``w(n+1)/w(n)``."""
    weights = [1.0]
    n = 0
    while True:
        w = weights[-1] * ratio(n)
        weights.append(w)
        n += 1
        total = sum(weights)
        # remaining mass is at most w * r/(1-r) with r the next ratio,
        # which decreases in n once below 1
        r = ratio(n)
        if r < 0.5 and w * r / (1.0 - r) < TAIL * total:
            tail = w * r / (1.0 - r) / total
            break
    pmf = np.array(weights) / total
    return IntegerLaw(pmf, tail)


def poisson_diag_law(lam: float) -> IntegerLaw:
    """Law of a Poisson pair conditioned on equality, with product ``lam``.

    ``P(n) = lam**n / (n!)**2 / I0(2 sqrt(lam))``, truncated where the
    remaining mass drops below ``1e-12``.
    """
    if not lam > 0:
        raise ValueError("lam must be positive")
    return _ratio_law(lambda n: lam / ((n + 1) ** 2))


def poisson_diag_pmf(lam: float, n: int) -> float:
    """``lam**n / (n!)**2 / I0(2 sqrt(lam))``."""
    if not lam > 0:
        raise ValueError("lam must be positive")
    if n < 0:
        return 0.0
    log_p = n * math.log(lam) - 2.0 * math.lgamma(n + 1)
    return math.exp(log_p) / bessel_I0(2.0 * math.sqrt(lam))


def hypercube_pair_law(alpha: float) -> IntegerLaw:
    """Law of the number of jump pairs of the hypercube bridge.

    The jump count is Poisson(``alpha``) conditioned to be even, so
    ``P(m pairs)`` is proportional to ``alpha**(2m) / (2m)!``.
    """
    if alpha <= 0:
        return IntegerLaw(np.array([1.0]), 0.0)
    a2 = alpha * alpha
    return _ratio_law(lambda m: a2 / ((2 * m + 1) * (2 * m + 2)))


def _sorted_uniforms(gen, k):
    return tuple(np.sort(gen.random(k)).tolist())


def sample_bridge_exact(variant, seed, size=None):
    """Draw bridge configurations directly from the bridge law.

    Parameters
    ----------
    variant : Hypercube or Lattice
        From :mod:`bridge_stein.chain_dynamics`.
    seed : int or numpy.random.Generator
    size : int, optional
        Number of draws; ``None`` returns a single configuration.

    Returns
    -------
    HypercubeConfig or LatticeConfig, or a list of them
    """
    from .chain_dynamics import Hypercube, Lattice

    gen = as_generator(seed)
    n = 1 if size is None else int(size)
    if isinstance(variant, Hypercube):
        counts = hypercube_pair_law(variant.alpha).sample(gen, n)
        out = [HypercubeConfig(_sorted_uniforms(gen, 2 * int(m))) for m in counts]
    elif isinstance(variant, Lattice):
        counts = poisson_diag_law(variant.j_plus * variant.j_minus).sample(gen, n)
        out = [LatticeConfig(_sorted_uniforms(gen, int(m)), _sorted_uniforms(gen, int(m)))
               for m in counts]
    else:
        raise TypeError("exact sampling is available for hypercube and lattice bridges")
    return out[0] if size is None else out


def sample_scheme_bridge_exact(N: int, seed, size=None):
    """Draw from the bridge of the discretised walk with ``N`` steps.

    Each block ``((j-1)/N, j/N]`` carries an increment ``+1`` or ``-1``
    with probability ``1/N`` each (``0`` otherwise) at a uniform time in
    the block.  Paths are accepted when the increments sum to zero.
    """
    if int(N) != N or N < 3:
        raise ValueError("N must be an integer >= 3")
    gen = as_generator(seed)
    n = 1 if size is None else int(size)
    out = []
    p = 1.0 / N
    while len(out) < n:
        u = gen.random(N)
        xi = np.where(u < p, 1, np.where(u < 2 * p, -1, 0))
        tau = (np.arange(N) + 1.0 - gen.random(N)) / N
        if xi.sum() != 0:
            continue
        out.append(LatticeConfig(tuple(tau[xi == 1].tolist()),
                                 tuple(tau[xi == -1].tolist())))
    return out[0] if size is None else out


def scheme_acceptance_probability(N: int) -> float:
    """Exact probability that the scheme increments sum to zero.

    ``sum_m C(N, m) C(N - m, m) N**(-2m) (1 - 2/N)**(N - 2m)``.
    """
    total = 0.0
    log_q = math.log1p(-2.0 / N)
    for m in range(N // 2 + 1):
        log_term = (math.lgamma(N + 1) - 2 * math.lgamma(m + 1) - math.lgamma(N - 2 * m + 1)
                    - 2 * m * math.log(N) + (N - 2 * m) * log_q)
        total += math.exp(log_term)
    return total


@dataclass
class MHRun:
    """Output of the independence Metropolis-Hastings sampler.

    Attributes
    ----------
    samples : list of LatticeConfig
        Retained states after burn-in and thinning.
    accepted : int
    proposed : int
    log_ratios : list of float
        Log acceptance ratios ``log M(proposal) - log M(current)`` of every
        proposal, in order.
    """

    samples: list
    accepted: int
    proposed: int
    log_ratios: list

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.proposed if self.proposed else float("nan")


def sample_nonhomogeneous_bridge_mh(rates: RateFamily, iterations: int, seed,
                                    burn_in: int = 1000, thin: int = 10) -> MHRun:
    """Independence sampler targeting the bridge of a walk with rates ``a``, ``b``.

    Proposals are unit-rate lattice bridges drawn exactly; the bridge of
    interest has density proportional to ``M`` with respect to them, so
    a proposal is accepted with probability ``min(1, M(new)/M(old))``.

    Parameters
    ----------
    rates : RateFamily
    iterations : int
        Number of proposals after burn-in; at least 1000.
    seed : int or numpy.random.Generator
    burn_in, thin : int
    """
    if iterations < 1000:
        raise ValueError("iterations must be >= 1000")
    gen = as_generator(seed)
    law = poisson_diag_law(1.0)
    total = burn_in + iterations
    counts = law.sample(gen, total)
    current = LatticeConfig()
    log_m = log_density_M(current, rates)
    if not math.isfinite(log_m):
        raise ValueError("degenerate rates: density is not finite")
    samples, log_ratios = [], []
    accepted = 0
    for it in range(total):
        m = int(counts[it])
        prop = LatticeConfig(_sorted_uniforms(gen, m), _sorted_uniforms(gen, m))
        log_p = log_density_M(prop, rates)
        ratio = log_p - log_m
        log_ratios.append(ratio)
        if ratio >= 0 or math.log1p(-gen.random()) < ratio:
            current, log_m = prop, log_p
            accepted += 1
        if it >= burn_in and (it - burn_in) % thin == 0:
            samples.append(current)
    return MHRun(samples, accepted, total, log_ratios)


def exact_w1_integer(law_a: IntegerLaw, law_b: IntegerLaw):
    """Exact 1-Wasserstein distance between two laws on the integers.

    Returns
    -------
    (float, float)
        ``sum_n |F_A(n) - F_B(n)|`` over the common support, and the
        truncation uncertainty ``tail_A + tail_B``.

    Raises
    ------
    ValueError
        If either law is truncated more coarsely than ``1e-12``.
    """
    if law_a.tail_bound > TAIL or law_b.tail_bound > TAIL:
        raise ValueError("laws must be truncated with tail mass <= 1e-12")
    n = max(len(law_a.pmf), len(law_b.pmf))
    fa = np.cumsum(np.pad(law_a.pmf, (0, n - len(law_a.pmf))))
    fb = np.cumsum(np.pad(law_b.pmf, (0, n - len(law_b.pmf))))
    return float(np.abs(fa - fb).sum()), law_a.tail_bound + law_b.tail_bound


def solve_birth_death_stein(lam: float, g: Callable[[int], float], n_max: int) -> np.ndarray:
    """Increments of the solution of the birth-death Stein equation.

    Solves ``lam (f(n+1) - f(n)) + n**2 (f(n-1) - f(n)) = g(n) - E g``
    with ``E`` the stationary law.  Summing detailed balance from above
    gives

    ``Df(n) = -(1 / (lam pi(n))) sum_{k > n} pi(k) (g(k) - E g)``,

    which avoids the cancellation of the equivalent sum from below.

    Parameters
    ----------
    lam : float
        Birth rate.
    g : callable
        Test function on the nonnegative integers.
    n_max : int
        Increments are returned for ``n = 0, ..., n_max``.

    Returns
    -------
    numpy.ndarray
        ``Df(0), ..., Df(n_max)``.
    """
    if not lam > 0:
        raise ValueError("lam must be positive")
    law = poisson_diag_law(lam)
    if n_max + 1 < len(law.pmf):
        raise ValueError(
            f"n_max too small: the stationary law needs {len(law.pmf) - 1} "
            "levels for a tail mass of 1e-12")
    top = max(n_max + 1, len(law.pmf)) + 60
    # ratios pi(k+1)/pi(k) = lam/(k+1)^2, accumulated in log space
    log_pi = np.concatenate(([0.0], np.cumsum(
        [math.log(lam) - 2.0 * math.log(k + 1) for k in range(top)])))
    pi = np.exp(log_pi - log_pi.max())
    pi /= pi.sum()
    gv = np.array([float(g(k)) for k in range(top + 1)])
    h = gv - float(np.dot(pi, gv))
    out = np.empty(n_max + 1)
    for n in range(n_max + 1):
        # tail sum divided by pi(n), using pi(k)/pi(n) = prod of ratios
        acc = 0.0
        ratio = 1.0
        for k in range(n + 1, top + 1):
            ratio *= lam / (k * k)
            acc += ratio * h[k]
            if ratio < 1e-300:
                break
        out[n] = -acc / lam
    return out
