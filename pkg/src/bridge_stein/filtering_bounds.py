"""Explicit Wasserstein bounds between nonlinear and linear filters.

The linear system ``dX = dV``, ``dZ = alpha X dt + dU`` has a Gaussian
conditional law given the observation ``z``.  Its mean ``phi`` and
covariance ``sigma_{s,t}`` are explicit.  Adding a drift ``b`` to the
signal changes the conditional law.  The distance between the two laws
is bounded in terms of ``phi``, ``sigma``, the constants ``K``, ``gamma``,
``M`` of the drift and the largest positive root of a polynomial.

Two regimes are covered: :func:`bound_theorem1` for ``gamma in [1/2, 1)``
and :func:`bound_theorem2` for ``gamma in (0, 1/2)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .rng import as_generator
from .stein_bounds import BoundReport

__all__ = [
    "LinearModel",
    "DriftSpec",
    "ObservationPath",
    "RootResult",
    "NumericalFailure",
    "conditional_cov",
    "conditional_cov_matrix",
    "sigma_T",
    "conditional_mean_phiT",
    "conditional_mean_path",
    "gaussian_sup_moment",
    "calW",
    "largest_positive_root",
    "simpson",
    "bound_theorem1",
    "bound_theorem2",
]

SMALL_ALPHA_T = 1e-4


class NumericalFailure(ArithmeticError):
    """A numerical step (factorisation, root search) did not succeed."""


@dataclass(frozen=True)
class LinearModel:
    """Observation strength ``alpha`` and horizon ``T``."""

    alpha: float
    T: float

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("T must be positive")
        if not math.isfinite(self.alpha):
            raise ValueError("alpha must be finite")


@dataclass(frozen=True)
class DriftSpec:
    """Constants of the drift: ``|b'(x)| <= K (1 + |x|)^-gamma``, ``|b''| <= M``.

    Parameters
    ----------
    b0 : float
        Value ``b(0)``.
    K, gamma, M : float
    b, db, d2b : callable, optional
        The drift and its derivatives, used only by :meth:`check`.
    """

    b0: float
    K: float
    gamma: float
    M: float
    b: Optional[Callable[[float], float]] = None
    db: Optional[Callable[[float], float]] = None
    d2b: Optional[Callable[[float], float]] = None

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if self.K < 0 or self.M < 0:
            raise ValueError("K and M must be nonnegative")

    @property
    def is_zero(self) -> bool:
        return self.b0 == 0 and self.K == 0 and self.M == 0

    def beta_prime(self, x):
        """``b b' + b''/2``, available when the evaluators are supplied."""
        if self.b is None or self.db is None or self.d2b is None:
            raise ValueError("drift evaluators were not supplied")
        return self.b(x) * self.db(x) + 0.5 * self.d2b(x)

    def check(self, xs: Sequence[float], tol: float = 1e-12) -> bool:
        """Verify the two hypotheses on the points ``xs``."""
        if self.db is None or self.d2b is None:
            raise ValueError("drift evaluators were not supplied")
        for x in xs:
            if abs(self.db(x)) > self.K * (1 + abs(x)) ** (-self.gamma) + tol:
                return False
            if abs(self.d2b(x)) > self.M + tol:
                return False
        if self.b is not None and abs(self.b(0.0) - self.b0) > tol:
            return False
        return True


@dataclass(frozen=True)
class ObservationPath:
    """Observation sampled on a grid ``0 = t_0 < ... < t_n = T``."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if g.ndim != 1 or g.shape != v.shape or len(g) < 2:
            raise ValueError("grid and values must be equal-length vectors of length >= 2")
        if g[0] != 0.0 or not (np.diff(g) > 0).all():
            raise ValueError("grid must start at 0 and increase strictly")
        if v[0] != 0.0:
            raise ValueError("observation must start at 0")
        if not np.isfinite(v).all():
            raise ValueError("observation values must be finite")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)

    @property
    def T(self) -> float:
        return float(self.grid[-1])

    @classmethod
    def from_function(cls, f: Callable[[float], float], T: float, n: int) -> "ObservationPath":
        grid = np.linspace(0.0, T, n + 1)
        return cls(grid, np.array([f(t) for t in grid]) - f(0.0))

    @classmethod
    def zero(cls, T: float, n: int = 1024) -> "ObservationPath":
        grid = np.linspace(0.0, T, n + 1)
        return cls(grid, np.zeros_like(grid))

    @classmethod
    def from_csv(cls, path) -> "ObservationPath":
        """Read a two-column ``t,z`` CSV file (a header row is allowed)."""
        ts, zs = [], []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].lstrip().startswith("#"):
                    continue
                try:
                    t, z = float(row[0]), float(row[1])
                except ValueError:
                    if not ts:
                        continue
                    raise
                ts.append(t)
                zs.append(z)
        return cls(np.array(ts), np.array(zs))


def _sinh_over(alpha, x):
    """``sinh(alpha x) / alpha`` with its limit ``x`` at ``alpha = 0``."""
    x = np.asarray(x, dtype=float)
    ax = alpha * x
    small = np.abs(ax) < SMALL_ALPHA_T
    with np.errstate(invalid="ignore", divide="ignore"):
        direct = np.sinh(ax) / alpha if alpha != 0 else x
    series = x * (1.0 + ax * ax / 6.0 + ax ** 4 / 120.0)
    return np.where(small, series, direct)


def conditional_cov(model: LinearModel, s, t):
    """Conditional covariance ``sigma_{s,t}`` of the linear filter.

    ``[sinh(aT - a|t-s|) - sinh(aT - a(s+t))] / (2 a cosh(aT))`` with
    ``a = alpha``; the ``alpha -> 0`` limit is ``min(s, t)``.

    Accepts scalars or broadcastable arrays.
    """
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    T = model.T
    tol = 1e-12 * T
    if (s < -tol).any() or (t < -tol).any() or (s > T + tol).any() or (t > T + tol).any():
        raise ValueError("times must lie in [0, T]")
    a = model.alpha
    x = T - np.abs(t - s)
    y = T - (s + t)
    out = (_sinh_over(a, x) - _sinh_over(a, y)) / (2.0 * math.cosh(a * T))
    return float(out) if out.ndim == 0 else out


def conditional_cov_matrix(model: LinearModel, grid) -> np.ndarray:
    """Matrix ``[sigma_{t_i, t_j}]`` on ``grid``."""
    g = np.asarray(grid, dtype=float)
    return conditional_cov(model, g[:, None], g[None, :])


def sigma_T(model: LinearModel) -> float:
    """Terminal variance ``tanh(alpha T) / alpha``."""
    return conditional_cov(model, model.T, model.T)


def _check_horizon(model, z):
    if abs(z.T - model.T) > 1e-12 * model.T:
        raise ValueError("observation horizon differs from the model horizon")


def conditional_mean_phiT(model: LinearModel, z: ObservationPath) -> float:
    """``phi_T = (1 / cosh(alpha T)) int_0^T sinh(alpha s) dZ_s``.

    The stochastic integral is a left-point (Ito) sum over the grid.
    """
    _check_horizon(model, z)
    a = model.alpha
    left = np.sinh(a * z.grid[:-1])
    return float(np.dot(left, np.diff(z.values)) / math.cosh(a * model.T))


def conditional_mean_path(model: LinearModel, z: ObservationPath) -> np.ndarray:
    """``phi_t`` at every grid point.

    Interior values use the terminal formula with the horizon truncated
    at ``t``: ``phi_t = (1 / cosh(alpha t)) int_0^t sinh(alpha s) dZ_s``.
    This is a modelling choice for interior times, kept in this one
    function.
    """
    _check_horizon(model, z)
    a = model.alpha
    incr = np.sinh(a * z.grid[:-1]) * np.diff(z.values)
    partial = np.concatenate(([0.0], np.cumsum(incr)))
    return partial / np.cosh(a * z.grid)


def simpson(f: Callable, a: float, b: float, panels: int = 1024,
            rtol: float = 1e-10, max_panels: int = 1 << 20) -> float:
    """Composite Simpson rule, doubling panels until two estimates agree.

    ``f`` must accept a numpy array.
    """
    def rule(n):
        x = np.linspace(a, b, n + 1)
        y = np.asarray(f(x), dtype=float)
        h = (b - a) / n
        return h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum())

    n = panels + (panels % 2)
    prev = rule(n)
    while n < max_panels:
        n *= 2
        cur = rule(n)
        if abs(cur - prev) <= rtol * max(abs(cur), 1e-300):
            return float(cur)
        prev = cur
    return float(prev)


def _trapezoid(y, x):
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(x)))


def gaussian_sup_moment(model: LinearModel, grid_size: int = 256, replicas: int = 10000,
                        seed=0, z: ObservationPath | None = None):
    """Monte Carlo estimate of ``E ||X||_inf^2`` for the centred conditional law.

    Paths are sampled on ``t_i = i T / grid_size``, ``i = 1..grid_size``
    (``X_0 = 0``) through a Cholesky factor of the covariance matrix.  A
    diagonal jitter of ``1e-12`` is added if the plain factorisation fails.
    The discrete maximum slightly underestimates the continuum one.

    ``z`` is accepted only to make the independence from the observation
    explicit; it is never read.

    Returns
    -------
    (float, float)
        Estimate and its standard error.
    """
    del z
    if grid_size < 64:
        raise ValueError("grid_size must be >= 64")
    if replicas < 1000:
        raise ValueError("replicas must be >= 1000")
    grid = model.T * np.arange(1, grid_size + 1) / grid_size
    cov = conditional_cov_matrix(model, grid)
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        try:
            chol = np.linalg.cholesky(cov + 1e-12 * np.eye(grid_size))
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure("covariance factorisation failed after jitter") from exc
    gen = as_generator(seed)
    out = np.empty(replicas)
    chunk = 4096
    for start in range(0, replicas, chunk):
        stop = min(replicas, start + chunk)
        w = gen.standard_normal((stop - start, grid_size))
        paths = w @ chol.T
        out[start:stop] = np.max(paths * paths, axis=1)
    return float(out.mean()), float(out.std(ddof=1) / math.sqrt(replicas))


def calW(d: DriftSpec) -> float:
    """``K |b(0)| + K^2 / (1 - gamma) + M / 2``.

    Raises
    ------
    ValueError
        If ``gamma < 1/2``; use :func:`bound_theorem2` in that regime.
    """
    if not 0.5 <= d.gamma < 1.0:
        raise ValueError("gamma < 1/2: this constant belongs to the gamma >= 1/2 bound; "
                         "use bound_theorem2")
    return d.K * abs(d.b0) + d.K ** 2 / (1.0 - d.gamma) + d.M / 2.0


@dataclass(frozen=True)
class RootResult:
    """Largest positive root of ``x^2 - sum_i c_i x^{e_i}``.

    Attributes
    ----------
    root : float
    residual : float
        ``|p(root)|``.
    sign_changes : int
        Sign changes of ``p`` seen on the scan grid; more than one would
        indicate several positive roots.
    """

    root: float
    residual: float
    sign_changes: int

    @property
    def anomaly(self) -> bool:
        return self.sign_changes > 1


def _poly(terms):
    coefs = np.array([c for c, _ in terms], dtype=float)
    exps = np.array([e for _, e in terms], dtype=float)

    def p(x):
        x = np.asarray(x, dtype=float)
        return x * x - np.sum(coefs[:, None] * np.power(x[None, :], exps[:, None]), axis=0) \
            if x.ndim else float(x * x - np.sum(coefs * np.power(x, exps)))

    return p


def largest_positive_root(terms: Sequence[tuple], octaves_below: int = 60) -> RootResult:
    """Largest positive root of ``p(x) = x^2 - sum_i c_i x^{e_i}``.

    Parameters
    ----------
    terms : sequence of (coefficient, exponent)
        Coefficients ``c_i >= 0`` and exponents ``0 <= e_i < 2``.
    octaves_below : int
        How many octaves below the doubling bracket are scanned.

    Notes
    -----
    An upper bracket ``B`` is found by doubling from 1 until ``p`` is
    positive at ``B, 2B, 4B, 8B``.  The interval below ``B`` is scanned
    downwards with 1024 points per octave.  The first point with
    ``p <= 0`` brackets the rightmost sign change, which bisection then
    narrows to machine precision.  If every coefficient is zero the root
    is 0.

    Raises
    ------
    NumericalFailure
        If no bracket is found before overflow.
    """
    terms = [(float(c), float(e)) for c, e in terms]
    for c, e in terms:
        if c < 0 or not math.isfinite(c):
            raise ValueError("coefficients must be finite and nonnegative")
        if not 0.0 <= e < 2.0:
            raise ValueError("exponents must lie in [0, 2)")
    terms = [(c, e) for c, e in terms if c > 0]
    if not terms:
        return RootResult(0.0, 0.0, 0)
    p = _poly(terms)
    B = 1.0
    while not all(p(B * 2.0 ** k) > 0 for k in range(4)):
        B *= 2.0
        if B > 1e300:
            raise NumericalFailure("no positive bracket below overflow")
    per_octave = 1024
    xs = B * 2.0 ** (-np.arange(per_octave * octaves_below + 1) / per_octave)
    vals = p(xs)
    nonpos = np.nonzero(vals <= 0)[0]
    signs = np.sign(vals)
    changes = int(np.count_nonzero(signs[1:] != signs[:-1]))
    if nonpos.size == 0:
        lo, hi = 0.0, float(xs[-1])
    else:
        k = int(nonpos[0])
        lo, hi = float(xs[k]), float(xs[k - 1])
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if p(mid) > 0:
            hi = mid
        else:
            lo = mid
    root = hi if abs(p(hi)) < abs(p(lo)) else lo
    return RootResult(root, abs(p(root)), changes)


def _sigma_integrals(model):
    T = model.T
    int_sigma_sT = simpson(lambda s: conditional_cov(model, s, T), 0.0, T)
    int_sigma_ss = simpson(lambda s: conditional_cov(model, s, s), 0.0, T)
    return int_sigma_sT, int_sigma_ss


def _mc(mc_params):
    p = {"grid_size": 256, "replicas": 10000, "seed": 0}
    if mc_params:
        unknown = set(mc_params) - set(p)
        if unknown:
            raise ValueError(f"unknown Monte Carlo parameters {sorted(unknown)}")
        p.update(mc_params)
    return p


def bound_theorem1(model: LinearModel, z: ObservationPath, d: DriftSpec,
                   mc_params: dict | None = None) -> BoundReport:
    """Distance bound for ``gamma in [1/2, 1)``.

    ``E||X||^2 (|b(0)| + T W + K/(1-gamma) V^(1-gamma))`` where ``V`` is the
    largest positive root of ``x^2 - zeta x^(2-gamma) - eta x - sigma_T``,
    ``eta = W int_0^T sigma_{s,T} ds + sigma_T |b(0)| + |phi_T|`` and
    ``zeta = sigma_T K / (1 - gamma)``.

    Parameters
    ----------
    model : LinearModel
    z : ObservationPath
    d : DriftSpec
    mc_params : dict, optional
        ``grid_size``, ``replicas`` and ``seed`` of
        :func:`gaussian_sup_moment`.

    Returns
    -------
    BoundReport
        ``extras`` holds every intermediate constant.
    """
    if not 0.5 <= d.gamma < 1.0:
        raise ValueError("bound_theorem1 needs gamma in [1/2, 1); use bound_theorem2")
    mc = _mc(mc_params)
    W = calW(d)
    sT = sigma_T(model)
    int_sT, int_ss = _sigma_integrals(model)
    phiT = conditional_mean_phiT(model, z)
    eta = W * int_sT + sT * abs(d.b0) + abs(phiT)
    zeta = sT * d.K / (1.0 - d.gamma)
    rr = largest_positive_root([(zeta, 2.0 - d.gamma), (eta, 1.0), (sT, 0.0)])
    V = rr.root
    sup2, se = gaussian_sup_moment(model, mc["grid_size"], mc["replicas"], mc["seed"])
    factor = abs(d.b0) + model.T * W + d.K / (1.0 - d.gamma) * V ** (1.0 - d.gamma)
    value = sup2 * factor
    inputs = {"alpha": model.alpha, "T": model.T, "b0": d.b0, "K": d.K,
              "gamma": d.gamma, "M": d.M, **mc}
    extras = {"W": W, "eta": eta, "zeta": zeta, "V": V, "root_residual": rr.residual,
              "root_sign_changes": rr.sign_changes, "sigma_T": sT,
              "int_sigma_sT": int_sT, "phi_T": phiT, "sup_moment": sup2,
              "sup_moment_se": se, "factor": factor}
    return BoundReport("theorem1", inputs, float(value), float(se * factor), extras)


def bound_theorem2(model: LinearModel, z: ObservationPath, d: DriftSpec,
                   mc_params: dict | None = None) -> BoundReport:
    """Distance bound for ``gamma in (0, 1/2)``.

    ``E||X||^2 (|b(0)| + (c2 + c3) T + c3 T^(1/2+gamma) V^(1-2gamma)
    + c1 V^(1-gamma))`` with ``c1 = K/(1-gamma)``, ``c2 = K|b(0)| + M/2``,
    ``c3 = K^2/(1-gamma)`` and ``V`` the largest positive root of

    ``x^2 - sbar - (sbar sqrt2 |b(0)| + sbar sqrt(2T(c2^2 + 2c3^2))
    + Psi(phi)^(1/2)) x - 2 sbar c3 T^gamma x^(2-2gamma)
    - sqrt2 sbar c1 x^(2-gamma)``,

    where ``sbar = int_0^T sigma_s ds + sigma_T`` and
    ``Psi(phi) = int_0^T phi_s^2 ds + phi_T^2``.
    """
    if not 0.0 < d.gamma < 0.5:
        raise ValueError("bound_theorem2 needs gamma in (0, 1/2); use bound_theorem1")
    mc = _mc(mc_params)
    T = model.T
    g = d.gamma
    c1 = d.K / (1.0 - g)
    c2 = d.K * abs(d.b0) + d.M / 2.0
    c3 = d.K ** 2 / (1.0 - g)
    sT = sigma_T(model)
    _, int_ss = _sigma_integrals(model)
    sbar = int_ss + sT
    phi = conditional_mean_path(model, z)
    psi = _trapezoid(phi * phi, z.grid) + float(phi[-1]) ** 2
    lin = (sbar * math.sqrt(2.0) * abs(d.b0) + sbar * math.sqrt(2.0 * T * (c2 ** 2 + 2 * c3 ** 2))
           + math.sqrt(psi))
    terms = [(sbar, 0.0), (lin, 1.0), (2.0 * sbar * c3 * T ** g, 2.0 - 2.0 * g),
             (math.sqrt(2.0) * sbar * c1, 2.0 - g)]
    rr = largest_positive_root(terms)
    V = rr.root
    sup2, se = gaussian_sup_moment(model, mc["grid_size"], mc["replicas"], mc["seed"])
    factor = (abs(d.b0) + (c2 + c3) * T + c3 * T ** (0.5 + g) * V ** (1.0 - 2.0 * g)
              + c1 * V ** (1.0 - g))
    value = sup2 * factor
    inputs = {"alpha": model.alpha, "T": T, "b0": d.b0, "K": d.K, "gamma": g,
              "M": d.M, **mc}
    extras = {"c1": c1, "c2": c2, "c3": c3, "V": V, "root_residual": rr.residual,
              "root_sign_changes": rr.sign_changes, "sigma_T": sT, "sigma_bar": sbar,
              "int_sigma_ss": int_ss, "Psi_phi": psi, "phi_T": float(phi[-1]),
              "linear_coefficient": lin, "sup_moment": sup2, "sup_moment_se": se,
              "factor": factor}
    return BoundReport("theorem2", inputs, float(value), float(se * factor), extras)
