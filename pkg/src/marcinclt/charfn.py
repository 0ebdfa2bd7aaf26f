"""Characteristic/moment-generating functions on complex disks.

The central object is :class:`CharFnModel`, an evaluator of the analytic
moment generating function ``u -> E[exp(u X)]`` together with its declared
radius of validity and the first two moments.  The characteristic function in
the usual convention is ``psi(t) = E[exp(i t X)] = evaluator(i t)``; since
multiplication by ``i`` rotates disks about the origin, scans and circle
maxima can be carried out directly in the evaluator variable.

On top of it this module provides disk scans certifying zero-free radii via
the argument principle, the two-term Kolmogorov-Smirnov bound
``2|sigma - 1| + A (1 + log+ log max_{|u|=r} |E e^{iuX}|) / r``,
exact empirical/discrete KS distances against the standard normal, a
smoothing-integral KS bound, and log-log rate fitting for CLT experiments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize, minimize_scalar
from scipy.special import ndtr

from .errors import ArgumentError, DomainError

__all__ = [
    "CharFnModel",
    "DiskScanReport",
    "KSBoundReport",
    "eval_charfn",
    "zero_free_radius",
    "ks_bound",
    "empirical_ks",
    "ks_discrete_to_normal",
    "ks_cdf_to_normal",
    "smoothing_ks_bound",
    "clt_rate_fit",
    "RateFit",
    "log_plus_log",
    "gaussian_model",
    "rademacher_model",
    "binomial_model",
    "poisson_centered_model",
    "iid_sum_model",
]


# --------------------------------------------------------------------------
# models


@dataclass(frozen=True)
class CharFnModel:
    """Analytic MGF ``u -> E[exp(u X)]`` with a declared validity disk.

    ``evaluator`` must be pure, accept complex scalars or ndarrays, and
    satisfy ``evaluator(0) == 1``.  For a real-valued X it is Hermitian:
    ``evaluator(conj(u)) == conj(evaluator(u))``.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    validity_radius: float
    mean: float
    std_dev: float
    description: str = ""

    def eval(self, u):
        return eval_charfn(self, u)

    def charfn(self, t):
        """Characteristic function ``E[exp(i t X)]`` at real or complex t."""
        return eval_charfn(self, 1j * np.asarray(t))


def eval_charfn(model: CharFnModel, u):
    """Evaluate ``E[exp(u X)]``; raises DomainError outside the validity disk."""
    u = np.asarray(u, dtype=complex)
    if np.any(np.abs(u) > model.validity_radius * (1 + 1e-12)):
        raise DomainError(
            f"|u| exceeds validity radius {model.validity_radius:g} "
            f"of model {model.description!r}"
        )
    out = model.evaluator(u)
    if u.ndim == 0:
        return complex(out)
    return np.asarray(out, dtype=complex)


def gaussian_model() -> CharFnModel:
    """Standard normal: evaluator exp(u^2 / 2)."""
    return CharFnModel(lambda u: np.exp(u * u / 2.0), np.inf, 0.0, 1.0, "gaussian")


def rademacher_model() -> CharFnModel:
    """Fair +-1 variable: evaluator cosh(u)."""
    return CharFnModel(np.cosh, np.inf, 0.0, 1.0, "rademacher")


def binomial_model(n: int, p: float = 0.5, standardized: bool = False) -> CharFnModel:
    """Binomial(n, p); if standardized, centered and scaled to unit variance."""
    if not (0 < p < 1) or n < 1:
        raise ArgumentError("binomial requires n >= 1 and 0 < p < 1")
    q = 1.0 - p
    mu = n * p
    sig = math.sqrt(n * p * q)
    if standardized:
        def ev(u):
            return np.exp(-u * mu / sig) * (q + p * np.exp(u / sig)) ** n
        return CharFnModel(ev, np.inf, 0.0, 1.0, f"binomial({n},{p}) standardized")

    def ev(u):
        return (q + p * np.exp(u)) ** n
    return CharFnModel(ev, np.inf, mu, sig, f"binomial({n},{p})")


def poisson_centered_model(lam: float, standardized: bool = True) -> CharFnModel:
    """Centered Poisson(lam), optionally scaled to unit variance."""
    if lam <= 0:
        raise ArgumentError("poisson requires lam > 0")
    s = math.sqrt(lam) if standardized else 1.0
    def ev(u):
        return np.exp(lam * (np.exp(u / s) - 1.0) - u * lam / s)
    return CharFnModel(ev, np.inf, 0.0, 1.0 if standardized else math.sqrt(lam),
                       f"poisson({lam}) centered" + (" standardized" if standardized else ""))


def iid_sum_model(base: CharFnModel, n: int, standardized: bool = True) -> CharFnModel:
    """Sum of n i.i.d. copies of the base variable, optionally standardized.

    The zero set of the sum's characteristic function is that of the base in
    the per-summand variable, so in the standardized variable the zero-free
    radius grows like sqrt(n) times the base radius.
    """
    if n < 1:
        raise ArgumentError("iid_sum requires n >= 1")
    mu, sig = base.mean, base.std_dev
    if standardized:
        if sig <= 0:
            raise ArgumentError("cannot standardize a degenerate base model")
        s = math.sqrt(n) * sig
        def ev(u):
            return np.exp(-u * n * mu / s) * base.evaluator(u / s) ** n
        return CharFnModel(ev, base.validity_radius * s, 0.0, 1.0,
                           f"iid_sum({base.description}, n={n}) standardized")

    def ev(u):
        return base.evaluator(u) ** n
    return CharFnModel(ev, base.validity_radius, n * mu, math.sqrt(n) * sig,
                       f"iid_sum({base.description}, n={n})")


# --------------------------------------------------------------------------
# zero-free disk scans


@dataclass
class DiskScanReport:
    """Result of a polar-grid scan for zeros of the evaluator on a disk."""

    radius_scanned: float
    zero_free_radius: float
    min_modulus: float
    argmin_point: complex
    winding_numbers: list  # list of (radius, winding integer or None)
    status: str = "heuristic"  # "certified" when windings vanish and min > tol

    def to_json_dict(self):
        return {
            "radius_scanned": self.radius_scanned,
            "zero_free_radius": self.zero_free_radius,
            "min_modulus": self.min_modulus,
            "argmin_point": [self.argmin_point.real, self.argmin_point.imag],
            "winding_numbers": [[r, w] for r, w in self.winding_numbers],
            "status": self.status,
        }


def _winding_circle(model: CharFnModel, center: complex, radius: float,
                    n_start: int = 256, max_points: int = 1 << 16):
    """Winding number of the evaluator along |u - center| = radius.

    Angular steps are subdivided until the argument changes by < pi/2 between
    consecutive samples (standard argument-principle robustness condition).
    Returns (winding or None, min modulus, argmin point).  The winding is
    None when a sample is an exact zero or the refinement budget runs out
    (which happens when a zero sits essentially on the contour).
    """
    angles = np.linspace(0.0, 2.0 * math.pi, n_start, endpoint=False)
    vals = model.evaluator(center + radius * np.exp(1j * angles))
    for _ in range(40):
        mods = np.abs(vals)
        imin = int(np.argmin(mods))
        pmin = center + radius * np.exp(1j * angles[imin])
        if mods[imin] == 0.0:
            return None, 0.0, pmin
        ph = np.angle(vals)
        dph = np.diff(np.concatenate([ph, ph[:1]]))
        dph = (dph + math.pi) % (2.0 * math.pi) - math.pi
        bad = np.abs(dph) >= math.pi / 2.0
        if not bad.any():
            winding = int(round(float(np.sum(dph)) / (2.0 * math.pi)))
            return winding, float(mods[imin]), pmin
        if angles.size * 2 > max_points:
            return None, float(mods[imin]), pmin
        hi = np.concatenate([angles[1:], angles[:1] + 2.0 * math.pi])
        mids = 0.5 * (angles[bad] + hi[bad])
        angles = np.sort(np.concatenate([angles, mids % (2.0 * math.pi)]))
        vals = model.evaluator(center + radius * np.exp(1j * angles))
    return None, float(np.min(np.abs(vals))), center + radius


def _polish_minimum(model: CharFnModel, start: complex, limit: float):
    """Locally minimize |evaluator| from ``start``, staying inside |u| < limit."""
    def obj(xy):
        z = complex(xy[0], xy[1])
        if abs(z) > limit:
            return 1.0 + abs(z)
        return abs(complex(model.evaluator(np.asarray(z))))
    res = minimize(obj, [start.real, start.imag], method="Nelder-Mead",
                   options={"xatol": 1e-13, "fatol": 1e-300, "maxiter": 600})
    return complex(res.x[0], res.x[1]), float(res.fun)


def _confirm_zero(model: CharFnModel, suspect: complex, rho: float,
                  limit: float):
    """Polish a suspected zero and certify it by a local winding number.

    Returns (zero location or None, polished minimum value).  A point is a
    confirmed zero when the winding of the evaluator around the polished
    minimum is nonzero (or the value underflows outright).
    """
    z0, v0 = _polish_minimum(model, suspect, limit)
    if v0 < 1e-300:
        return z0, v0
    rho = min(rho, 0.45 * max(limit - abs(z0), 0.0))
    if rho <= 0:
        return None, v0
    w, _, _ = _winding_circle(model, z0, rho, n_start=64)
    if w is not None and w != 0:
        return z0, v0
    return None, v0


def zero_free_radius(model: CharFnModel, r_max: float, grid_step: float,
                     tol: float = 1e-9) -> DiskScanReport:
    """Scan the closed disk of radius r_max for zeros of the evaluator.

    Circles of radius grid_step, 2 grid_step, ... are checked with the
    argument principle.  A sample whose modulus falls below
    ``tol * (1 + max on the scan circle)`` marks a suspected zero; suspects
    are polished by local search and confirmed (or dismissed) by the winding
    number on a small circle around the polished minimum, so that entire
    evaluators with a large dynamic range are not flagged spuriously.  The
    certified radius is the largest radius below which all windings vanish
    and no confirmed zero lies; when a zero is confirmed, its distance to the
    origin is used directly (local search locates it far more precisely than
    the grid).
    """
    if grid_step <= 0:
        raise ArgumentError("grid_step must be positive")
    if r_max > model.validity_radius:
        raise DomainError("r_max exceeds the model validity radius")

    limit = float(min(model.validity_radius, r_max * (1.0 + 1e-9) + grid_step))
    radii = list(np.arange(grid_step, r_max, grid_step)) + [r_max]
    windings = []
    min_mod = np.inf
    argmin = 0j
    certified = 0.0
    zero_at = None
    clean = True
    for r in radii:
        w, m, pt = _winding_circle(model, 0.0, r)
        windings.append((float(r), w))
        if m < min_mod:
            min_mod, argmin = m, pt
        vmax = abs(complex(model.evaluator(np.asarray(r + 0j))))
        vmax = max(vmax, abs(complex(model.evaluator(np.asarray(1j * r)))))
        suspect = (m < tol * (1.0 + vmax)) or w is None or (w is not None and w != 0)
        if suspect:
            z0, v0 = _confirm_zero(model, pt, grid_step / 4.0, limit)
            if v0 < min_mod:
                min_mod, argmin = v0, z0 if z0 is not None else argmin
            if z0 is not None:
                zero_at = z0
                break
            if w is None or w != 0:
                # winding anomaly without a confirmable zero: stop certifying
                clean = False
                break
        certified = float(r)

    if zero_at is not None:
        certified = min(abs(zero_at), float(r_max))
        if abs(complex(model.evaluator(np.asarray(zero_at)))) < min_mod:
            min_mod = abs(complex(model.evaluator(np.asarray(zero_at))))
            argmin = zero_at

    # near the origin the evaluator is 1; a tiny value there means trouble
    if abs(complex(model.evaluator(np.asarray(0.0 + 0j)))) < tol:
        certified = 0.0

    status = "certified" if clean and certified > 0.0 else "heuristic"
    return DiskScanReport(
        radius_scanned=float(r_max),
        zero_free_radius=float(min(certified, r_max)),
        min_modulus=float(min_mod),
        argmin_point=complex(argmin),
        winding_numbers=windings,
        status=status,
    )


# --------------------------------------------------------------------------
# KS bound of the two-term form


def log_plus_log(x: float) -> float:
    """max(log log x, 0), with the convention 0 for x <= e."""
    if x <= math.e:
        return 0.0
    return math.log(math.log(x))


def circle_max(model: CharFnModel, r: float, n_angles: int = 256) -> float:
    """max |evaluator| over the circle |u| = r (golden-section refinement)."""
    angles = np.linspace(0.0, 2.0 * math.pi, n_angles, endpoint=False)
    mods = np.abs(model.evaluator(r * np.exp(1j * angles)))
    k = int(np.argmax(mods))
    step = 2.0 * math.pi / n_angles
    lo, hi = angles[k] - step, angles[k] + step

    def neg(theta):
        return -abs(complex(model.evaluator(np.asarray(r * np.exp(1j * theta)))))

    res = minimize_scalar(neg, bracket=None, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    return max(float(np.max(mods)), -float(res.fun))


@dataclass
class KSBoundReport:
    """Decomposition of the two-term KS bound at circle radius r."""

    r: float
    sigma_term: float          # 2 |sigma - 1|
    bracket_term: float        # (1 + log+ log max_{|u|=r} |E e^{iuX}|) / r
    constant_A: float
    bound: float               # sigma_term + A * bracket_term
    empirical_ks: Optional[float] = None
    degenerate: bool = False
    circle_maximum: float = field(default=float("nan"))

    def to_json_dict(self):
        d = {
            "r": self.r,
            "sigma_term": self.sigma_term,
            "bracket_term": self.bracket_term,
            "constant_A": self.constant_A,
            "bound": self.bound,
            "empirical_ks": self.empirical_ks,
        }
        if self.degenerate:
            d["degenerate"] = True
        return d


def ks_bound(model: CharFnModel, r: float, A: float = 1.0,
             certified_radius: Optional[float] = None,
             empirical: Optional[float] = None) -> KSBoundReport:
    """Two-term KS bound against the standard normal at circle radius r.

    ``r`` must not exceed a certified zero-free radius; pass one in
    ``certified_radius`` to skip the internal disk scan.  The universal
    constant A is a calibration parameter (the theory guarantees existence,
    not a value).  A degenerate model (sigma = 0) yields the vacuous bound
    with a flag instead of an error.
    """
    if A <= 0:
        raise ArgumentError("A must be positive")
    if r <= 0:
        raise ArgumentError("r must be positive")
    degenerate = model.std_dev == 0.0
    if certified_radius is None:
        scan = zero_free_radius(model, r, grid_step=r / 16.0)
        certified_radius = scan.zero_free_radius
        if scan.status != "certified":
            certified_radius = 0.0
    if r > certified_radius * (1 + 1e-9):
        raise DomainError(
            f"r={r:g} exceeds the certified zero-free radius {certified_radius:g}")
    m = circle_max(model, r)
    bracket = (1.0 + log_plus_log(m)) / r
    sigma_term = 2.0 * abs(model.std_dev - 1.0)
    return KSBoundReport(
        r=float(r),
        sigma_term=float(sigma_term),
        bracket_term=float(bracket),
        constant_A=float(A),
        bound=float(sigma_term + A * bracket),
        empirical_ks=empirical,
        degenerate=degenerate,
        circle_maximum=float(m),
    )


# --------------------------------------------------------------------------
# Kolmogorov-Smirnov distances against the standard normal


def empirical_ks(samples: Sequence[float], studentize: bool = False) -> float:
    """Exact sup distance between the centered ECDF and the standard normal.

    The sample mean is always subtracted; with ``studentize=True`` the values
    are also divided by the sample standard deviation (ddof=1).  The supremum
    is evaluated exactly at the ECDF jump points, from both sides.
    """
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ArgumentError("samples must be nonempty")
    x = x - x.mean()
    if studentize:
        if x.size < 2:
            raise ArgumentError("studentizing requires at least two samples")
        s = x.std(ddof=1)
        if s == 0:
            raise ArgumentError("cannot studentize constant samples")
        x = x / s
    x = np.sort(x)
    n = x.size
    cdf = ndtr(x)
    upper = np.arange(1, n + 1) / n - cdf
    lower = cdf - np.arange(0, n) / n
    return float(max(upper.max(), lower.max()))


def ks_discrete_to_normal(atoms: Sequence[float], probs: Sequence[float]) -> float:
    """Exact KS distance of a finite discrete law (given atom weights) to N(0,1)."""
    a = np.asarray(atoms, dtype=float)
    p = np.asarray(probs, dtype=float)
    if a.size == 0 or a.shape != p.shape:
        raise ArgumentError("atoms and probs must be nonempty and congruent")
    order = np.argsort(a)
    a, p = a[order], p[order]
    cdf_right = np.cumsum(p)
    cdf_left = cdf_right - p
    return ks_cdf_to_normal(a, cdf_right, cdf_left)


def ks_cdf_to_normal(points, cdf_right, cdf_left=None) -> float:
    """sup |F - Phi| over the given points, using both one-sided limits of F.

    For a continuous F pass only ``cdf_right`` (no jumps); the result is then
    the sup over the grid.  For a discrete F pass the left limits as well so
    jump points are handled exactly.
    """
    x = np.asarray(points, dtype=float)
    fr = np.asarray(cdf_right, dtype=float)
    phi = ndtr(x)
    d = np.max(np.abs(fr - phi))
    if cdf_left is not None:
        fl = np.asarray(cdf_left, dtype=float)
        d = max(d, float(np.max(np.abs(fl - phi))))
    return float(d)


def smoothing_ks_bound(model: CharFnModel, T: float, quad_points: int = 20001) -> float:
    """Berry-Esseen smoothing quantity for a centered, unit-variance model.

    Evaluates ``integral_{-T}^{T} |(psi(t) - exp(-t^2/2)) / t| dt + 1/T`` by
    composite Simpson quadrature, with the integrand extended by continuity
    (value 0) at t = 0; the limit vanishes for centered sigma = 1 models.
    The universal prefactor of the Berry-Esseen smoothing inequality is not
    included.
    """
    if T <= 0:
        raise ArgumentError("T must be positive")
    if abs(model.mean) > 1e-8 or abs(model.std_dev - 1.0) > 1e-8:
        raise DomainError("smoothing bound requires a centered model with sigma = 1; "
                          "the t=0 singularity is not removable otherwise")
    n = int(quad_points)
    if n < 3:
        raise ArgumentError("quad_points must be at least 3")
    if n % 2 == 0:
        n += 1
    # integrand is even in t for real-valued X; integrate on [0, T] and double
    t = np.linspace(0.0, T, n)
    vals = np.empty(n)
    vals[0] = 0.0
    tt = t[1:]
    psi = model.evaluator(1j * tt)
    vals[1:] = np.abs(psi - np.exp(-tt * tt / 2.0)) / tt
    h = T / (n - 1)
    integral = h / 3.0 * (vals[0] + vals[-1]
                          + 4.0 * vals[1:-1:2].sum() + 2.0 * vals[2:-2:2].sum())
    return float(2.0 * integral + 1.0 / T)


# --------------------------------------------------------------------------
# rate fitting


@dataclass
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    bound_slope: Optional[float] = None
    bound_intercept: Optional[float] = None
    bound_r_squared: Optional[float] = None


def loglog_fit(x, y):
    """Least-squares fit of log y against log x: (slope, intercept, r^2)."""
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    slope, intercept = np.polyfit(lx, ly, 1)
    pred = slope * lx + intercept
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), float(r2)


def clt_rate_fit(reports) -> RateFit:
    """Fit log(empirical_ks) and log(bound) against log(n).

    ``reports`` is a sequence of (scale n, KSBoundReport) pairs; at least
    three distinct scales with empirical KS values are required.
    """
    pts = [(float(n), rep) for n, rep in reports if rep.empirical_ks is not None]
    ns = [n for n, _ in pts]
    if len(set(ns)) < 3:
        raise ArgumentError("need at least 3 reports with distinct n and empirical_ks")
    ks = [rep.empirical_ks for _, rep in pts]
    slope, intercept, r2 = loglog_fit(ns, ks)
    bounds = [rep.bound for _, rep in pts]
    bs = bi = br = None
    if all(b > 0 for b in bounds):
        bs, bi, br = loglog_fit(ns, bounds)
    return RateFit(slope, intercept, r2, bs, bi, br)
