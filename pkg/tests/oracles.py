"""Reference computations that do not share code with the package.

Each oracle uses a different route from the implementation: grids instead of
root finding, scipy solvers instead of the in-house bisection and golden
section, plain loops instead of vectorized paths.
"""

import math

import numpy as np
from scipy import optimize
from scipy.special import xlogy


def kl_bernoulli(a, b):
    """KL(Bern(a) || Bern(b)) with the 0 log 0 = 0 convention."""
    a = np.asarray(a, dtype=float)
    return xlogy(a, a) - xlogy(a, b) + xlogy(1 - a, 1 - a) - xlogy(1 - a, 1 - b)


def bernoulli_dual_grid(p, q, eps, grid_size=10**6):
    """min over a uniform q' grid of KL(Bern(q')||Bern(p)) + eps |q' - q|."""
    g = np.linspace(0.0, 1.0, grid_size + 1)
    vals = kl_bernoulli(g, p) + eps * np.abs(g - q)
    return float(vals.min())


def bernoulli_lambda_star(p, q, eps):
    """Root of the two-atom calibration equation by scan plus brentq."""
    atoms_p = np.array([1 - p, p])
    lr = np.array([(1 - q) / (1 - p), q / p])

    def f(lam):
        c1 = math.exp(-eps / 2 + lam - 1)
        c2 = math.exp(eps / 2 + lam - 1)
        return float(np.sum(atoms_p * np.clip(lr, c1, c2))) - 1.0

    lams = np.linspace(1 - eps - 5, 1 + eps + 5, 20001)
    vals = np.array([f(l) for l in lams])
    k = int(np.flatnonzero(vals >= 0)[0])
    if vals[k] == 0:
        return lams[k]
    return optimize.brentq(f, lams[k - 1], lams[k], xtol=1e-15, rtol=1e-15)


def bernoulli_clipped_rate(p, q, eps):
    lam = bernoulli_lambda_star(p, q, eps)
    c1 = math.exp(-eps / 2 + lam - 1)
    c2 = math.exp(eps / 2 + lam - 1)
    e = np.clip([(1 - q) / (1 - p), q / p], c1, c2)
    return float((1 - q) * math.log(e[0]) + q * math.log(e[1]))


def gaussian_shift_rate(delta, eps):
    """Rate for N(0,1) vs N(delta,1) by direct quadrature over x with scipy."""
    from scipy import integrate, stats

    def llr(x):
        return delta * x - delta**2 / 2

    def gap(lam):
        lo, hi = -eps / 2 + lam - 1, eps / 2 + lam - 1
        val, _ = integrate.quad(lambda x: stats.norm.pdf(x) * math.exp(min(max(llr(x), lo), hi)),
                                -40, 40, points=[(lo + delta**2 / 2) / delta, (hi + delta**2 / 2) / delta],
                                limit=400, epsabs=1e-14, epsrel=1e-13)
        return val - 1

    lam = optimize.brentq(gap, 1 - eps - 3, 1 + eps + 3, xtol=1e-14)
    lo, hi = -eps / 2 + lam - 1, eps / 2 + lam - 1
    val, _ = integrate.quad(lambda x: stats.norm.pdf(x - delta) * min(max(llr(x), lo), hi),
                            -40, 40, points=[(lo + delta**2 / 2) / delta, (hi + delta**2 / 2) / delta],
                            limit=400, epsabs=1e-14, epsrel=1e-13)
    return val


def tslr_coefficient_max():
    """(argmax, max) of ((e-1)(1-exp(-e))/e)/e via scipy's bounded Brent."""
    res = optimize.minimize_scalar(lambda e: -((e - 1) * (1 - math.exp(-e)) / e) / e,
                                   bounds=(1.0, 20.0), method="bounded", options={"xatol": 1e-12})
    return res.x, -res.fun


def schedule_by_recurrence(c, mu, rho, lam, count):
    C = -math.log(1 - (c * lam) ** 2)
    t = [rho * lam + rho**2 * lam * C / (mu * (rho * lam - 1) ** 2)]
    for j in range(1, count):
        t.append(rho * (lam * t[-1] - j * C / mu))
    return t


def schedule_closed_form(c, mu, rho, lam, j):
    C = -math.log(1 - (c * lam) ** 2)
    a = rho * lam
    return a**j + rho * C * (j - 1) / (mu * (a - 1)) + rho**2 * lam * C / (mu * (a - 1) ** 2)


def t1_grid_min(c, mu, rho, points=10**4):
    lo, hi = 1 / rho, min(1.0, 1 / c)
    lam = np.linspace(lo, hi, points + 2)[1:-1]
    C = -np.log1p(-(c * lam) ** 2)
    t1 = rho * lam + rho**2 * lam * C / (mu * (rho * lam - 1) ** 2)
    return float(t1.min())


def batch_objective_grid(c_lo, c_hi, eps, n, mu, points=10**6):
    """Max over a uniform lambda grid of lam n mu + log(1 - (R/eps)^2)."""
    lam = np.linspace(0.0, 1.0, points + 1)[1:-1]
    R = np.log((1 - lam + lam * c_hi) / (1 - lam + lam * c_lo))
    b = R / eps
    ok = b < 1
    obj = np.full_like(lam, -np.inf)
    obj[ok] = lam[ok] * n * mu + np.log(1 - b[ok] ** 2)
    k = int(np.argmax(obj))
    return float(obj[k]), float(lam[k])


def sprt_loop(llrs, upper, lower):
    total = 0.0
    for i, v in enumerate(llrs):
        total += v
        if total >= upper:
            return "accept-Q", i + 1
        if total <= lower:
            return "accept-P", i + 1
    return "inconclusive", len(llrs)
