"""Independent numpy/scipy evaluation of the frozen constants used in tests/oracles.hpp.

Run: python3 tools/freeze_oracles.py
"""
import math

import numpy as np
from scipy import integrate

LOG_FACTOR = math.e / 2


def logpoly(n, mult=5):
    p = mult * n
    i = np.arange(1, p + 1, dtype=float)
    return 300.0 / i * (np.log(i + 1) * LOG_FACTOR) ** -2.0


def truncation(lam, n):
    for k in range(len(lam)):
        tail = lam[k:]
        if tail[0] > 0 and tail.sum() / tail[0] > n:
            return k
    raise ValueError("no level")


def gauss_norm(z):
    # E||diag(z)^{1/2} H|| = (1 / (2 sqrt(pi))) int_0^inf (1 - E exp(-t Q)) t^{-3/2} dt
    z = z[z > 0]
    f = lambda t: -math.expm1(-0.5 * np.log1p(2.0 * t * z).sum()) * t ** -1.5
    a = integrate.quad(f, 0, 1, limit=400, epsabs=0, epsrel=1e-13)[0]
    b = integrate.quad(f, 1, np.inf, limit=400, epsabs=0, epsrel=1e-13)[0]
    return (a + b) / (2 * math.sqrt(math.pi))


def model(n, orthogonal=True, alpha=1.01):
    lam = logpoly(n)
    p = len(lam)
    k = truncation(lam, n)
    u = np.zeros(p)
    if orthogonal:
        u[:k] = lam[:k]
    else:
        u[:k] = (1 - n ** -alpha) * lam[:k]
    z = lam - u
    i = np.arange(1, p + 1, dtype=float)
    theta0 = 20 / np.sqrt(i)
    rho = np.where(u > 0, 2 / i, 0.0)
    sigma2 = 4 * (rho ** 2).sum()
    pinv_omega = np.where(u > 0, rho / np.sqrt(np.where(u > 0, u, 1)), 0.0)
    return dict(lam=lam, u=u, z=z, k=k, theta0=theta0, rho=rho, sigma2=sigma2,
                pinv_omega=pinv_omega)


def eta(m, n, delta):
    z = m["z"]
    r = z.sum() / z.max()
    R = z.sum() ** 2 / (z ** 2).sum()
    return math.sqrt(math.log(1 / delta)) * (1 / math.sqrt(r) + math.sqrt(m["k"] / n) + n / R)


def norm_bound(m, n, delta, c2):
    z, u = m["z"], m["u"]
    tr = z.sum()
    r = tr / z.max()
    R = tr ** 2 / (z ** 2).sum()
    a = np.linalg.norm(m["pinv_omega"])
    b = math.sqrt((z * m["pinv_omega"] ** 2).sum())
    st2 = m["sigma2"] - (m["rho"] ** 2).sum()
    st = math.sqrt(st2)
    eta1 = math.sqrt(n / R) * b
    E = gauss_norm(z)
    eta2 = math.sqrt(1 + math.sqrt(2 * math.log(8 / delta) / r)) * math.sqrt(E * E / n * a * a + b * b)
    eps = c2 * math.sqrt(math.log(1 / delta)) * (
        math.sqrt(m["k"] / n) + (1 + (u * z).sum() / (z ** 2).sum()) * n / R + a / st * math.sqrt(tr / n))
    B = np.linalg.norm(m["theta0"]) + a + math.sqrt(1 + eps) * (2 * eta1 + st + eta2) * math.sqrt(n / tr)
    return B, E


def rmse_bound(m, n, delta, B, c1=32.0):
    z = m["z"]
    tr = z.sum()
    r = tr / z.max()
    gamma = c1 * math.sqrt(math.log(1 / delta)) * (1 / math.sqrt(r) + math.sqrt(m["k"] / n))
    st2 = m["sigma2"] - (m["rho"] ** 2).sum()
    t = (np.linalg.norm(m["pinv_omega"]) + np.linalg.norm(m["theta0"])) * math.sqrt(tr / n)
    principal = (1 + eta(m, n, delta)) * max(1.0, math.sqrt(st2)) * (t + t * t)
    return (1 + gamma) * (B * B * tr / n - st2), principal


if __name__ == "__main__":
    m200 = model(200)
    print("k_star_setup_i_n200 =", m200["k"])
    print("eta_setup_i_n200_d005 = %.17g" % eta(m200, 200, 0.05))
    m300 = model(300, orthogonal=False)
    b1, e300 = norm_bound(m300, 300, 0.1, 1.0)
    b160, _ = norm_bound(m300, 300, 0.1, 160.0)
    print("norm_bound_setup_iii_n300_principal = %.17g" % b1)
    print("norm_bound_setup_iii_n300_literal = %.17g" % b160)
    print("gauss_norm_setup_iii_n300 = %.17g" % e300)
    m400 = model(400)
    b400, _ = norm_bound(m400, 400, 0.1, 1.0)
    rb, rp = rmse_bound(m400, 400, 0.1, b400)
    print("norm_bound_setup_i_n400_principal = %.17g" % b400)
    print("rmse_bound_setup_i_n400 = %.17g" % rb)
    print("rmse_principal_setup_i_n400 = %.17g" % rp)
