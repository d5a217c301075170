"""Independent reference values computed by adaptive quadrature (scipy.integrate.quad).

Nothing here imports the package, so these are genuine cross-checks.
"""
import math

from scipy.integrate import quad


def a_ref(kind, par, s):
    if kind == "constant":
        return par
    if kind == "integrable_power":
        return (1 + s) ** (-par)
    return (1 + s) ** (1 - 2 / par)


def tail_ref(p, u):
    val, _ = quad(lambda s: (1 + s) ** (-p), u, math.inf, epsabs=0, epsrel=1e-11, limit=400)
    return -val


def primitive_ref(kind, par, u):
    val, _ = quad(lambda s: a_ref(kind, par, s), 0, u, epsabs=0, epsrel=1e-13)
    return val


def phi_ref(kind, par, u):
    """Phi(u) = int_1^u int_1^sigma a(s)/s ds dsigma = int_1^u (u - s) a(s)/s ds."""
    val, _ = quad(lambda s: (u - s) * a_ref(kind, par, s) / s, 1.0, u,
                  epsabs=0, epsrel=1e-13, limit=200)
    return val


def m2_constant_ref(M, n):
    """(1/2) int_0^1 (M/n - M r^n/n)^2 r^(n-1) dr."""
    val, _ = quad(lambda r: 0.5 * (M / n - M * r**n / n) ** 2 * r ** (n - 1), 0, 1,
                  epsabs=0, epsrel=1e-13)
    return val


def moment_constant_ref(m, q):
    val, _ = quad(lambda x: (m * x) ** q / q, 0, 1, epsabs=0, epsrel=1e-13)
    return val


def leading_condition(M, n):
    K = (2 * (n - 1)) ** (2 - 2 / n) / ((2 - 2 / n) * (3 - 2 / n))
    return K * (M / n) ** (3 - 2 / n) - (M / n) ** 3 / 6


def mstar_bisection(n, lo=1e-3, hi=1e6, iters=400):
    """Sign change of the leading condition, located without the closed form."""
    assert leading_condition(lo, n) > 0 > leading_condition(hi, n)
    for _ in range(iters):
        mid = math.sqrt(lo * hi)
        if leading_condition(mid, n) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    return 0.5 * (lo + hi)
