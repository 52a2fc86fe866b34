"""Independent high-precision oracles used across the test suite.

Nothing here imports the package's numerical code: the stochastic-volatility
CGF is re-typed in mpmath from its cosh/sinh form, the implicit map theta(w)
is obtained by root finding, and expansion terms come from Cauchy integrals of
log(theta(w)/w) in the complex w-plane.
"""

import mpmath as mp


def sv_cgf(kappa, b, rho, v0, x0, T, eps):
    kappa, b, rho, v0, x0, T, eps = map(mp.mpf, (kappa, b, rho, v0, x0, T, eps))

    def K(th):
        beta = kappa - eps * rho * th
        a = th - th * th
        d = mp.sqrt(beta**2 + eps**2 * a)
        sh = mp.sinh(d * T / 2) / d
        q = mp.cosh(d * T / 2) + beta * sh
        return x0 * th + 2 * kappa * b / eps**2 * (beta * T / 2 - mp.log(q)) - v0 * a * sh / q

    return K


def gamma_cgf(alpha, rate=1):
    alpha, rate = mp.mpf(alpha), mp.mpf(rate)
    return lambda th: -alpha * mp.log(1 - th / rate)


def saddle(K, x, start=0.5):
    x = mp.mpf(x)
    th = mp.re(mp.findroot(lambda t: mp.diff(K, t) - x, start))
    w = mp.sign(th) * mp.sqrt(mp.re(2 * (x * th - K(th))))
    return th, w


def theta_of_w(K, x, th_hat, w_hat):
    """Real branch of theta(w): (w - w_hat)^2/2 = K(theta) - x theta - K(th_hat) + x th_hat."""
    x = mp.mpf(x)
    base = K(th_hat) - x * th_hat
    k2 = mp.diff(K, th_hat, 2)

    def th(w):
        w = mp.mpf(w)
        if w == w_hat:
            return th_hat
        guess = th_hat + (w - w_hat) / mp.sqrt(k2)
        return mp.findroot(lambda t: K(t) - x * t - base - (w - w_hat) ** 2 / 2, guess)

    return th


def expansion(K, x, M=3, dps=30, nodes=64, start=0.5):
    """Base normal tail, corrections and Daniels terms from complex Cauchy integrals."""
    with mp.workdps(dps):
        x = mp.mpf(x)
        th, w = saddle(K, x, start)
        k2 = mp.re(mp.diff(K, th, 2))
        r = abs(w) / 4
        h_vals, t_vals = [], []
        t = None
        for j in range(nodes):
            wj = w + r * mp.expj(2 * mp.pi * j / nodes)
            guess = th + (wj - w) / mp.sqrt(k2) if t is None else t
            t = mp.findroot(lambda z: K(z) - x * z - (wj**2 / 2 - w * wj), guess)
            h_vals.append(mp.log(t / wj))
            t_vals.append(t)

        def deriv(vals, n):
            c = sum(vals[j] * mp.expj(-2 * mp.pi * j * n / nodes) for j in range(nodes)) / nodes
            return mp.re(c) / r**n * mp.factorial(n)

        phi = mp.npdf(w)
        psi = [phi * (-1) ** m / mp.fac2(2 * m) * deriv(h_vals, 2 * m + 1) for m in range(M + 1)]
        theta = [phi * (-1) ** m / mp.fac2(2 * m) * deriv(t_vals, 2 * m + 1) for m in range(M + 1)]
        return {
            "theta_hat": th,
            "w_hat": w,
            "base": 1 - mp.ncdf(w),
            "psi": psi,
            "daniels": theta,
        }


def tail_by_quadrature(K, x, th, dps=30):
    with mp.workdps(dps):
        x = mp.mpf(x)
        f = lambda t: mp.re(mp.exp(K(th + 1j * t) - x * (th + 1j * t)) / (th + 1j * t))
        v = mp.quad(f, [0, 1, 5, 20, 100, mp.inf]) / mp.pi
        return v + (1 if th < 0 else 0)


def theta_fd(K, x, n_max=3, start=0.5, dps=40, step="1e-6"):
    """Central finite differences of the root-found theta(w) at w_hat, orders 1..n_max."""
    with mp.workdps(dps):
        th, w = saddle(K, x, start)
        f = theta_of_w(K, x, th, w)
        h = mp.mpf(step)
        return [mp.diff(f, w, n, h=h, method="step") for n in range(1, n_max + 1)]


def bisect(f, lo, hi, tol=1e-14):
    flo = f(lo)
    while hi - lo > tol * max(1.0, abs(lo)):
        mid = 0.5 * (lo + hi)
        if (f(mid) > 0) == (flo > 0):
            lo, flo = mid, f(mid)
        else:
            hi = mid
    return 0.5 * (lo + hi)
