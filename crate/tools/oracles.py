"""High-precision reference values used to freeze expected numbers in the
Rust test suites. Run with `python3 tools/oracles.py`; requires mpmath."""
import mpmath as mp

mp.mp.dps = 40


def psi(u, k, alpha):
    if alpha == 0:
        return -mp.log(1 + u * k) / k
    return (1 / mp.mpf(k)) * ((1 - alpha) / alpha) * (1 - (1 + u * k / (1 - alpha)) ** alpha)


def cb(y, s):
    d = -y / s
    return -y * mp.ncdf(d) + s * mp.npdf(d)


def density(g, k, alpha):
    if alpha == 0:
        shape = 1 / mp.mpf(k)
        return g ** (shape - 1) * mp.e ** (-g / k) / (mp.gamma(shape) * mp.mpf(k) ** shape)
    lam = 1 / mp.mpf(k)
    return mp.sqrt(lam / (2 * mp.pi * g ** 3)) * mp.e ** (-lam * (g - 1) ** 2 / (2 * g))


def expect(f, k, alpha):
    # split at several points so the kink regions are resolved
    pts = [0, mp.mpf('1e-6'), mp.mpf('0.01'), mp.mpf('0.1'), mp.mpf('0.5'), 1, 2, 5, 10, 30, 100, mp.inf]
    return mp.quad(lambda g: f(g) * density(g, k, alpha), pts)


def mixture_tv(y, eta, k, alpha):
    """Normalized time value E[(z - y)^+] - max(-y, 0)."""
    if y >= 0:
        return expect(lambda g: cb(y + eta * (g - 1), mp.sqrt(g)), k, alpha)
    return expect(lambda g: cb(-y - eta * (g - 1), mp.sqrt(g)), k, alpha)


def implied(y, tv):
    ay = abs(y)
    return mp.findroot(lambda s: cb(ay, s) - tv, 1.0)


def smile(y, eta, k, alpha):
    return implied(y, mixture_tv(y, eta, k, alpha))


def atm(eta, k, alpha):
    i0 = mp.sqrt(2 * mp.pi) * expect(lambda g: cb(eta * (g - 1), mp.sqrt(g)), k, alpha)
    i1 = -mp.sqrt(mp.pi / 2) * expect(lambda g: mp.erf(eta / mp.sqrt(2) * (1 - g) / mp.sqrt(g)), k, alpha)
    i2 = mp.sqrt(2 * mp.pi) * expect(lambda g: mp.npdf(eta * (1 - g) / mp.sqrt(g)) / mp.sqrt(g), k, alpha) - 1 / i0
    return i0, i1, i2


if __name__ == "__main__":
    print("psi(1;1,0) =", mp.nstr(psi(1, 1, 0), 17))
    print("psi(1;1,1/2) =", mp.nstr(psi(1, 1, mp.mpf(1) / 2), 17))
    print("psi(0.5+0.25i;0.7,0.3) =", mp.nstr(psi(mp.mpc(0.5, 0.25), mp.mpf('0.7'), mp.mpf('0.3')), 17))
    for (y, s) in [(0, 1), (0.3, 0.8), (2.5, 0.4), (12.0, 1.0), (-1.5, 0.7)]:
        print(f"cb({y},{s}) =", mp.nstr(cb(mp.mpf(y), mp.mpf(s)), 17))
    for alpha in (0, mp.mpf(1) / 2):
        for (eta, k) in [(-0.5, 1.0), (0.8, 0.25)]:
            for y in (-1.0, 0.0, 1.0, 2.5):
                tv = mixture_tv(mp.mpf(y), mp.mpf(eta), mp.mpf(k), alpha)
                print(f"tv a={float(alpha)} eta={eta} k={k} y={y}: {mp.nstr(tv, 17)}  I={mp.nstr(implied(mp.mpf(y), tv), 17)}")
    for alpha in (0, mp.mpf(1) / 2):
        i0, i1, i2 = atm(mp.mpf(-0.5), mp.mpf(1), alpha)
        print(f"atm a={float(alpha)} eta=-0.5 k=1:", mp.nstr(i0, 17), mp.nstr(i1, 17), mp.nstr(i2, 17))


def wing_tv(y, eta, k, alpha):
    """Time value for large |y|, with breakpoints dense enough to resolve the
    narrow peak of the integrand in the far tail of G."""
    ys, es = (y, eta) if y >= 0 else (-y, -eta)
    f = lambda g: cb(ys + es * (g - 1), mp.sqrt(g)) * density(g, k, alpha)
    pts = [0, mp.mpf('0.1'), 1] + [mp.mpf(2) ** j for j in range(1, 12)] + [mp.inf]
    return mp.quad(f, pts, maxdegree=10)


def wing_ratios():
    eta, k, alpha = mp.mpf(-0.5), mp.mpf(1), mp.mpf(1) / 2
    for y in (20, 40, 60, -20, -40, -60):
        tv = wing_tv(mp.mpf(y), eta, k, alpha)
        # solve on the log scale: the time value is far below 1e-16
        ay = abs(mp.mpf(y))
        i = mp.findroot(lambda s: mp.log(cb(ay, s)) - mp.log(tv), (mp.sqrt(ay * 0.2), mp.sqrt(ay * 2)), solver='anderson')
        print(f"wing y={y}: I^2/|y| =", mp.nstr(i * i / abs(y), 17))
