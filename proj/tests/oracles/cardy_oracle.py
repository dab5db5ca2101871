"""High-precision reference values for the Cardy/elliptic tests.

Run with `python3 cardy_oracle.py`; the printed numbers are frozen into
tests/test_cardy.cpp. Uses mpmath only (independent of the C++ code).
"""
import mpmath as mp

mp.mp.dps = 40


def k_of_r(r):
    # K(k')/(2K(k)) = r, parameterized with m = k^2 as mpmath expects.
    f = lambda k: mp.ellipk(1 - k**2) / (2 * mp.ellipk(k**2)) - r
    return mp.findroot(f, (mp.mpf('1e-30') + mp.mpf(0), mp.mpf(1) - mp.mpf('1e-30')), solver='bisect' if False else 'anderson')


def k_of_r_nome(r):
    # q = exp(-pi K'/K) = exp(-2 pi r); k = (theta2/theta3)^2
    q = mp.e ** (-2 * mp.pi * r)
    return (mp.jtheta(2, 0, q) / mp.jtheta(3, 0, q)) ** 2


def eta(r):
    k = k_of_r_nome(r)
    return ((1 - k) / (1 + k)) ** 2


def cardy_eta(e):
    c = 3 * mp.gamma(mp.mpf(2) / 3) / mp.gamma(mp.mpf(1) / 3) ** 2
    return c * e ** (mp.mpf(1) / 3) * mp.hyp2f1(mp.mpf(1) / 3, mp.mpf(2) / 3, mp.mpf(4) / 3, e)


if __name__ == '__main__':
    print('gamma(1/2)', mp.gamma(0.5))
    for x in ['0.1', '0.25', '0.5', '0.75', '0.9', '0.99']:
        print('2F1(1/3,2/3;4/3;%s) = %s' % (x, mp.hyp2f1(mp.mpf(1) / 3, mp.mpf(2) / 3, mp.mpf(4) / 3, mp.mpf(x))))
    print('K(k=0.5)', mp.ellipk(mp.mpf('0.25')))
    print('K(k=0.9)', mp.ellipk(mp.mpf('0.81')))
    for r in ['0.125', '0.25', '0.5', '1', '2', '4', '8']:
        rr = mp.mpf(r)
        k = k_of_r_nome(rr)
        print('r=%s k=%s eta=%s cardy=%s' % (r, mp.nstr(k, 20), mp.nstr(eta(rr), 20), mp.nstr(cardy_eta(eta(rr)), 20)))
    # Jacobi sn at complex argument for the conformal map tests
    k = mp.mpf('0.3')
    m = k**2
    z = mp.mpc('0.7', '0.4')
    print('sn(0.7+0.4i | k=0.3) =', mp.ellipfun('sn', z, m=m))
    print('cn =', mp.ellipfun('cn', z, m=m), ' dn =', mp.ellipfun('dn', z, m=m))
