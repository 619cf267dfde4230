"""Independent high-precision quadrature references for the default profile.

f0(x, v) = c * min(r, 1)^alpha * exp(-r) * exp(-|v|^2 / 2),  r = |x - xi0|,
with alpha = 0.6 and c chosen so that the total mass is 0.9.  The charge starts
at xi0 = 0 with eta0 = (0.5, 0, 0).  Values printed here are frozen into the
C++ unit tests.
"""
import mpmath as mp

mp.mp.dps = 30
alpha = mp.mpf("0.6")
M0 = mp.mpf("0.9")
eta0 = mp.mpf("0.5")

def shape(r):
    return (min(r, 1) ** alpha) * mp.e ** (-r)

Ir = mp.quad(lambda r: r**2 * shape(r), [0, 1, mp.inf])
gauss = (2 * mp.pi) ** mp.mpf(1.5)
c = M0 / (4 * mp.pi * Ir * gauss)
rho = lambda r: c * gauss * shape(r)

kinetic = mp.mpf(3) / 2 * M0
charge_pot = mp.quad(lambda r: 4 * mp.pi * r * rho(r), [0, 1, mp.inf])
enclosed = lambda r: mp.quad(lambda s: 4 * mp.pi * s**2 * rho(s), [0, min(r, 1)] + ([1, r] if r > 1 else []))
self_pot = mp.quad(lambda r: enclosed(r) * rho(r) * 4 * mp.pi * r, [0, 1, 4, 12, mp.inf])
charge_kin = eta0**2 / 2

def moment(m):
    vpart = lambda r: mp.quad(lambda v: 4 * mp.pi * v**2 * mp.e ** (-v**2 / 2) * (v**2 + 1 / r) ** (m / 2), [0, 2, 6, mp.inf])
    return mp.quad(lambda r: 4 * mp.pi * r**2 * c * shape(r) * vpart(r), [0, mp.mpf("1e-3"), mp.mpf("0.1"), 1, 5, mp.inf])

def retained(n):
    px = mp.quad(lambda r: r**2 * shape(r), [mp.mpf(1) / n, 1, n]) / Ir
    # Gaussian mass of the shifted velocity ball |v - eta0| < n, in spherical
    # coordinates about eta0.
    def shell(u):
        # integral over the sphere |w| = u of exp(-|w + eta0|^2 / 2)
        a = u * eta0
        return 2 * mp.pi * u**2 * mp.e ** (-(u**2 + eta0**2) / 2) * (mp.e**a - mp.e ** (-a)) / a
    pv = mp.quad(shell, [0, min(n, 8), n]) / gauss
    return M0 * px * pv

print("normalization c   =", mp.nstr(c, 20))
print("f0 sup            =", mp.nstr(c * shape(alpha), 20), "(attained at r = alpha, v = 0)")
print("kinetic           =", mp.nstr(kinetic, 20))
print("charge kinetic    =", mp.nstr(charge_kin, 20))
print("plasma-plasma pot =", mp.nstr(self_pot, 20))
print("plasma-charge pot =", mp.nstr(charge_pot, 20))
print("H(0) (eps = 0)    =", mp.nstr(kinetic + charge_kin + self_pot + charge_pot, 20))
for m in (2, 4, 6):
    print(f"H_{m}(0)           =", mp.nstr(moment(m), 20))
for n in (4, 8, 16, 32, 64):
    print(f"retained mass n={n:<3}=", mp.nstr(retained(n), 20))
