#!/usr/bin/env python3
"""Independent evaluation of the lettuce greenhouse derivatives and
measurement map at 50 significant digits. Prints values that are frozen
into tests/unit/test_climate.cpp."""
from mpmath import mp, mpf, exp

mp.dps = 50

P = {
    (1, 1): "0.544", (1, 2): "2.65e-7", (1, 3): "53", (1, 4): "3.55e-9",
    (1, 5): "5.11e-6", (1, 6): "2.3e-4", (1, 7): "6.29e-4", (1, 8): "5.2e-5",
    (2, 1): "4.1", (2, 2): "4.87e-7", (2, 3): "7.5e-6", (2, 4): "8.31",
    (2, 5): "273.15", (2, 6): "101325", (2, 7): "0.044",
    (3, 1): "3e4", (3, 2): "1290", (3, 3): "6.1", (3, 4): "0.2",
    (4, 1): "4.1", (4, 2): "0.0036", (4, 3): "9348", (4, 4): "8314",
    (4, 5): "273.15", (4, 6): "17.4", (4, 7): "239", (4, 8): "17.269", (4, 9): "238.3",
}
p = {k: mpf(v) for k, v in P.items()}


def deriv(x, u, d):
    x1, x2, x3, x4 = map(mpf, x)
    u1, u2, u3 = map(mpf, u)
    d1, d2, d3, d4 = map(mpf, d)
    quad = -p[1, 5] * x3**2 + p[1, 6] * x3 - p[1, 7]
    phi = p[1, 4] * d1 + quad * (x2 - p[1, 8])
    phot = (1 - exp(-p[1, 3] * x1)) * (p[1, 4] * d1 * quad * (x2 - p[1, 8])) / phi
    resp = x1 * mpf(2) ** (x3 / 10 - mpf(5) / 2)
    vent_c = (u2 * mpf("1e-3") + p[2, 3]) * (x2 - d2)
    vent_h = (u2 * mpf("1e-3") + p[2, 3]) * (x4 - d4)
    transp = p[4, 2] * (1 - exp(-p[1, 3] * x1)) * (
        p[4, 3] / (p[4, 4] * (x3 + p[4, 5])) * exp(p[4, 6] * x3 / (x3 + p[4, 7])) - x4)
    return [
        p[1, 1] * phot - p[1, 2] * resp,
        (-phot + p[2, 2] * resp + u1 * mpf("1e-6") - vent_c) / p[2, 1],
        (u3 - (p[3, 2] * u2 * mpf("1e-3") + p[3, 3]) * (x3 - d3) + p[3, 4] * d1) / p[3, 1],
        (transp - vent_h) / p[4, 1],
    ]


def measure(x):
    x1, x2, x3, x4 = map(mpf, x)
    return [
        1000 * x1,
        mpf(10) ** 6 * p[2, 4] * (x3 + p[2, 5]) / (p[2, 6] * p[2, 7]) * x2,
        x3,
        100 * p[2, 4] * (x3 + p[2, 5]) / (11 * exp(p[4, 8] * x3 / (x3 + p[4, 9]))) * x4,
    ]


CASES = [
    (("0.0035", "7.32e-4", "15", "0.008"), ("0.6", "2.0", "50"), ("100", "7.32e-4", "5", "0.004")),
    (("0.12", "1.1e-3", "22.5", "0.014"), ("0.0", "0.5", "0"), ("350", "7.1e-4", "8", "0.006")),
    (("0.3", "5.5e-4", "9", "0.007"), ("1.2", "7.5", "150"), ("0", "7.6e-4", "-3", "0.003")),
]

for x, u, d in CASES:
    print("derivatives", x, u, d)
    for v in deriv(x, u, d):
        print("  ", mp.nstr(v, 20))
    print("measure", x)
    for v in measure(x):
        print("  ", mp.nstr(v, 20))
