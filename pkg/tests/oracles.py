"""Independent reference computations used by the tests.

Nothing here imports the package; each function is a direct, slow
transcription of the defining formula.
"""

import math

import numpy as np

# +-3 V Mo/TiOx/TiN rows, copied from the fitted tables
G_MAX, ALPHA_P, BETA_P = 674.0, 30.58e-3, 626.8
G_MIN, ALPHA_D, BETA_D = 32.95, 353.4e-3, 921.9


def ltp_from(g, n, g_max=G_MAX, alpha_p=ALPHA_P):
    """Conductance after n LTP pulses starting at g (curve position implied by g)."""
    n0 = -math.log((g_max - g) / BETA_P) / alpha_p  # pulse index where the curve passes g
    return g_max - BETA_P * math.exp(-alpha_p * (n0 + n))


def exact_pulses_scalar(g, dg, g_max, g_min, alpha_p, alpha_d):
    if dg > 0:
        return -math.log(1.0 - dg / (g_max - g)) / alpha_p
    if dg < 0:
        return math.log(1.0 + dg / (g - g_min)) / alpha_d
    return 0.0


def amari_loop(p):
    """Amari index written with explicit loops."""
    p = np.abs(np.asarray(p, dtype=float))
    k = p.shape[0]
    total = 0.0
    for i in range(k):
        total += sum(p[i, j] for j in range(k)) / max(p[i, j] for j in range(k)) - 1.0
    for j in range(k):
        total += sum(p[i, j] for i in range(k)) / max(p[i, j] for i in range(k)) - 1.0
    return total / (2.0 * k * (k - 1))


def dense_mesh_oracle(g, v, r_wire):
    """Brute-force nodal analysis of the crossbar mesh with a dense solve.

    Every wire segment, device and source link is listed as an explicit
    resistor between named nodes. Input j is driven through one segment
    into node (0, j) and runs along increasing i; output i runs along
    decreasing j into a virtual ground after node (i, 0). Output currents
    are taken through the final ground segment. Conductances in nS,
    voltages in V, currents in nA.
    """
    g = np.asarray(g, float)
    v = np.asarray(v, float)
    n, m = g.shape
    if r_wire == 0:
        return g @ v
    names = {}
    res = []
    gw = 1.0 / r_wire
    for j in range(m):
        res.append((("src", j), ("in", 0, j), gw))
        for i in range(n - 1):
            res.append((("in", i, j), ("in", i + 1, j), gw))
    for i in range(n):
        res.append((("out", i, 0), "gnd", gw))
        for j in range(m - 1):
            res.append((("out", i, j), ("out", i, j + 1), gw))
    for i in range(n):
        for j in range(m):
            res.append((("in", i, j), ("out", i, j), g[i, j] * 1e-9))
    fixed = {("src", j): v[j] for j in range(m)}
    fixed["gnd"] = 0.0
    for p, q, _ in res:
        for key in (p, q):
            if key not in fixed:
                names.setdefault(key, len(names))
    a = np.zeros((len(names), len(names)))
    b = np.zeros(len(names))
    for p, q, c in res:
        for x, y in ((p, q), (q, p)):
            if x in fixed:
                continue
            a[names[x], names[x]] += c
            if y in fixed:
                b[names[x]] += c * fixed[y]
            else:
                a[names[x], names[y]] -= c
    volt = np.linalg.solve(a, b)
    return np.array([gw * volt[names[("out", i, 0)]] for i in range(n)]) * 1e9
