"""Brute-force reference values for the signal/metric/recurrence tests.

Run with `python3 signal_oracles.py`. Every number printed here is frozen
into the C++ unit tests; this script shares no code with the library.
"""
import math

import numba
import numpy as np


def phi(t):
    return 1.0 / (2.0 + np.sin(t) + np.sin(np.pi * t))


@numba.njit(cache=True)
def phi_scalar(t):
    return 1.0 / (2.0 + math.sin(t) + math.sin(math.pi * t))


def grid(a, b, spu):
    count = int(round((b - a) * spu)) + 1
    return a + np.arange(count) / spu


def seminorm(f, g, n, spu):
    t = grid(-n, n, spu)
    return np.max(np.abs(f(t) - g(t)))


def compact_open(f, g, n_max, spu):
    total = 0.0
    for n in range(1, n_max + 1):
        d = seminorm(f, g, n, spu)
        total += 2.0 ** -n * (d / (1.0 + d))
    return total


@numba.njit(cache=True)
def poisson_returns(eps, half_width, spu, step, horizon):
    count = int(round(2 * half_width * spu)) + 1
    ref = np.empty(count)
    for k in range(count):
        ref[k] = phi_scalar(-half_width + k / spu)
    out_tau = []
    out_sup = []
    in_initial = True
    in_cluster = False
    best_tau = 0.0
    best_sup = 0.0
    j = 1
    while j * step <= horizon:
        tau = j * step
        sup = 0.0
        for k in range(count):
            d = abs(phi_scalar(-half_width + k / spu + tau) - ref[k])
            if d > sup:
                sup = d
                if sup >= eps:
                    break
        member = sup < eps
        if in_initial:
            if not member:
                in_initial = False
        elif member:
            if not in_cluster or sup < best_sup:
                best_tau, best_sup = tau, sup
            in_cluster = True
        elif in_cluster:
            out_tau.append(best_tau)
            out_sup.append(best_sup)
            in_cluster = False
        j += 1
    if in_cluster:
        out_tau.append(best_tau)
        out_sup.append(best_sup)
    return out_tau, out_sup


def main():
    np.set_printoptions(precision=17)
    # d_3(sin t, sin(t+0.1)) on the 64/unit grid, bracketed by a 1e5-point grid.
    f = np.sin
    g = lambda t: np.sin(t + 0.1)
    print("seminorm_d3_grid64", repr(seminorm(f, g, 3, 64)))
    dense = np.linspace(-3, 3, 100001)
    print("seminorm_d3_dense", repr(np.max(np.abs(f(dense) - g(dense)))))

    # compact-open distance between the Poisson example and its 44-shift.
    print("co_poisson_44_nmax5",
          repr(compact_open(phi, lambda t: phi(t + 44.0), 5, 64)))

    # windowed sup at tau = 44 and at the nearest 1/1024 grid point below it.
    s = grid(-5, 5, 64)
    for tau in (44.0, 44.0 - 1.0 / 1024.0):
        print("poisson_window5_sup", tau, repr(np.max(np.abs(phi(s + tau) - phi(s)))))

    # sup over [0, H] on the 64/unit grid.
    for h in (1e3, 1e4, 1e5):
        t = np.arange(int(h * 64) + 1) / 64.0
        print("poisson_sup", int(h), repr(np.max(phi(t))))

    # quasi-periodic inclusion length, eps 0.1, window_T 10, 16/unit, tau step 0.01 on (0, 500).
    q = lambda t: np.sin(t) + np.sin(math.sqrt(2.0) * t)
    s = grid(-10, 10, 16)
    ref = q(s)
    taus = np.arange(0, 50001) * 0.01
    members = [tau for tau in taus if np.max(np.abs(q(s + tau) - ref)) < 0.1]
    pts = [0.0] + members + [500.0]
    gaps = np.diff(pts)
    print("qp_inclusion_length", repr(float(np.max(gaps))), "count", len(members))

    # return times of the Poisson example, eps 0.1, half-width 5, tau step 1/1024, horizon 1e4.
    taus_r, sups_r = poisson_returns(0.1, 5.0, 64, 1.0 / 1024.0, 1e4)
    print("poisson_returns", len(taus_r))
    for tau, sup in zip(taus_r, sups_r):
        print("  ", repr(tau), repr(sup))

    # equicontinuity probe on hull samples {0, 44, 88}: window 5, 64/unit, scan step 0.5 to horizon 100.
    shifts = (0.0, 44.0, 88.0)
    s = grid(-5, 5, 64)
    worst = 0.0
    for i in range(3):
        for j in range(i + 1, 3):
            d0 = np.max(np.abs(phi(s + shifts[i]) - phi(s + shifts[j])))
            later = max(np.max(np.abs(phi(s + t + shifts[i]) - phi(s + t + shifts[j])))
                        for t in np.arange(0, 201) * 0.5)
            print("probe_pair", i, j, repr(d0), repr(later))
            worst = max(worst, later / d0)
    print("probe_expansion", repr(worst))


if __name__ == "__main__":
    main()
