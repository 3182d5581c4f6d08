#!/usr/bin/env python3
"""Recompute the frozen reference constants used in the test suite.

Everything here is evaluated with mpmath at 60 significant digits, straight
from the closed-form definitions, independently of the package code.  The
printed values are frozen into tests as literals; rerun this script to audit
them.

Usage: python tools/compute_reference_values.py
"""

from fractions import Fraction

import mpmath as mp

mp.mp.dps = 60


def header(title):
    print()
    print(f"== {title}")


def show(label, value, digits=20):
    print(f"{label:58s} {mp.nstr(value, digits)}")


# --- fixed-length sample size: ceil(log(1/eps) / (gamma * delta^2)) -------
header("required_n")
for eps, gamma, delta in [("0.01", "0.2", "0.05"), ("0.01", "0.01", "0.05")]:
    v = mp.log(1 / mp.mpf(eps)) / (mp.mpf(gamma) * mp.mpf(delta) ** 2)
    show(f"required_n({eps}, {gamma}, {delta}) raw", v)
    print(f"{'  ceil':58s} {int(mp.ceil(v))}")

# --- decision margin for the sequential test with indifference region ----
header("m_threshold = log(2/sqrt(eps*xi)) / (2*gamma*delta)")
for eps, xi, gamma, delta in [
    ("0.01", "0.3", "0.01", "0.05"),
    ("0.01", "0.3", "0.2", "0.05"),
]:
    m = mp.log(2 / mp.sqrt(mp.mpf(eps) * mp.mpf(xi))) / (
        2 * mp.mpf(gamma) * mp.mpf(delta)
    )
    show(f"m_threshold({eps}, {xi}, {gamma}, {delta})", m)

# --- schedule growth default: min(0.4, 1/(log(2) log(1/eps))) -------------
header("xi_default")
for eps in ["0.01", "0.1"]:
    v = 1 / (mp.log(2) * mp.log(1 / mp.mpf(eps)))
    show(f"xi_default({eps}) raw", v)

# --- two-sided tail: min(1, 2 exp(-t^2 gamma / n)) -------------------------
header("hoeffding_tail")
show("2*exp(-200^2*0.2/10^4)", 2 * mp.exp(-mp.mpf(200) ** 2 * mp.mpf("0.2") / 10**4))

# --- autocovariance lag from gap: log(n*g) / (4*log(1/(1-g))) --------------
header("eta_for")
for n, g in [(10**6, "0.1"), (10**4, "0.5")]:
    v = mp.log(n * mp.mpf(g)) / (4 * mp.log(1 / (1 - mp.mpf(g))))
    show(f"eta_for({n}, {g}) raw", v)

# --- growing threshold for the no-indifference test ------------------------
header("g_threshold = sqrt(n_i/gamma * (log(1/eps) + 1 + 2 log i))")
for i, eps, gamma, n_i in [(1, "0.01", "0.01", 13000)]:
    v = mp.sqrt(n_i / mp.mpf(gamma) * (mp.log(1 / mp.mpf(eps)) + 1 + 2 * mp.log(i)))
    show(f"g_threshold({i}, {eps}, {gamma}, {n_i})", v)

# --- expected stopping time, indifference-region test ----------------------
header("expected_stop_indiff = (1+xi)*(M/D + 2*sqrt((M+2D)/(g*D^3) + 2/(g*D^2)))")


def stop_indiff(m_val, xi, gamma, big_delta):
    xi, gamma, big_delta = mp.mpf(xi), mp.mpf(gamma), mp.mpf(big_delta)
    return (1 + xi) * (
        m_val / big_delta
        + 2 * mp.sqrt((m_val + 2 * big_delta) / (gamma * big_delta**3)
                      + 2 / (gamma * big_delta**2))
    )


m1 = mp.log(2 / mp.sqrt(mp.mpf("0.01") * mp.mpf("0.3"))) / (2 * mp.mpf("0.01") * mp.mpf("0.05"))
show("M(0.01,0.3,0.01,0.05)", m1)
show("bound(M, 0.3, 0.01, 0.2)", stop_indiff(m1, "0.3", "0.01", "0.2"))
m2 = mp.log(2 / mp.sqrt(mp.mpf("0.01") * mp.mpf("0.3"))) / (2 * mp.mpf("0.2") * mp.mpf("0.05"))
show("M(0.01,0.3,0.2,0.05)", m2)
show("bound(M, 0.3, 0.2, 0.2)", stop_indiff(m2, "0.3", "0.2", "0.2"))

# --- expected stopping time, no-indifference test --------------------------
header("expected_stop_noindiff: N scan with n_i = floor(n0*(1+xi)^i)")


def noindiff_bound(eps, xi, gamma, big_delta, n0):
    eps, xi, gamma, big_delta = (mp.mpf(eps), mp.mpf(xi), mp.mpf(gamma),
                                 mp.mpf(big_delta))
    i = 1
    while True:
        # exact floor via Fraction on the decimal expansion of (1+xi)^i
        n_i = int(mp.floor(n0 * (1 + xi) ** i))
        need = 4 * (mp.log(1 / eps) + 1 + 2 * mp.log(i)) / (gamma * big_delta**2)
        if need <= n_i:
            return i, n_i, (1 + xi) * (n_i + 4 * eps / (gamma * big_delta**2))
        i += 1


i_hit, n_hit, bound = noindiff_bound("0.01", "0.3", "0.2", "0.2", 500)
print(f"{'gamma=0.2 eps=0.01 xi=0.3 Delta=0.2 n0=500':58s} i={i_hit} N={n_hit}")
show("  bound", bound)

# --- stationary distribution of the 2-state chain -------------------------
header("two-state stationary: pi = (q/(p+q), p/(p+q))")
p, q = Fraction(2, 10), Fraction(1, 10)
print(f"{'p=0.2 q=0.1':58s} pi=({q/(p+q)}, {p/(p+q)})  gap=1-(1-p-q)={p+q}")

# --- alternating-sequence autocovariance at lag 1 --------------------------
header("autocovariance of 0,1,0,1,... (n=1000, lag 1)")
vals = [k % 2 for k in range(1000)]
mean = Fraction(sum(vals), len(vals))
num = sum((Fraction(vals[j]) - mean) * (Fraction(vals[j + 1]) - mean)
          for j in range(999))
print(f"{'exact':58s} {num / 999} = {float(num / 999)}")

# --- stop-tail identity at the cap ----------------------------------------
header("stop tail at t=6M/delta, Delta=delta vs (1+xi)*eps*xi/4")
eps, xi, gamma, delta = map(mp.mpf, ("0.01", "0.3", "0.2", "0.05"))
m_v = mp.log(2 / mp.sqrt(eps * xi)) / (2 * gamma * delta)
t = 6 * m_v / delta
tail = (1 + xi) * mp.exp(-gamma * (t * delta - m_v) ** 2 / t)
show("exact tail (exp(-25/6 g d M) form)", tail)
show("paper-style cap (1+xi)*exp(-4 g d M)", (1 + xi) * mp.exp(-4 * gamma * delta * m_v))
show("(1+xi)*eps*xi/4", (1 + xi) * eps * xi / 4)

# --- three-state path-graph random walk stationary ------------------------
header("path-graph walk 0-1-2 (hop prob 1/2 to each neighbour)")
print("degrees (1,2,1) -> pi = (1/4, 1/2, 1/4)")
