"""Separation of |f| from 1 away from the origin, family by family.

For each law we scan |f(t)| over 0.05 <= sigma|t| <= 40 and report the
largest c with 1 - |f(t)| >= c^d min(sigma^2 |t|^2, 1) / (M^2 sigma^{2d}).
A certificate then rules out |f| coming back near 1 beyond the window.
"""

from llt_lab import cf_analysis as CF
from llt_lab import distributions as D

print(f"{'family':58s} {'c':>8s} {'max|f|':>8s}  certified")
reports = []
for spec in D.default_catalog():
    rep = CF.separation_scan(spec, 0.05 / spec.sigma, 40.0 / spec.sigma)
    reports.append(rep)
    print(f"{spec.name:58s} {rep.c_empirical:8.4f} {rep.delta_f:8.4f}  {rep.certified}")

print(f"\nc feasible for the whole catalog: {CF.c_feasible(reports):.4f}")

# near the origin 1 - |f| ~ sigma^2 t^2 / 2, so in d = 1 the ratio tends to M^2 sigma^2 / 2
u = D.make_uniform_interval(1.0)
print(f"uniform small-t ratio: {CF.separation_scan(u, 1e-3, 40.0).c_small_t:.6f} (1/24 = {1 / 24:.6f})")
