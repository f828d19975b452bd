"""How fast does the density of a normalized sum approach the normal density?

Uniform summands have vanishing third moments and converge like 1/n; the
centered exponential is skewed and only manages 1/sqrt(n).  The Gaussian
row is a control: its sums are exactly normal, so whatever is left is grid
error.
"""

from llt_lab import bounds as B
from llt_lab import distributions as D

N_LIST = [4, 8, 16, 32, 64]

cases = [
    ("uniform", D.make_uniform_interval(1.0), "symmetric"),
    ("exponential", D.make_asymmetric_family("centered-exponential", 1.0), "general"),
    ("gaussian", D.make_gaussian(1), "symmetric"),
]

print(f"{'n':>4s}" + "".join(f"{name:>16s}" for name, _, _ in cases))
reports = [B.verify_bound(B.Experiment([fam], N_LIST, mode=mode)) for _, fam, mode in cases]
for i, n in enumerate(N_LIST):
    print(f"{n:4d}" + "".join(f"{r.records[i].delta_n:16.3e}" for r in reports))

print()
for (name, _, _), rep in zip(cases[:2], reports[:2]):
    fit = rep.rate
    note = f" (n={fit.dropped[0]} dropped as transient)" if fit.dropped else ""
    print(f"{name:12s} slope {fit.slope:+.3f} +- {fit.stderr:.3f}{note}")

# the bound's constant: smallest C making Delta_n <= rhs for every n
for (name, _, _), rep in zip(cases[:2], reports[:2]):
    print(f"{name:12s} C_min {rep.C_min:.4f}   ratio at C=3: "
          + ", ".join(f"{r.ratio:.3f}" for r in rep.records))
