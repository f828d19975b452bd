"""The maximum of a density under convolution.

M(X + Y)^{-2} is at least (M(X)^{-2} + M(Y)^{-2}) / 2 on the line, and the
two uniform laws on [-1, 1] hit this with equality: their sum is a triangle
with peak 1/2.  In higher dimension the constant drops to 1/e.
"""

import itertools

from llt_lab import bounds as B
from llt_lab import distributions as D
from llt_lab import functionals as F

u = D.make_uniform_interval(3 ** -0.5)
rec = B.subadditivity_check([u, u])
print(f"two uniforms: M(sum) = {rec.M_sum:.6f}, M^-2 = {rec.harmonic_lhs:.6f}, "
      f"half-sum bound {rec.harmonic_rhs_half:.6f}")

cat = D.default_catalog()
worst = None
for d in (1, 2, 3):
    fams = [s for s in cat if s.dim == d]
    for a, b in itertools.combinations_with_replacement(fams, 2):
        r = B.subadditivity_check([a, b])
        slack = r.harmonic_lhs / r.harmonic_rhs
        if worst is None or slack < worst[0]:
            worst = (slack, a.name, b.name)
print(f"tightest pair against the 1/e bound: {worst[1]} + {worst[2]} "
      f"(lhs/rhs = {worst[0]:.3f})")

# isotropic constant M^{1/d} sigma, bounded below by (2 pi e)^{-1/2}
for s in cat:
    print(f"{s.name:58s} M^(1/d) sigma = {F.max_density(s) ** (1 / s.dim) * s.sigma:.5f}")
