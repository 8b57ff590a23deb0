# # SL(2,R) cocycles
#
# A matrix function M(theta) over the rotation acts on directions, which
# gives a forced circle map. The Herman example diag(lam, 1/lam) Rot(pi theta)
# has a positive Lyapunov exponent and deviations that keep growing.

import math

from qpforce import cocycle as cc
from qpforce.regularity import regularity_diagnostic
from qpforce.rotation import rotation_number_orbit

print("diag(2, 1/2):", cc.lyapunov_exponent(cc.constant_cocycle([[2, 0], [0, 0.5]]), v0=(1.0, 0.0), n=10**5).value,
      "log 2 =", math.log(2))

herman = cc.herman_cocycle(2.0)
est = cc.lyapunov_seeds(herman, 10**6, 5, 0)
print(f"Herman exponent {est.value:.6f}, spread over seeds {est.seeds_spread:.1e}")

# The rotation by pi*theta turns the fibre once per base turn, so the
# projective map is not homotopic to the identity and rho locks at 1/2.
m = cc.projectivize(herman)
rho = rotation_number_orbit(m, 0.0, 0.0, 10**5).value
print("degree:", herman.degree, " rho:", rho)
print(regularity_diagnostic(m, rho, 8, 10**5, exponent_threshold=0.05).verdict)
