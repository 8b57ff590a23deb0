# # Deviations from uniform rotation
#
# D_n = x_n - x_0 - n*rho. A map is regular when these stay bounded for all
# orbits. For a skew translation the bound is explicit: solving the
# cohomological equation a = phi(theta + omega) - phi(theta) + rho gives
# D_n = phi(theta_n) - phi(theta_0).

import numpy as np

from qpforce import GOLDEN, build_map
from qpforce.regularity import deviation_profile, regularity_diagnostic, solve_coboundary

rho = np.sqrt(3) - 1
skew = build_map("skew", params={"a": f"{rho} + 0.1*sin(2*pi*theta)"})

sol = solve_coboundary(lambda t: rho + 0.1 * np.sin(2 * np.pi * t), GOLDEN)
print("oscillation of phi:", np.ptp(sol.phi), " closed form:", 0.1 / abs(np.sin(np.pi * GOLDEN)))

p = deviation_profile(skew, 0.0, 0.0, rho, 10**5)
print("sup - inf of D_n:", p.sup_dev - p.inf_dev, " growth exponent:", p.growth_exponent)

# Stratified orbits give the verdict.
print(regularity_diagnostic(skew, rho, 8, 10**5).to_dict()["verdict"])

# With a wrong rho the deviations drift linearly and the verdict flips.
v = regularity_diagnostic(skew, rho + 1e-3, 8, 10**5)
print("wrong rho:", v.verdict, [round(o["growth_exponent"], 2) for o in v.to_dict()["orbits"]])
