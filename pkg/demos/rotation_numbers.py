# # Rotation numbers and rational relations
#
# A forced circle map moves every point by the same average amount per step,
# the fibrewise rotation number rho. Three estimators are available: a plain
# orbit average, a bump-weighted orbit average, and an average over a grid
# of fibres. Afterwards we ask whether rho is tied to the base rotation
# omega by an integer relation l + k*omega + q*rho = 0.

import math

from qpforce import GOLDEN, build_map, rational_relation_search
from qpforce.rotation import rotation_number_fibre_average, rotation_number_orbit, rotation_number_weighted

# A skew translation x -> x + a(theta) drifts at the mean of a.
skew = build_map("skew", params={"a": "0.3 + 0.1*sin(2*pi*theta)"})

for n in (10**3, 10**4, 10**5):
    plain = rotation_number_orbit(skew, 0.0, 0.0, n).value
    weighted = rotation_number_weighted(skew, 0.0, 0.0, n).value
    print(f"n={n:>6}  plain error {abs(plain - 0.3):.1e}  weighted error {abs(weighted - 0.3):.1e}")

# The weighted average wins by many orders of magnitude because the orbit is
# quasiperiodic. The fibre average runs all fibres at once.
print("fibre average:", rotation_number_fibre_average(skew, 10**4, 256).value)

# Arnold maps with forcing have no closed form for rho.
arnold = build_map("arnold", params={"c": 0.25, "K": 0.5, "eps": 0.3})
est = rotation_number_weighted(arnold, 0.0, 0.0, 10**5)
print(f"arnold rho = {est.value:.12f} (spread {est.spread:.1e})")

# Relation search. rho = (1 + omega)/2 gives l = k = -1, q = 2.
print(rational_relation_search(GOLDEN, (1 + GOLDEN) / 2, 10, 10, 1e-9))
# sqrt(3) - 1 is unrelated to the golden mean.
print(rational_relation_search(GOLDEN, math.sqrt(3) - 1, 50, 50, 1e-9))
