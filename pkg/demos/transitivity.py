# # Box transitivity scans
#
# Cut the torus into G x G boxes, seed a 3 x 3 stencil of points in each and
# record which boxes every source reaches. An irrational torus translation
# reaches everything. An invariant graph or a rational relation leaves gaps.

from qpforce import GOLDEN, build_map
from qpforce.transitivity import box_transitivity_scan, winding_growth

for label, m in [
    ("independent", build_map("rigid", params={"rho": 3**0.5 - 1})),
    ("dependent", build_map("rigid", params={"rho": (1 + GOLDEN) / 2})),
    ("attracting graph", build_map("attracting-graph")),
]:
    res = box_transitivity_scan(m, 16, 9, 20000)
    print(f"{label:17s} {res.verdict:20s} unreached pairs {res.unreached}")

# Winding of the image of a horizontal segment. For a skew translation it
# stays below twice the oscillation of the transfer function.
wg = winding_growth(build_map("skew", params={"a": "0.3 + 0.1*sin(2*pi*theta)"}), 0.2, 0.7, n=5000)
print(wg.to_dict())
