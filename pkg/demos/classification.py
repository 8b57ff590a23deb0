# # Classification and sweeps
#
# classify runs every stage and places the map in one quadrant: IA
# (rational relation, invariant strip), IB (no relation, semi-conjugate to
# a torus translation), IIA/IIB (irregular, split by the Lyapunov exponent)
# or undecided. Budgets are kept small so the script finishes quickly.

from qpforce import GOLDEN, build_map
from qpforce.classify import classify, sweep, to_json

budgets = dict(regularity_n=10**4, strip_grid=64, family_r=64, family_n=2000, family_grid=64,
               lyapunov_n=10**5, transit_n=5000)

for label, m in [
    ("rigid dependent", build_map("rigid", params={"rho": (1 + GOLDEN) / 2})),
    ("skew, rho = 3/10", build_map("skew", params={"a": "0.3 + 0.1*sin(2*pi*theta)"})),
    ("rigid independent", build_map("rigid", params={"rho": 3**0.5 - 1})),
]:
    rep = classify(m, budgets)
    print(f"{label:18s} -> {rep.quadrant}  relation={rep.relation}")

rep = classify(build_map("attracting-graph"), budgets)
print(to_json(rep.to_dict())[:400], "...")

# one row per parameter value
for row in sweep("arnold", {"eps": [0.0, 0.1, 0.2, 0.3]}, "rotnum", base={"c": 0.25, "K": 0.5},
                 budgets={"rotation_n": 10**4}):
    print(row)
