# # Semi-conjugacy to a torus translation
#
# Take a rigid rotation by rho = sqrt(3) - 1 and disguise it with the fibre
# change of coordinates h(theta, x) = x + 0.1*sin(2*pi*(x + theta)). The
# result is still conjugate to the rotation, and the strip family B_r
# recovers h up to a constant. We check H o T = H + rho on the grid.

import time

import numpy as np

from qpforce import GOLDEN, build_map
from qpforce.semiconj import build_semiconjugacy, build_strip_family, semiconjugacy_defect, uniqueness_gap

rho = np.sqrt(3) - 1
m = build_map("conjugated", GOLDEN, {"inner": {"family": "rigid", "params": {"rho": rho}},
                                      "h": "x + 0.1*sin(2*pi*(x + theta))"})

t = time.perf_counter()
fam = build_strip_family(m, rho, R=128, n=5000, G=128)
H = build_semiconjugacy(fam, 128)
print(semiconjugacy_defect(H, m, rho, report=True), f"({time.perf_counter() - t:.1f} s)")

# H should equal h up to one additive constant
th = np.arange(128) / 128
h = H.x_grid[None, :] + 0.1 * np.sin(2 * np.pi * (H.x_grid[None, :] + th[:, None]))
print("range of H - h:", np.ptp(H.values - h))

# a different r grid gives the same H up to a constant
other = build_semiconjugacy(build_strip_family(m, rho, R=128, n=5000, G=128, r_offset=0.5), 128)
print("uniqueness gap:", uniqueness_gap(H, other))
