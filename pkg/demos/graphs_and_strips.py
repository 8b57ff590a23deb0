# # Invariant graphs and strips
#
# The attracting-graph model has the invariant graph 0.1*sin(2*pi*theta),
# which attracts nearby points. Pushing any starting graph forward recovers
# it. When rho and omega are rationally dependent the invariant object lives
# on a q-fold cover of the base instead.

import numpy as np

from qpforce import GOLDEN, build_map, rational_relation_search
from qpforce.strips import GridGraph, invariance_residual, pullback_attractor, strip_search

m = build_map("attracting-graph")
G = 1024
res = pullback_attractor(m, GridGraph(G, np.zeros(G)), 200)
exact = 0.1 * np.sin(2 * np.pi * np.arange(G) / G)
print("converged:", res.converged, " sup error:", np.max(np.abs(res.graph.values - exact)))
print("invariance residual and grid modulus:", invariance_residual(m, res.graph))

# rho = (1 + omega)/2: orbits stay on two lines x = theta/2 and x = theta/2 + 1/2,
# which together form one curve winding once around the fibre over two turns of the base.
rigid = build_map("rigid", params={"rho": (1 + GOLDEN) / 2})
rel = rational_relation_search(GOLDEN, (1 + GOLDEN) / 2, 10, 10, 1e-9)
found = strip_search(rigid, rel, 1e-9, 200, 256)
print(f"cover q={found.strip.cover_q} winding k={found.strip.winding_k} width={found.strip.width}")
print("fibre over theta=0.3:", found.strip.to_qcurve().fibre_points(0.3))
