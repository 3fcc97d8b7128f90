# A walk around the Shishkin mesh.
#
# The mesh squeezes half of the x-intervals into a thin strip at x = 1 and a
# third of the y-intervals into each of the strips at y = 0 and y = 1.  Here
# we build one, look at the transition points and check which cells fall in
# which subdomain.

import numpy as np

from shishkin_sdfem import MeshConfig, Subdomain, build_mesh, classify_point

eps = 1e-6
mesh = build_mesh(MeshConfig(N=24, epsilon=eps))

# transition points sit exactly on nodes N/2, N/3 and 2N/3
print("lambda_x =", mesh.params.lambda_x, " node N/2 at x =", mesh.xs[12])
print("lambda_y =", mesh.params.lambda_y, " nodes N/3, 2N/3 at y =", [float(y) for y in mesh.y_transitions])

# coarse cells are O(1/N) wide, layer cells are tiny
print("coarse hx * N =", mesh.coarse_hx * mesh.N, "   fine hx =", mesh.fine_hx)
print("coarse hy * N =", mesh.coarse_hy * mesh.N, "   fine hy =", mesh.fine_hy)

# count the cells of each subdomain and compare areas with the closed forms
areas = mesh.cell_areas()
for region in Subdomain:
    mask = mesh.cell_mask(region)
    print(f"{region}: {mask.sum():4d} cells, area {areas[mask].sum():.6f}"
          f" (exact {mesh.subdomain_measure(region):.6f})")

# points on a shared boundary go to the higher-priority region
corner = (mesh.x_transition, mesh.y_transitions[0])
print(f"the corner ({corner[0]:.7f}, {corner[1]:.5f}) belongs to", classify_point(mesh, *corner))

# a coarse ascii picture of the tagging, x to the right and y upward
letters = {Subdomain.OMEGA_S: ".", Subdomain.OMEGA_1: "1", Subdomain.OMEGA_2: "2", Subdomain.OMEGA_12: "#"}
tags = mesh.cell_tags()
for j in reversed(range(mesh.N)):
    print("".join(letters[t] for t in tags[:, j]))

# as eps grows the layer width saturates and the mesh becomes quasi-uniform
for e in (1e-1, 1e-2, 1e-4, 1e-8):
    m = build_mesh(MeshConfig(24, e))
    print(f"eps={e:g}: saturated={m.params.saturated}, hx ratio {np.max(m.hx) / np.min(m.hx):.3g}")
