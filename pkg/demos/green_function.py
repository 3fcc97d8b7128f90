# The discrete Green's function of the streamline-diffusion method.
#
# G solves the transposed system with a unit load at one mesh node.  It is
# large near that node and downstream of it in the x-direction, and decays
# quickly everywhere else.  We check the decay and then use G to split the
# nodal error into its two pieces.

from shishkin_sdfem import (
    CoefficientSet,
    GreenConfig,
    LayerAdaptedRule,
    MeshConfig,
    Subdomain,
    assemble,
    build_mesh,
    error_split_terms,
    green_decay_profile,
    make_benchmark,
    make_stabilization,
    node_nearest,
    solve,
    solve_green,
)

eps, N = 1e-6, 48
mesh = build_mesh(MeshConfig(N, eps))
coeffs = CoefficientSet(eps)
stab = make_stabilization(mesh, coeffs, 1.0)

# a probe in the x-layer, a little above the bottom transition
node = (3 * N // 4, node_nearest(mesh, 0.5, 0.13)[1])
print("probe node", node, f"at ({mesh.xs[node[0]]:.7f}, {mesh.ys[node[1]]:.4f})")

# with a small k the neighbourhood of the probe is a narrow band; K scales it
for K in (1.0, 2.0, 3.0):
    gf = solve_green(mesh, coeffs, stab, GreenConfig(node, k=0.2, K=K))
    seps = {str(r): green_decay_profile(gf, r).separation for r in Subdomain}
    # weighted norm of G near the probe divided by the one away from it
    print(f"K={K}: separation",
          ", ".join(f"{k} {v:.3g}" for k, v in seps.items()))

# the energy norm of G grows roughly like N ln N
for n in (24, 48, 96):
    m = build_mesh(MeshConfig(n, eps))
    s = make_stabilization(m, coeffs, 1.0)
    g = solve_green(m, coeffs, s, GreenConfig(node_nearest(m, 0.5, 0.5)))
    print(f"N={n}: |||G|||^2 = {g.energy_sq():.4g}")

# error splitting: (U - u)(x*) equals a consistency term plus B(u - u^I, G)
problem = make_benchmark(coeffs, "curved")
rule = LayerAdaptedRule(6)
system = assemble(mesh, coeffs, stab, problem.f, "sdfem", rule)
U = solve(system)
gf = solve_green(mesh, coeffs, stab, GreenConfig(node), system)
split = error_split_terms(problem, mesh, coeffs, stab, U, gf, rule)
print(f"error at the probe {split.direct:.6e} = {split.term1:.6e} + {split.term2:.6e}"
      f"   (defect {split.defect:.1e})")
