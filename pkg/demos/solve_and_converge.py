# Solving the convection-diffusion problem with the streamline-diffusion method
# and watching the errors shrink as the mesh is refined.

import math

from shishkin_sdfem import (
    CoefficientSet,
    LayerAdaptedRule,
    MeshConfig,
    assemble,
    build_mesh,
    energy_norm,
    fit_rate,
    interpolate,
    make_benchmark,
    make_stabilization,
    nodal_max_error,
    solve,
)

eps = 1e-6
coeffs = CoefficientSet(eps)              # b = 1, c = 1 by default
problem = make_benchmark(coeffs, "curved")  # manufactured solution with all three layers

energy, nodal = [], []
for N in (24, 48, 96):
    mesh = build_mesh(MeshConfig(N, eps))
    # delta = C*/N on the coarse-in-x part of the mesh and 0 in the layer
    stab = make_stabilization(mesh, coeffs, c_star=1.0)
    # plain Gauss misses the layer tails leaking into the cells next to the
    # transitions; the layer-adapted rule grades those cells
    system = assemble(mesh, coeffs, stab, problem.f, "sdfem", LayerAdaptedRule(6))
    U = solve(system)

    e_energy = energy_norm(mesh, coeffs, stab, interpolate(mesh, problem.u) - U)
    e_nodal = nodal_max_error(mesh, U, problem.u)
    energy.append((N, e_energy))
    nodal.append((N, e_nodal))
    print(f"N={N:3d}  |||u^I - U||| = {e_energy:.3e}   max nodal error off the y-layers = {e_nodal:.3e}")

# rates are fitted against N^-p (ln N)^k
print("energy rate with ln^2 N factor:", round(fit_rate(energy, ln_power=2), 2))
print("nodal rate with ln^3 N factor: ", round(fit_rate(nodal, ln_power=3), 2))
print("for reference ln(96)^3 =", round(math.log(96) ** 3, 1))
