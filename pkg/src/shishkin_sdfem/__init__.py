"""Streamline-diffusion finite elements on Shishkin meshes.

Solves ``-eps Lap(u) + b u_x + c u = f`` on the unit square with zero
boundary values, using bilinear elements on a layer-adapted tensor mesh,
and provides the measurement tools used to study the method: interpolation
and energy norms, cell identities and inverse estimates, the discrete
Green's function and the pointwise error split.
"""

from .mesh import (
    CellBlock,
    InvalidConfigError,
    MeshConfig,
    ShishkinMesh,
    Subdomain,
    TransitionParams,
    build_mesh,
    classify_cell,
    classify_point,
    compute_transition_params,
)
from .problem import BENCHMARKS, CoefficientSet, ManufacturedProblem, eval_component, make_benchmark
from .fields import CellField, ExactField
from .fem import (
    AssembledSystem,
    DiscreteField,
    LayerAdaptedRule,
    QuadratureRule,
    SolverError,
    StabilizationParam,
    assemble,
    bilinear_form,
    delta_at,
    interpolate,
    make_stabilization,
    solve,
)
from .norms import Rect, energy_norm, fit_rate, interp_error_table, nodal_max_error, region_norm
from .green import (
    GreenConfig,
    GreenField,
    error_split_terms,
    green_decay_profile,
    local_layer_norms,
    node_nearest,
    solve_green,
)

__version__ = "0.1.0"
