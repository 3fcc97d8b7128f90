import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shishkin_sdfem import (
    InvalidConfigError,
    MeshConfig,
    Subdomain,
    build_mesh,
    classify_cell,
    classify_point,
    compute_transition_params,
)


def test_transition_values_match_hand_computation():
    # N = 24, eps = 1e-6, beta = 1, rho = 2.5
    p = compute_transition_params(MeshConfig(24, 1e-6))
    assert p.lambda_x == pytest.approx(2.5e-6 * math.log(24), rel=1e-15)
    assert p.lambda_y == pytest.approx(2.5e-3 * math.log(24), rel=1e-15)
    assert not p.saturated


def test_transition_saturates_for_large_eps():
    p = compute_transition_params(MeshConfig(24, 0.2))
    assert p.lambda_x == 0.5 and p.saturated_x
    assert p.lambda_y == 0.25 and p.saturated_y
    mesh = build_mesh(MeshConfig(24, 0.2))
    # saturated in x: uniform; saturated in y: layer cells half the size of the middle ones
    np.testing.assert_allclose(mesh.hx, 1 / 24, rtol=1e-12)
    np.testing.assert_allclose(mesh.hy[:8], 0.75 / 24, rtol=1e-12)
    np.testing.assert_allclose(mesh.hy[8:16], 1.5 / 24, rtol=1e-12)


def test_beta_scales_lambda_x():
    a = compute_transition_params(MeshConfig(48, 1e-6, beta=1.0))
    b = compute_transition_params(MeshConfig(48, 1e-6, beta=2.0))
    assert b.lambda_x == pytest.approx(a.lambda_x / 2)
    assert b.lambda_y == a.lambda_y


def test_node_formulas_small_case():
    mesh = build_mesh(MeshConfig(6, 1e-4))
    lx, ly = mesh.params.lambda_x, mesh.params.lambda_y
    expected_x = [0, (1 - lx) / 3, 2 * (1 - lx) / 3, 1 - lx, 1 - 2 * lx / 3, 1 - lx / 3, 1]
    expected_y = [0, ly / 2, ly, 0.5, 1 - ly, 1 - ly / 2, 1]
    np.testing.assert_allclose(mesh.xs, expected_x, rtol=0, atol=1e-15)
    np.testing.assert_allclose(mesh.ys, expected_y, rtol=0, atol=1e-15)


@pytest.mark.parametrize("N", [0, 4, 25, 30.5, -6, True])
def test_rejects_invalid_N(N):
    with pytest.raises(InvalidConfigError):
        MeshConfig(N, 1e-6)


@pytest.mark.parametrize("field,value", [("epsilon", 0.0), ("epsilon", -1e-3), ("epsilon", math.nan),
                                         ("beta", 0.0), ("rho", math.inf)])
def test_rejects_invalid_reals(field, value):
    kwargs = {"N": 24, "epsilon": 1e-6, field: value}
    with pytest.raises(InvalidConfigError):
        MeshConfig(**kwargs)


configs = st.builds(
    MeshConfig,
    N=st.integers(1, 40).map(lambda k: 6 * k),
    epsilon=st.floats(1e-12, 0.5),
    beta=st.floats(0.1, 5.0),
)


@settings(max_examples=60, deadline=None)
@given(configs)
def test_mesh_structure_properties(config):
    mesh = build_mesh(config)
    N = config.N
    assert mesh.xs.shape == mesh.ys.shape == (N + 1,)
    assert mesh.xs[0] == mesh.ys[0] == 0.0 and mesh.xs[-1] == mesh.ys[-1] == 1.0
    assert np.all(np.diff(mesh.xs) > 0) and np.all(np.diff(mesh.ys) > 0)
    assert mesh.xs[N // 2] == 1 - mesh.params.lambda_x
    assert mesh.ys[N // 3] == mesh.params.lambda_y
    assert mesh.ys[2 * N // 3] == 1 - mesh.params.lambda_y
    # piecewise uniform with the advertised widths
    np.testing.assert_allclose(mesh.hx[: N // 2], mesh.coarse_hx, rtol=1e-9)
    np.testing.assert_allclose(mesh.hx[N // 2:], mesh.fine_hx, rtol=1e-9, atol=4e-16)  # widths are differences of coordinates near 1
    np.testing.assert_allclose(mesh.hy[N // 3: 2 * N // 3], mesh.coarse_hy, rtol=1e-9)
    assert 1 / N <= mesh.coarse_hx * (1 + 1e-12) and mesh.coarse_hx <= 3 / N
    assert 1 / N <= mesh.coarse_hy * (1 + 1e-12) and mesh.coarse_hy <= 3 / N
    assert np.sum(mesh.cell_areas()) == pytest.approx(1.0, rel=1e-12)


def test_cell_tags_and_measures(mesh24):
    N = 24
    counts = {r: int(mesh24.cell_mask(r).sum()) for r in Subdomain}
    assert counts[Subdomain.OMEGA_S] == (N // 2) * (N // 3)
    assert counts[Subdomain.OMEGA_1] == (N // 2) * (N // 3)
    assert counts[Subdomain.OMEGA_2] == (N // 2) * (2 * N // 3)
    assert counts[Subdomain.OMEGA_12] == (N // 2) * (2 * N // 3)
    for r in Subdomain:
        area = mesh24.cell_areas()[mesh24.cell_mask(r)].sum()
        assert area == pytest.approx(mesh24.subdomain_measure(r), rel=1e-12)
    assert sum(mesh24.subdomain_measure(r) for r in Subdomain) == pytest.approx(1.0)


def test_classify_point_priorities(mesh24):
    xt = mesh24.x_transition
    y0, y1 = mesh24.y_transitions
    assert classify_point(mesh24, 0.3, 0.5) is Subdomain.OMEGA_S
    assert classify_point(mesh24, 1.0, 0.5) is Subdomain.OMEGA_1
    assert classify_point(mesh24, 0.3, 0.0) is Subdomain.OMEGA_2
    assert classify_point(mesh24, 1.0, 1.0) is Subdomain.OMEGA_12
    # shared boundaries
    assert classify_point(mesh24, xt, 0.5) is Subdomain.OMEGA_1
    assert classify_point(mesh24, 0.3, y0) is Subdomain.OMEGA_2
    assert classify_point(mesh24, 0.3, y1) is Subdomain.OMEGA_2
    assert classify_point(mesh24, xt, y0) is Subdomain.OMEGA_12
    with pytest.raises(ValueError):
        classify_point(mesh24, 1.1, 0.5)


def test_classify_cell_matches_tags(mesh24):
    tags = mesh24.cell_tags()
    for i in range(1, 25):
        for j in range(1, 25):
            assert classify_cell(mesh24, i, j) is tags[i - 1, j - 1]
    for bad in [(0, 1), (25, 3), (3, 25)]:
        with pytest.raises(IndexError):
            classify_cell(mesh24, *bad)


def test_node_mask_and_blocks(mesh24):
    cells = np.zeros((24, 24), dtype=bool)
    cells[3, 5] = True
    nodes = mesh24.node_mask(cells)
    assert nodes.sum() == 4 and nodes[3, 5] and nodes[4, 6]
    block = mesh24.block(2, 5, 0, 3)
    np.testing.assert_array_equal(block.hx, mesh24.hx[2:5])
    np.testing.assert_array_equal(block.xs, mesh24.xs[2:6])
    np.testing.assert_allclose(block.cell_areas(), mesh24.cell_areas()[2:5, 0:3])
    with pytest.raises(IndexError):
        mesh24.block(3, 3, 0, 1)
