"""
Tests for the quadrature matrices and the numeric fixed-point solver.
"""

import numpy as np
import pytest
from scipy import special

from app.exceptions import NonFiniteIterateError, ShapeError, TailMassError, TailMassWarning
from app.models.quadrature import Grid1D, QuadMatrix
from app.services import benchmarks
from app.services.oracle_service import OracleService, trapezoid_weights


@pytest.fixture
def oracle():
    return OracleService(tail_tolerance=1e-4, row_sum_tolerance=1e-6, strict_tail=False)


def _shifted_cdf(y, x):
    return special.ndtr((y - 0.5 * x) / 0.3)


def test_stencil_row_example(oracle):
    """Test the three-point stencil row [0.25, 0.5, 0.25]."""
    matrix = oracle.build_cdf_matrix(
        lambda y, x: special.ndtr(y) + 0.0 * x, Grid1D(np.array([-10.0, 0.0, 10.0])), Grid1D.uniform(0.0, 1.0, 2)
    )
    assert np.allclose(matrix.entries, [[0.25, 0.5, 0.25]] * 2, atol=1e-15)
    assert matrix.kind == "cdf-stencil"


def test_clamped_rows_sum_to_one(oracle):
    """Test that clamping makes every row sum to one."""
    grid = Grid1D.uniform(-5.0, 5.0, 201)
    with pytest.warns(TailMassWarning):
        matrix = oracle.build_cdf_matrix(benchmarks.cond_cdf_example_a, grid, grid)
    assert np.all(np.abs(matrix.entries.sum(axis=1) - 1.0) <= 1e-12)
    assert np.all(matrix.entries >= 0.0)
    assert matrix.upper_tail > 0.5


def test_unclamped_rows_record_missing_mass():
    """Test that without clamping a shifted row loses its tail mass."""
    oracle = OracleService(tail_tolerance=1.0)
    matrix = oracle.build_cdf_matrix(
        lambda y, x: special.ndtr(y - x), Grid1D.uniform(-3.0, 3.0, 301), Grid1D(np.array([0.0, 3.0])), clamp=False
    )
    sums = matrix.entries.sum(axis=1)
    assert sums[0] == pytest.approx(1.0, abs=1e-2)
    assert sums[1] == pytest.approx(0.5, abs=1e-2)


def test_tail_mass_strict(oracle):
    """Test TailMassError when strict tail checking is on."""
    strict = OracleService(tail_tolerance=1e-4, strict_tail=True)
    grid = Grid1D.uniform(-3.0, 3.0, 61)
    with pytest.raises(TailMassError):
        strict.build_cdf_matrix(benchmarks.cond_cdf_example_a, grid, grid)


def test_example_a_cdf(oracle):
    """Test the CDF oracle on Example (a) against the closed form."""
    y_grid = Grid1D.uniform(-6.0, 6.0, 1201)
    x_grid = Grid1D.uniform(-2.0, 2.0, 81)
    matrix = oracle.build_cdf_matrix(benchmarks.cond_cdf_example_a, y_grid, x_grid)
    estimate = oracle.cond_expectation_numeric(matrix, y_grid.points)
    assert np.max(np.abs(estimate - benchmarks.exact_example_a(x_grid.points))) <= 1e-3


def test_example_a_pdf(oracle):
    """Test the PDF oracle on Example (a) against the closed form."""
    y_grid = Grid1D.uniform(-6.0, 6.0, 1201)
    x_grid = Grid1D.uniform(-2.0, 2.0, 41)
    matrix = oracle.build_pdf_matrix(benchmarks.cond_pdf_example_a, y_grid, x_grid)
    estimate = oracle.cond_expectation_numeric(matrix, y_grid.points)
    assert matrix.row_sum_deviation <= 1e-6
    assert np.max(np.abs(estimate - benchmarks.exact_example_a(x_grid.points))) <= 1e-3


def test_pdf_row_sum_deviation_reported():
    """Test that a row losing density mass triggers tail reporting."""
    grid = Grid1D.uniform(-6.0, 6.0, 601)
    rows = Grid1D.uniform(2.0, 3.0, 3)
    with pytest.raises(TailMassError):
        OracleService(strict_tail=True).build_pdf_matrix(benchmarks.cond_pdf_example_a, grid, rows)


def test_example_b_step_cdf(oracle):
    """Test the step CDF of the indicator model on a cell-centred grid."""
    y_grid = Grid1D.cell_centered(-6.25, 6.25, 5000)
    x_grid = Grid1D.uniform(-2.0, 2.0, 81)
    matrix = oracle.build_cdf_matrix(benchmarks.cond_cdf_example_b, y_grid, x_grid)
    estimate = oracle.cond_expectation_numeric(matrix, y_grid.points)
    assert np.max(np.abs(estimate - benchmarks.exact_example_b(x_grid.points))) <= 1e-3


def test_trapezoid_weights():
    """Test trapezoid weights on a uniform grid."""
    assert trapezoid_weights(np.array([0.0, 1.0, 2.0, 3.0])).tolist() == [0.5, 1.0, 1.0, 0.5]


def test_grids():
    """Test uniform and cell-centred constructors."""
    assert Grid1D.cell_centered(0.0, 1.0, 4).points.tolist() == [0.125, 0.375, 0.625, 0.875]
    assert Grid1D.uniform(-1.0, 1.0, 3).bounds == (-1.0, 1.0)


def test_apply_checks_length():
    """Test ShapeError on a mismatched vector."""
    grid = Grid1D.uniform(0.0, 1.0, 3)
    matrix = QuadMatrix(np.eye(3), grid, grid, "pdf-trapezoid")
    with pytest.raises(ShapeError):
        matrix.apply(np.ones(4))


def test_fixed_point_contraction(oracle):
    """Test convergence of u = 1 + u / 2 to the constant 2."""
    grid = Grid1D.uniform(-5.0, 5.0, 201)
    matrix = oracle.build_cdf_matrix(_shifted_cdf, grid, grid)
    seen = []
    result = oracle.fixed_point_solve(
        [matrix], [lambda y, us: 1.0 + 0.5 * us[0]], [np.zeros(201)], 80, monitor=lambda t, us: seen.append(t)
    )
    assert np.max(np.abs(result.values[0] - 2.0)) <= 1e-12
    assert seen == list(range(80))
    assert result.residuals.shape == (80,)
    assert np.all(np.diff(result.residuals) <= 1e-15)
    assert result.final_residual == result.residuals[-1]


def test_fixed_point_preserves_constants(oracle):
    """Test that the identity integrand keeps a constant vector in place."""
    grid = Grid1D.uniform(-5.0, 5.0, 101)
    matrix = oracle.build_cdf_matrix(_shifted_cdf, grid, grid)
    result = oracle.fixed_point_solve([matrix], [lambda y, us: us[0]], [np.full(101, 3.0)], 5)
    assert np.allclose(result.values[0], 3.0, atol=1e-12)


def test_fixed_point_coupled_system(oracle):
    """Test that every integrand sees the previous iterate of all vectors."""
    grid = Grid1D.uniform(-5.0, 5.0, 101)
    matrix = oracle.build_cdf_matrix(_shifted_cdf, grid, grid)
    result = oracle.fixed_point_solve(
        [matrix, matrix],
        [lambda y, us: 1.0 + 0.0 * us[1], lambda y, us: us[0]],
        [np.zeros(101), np.zeros(101)],
        1,
    )
    assert np.allclose(result.values[0], 1.0, atol=1e-12)
    assert np.allclose(result.values[1], 0.0)


def test_fixed_point_rejects_non_square(oracle):
    """Test ShapeError when rows and columns use different grids."""
    matrix = oracle.build_cdf_matrix(_shifted_cdf, Grid1D.uniform(-5.0, 5.0, 11), Grid1D.uniform(-1.0, 1.0, 11))
    with pytest.raises(ShapeError):
        oracle.fixed_point_solve([matrix], [lambda y, us: us[0]], [np.zeros(11)], 1)


def test_fixed_point_non_finite(oracle):
    """Test NonFiniteIterateError with the iteration index."""
    grid = Grid1D.uniform(-5.0, 5.0, 11)
    matrix = oracle.build_cdf_matrix(_shifted_cdf, grid, grid)
    with pytest.raises(NonFiniteIterateError) as info:
        oracle.fixed_point_solve([matrix], [lambda y, us: np.full(y.shape, np.inf)], [np.zeros(11)], 3)
    assert info.value.iteration == 0
