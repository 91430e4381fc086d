import io

import numpy as np
import pytest

from bruteforce import (
    bohl_enumerate,
    general_exponents_enumerate,
    orbit_lognorm_table,
    scalar_bohl_enumerate,
)
from dichospec.bohl import (
    BohlParams,
    bohl_exponents,
    general_exponents,
    scalar_bohl,
    scalar_bohl_estimate,
)
from dichospec.errors import ParameterError, ValidationError
from dichospec.sequences import MatrixSequence, ScalarSequence

SMALL = BohlParams(window=96, gap_min=8)
SMALL_TWO_SIDED = BohlParams(window=96, gap_min=8, two_sided=True)


def seeded_2d():
    return MatrixSequence.seeded(3, bands=((0.5, 0.7), (1.4, 1.9)))


def test_axis_solution_of_constant_diagonal():
    # geometric orbit: both exponents equal the diagonal rate, up to the
    # rounding drift of ~2000 accumulated logs
    seq = MatrixSequence.constant(np.diag([2.0, 0.5]))
    est = bohl_exponents(seq, [1.0, 0.0])
    assert est.lower == pytest.approx(2.0, rel=1e-12)
    assert est.upper == pytest.approx(2.0, rel=1e-12)
    est = bohl_exponents(seq, [0.0, 1.0])
    assert est.lower == pytest.approx(0.5, rel=1e-12)
    assert est.upper == pytest.approx(0.5, rel=1e-12)


def test_constant_scalar_rate():
    lower, upper = scalar_bohl(ScalarSequence.constant(3.0))
    assert lower == pytest.approx(3.0, rel=1e-12)
    assert upper == pytest.approx(3.0, rel=1e-12)


def test_periodic_scalar_averages_to_one():
    n = BohlParams().window
    lower, upper = scalar_bohl(ScalarSequence.periodic([2.0, 0.5]))
    assert abs(upper - 1.0) <= 2.0 / n
    assert abs(lower - 1.0) <= 2.0 / n


def test_piecewise_scalar_sees_both_rates_only_two_sided():
    u = ScalarSequence.piecewise(negative=[0.5], nonnegative=[2.0])
    n = BohlParams().window
    lower, upper = scalar_bohl(u)  # default offsets stay on [0, window]
    assert abs(lower - 2.0) <= 2.0 / n
    assert abs(upper - 2.0) <= 2.0 / n
    lower, upper = scalar_bohl(u, BohlParams(two_sided=True))
    assert abs(lower - 0.5) <= 2.0 / n
    assert abs(upper - 2.0) <= 2.0 / n


def test_estimator_matches_direct_enumeration():
    seq = seeded_2d()
    xi = np.array([1.0, -0.7])
    for params in (SMALL, SMALL_TWO_SIDED):
        est = bohl_exponents(seq, xi, params)
        lo, hi = params.orbit_span()
        table = orbit_lognorm_table(seq, xi / np.linalg.norm(xi), lo, hi)
        want_lower, want_upper = bohl_enumerate(
            table, -lo, params.window, params.gap_min,
            params.tail_fraction, params.two_sided)
        assert est.lower == pytest.approx(want_lower, rel=1e-12)
        assert est.upper == pytest.approx(want_upper, rel=1e-12)


def test_scalar_estimator_matches_direct_enumeration():
    sequences = [
        ScalarSequence.piecewise(negative=[0.5, 0.6], nonnegative=[2.0, 1.5]),
        ScalarSequence.seeded(8, (0.8, 1.3)),
    ]
    for u in sequences:
        for params in (SMALL, SMALL_TWO_SIDED):
            got = scalar_bohl(u, params)
            want = scalar_bohl_enumerate(u, params.window, params.gap_min,
                                         params.tail_fraction, params.two_sided)
            assert got == pytest.approx(want, rel=1e-12)


def test_general_exponents_match_dense_svd_enumeration():
    seq = seeded_2d()
    params = BohlParams(window=48, gap_min=8)
    ge = general_exponents(seq, params)
    want_junior, want_senior = general_exponents_enumerate(
        seq, 48, 8, params.tail_fraction)
    assert ge.senior == pytest.approx(want_senior, rel=1e-10)
    assert ge.junior == pytest.approx(want_junior, rel=1e-10)


def test_general_exponents_on_contract_systems():
    n = BohlParams().window
    ge = general_exponents(MatrixSequence.constant(np.diag([2.0, 0.5])))
    assert ge.senior == pytest.approx(2.0, rel=1e-12)
    assert ge.junior == pytest.approx(0.5, rel=1e-12)
    ge = general_exponents(MatrixSequence.diagonal([ScalarSequence.periodic([2.0, 0.5])]))
    assert abs(ge.senior - 1.0) <= 2.0 / n
    assert abs(ge.junior - 1.0) <= 2.0 / n
    piecewise = MatrixSequence.piecewise(MatrixSequence.constant([[0.5]]),
                                         MatrixSequence.constant([[2.0]]))
    ge = general_exponents(piecewise, BohlParams(two_sided=True))
    assert ge.senior == pytest.approx(2.0, rel=1e-12)
    assert ge.junior == pytest.approx(0.5, rel=1e-12)


def test_initial_vector_scaling_invariance():
    seq = seeded_2d()
    xi = np.array([0.6, 1.0])
    base = bohl_exponents(seq, xi, SMALL)
    for c in (4.0, -0.125, 2.0 ** -30):
        scaled = bohl_exponents(seq, c * xi, SMALL)
        # powers of two rescale the vector without rounding
        assert scaled.lower == base.lower
        assert scaled.upper == base.upper
    general = bohl_exponents(seq, 3.7 * xi, SMALL)
    assert general.lower == pytest.approx(base.lower, rel=1e-12)
    assert general.upper == pytest.approx(base.upper, rel=1e-12)


def test_system_scaling_shifts_rates():
    seq = seeded_2d()
    lo, hi = SMALL_TWO_SIDED.orbit_span()
    stack = 2.0 * seq.window(lo, hi - 1)
    doubled = MatrixSequence.tabulated(stack, start=lo)
    xi = [1.0, 0.3]
    base = bohl_exponents(seq, xi, SMALL_TWO_SIDED)
    scaled = bohl_exponents(doubled, xi, SMALL_TWO_SIDED)
    assert scaled.lower == pytest.approx(2.0 * base.lower, rel=1e-12)
    assert scaled.upper == pytest.approx(2.0 * base.upper, rel=1e-12)


def test_scalar_route_consistent_with_matrix_route():
    u = ScalarSequence.seeded(21, (0.7, 1.1))
    got = scalar_bohl(u, SMALL)
    est = bohl_exponents(MatrixSequence.diagonal([u]), [1.0], SMALL)
    assert got[0] == pytest.approx(est.lower, abs=1e-10)
    assert got[1] == pytest.approx(est.upper, abs=1e-10)


def test_solution_rates_bounded_by_general_exponents():
    seq = seeded_2d()
    params = BohlParams(window=64, gap_min=8)
    ge = general_exponents(seq, params)
    rng = np.random.default_rng(0)
    for _ in range(6):
        xi = rng.normal(size=2)
        est = bohl_exponents(seq, xi, params)
        assert est.lower >= ge.junior - 1e-9
        assert est.upper <= ge.senior + 1e-9


def test_distinct_upper_rates_of_diagonal_system():
    # d = 3 with distinct diagonal rates: the upper exponent only depends on
    # which coordinates of xi are nonzero, so at most 2^3 - 1 values appear
    seq = MatrixSequence.constant(np.diag([2.0, 1.0, 0.5]))
    rng = np.random.default_rng(5)
    vectors = [np.eye(3)[i] for i in range(3)]
    vectors += [np.array([1.0, 1.0, 0.0]), np.array([0.0, 1.0, 1.0])]
    vectors += [rng.normal(size=3) for _ in range(20)]
    uppers = {round(bohl_exponents(seq, v, SMALL).upper, 9) for v in vectors}
    assert len(uppers) <= 7
    assert uppers <= {2.0, 1.0, 0.5}


def test_spread_reflects_tail_convergence():
    # an axis solution has converged envelopes; a mixed solution at this
    # window still carries visible transient, which spread must report
    seq = MatrixSequence.constant(np.diag([2.0, 0.5]))
    axis = bohl_exponents(seq, [1.0, 0.0], SMALL)
    assert 0.0 <= axis.spread <= 1e-12
    mixed = bohl_exponents(seq, [1.0, 1.0], SMALL)
    assert mixed.spread > 1e-4
    assert mixed.upper <= 2.0 + 1e-12


def test_envelope_csv_and_lookup():
    est = scalar_bohl_estimate(ScalarSequence.constant(2.0), SMALL)
    buf = io.StringIO()
    est.envelopes_to_csv(buf)
    lines = buf.getvalue().strip().splitlines()
    assert lines[0] == "g,min_rate,max_rate"
    assert len(lines) == len(est.gaps) + 1
    lo, hi = est.envelope_at(16)
    assert lo == pytest.approx(2.0, rel=1e-12)
    assert hi == pytest.approx(2.0, rel=1e-12)
    with pytest.raises(ParameterError):
        est.envelope_at(97)


def test_parameter_and_input_validation():
    with pytest.raises(ParameterError):
        BohlParams(window=20, gap_min=16)
    with pytest.raises(ParameterError):
        BohlParams(tail_fraction=0.0)
    with pytest.raises(ParameterError):
        bohl_exponents(MatrixSequence.constant(np.eye(2)), [0.0, 0.0], SMALL)
    with pytest.raises(ValidationError):
        scalar_bohl(ScalarSequence.tabulated([1.0, 0.0] + [1.0] * 200, start=0), SMALL)
