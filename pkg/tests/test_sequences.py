"""Sequence container, partial sums, tail models, log profiles."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fractrace.errors import CapExceeded, NotVanishing
from fractrace.sequences import (
    NON_TRACE_CLASS,
    TRACE_CLASS,
    EigenvalueSequence,
    LogLinearProfile,
    PartialSumSeries,
    log_profile,
)
from fractrace.asymptotics import partial_sums


def harmonic(cap: int = 5000) -> EigenvalueSequence:
    return EigenvalueSequence.from_values(1.0 / np.arange(1, cap + 1),
                                          name="harmonic")


# --- construction -----------------------------------------------------------

def test_from_values_basics():
    seq = harmonic(100)
    assert seq.cap == 100
    assert seq.mu(1) == 1.0
    assert seq.mu(7) == pytest.approx(1.0 / 7.0, rel=1e-15)
    np.testing.assert_allclose(seq.prefix(10), 1.0 / np.arange(1, 11))


def test_from_values_rejects_increase():
    with pytest.raises(ValueError):
        EigenvalueSequence.from_values([1.0, 0.5, 0.6])


def test_from_values_rejects_nonpositive():
    with pytest.raises(ValueError):
        EigenvalueSequence.from_values([1.0, 0.5, 0.0])


def test_from_values_rejects_empty():
    with pytest.raises(ValueError):
        EigenvalueSequence.from_values([])


def test_constant_sequence_does_not_vanish():
    with pytest.raises(NotVanishing):
        EigenvalueSequence.from_values(np.full(4000, 0.25))


def test_from_function_matches_pointwise():
    seq = EigenvalueSequence.from_function(lambda n: n**-2.0, cap=1000)
    assert seq.mu(31) == pytest.approx(31.0**-2, rel=1e-15)
    assert len(seq.prefix(1000)) == 1000


def test_prefix_beyond_cap_raises():
    seq = harmonic(50)
    with pytest.raises(CapExceeded):
        seq.prefix(51)
    with pytest.raises(CapExceeded):
        seq.mu(51)


def test_power_is_pointwise_power():
    seq = harmonic(200)
    sq = seq.power(2.0)
    np.testing.assert_allclose(sq.prefix(200), seq.prefix(200) ** 2, rtol=1e-15)
    assert seq.power(1.0) is seq or np.array_equal(seq.power(1.0).prefix(200),
                                                   seq.prefix(200))


@given(a=st.floats(0.3, 3.0), c=st.floats(0.1, 10.0))
@settings(max_examples=25, deadline=None)
def test_power_sequences_are_valid_and_monotone(a, c):
    seq = EigenvalueSequence.from_function(lambda n: c * n**-a, cap=2000)
    vals = seq.prefix(2000)
    assert np.all(vals > 0)
    assert np.all(np.diff(vals) <= 0)


# --- partial sums ------------------------------------------------------------

def test_prefix_sum_harmonic_value():
    # S_4 of 1/n is 25/12
    ps = partial_sums(harmonic(10), NON_TRACE_CLASS, [4])
    assert ps.values[0] == pytest.approx(25.0 / 12.0, rel=1e-15)


def test_tail_sum_geometric_total():
    # mu_n = 2^-n sums to 1; sixty terms exhaust it to below 1e-15
    seq = EigenvalueSequence.from_values(0.5 ** np.arange(1, 61))
    ps = partial_sums(seq, TRACE_CLASS, [0])
    assert ps.values[0] == pytest.approx(1.0, abs=1e-15)


def test_tail_sum_power_route_matches_zeta_remainder():
    seq = EigenvalueSequence.from_function(lambda n: n**-2.0, cap=100_000)
    tail, err, route = seq.tail_sum(1000)
    # remainder of sum 1/n^2 past n: between 1/(n+1) and 1/n
    exact = float(np.sum(np.arange(1001, 3_000_000) ** -2.0))
    assert abs(tail - exact) <= err + 1e-6
    assert route in ("exhausted", "profile", "power_fit")


def test_prefix_series_is_increasing():
    idx = np.arange(1, 400)
    ps = partial_sums(harmonic(400), NON_TRACE_CLASS, idx)
    assert isinstance(ps, PartialSumSeries)
    assert np.all(np.diff(ps.values) > 0)


def test_tail_series_is_decreasing():
    seq = EigenvalueSequence.from_values(0.5 ** np.arange(1, 40))
    ps = partial_sums(seq, TRACE_CLASS, np.arange(0, 39))
    assert np.all(np.diff(ps.values) < 0)


def test_partial_sums_rejects_bad_kind_and_indices():
    seq = harmonic(100)
    with pytest.raises(ValueError):
        partial_sums(seq, "OTHER", [1])
    with pytest.raises(CapExceeded):
        partial_sums(seq, NON_TRACE_CLASS, [101])
    with pytest.raises(ValueError):
        partial_sums(seq, NON_TRACE_CLASS, [0])


@given(a=st.floats(1.5, 3.0))
@settings(max_examples=15, deadline=None)
def test_tail_sum_bounded_by_integral_envelope(a):
    # integral test brackets the remainder of a clean power tail
    seq = EigenvalueSequence.from_function(lambda n: n**-a, cap=50_000)
    n = 2000
    tail, err, _ = seq.tail_sum(n)
    lo = (n + 1) ** (1.0 - a) / (a - 1.0)
    hi = n ** (1.0 - a) / (a - 1.0)
    assert lo - err <= tail <= hi + err


# --- log profiles ------------------------------------------------------------

def test_log_profile_tracks_decay():
    prof = log_profile(EigenvalueSequence.from_function(lambda n: n**-1.5,
                                                        cap=100_000))
    # f(t) = -log mu(e^t) = 1.5 t on a pure power sequence
    slope = (prof.fs[-1] - prof.fs[0]) / (prof.ts[-1] - prof.ts[0])
    assert slope == pytest.approx(1.5, rel=1e-2)
    assert np.all(np.diff(prof.fs) >= -1e-12)


def test_profile_backed_sequence_round_trip():
    prof = LogLinearProfile(np.array([0.0, 50.0]), np.array([0.0]),
                            np.array([2.0]))
    seq = EigenvalueSequence.from_profile(prof, cap=10_000)
    assert seq.mu(100) == pytest.approx(100.0**-2, rel=1e-12)
    assert seq.profile is prof


def test_two_piece_profile_evaluates_both_slopes():
    # slope 2 until t=1, then slope 1
    prof = LogLinearProfile(np.array([0.0, 1.0, 60.0]),
                            np.array([0.0, 2.0]), np.array([2.0, 1.0]))
    assert prof.f(0.5) == pytest.approx(1.0, abs=1e-12)
    assert prof.f(2.0) == pytest.approx(3.0, abs=1e-12)
    scaled = prof.scaled(3.0)
    assert scaled.f(2.0) == pytest.approx(9.0, abs=1e-12)


def test_profile_convergence_threshold():
    # mu(x) = 1/x cut into pieces, so the per-piece masses carry evidence
    knots = np.arange(0.0, 85.0, 5.0)
    prof = LogLinearProfile(knots, knots[:-1], np.ones(len(knots) - 1))
    assert prof.converges(1.5)
    assert not prof.converges(1.0)
    assert not prof.converges(0.7)


def test_to_csv_round_trip(tmp_path):
    seq = harmonic(64)
    path = tmp_path / "seq.csv"
    seq.to_csv(path, 64)
    rows = path.read_text().strip().splitlines()
    assert rows[0].split(",")[0] == "n"
    assert len(rows) == 65
    last = rows[-1].split(",")
    assert int(last[0]) == 64
    assert float(last[1]) == pytest.approx(1.0 / 64.0, rel=1e-12)
