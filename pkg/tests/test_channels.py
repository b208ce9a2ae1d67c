"""Unit tests of the dissipation channels and their dilations."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vibrosim.channels import (CHANNEL_KINDS, apply_channel_dm,
                               compose_general_channel, dilation_angle,
                               dilation_circuit, dilation_kraus,
                               jump_probability, kraus_ops,
                               probability_from_angle)


class TestProbabilities:
    def test_amp_exponential(self):
        assert np.isclose(jump_probability("amp", 2.0, 0.5),
                          1.0 - math.exp(-1.0))

    def test_dep_saturates_at_half(self):
        assert np.isclose(jump_probability("dep", 1e6, 1.0), 0.5)

    def test_zero_duration(self):
        for kind in CHANNEL_KINDS:
            assert jump_probability(kind, 1.0, 0.0) == 0.0

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            jump_probability("amp", -1.0, 1.0)
        with pytest.raises(ValueError):
            jump_probability("bogus", 1.0, 1.0)

    @given(kind=st.sampled_from(CHANNEL_KINDS),
           gamma=st.floats(1e-3, 1e2), tau=st.floats(1e-3, 1.0))
    @settings(max_examples=50, deadline=None)
    def test_angle_probability_consistency(self, kind, gamma, tau):
        theta = dilation_angle(kind, gamma, tau, exact=True)
        assert np.isclose(probability_from_angle(theta),
                          jump_probability(kind, gamma, tau), atol=1e-12)

    def test_first_order_angle_small_limit(self):
        gamma, tau = 1.0e9, 1.0e-12
        exact = dilation_angle("amp", gamma, tau, exact=True)
        first = dilation_angle("amp", gamma, tau, exact=False)
        assert np.isclose(exact, first, rtol=1e-3)

    def test_first_order_angle_domain(self):
        with pytest.raises(ValueError):
            dilation_angle("amp", 2.0, 1.0, exact=False)


class TestKraus:
    @pytest.mark.parametrize("kind", CHANNEL_KINDS)
    @pytest.mark.parametrize("p", [0.0, 0.1, 0.5, 1.0])
    def test_trace_preserving(self, kind, p):
        total = sum(k.conj().T @ k for k in kraus_ops(kind, p))
        assert np.allclose(total, np.eye(2), atol=1e-14)

    def test_probability_range(self):
        with pytest.raises(ValueError):
            kraus_ops("amp", 1.5)

    def test_amp_moves_population_down(self):
        rho = np.diag([0.0, 1.0]).astype(np.complex128)
        out = apply_channel_dm(kraus_ops("amp", 0.3), rho)
        assert np.isclose(out[0, 0], 0.3)
        assert np.isclose(out[1, 1], 0.7)

    def test_exc_is_x_conjugate_of_amp(self):
        x = np.array([[0, 1], [1, 0]], dtype=np.complex128)
        for a, e in zip(kraus_ops("amp", 0.2), kraus_ops("exc", 0.2)):
            assert np.allclose(e, x @ a @ x)

    def test_dep_damps_coherence(self):
        rho = 0.5 * np.ones((2, 2), dtype=np.complex128)
        out = apply_channel_dm(kraus_ops("dep", 0.25), rho)
        assert np.isclose(out[0, 1], 0.5 * (1 - 2 * 0.25))
        assert np.isclose(out[0, 0], 0.5)


class TestDilation:
    @pytest.mark.parametrize("kind", CHANNEL_KINDS)
    @pytest.mark.parametrize("theta", [0.0, 0.3, 1.2, math.pi / 2])
    def test_dilation_kraus_matches_analytic(self, kind, theta):
        induced = dilation_kraus(kind, theta)
        analytic = kraus_ops(kind, probability_from_angle(theta))
        rho = np.array([[0.3, 0.2 - 0.1j], [0.2 + 0.1j, 0.7]],
                       dtype=np.complex128)
        out_i = apply_channel_dm(induced, rho)
        out_a = apply_channel_dm(analytic, rho)
        assert np.allclose(out_i, out_a, atol=1e-14)

    @pytest.mark.parametrize("kind", CHANNEL_KINDS)
    def test_fragment_ends_with_reset(self, kind):
        ops = dilation_circuit(kind, 0.4, system=0, ancilla=1)
        assert ops[-1].kind == "RESET"
        assert ops[-1].targets == (1,)
        assert all(op.tag == f"channel-{kind}" for op in ops)

    def test_exact_angle_is_semigroup(self):
        """Two exact fragments of duration tau compose to one of 2*tau."""
        gamma, tau = 3.0e11, 1.0e-13
        for kind in CHANNEL_KINDS:
            p1 = probability_from_angle(dilation_angle(kind, gamma, tau))
            p2 = probability_from_angle(dilation_angle(kind, gamma, 2 * tau))
            rho = np.array([[0.2, 0.4], [0.4, 0.8]], dtype=np.complex128)
            once = apply_channel_dm(kraus_ops(kind, p1), rho)
            twice = apply_channel_dm(kraus_ops(kind, p1), once)
            direct = apply_channel_dm(kraus_ops(kind, p2), rho)
            assert np.allclose(twice, direct, atol=1e-14)


class TestCompose:
    def test_zero_rates_skipped(self):
        assert compose_general_channel({}, 1e-13, 0, 1) == []
        ops = compose_general_channel({"amp": 1e12, "dep": 0.0}, 1e-13, 0, 1)
        tags = {op.tag for op in ops}
        assert tags == {"channel-amp"}

    def test_all_channels_chained_in_order(self):
        rates = {"amp": 1e12, "exc": 1e11, "dep": 1e12}
        ops = compose_general_channel(rates, 1e-13, 0, 1)
        seen = []
        for op in ops:
            tag = op.tag
            if tag not in seen:
                seen.append(tag)
        assert seen == ["channel-amp", "channel-exc", "channel-dep"]
        assert sum(op.kind == "RESET" for op in ops) == 3
