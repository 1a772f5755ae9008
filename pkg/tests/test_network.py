import json

import numpy as np
import pytest

from hptrim import (
    ConfigError,
    NetworkSpec,
    StationarityError,
    TransitionKernel,
    assumption_summary,
    check_stationarity,
    make_block_network,
    make_orthogonal_block_network,
    spec_from_json,
    spec_to_json,
)


def power_iteration_lambda_max(mat, iters=5000, tol=1e-12):
    """Independent eigenvalue oracle for symmetric PSD matrices."""
    v = np.ones(mat.shape[0]) / np.sqrt(mat.shape[0])
    lam = 0.0
    for _ in range(iters):
        w = mat @ v
        nrm = np.linalg.norm(w)
        if nrm == 0:
            return 0.0
        v = w / nrm
        new = float(v @ mat @ v)
        if abs(new - lam) < tol * max(1.0, new):
            return new
        lam = new
    return lam


class TestTransitionKernel:
    def test_defaults(self):
        k = TransitionKernel()
        assert k.family == "exponential"
        assert k.integral() == 1.0

    def test_value_decay(self):
        k = TransitionKernel(rate=2.0)
        assert np.isclose(k.value(0.0), 1.0)
        assert np.isclose(k.value(1.0), np.exp(-2.0))
        assert k.integral() == 0.5

    @pytest.mark.parametrize("rate", [0.0, -1.0])
    def test_rejects_nonpositive_rate(self, rate):
        with pytest.raises(ConfigError):
            TransitionKernel(rate=rate)

    def test_rejects_unknown_family(self):
        with pytest.raises(ConfigError):
            TransitionKernel(family="powerlaw")


class TestBlockNetwork:
    def test_fig2a_desk_structure(self):
        spec = make_block_network(10, 5, 5, 0.12, 0.10, 0.05, 0.5)
        # within-block edges, no self-edges, no cross-block edges
        assert np.all(spec.theta[:5, :5][~np.eye(5, dtype=bool)] == 0.12)
        assert np.all(np.diag(spec.theta) == 0.0)
        assert np.all(spec.theta[:5, 5:] == 0.0)
        # one confounded block wired to the dedicated hidden set
        assert np.all(spec.delta[:5, :5] == 0.10)
        assert np.all(spec.delta[5:, :] == 0.0)
        # hidden components are autonomous sources
        assert np.all(spec.hidden_block == 0.0)
        assert np.all(spec.mu == 0.05)

    def test_power_iteration_oracle_and_stability(self):
        spec = make_block_network(10, 5, 5, 0.12, 0.10, 0.05, 0.5)
        report = check_stationarity(spec)
        omega = np.abs(spec.full_matrix()) * spec.kernel_integrals()[None, :]
        oracle = power_iteration_lambda_max(omega.T @ omega)
        assert report.lambda_max_omega == pytest.approx(oracle, rel=1e-8)
        assert report.lambda_max_omega < 1.0
        assert report.passes_a1

    def test_zero_coupling_poisson_case(self):
        spec = make_block_network(5, 0, 5, 0.0, 0.0, 0.05, 0.0)
        assert np.all(spec.theta == 0.0)
        assert spec.delta.shape == (5, 0)
        report = check_stationarity(spec)
        assert report.lambda_max_omega == 0.0
        assert report.passes_a1 and report.passes_a4

    def test_indivisible_p_rejected(self):
        with pytest.raises(ConfigError):
            make_block_network(11, 5, 5, 0.1, 0.1, 0.05, 0.5)

    def test_bad_fraction_rejected(self):
        with pytest.raises(ConfigError):
            make_block_network(10, 5, 5, 0.1, 0.1, 0.05, 1.5)

    def test_unstable_spec_refused_with_report(self):
        with pytest.raises(StationarityError) as err:
            make_block_network(10, 0, 5, 0.5, 0.0, 0.05, 0.0)
        assert err.value.report is not None
        assert err.value.report.lambda_max_omega >= 1.0

    def test_desk_preset_scale_passes(self):
        spec = make_block_network(20, 20, 5, 0.12, 0.10, 0.05, 0.5)
        assert check_stationarity(spec).passes_a1


class TestOrthogonalNetwork:
    def test_disjoint_supports(self):
        spec = make_orthogonal_block_network(20, 20, 5, 0.2, 0.18, 0.05)
        assert np.abs(spec.theta.T @ spec.delta).max() < 1e-10
        # rows with observed edges carry no hidden input and vice versa
        theta_rows = np.where(spec.theta.any(axis=1))[0]
        delta_rows = np.where(spec.delta.any(axis=1))[0]
        assert set(theta_rows).isdisjoint(delta_rows)
        assert check_stationarity(spec).passes_a1

    def test_q_zero_vacuous(self):
        spec = make_orthogonal_block_network(10, 0, 5, 0.2, 0.18, 0.05)
        assert spec.delta.shape == (10, 0)

    def test_paper_scale_parameters(self):
        spec = make_orthogonal_block_network(100, 100, 5, 0.2, 0.18, 0.05)
        assert check_stationarity(spec).passes_a1
        assert np.abs(spec.theta.T @ spec.delta).max() < 1e-10


class TestCheckStationarity:
    def test_two_node_closed_form(self):
        spec = NetworkSpec(p=2, q=0, mu=[0.05, 0.05], theta=[[0.0, 0.5], [0.5, 0.0]],
                           delta=np.zeros((2, 0)), hidden_block=np.zeros((0, 2)))
        report = check_stationarity(spec)
        # Omega^T Omega = diag(0.25, 0.25)
        assert report.lambda_max_omega == pytest.approx(0.25, abs=1e-12)
        assert report.max_row_sum == pytest.approx(0.5)
        assert report.max_col_sum == pytest.approx(0.5)
        assert report.passes_a1 and report.passes_a4

    def test_sign_flip_invariance(self):
        rng = np.random.default_rng(0)
        spec = make_block_network(10, 5, 5, 0.12, 0.10, 0.05, 0.5)
        flipped = NetworkSpec(
            p=spec.p, q=spec.q, mu=spec.mu,
            theta=spec.theta * rng.choice([-1.0, 1.0], size=spec.theta.shape),
            delta=spec.delta * rng.choice([-1.0, 1.0], size=spec.delta.shape),
            hidden_block=spec.hidden_block, kernel=spec.kernel,
        )
        a, b = check_stationarity(spec), check_stationarity(flipped)
        assert a.lambda_max_omega == b.lambda_max_omega
        assert a.max_row_sum == b.max_row_sum

    def test_quadratic_scaling(self):
        spec = make_block_network(10, 5, 5, 0.1, 0.08, 0.05, 0.5)
        scaled = NetworkSpec(p=spec.p, q=spec.q, mu=spec.mu, theta=2.0 * spec.theta,
                             delta=2.0 * spec.delta, hidden_block=spec.hidden_block,
                             kernel=spec.kernel)
        a, b = check_stationarity(spec), check_stationarity(scaled)
        assert b.lambda_max_omega == pytest.approx(4.0 * a.lambda_max_omega, rel=1e-12)

    def test_kernel_rate_enters_integral(self):
        # doubling the decay rate halves the integrated transfer weight
        kernels = [TransitionKernel(rate=2.0), TransitionKernel(rate=2.0)]
        spec = NetworkSpec(p=2, q=0, mu=[0.1, 0.1], theta=[[0.0, 0.5], [0.5, 0.0]],
                           delta=np.zeros((2, 0)), hidden_block=np.zeros((0, 2)),
                           kernel=kernels)
        report = check_stationarity(spec)
        assert report.lambda_max_omega == pytest.approx(0.0625, abs=1e-12)


class TestSpecValidation:
    def test_mu_must_be_positive(self):
        with pytest.raises(ConfigError):
            NetworkSpec(p=1, q=0, mu=[0.0], theta=[[0.0]],
                        delta=np.zeros((1, 0)), hidden_block=np.zeros((0, 1)))

    def test_dimension_mismatch(self):
        with pytest.raises(ConfigError):
            NetworkSpec(p=2, q=0, mu=[0.1, 0.1, 0.1], theta=np.zeros((2, 2)),
                        delta=np.zeros((2, 0)), hidden_block=np.zeros((0, 2)))

    def test_assumption_summary(self):
        spec = make_block_network(10, 5, 5, 0.12, 0.10, 0.05, 0.5)
        out = assumption_summary(spec, tau_select=0.05)
        assert out["a1_stationarity"] and out["a2_positive_baselines"]
        assert out["a3_integrable_kernels"] and out["a4_flow_bounds"]
        assert out["a5_signal_strength"]  # 0.12 > 2 * 0.05
        assert not assumption_summary(spec, tau_select=0.07)["a5_signal_strength"]


class TestSpecSerialization:
    def test_round_trip(self):
        spec = make_block_network(10, 5, 5, 0.12, 0.10, 0.05, 0.5)
        text = spec_to_json(spec)
        doc = json.loads(text)
        assert set(doc) == {"p", "q", "mu", "theta", "delta", "hidden_block", "kernel"}
        back = spec_from_json(text)
        assert back.p == spec.p and back.q == spec.q
        assert np.array_equal(back.theta, spec.theta)
        assert np.array_equal(back.delta, spec.delta)
        assert np.array_equal(back.mu, spec.mu)
        assert [k.rate for k in back.kernel] == [k.rate for k in spec.kernel]

    def test_malformed_document(self):
        with pytest.raises(ConfigError):
            spec_from_json('{"p": 2}')
