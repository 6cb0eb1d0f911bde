import math

import numpy as np
import pytest

from conftest import random_state
from qexclusion.constants import ORACLE_METHOD_BISECTION, ORACLE_METHOD_SPLITTING
from qexclusion.core.exclusion import BlockSpectrum, BlockTerm, ExclusionInstance, check_abelian_iff
from qexclusion.core.groups import clock_rep, cyclic, direct_product, pauli_z_rep, regular_rep
from qexclusion.core.oracle import (
    EnsembleInstance,
    OracleConfig,
    check_feasibility_zero,
    ensemble_from_instance,
    solve_exclusion_sdp,
)
from qexclusion.errors import CapExceeded, Inconclusive, InvalidEnsemble
from qexclusion.models import ScenarioOptions, Verdict

PI_OVER_3_ERROR = ((math.sqrt(3.0) - 1.0) / 2.0) ** 2


def _qubit_orbit(theta):
    instance = ExclusionInstance.from_seed(pauli_z_rep(1), [math.cos(theta / 2), math.sin(theta / 2)])
    return ensemble_from_instance(instance)


def _assert_povm(result, d):
    total = result.effects.sum(axis=0)
    np.testing.assert_allclose(total, np.eye(d), atol=1e-7)
    for effect in result.effects:
        assert np.linalg.eigvalsh(effect).min() >= -1e-7


class TestEnsemble:
    def test_from_pure(self):
        ensemble = EnsembleInstance.from_pure([[1, 0], [0, 1]])
        assert ensemble.size == 2
        assert ensemble.dim == 2
        assert ensemble.labels == ("0", "1")

    def test_unnormalized_vector(self):
        with pytest.raises(InvalidEnsemble):
            EnsembleInstance.from_pure([[1, 1]])

    def test_bad_trace(self):
        with pytest.raises(InvalidEnsemble):
            EnsembleInstance.from_densities([np.eye(2)])

    def test_not_psd(self):
        with pytest.raises(InvalidEnsemble):
            EnsembleInstance.from_densities([np.diag([1.5, -0.5])])

    def test_label_count(self):
        with pytest.raises(InvalidEnsemble):
            EnsembleInstance.from_pure([[1, 0]], labels=["a", "b"])

    def test_block_level_has_no_orbit(self):
        spectrum = BlockSpectrum((BlockTerm("a", 2, 2, 1.0),))
        with pytest.raises(InvalidEnsemble):
            ensemble_from_instance(ExclusionInstance.block_level(spectrum))

    def test_orbit_labels_follow_group(self):
        assert _qubit_orbit(math.pi / 3).labels == ("0", "1")


SPLITTING = OracleConfig(method=ORACLE_METHOD_SPLITTING)


class TestDefaults:
    def test_bisection_is_default(self):
        assert OracleConfig().method == ORACLE_METHOD_BISECTION
        assert ScenarioOptions().oracle_method == ORACLE_METHOD_BISECTION

    def test_config_overrides(self, tolerances):
        config = OracleConfig.from_tolerances(tolerances, method=None, max_iterations=123)
        assert config.method == OracleConfig().method
        assert config.max_iterations == 123
        assert config.tolerance == tolerances.oracle

    def test_unknown_method(self):
        with pytest.raises(InvalidEnsemble):
            solve_exclusion_sdp(EnsembleInstance.from_pure([[1, 0]]), OracleConfig(method="interior"))

    def test_state_cap(self):
        vectors = [[1, 0]] * 9
        with pytest.raises(CapExceeded):
            solve_exclusion_sdp(EnsembleInstance.from_pure(vectors))

    def test_dimension_cap(self):
        v = np.zeros(17)
        v[0] = 1.0
        with pytest.raises(CapExceeded):
            solve_exclusion_sdp(EnsembleInstance.from_pure([v]))


class TestSplitting:
    def test_orthogonal_states(self):
        result = solve_exclusion_sdp(EnsembleInstance.from_pure([[1, 0], [0, 1]]), SPLITTING)
        assert result.alpha == pytest.approx(0.0, abs=1e-8)
        assert result.method == ORACLE_METHOD_SPLITTING
        _assert_povm(result, 2)

    def test_pi_over_3(self):
        result = solve_exclusion_sdp(_qubit_orbit(math.pi / 3), SPLITTING)
        assert result.alpha == pytest.approx(PI_OVER_3_ERROR, abs=1e-6)
        _assert_povm(result, 2)

    def test_identical_states(self):
        result = solve_exclusion_sdp(EnsembleInstance.from_pure([[1, 0], [1, 0], [1, 0]]), SPLITTING)
        assert result.alpha == pytest.approx(1.0, abs=1e-6)

    def test_mixed_states(self):
        maximally_mixed = np.eye(2) / 2
        result = solve_exclusion_sdp(EnsembleInstance.from_densities([maximally_mixed, maximally_mixed]), SPLITTING)
        assert result.alpha == pytest.approx(1.0, abs=1e-6)


class TestFeasibility:
    def test_orthogonal_is_feasible(self):
        result = check_feasibility_zero(EnsembleInstance.from_pure([[1, 0], [0, 1]]))
        assert result.feasible
        assert result.witness is not None
        _assert_povm(result.witness, 2)

    def test_runs_zero_slice_for_any_method(self):
        result = check_feasibility_zero(EnsembleInstance.from_pure([[1, 0], [0, 1]]), SPLITTING)
        assert result.witness.method == ORACLE_METHOD_BISECTION
        assert result.witness.band == (0.0, 0.0)
        assert "slice_gap" in result.witness.residuals

    def test_single_state_infeasible(self):
        result = check_feasibility_zero(EnsembleInstance.from_pure([[1, 0]]))
        assert not result.feasible
        assert result.witness is None
        assert result.alpha == 1.0

    def test_pi_over_3_infeasible(self):
        result = check_feasibility_zero(_qubit_orbit(math.pi / 3))
        assert not result.feasible
        assert result.alpha >= OracleConfig().zero_band[1]
        assert result.residual > 0.0

    def test_band_is_inconclusive(self):
        config = OracleConfig(zero_band=(1e-3, 0.5))
        with pytest.raises(Inconclusive):
            check_feasibility_zero(_qubit_orbit(math.pi / 3), config)


@pytest.mark.slow
class TestBisection:
    def test_pi_over_3(self):
        result = solve_exclusion_sdp(_qubit_orbit(math.pi / 3))
        assert result.method == ORACLE_METHOD_BISECTION
        assert result.alpha == pytest.approx(PI_OVER_3_ERROR, abs=1e-6)
        assert result.band is not None
        _assert_povm(result, 2)

    def test_orthogonal_states(self):
        result = solve_exclusion_sdp(EnsembleInstance.from_pure([[1, 0], [0, 1]]))
        assert result.alpha == pytest.approx(0.0, abs=1e-8)
        assert result.band[1] == 0.0

    def test_identical_states(self):
        result = solve_exclusion_sdp(EnsembleInstance.from_pure([[1, 0], [1, 0]]))
        assert result.alpha == pytest.approx(1.0, abs=1e-9)


def _abelian_actions():
    actions = [clock_rep(n, 1) for n in range(2, 9)]
    actions += [pauli_z_rep(k) for k in (1, 2, 3)]
    actions += [regular_rep(cyclic(n)) for n in (3, 5, 6, 8)]
    actions += [
        regular_rep(direct_product(cyclic(2), cyclic(2))),
        regular_rep(direct_product(cyclic(2), cyclic(4))),
        regular_rep(direct_product(direct_product(cyclic(2), cyclic(2)), cyclic(2))),
        clock_rep(2, 2),
    ]
    return actions


def _random_abelian_instances(rng, count):
    """Random seeds over every action; every other seed gets a dominant block so its gap is positive."""
    actions = _abelian_actions()
    instances = []
    for k in range(count):
        rep = actions[k % len(actions)]
        seed = random_state(rng, rep.dim)
        if k % 2 == 1:
            base = ExclusionInstance.from_seed(rep, seed)
            peak = base.block_vectors[int(rng.integers(len(base.block_vectors)))]
            seed = seed + 4.0 * peak
            seed = seed / np.linalg.norm(seed)
        instances.append(ExclusionInstance.from_seed(rep, seed))
    return instances


@pytest.mark.slow
class TestAgainstCertificates:
    def test_random_abelian_orbits(self, rng, tolerances):
        instances = _random_abelian_instances(rng, 200)
        config = OracleConfig.from_tolerances(tolerances, method=ORACLE_METHOD_SPLITTING)
        verdicts = []
        for instance in instances:
            assert instance.group.order <= 8
            certificate = check_abelian_iff(instance, tolerances)
            verdicts.append(certificate.verdict)
            result = solve_exclusion_sdp(ensemble_from_instance(instance), config)
            if certificate.verdict == Verdict.EXCLUDABLE:
                assert result.alpha < 1e-6
            else:
                assert result.alpha == pytest.approx(certificate.optimal_error, abs=1e-6)
                if certificate.optimal_error >= 2e-6:
                    assert result.alpha >= 1e-6
        assert verdicts.count(Verdict.NOT_EXCLUDABLE) >= 100

    def test_dual_certificates(self, rng, tolerances):
        checked = 0
        for instance in _random_abelian_instances(rng, 200):
            certificate = check_abelian_iff(instance, tolerances)
            if certificate.verdict != Verdict.NOT_EXCLUDABLE:
                continue
            n_operator = certificate.dual.operator
            t = certificate.gap
            assert np.max(np.abs(n_operator - n_operator.conj().T)) <= 1e-12
            assert float(np.real(np.trace(n_operator))) == pytest.approx(t * t, abs=1e-9)
            for _, u in instance.orbit():
                gap_matrix = n_operator - np.outer(u, u.conj())
                top = np.linalg.eigvalsh(0.5 * (gap_matrix + gap_matrix.conj().T)).max()
                assert top <= 1e-9
            checked += 1
        assert checked >= 100
