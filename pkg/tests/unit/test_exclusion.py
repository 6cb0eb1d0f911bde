import math

import numpy as np
import pytest

from conftest import random_state, s3_block_matrices, s3_cayley
from qexclusion.constants import QUTRIT_CUBE_BLOCKS, PATH_ABELIAN_DUAL, PATH_HEISENBERG_WEYL, PATH_POLYGON
from qexclusion.core.exclusion import (
    BlockSpectrum,
    BlockTerm,
    ExclusionInstance,
    Povm,
    block_constraint_defect,
    build_dual_certificate,
    certify,
    check_abelian_iff,
    check_sufficient_condition,
    complement_povm,
    construct_povm,
    construct_povm_hw_shift,
    dual_optimal_povm,
    evaluate_error,
    phase_diagram,
    solve_polygon_phases,
    verify_povm,
)
from qexclusion.core.groups import (
    clock_rep,
    cyclic,
    direct_product,
    from_cayley,
    pauli_z_rep,
    regular_rep,
    rep_from_matrices,
)
from qexclusion.errors import (
    CompletenessDefect,
    EmptySpectrum,
    GapNotPositive,
    InvalidSpectrum,
    LabelMismatch,
    NotAbelian,
    PolygonInfeasible,
    ShiftNotOrthogonal,
)
from qexclusion.models import Verdict

SQRT_1641 = math.sqrt(1641.0)
PI_OVER_3_GAP = (math.sqrt(3.0) - 1.0) / 2.0


def _qutrit_blocks(moduli):
    terms = [
        BlockTerm(label, block["d"], block["d"], complex(moduli[label]))
        for label, block in QUTRIT_CUBE_BLOCKS.items()
    ]
    return ExclusionInstance.block_level(BlockSpectrum(tuple(terms)), group_name="SU(3)")


def _balanced_qutrit():
    return _qutrit_blocks({"[3]": 4 / SQRT_1641, "[2,1]": 5 / SQRT_1641, "[1,1,1]": 40 / SQRT_1641})


def _unbalanced_qutrit():
    return _qutrit_blocks({"[3]": 1 / math.sqrt(2), "[2,1]": 1 / math.sqrt(2), "[1,1,1]": 0.0})


def _qubit_instance(theta):
    return ExclusionInstance.from_seed(pauli_z_rep(1), [math.cos(theta / 2), math.sin(theta / 2)])


def _clock_instance(moduli, phases=None):
    n = len(moduli)
    spectrum = BlockSpectrum.from_moduli(
        [1] * n, moduli, labels=[str(k) for k in range(n)], mults=[1] * n, phases=phases, normalize=True
    )
    return ExclusionInstance.from_spectrum(clock_rep(n, 1), spectrum)


def _s3_instance(moduli, labels=("trivial", "sign", "standard"), dims=(1, 1, 2), mults=(1, 1, 1)):
    rep = rep_from_matrices(from_cayley(s3_cayley(), label="S3"), s3_block_matrices(), label="S3")
    spectrum = BlockSpectrum.from_moduli(dims, moduli, labels=labels, mults=mults, normalize=True)
    return ExclusionInstance.from_declared_blocks(rep, spectrum)


class TestSufficientCondition:
    def test_balanced_qutrit_blocks(self):
        result = check_sufficient_condition(_balanced_qutrit().spectrum)
        assert result.holds
        assert result.gap == pytest.approx(-40 / SQRT_1641, abs=1e-12)

    def test_unbalanced_qutrit_blocks(self):
        result = check_sufficient_condition(_unbalanced_qutrit().spectrum)
        assert not result.holds
        assert result.gap == pytest.approx(2 / math.sqrt(2), abs=1e-12)
        assert result.dominant == "[3]"

    def test_single_block(self):
        spectrum = BlockSpectrum((BlockTerm("only", 3, 3, 1.0),))
        result = check_sufficient_condition(spectrum)
        assert not result.holds
        assert result.gap == pytest.approx(3.0)

    def test_empty(self):
        with pytest.raises(EmptySpectrum):
            check_sufficient_condition(BlockSpectrum(()))

    def test_unnormalized_rejected(self):
        with pytest.raises(InvalidSpectrum):
            BlockSpectrum((BlockTerm("a", 1, 1, 0.5), BlockTerm("b", 1, 1, 0.5)))

    def test_boundary_counts_as_excludable(self):
        spectrum = BlockSpectrum.from_moduli([1, 1], [1, 1], labels=["0", "1"], normalize=True)
        assert check_sufficient_condition(spectrum).holds

    def test_gap_tolerance(self):
        spectrum = BlockSpectrum.from_moduli([1, 1], [1.0 + 1e-9, 1.0], labels=["0", "1"], normalize=True)
        result = check_sufficient_condition(spectrum)
        assert 0.0 < result.gap < 1e-8
        assert not result.holds
        assert check_sufficient_condition(spectrum, gap_tol=1e-8).holds

    def test_tie_order_does_not_change_verdict(self):
        a = BlockSpectrum.from_moduli([1, 1, 1], [1, 1, 1], labels=["x", "y", "z"], normalize=True)
        b = BlockSpectrum.from_moduli([1, 1, 1], [1, 1, 1], labels=["z", "y", "x"], normalize=True)
        assert check_sufficient_condition(a).holds == check_sufficient_condition(b).holds
        assert check_sufficient_condition(a).dominant == "x"
        assert check_sufficient_condition(b).dominant == "x"


class TestPolygonPhases:
    def test_antipodal_pair(self):
        np.testing.assert_allclose(solve_polygon_phases([1, 1]), [0.0, math.pi])

    def test_equilateral(self):
        phases = solve_polygon_phases([40, 40, 40])
        closure = sum(40 * np.exp(1j * p) for p in phases)
        assert abs(closure) <= 1e-10 * 120
        gaps = sorted(((phases[1] - phases[0]) % (2 * math.pi), (phases[2] - phases[0]) % (2 * math.pi)))
        np.testing.assert_allclose(gaps, [2 * math.pi / 3, 4 * math.pi / 3], atol=1e-12)

    def test_law_of_cosines(self):
        phases = solve_polygon_phases([3, 2, 2])
        phi = math.acos(3 / 4)
        relative = sorted(((phases[1] - phases[0]) % (2 * math.pi), (phases[2] - phases[0]) % (2 * math.pi)))
        np.testing.assert_allclose(relative, [math.pi - phi, math.pi + phi], atol=1e-12)

    def test_infeasible(self):
        with pytest.raises(PolygonInfeasible):
            solve_polygon_phases([5, 1, 1])

    def test_zero_lengths_get_zero_phase(self):
        phases = solve_polygon_phases([0, 2, 0, 2])
        assert phases[0] == 0.0 and phases[2] == 0.0

    def test_random_closure(self, rng):
        for _ in range(500):
            k = int(rng.integers(2, 9))
            lengths = rng.uniform(0.0, 1.0, size=k)
            largest = int(np.argmax(lengths))
            rest = lengths.sum() - lengths[largest]
            lengths[largest] = min(lengths[largest], rest)
            phases = solve_polygon_phases(lengths)
            closure = abs(np.sum(lengths * np.exp(1j * np.asarray(phases))))
            assert closure <= 1e-10 * lengths.sum()

    def test_phase_diagram_closes(self):
        diagram = phase_diagram(_balanced_qutrit().spectrum)
        assert diagram.closure_residual <= 1e-10 * 120 / SQRT_1641
        assert [row["label"] for row in diagram.rows] == list(QUTRIT_CUBE_BLOCKS)
        for row in diagram.rows:
            assert row["length"] == pytest.approx(40 / SQRT_1641)


class TestConstructPovm:
    def test_plus_state_on_z(self, tolerances):
        instance = _qubit_instance(math.pi / 2)
        povm = construct_povm(instance, tolerances)
        minus = np.array([1, -1]) / math.sqrt(2)
        plus = np.array([1, 1]) / math.sqrt(2)
        np.testing.assert_allclose(povm.effect("0"), np.outer(minus, minus), atol=1e-12)
        np.testing.assert_allclose(povm.effect("1"), np.outer(plus, plus), atol=1e-12)
        verification = verify_povm(instance, povm, tolerances)
        assert verification.max_error <= 1e-12

    def test_qutrit_block_level(self, tolerances):
        instance = _balanced_qutrit()
        povm = construct_povm(instance, tolerances)
        assert povm.labels == ("e",)
        assert povm.completeness_defect <= 1e-9
        verification = verify_povm(instance, povm, tolerances)
        assert verification.passed
        assert verification.max_error <= 1e-9
        assert verification.block_constraint_defect <= 1e-9
        assert block_constraint_defect(instance.decomposition, povm.seed_effect) <= 1e-9

    @pytest.mark.parametrize("n", [2, 3, 4, 6, 8])
    def test_uniform_cyclic(self, n, tolerances):
        instance = _clock_instance([1.0] * n)
        povm = construct_povm(instance, tolerances)
        verification = verify_povm(instance, povm, tolerances)
        assert verification.max_error <= 1e-10
        assert verification.passed
        assert verification.optimality_certified

    def test_covariance(self, tolerances):
        instance = _clock_instance([0.5, 0.4, 0.3, 0.3, 0.2])
        povm = construct_povm(instance, tolerances)
        group = instance.group
        for g in range(group.order):
            for h in range(group.order):
                expected = instance.rep.conjugate(g, povm.effect(group.names[h]))
                np.testing.assert_allclose(povm.effect(group.names[group.multiply(g, h)]), expected, atol=1e-10)

    def test_regular_action_random_seed(self, rng, tolerances):
        rep = regular_rep(direct_product(cyclic(4), cyclic(2)))
        instance = ExclusionInstance.from_seed(rep, random_state(rng, 8))
        result = check_sufficient_condition(instance.spectrum)
        if result.holds:
            povm = construct_povm(instance, tolerances)
            assert verify_povm(instance, povm, tolerances).max_error <= 1e-9
        else:
            assert build_dual_certificate(instance, tolerances).optimal_error > 0

    def test_random_soundness(self, rng, tolerances):
        checked = 0
        for _ in range(200):
            k = int(rng.integers(3, 7))
            dims = rng.integers(1, 5, size=k)
            moduli = rng.uniform(0.05, 1.0, size=k)
            spectrum = BlockSpectrum.from_moduli(dims, moduli, labels=[f"b{i}" for i in range(k)], normalize=True)
            if not check_sufficient_condition(spectrum).holds:
                continue
            instance = ExclusionInstance.block_level(spectrum)
            povm = construct_povm(instance, tolerances)
            assert verify_povm(instance, povm, tolerances).max_error <= 1e-9
            checked += 1
        assert checked > 20


class TestHeisenbergWeyl:
    def test_unbalanced_qutrit_blocks(self, tolerances):
        instance = _unbalanced_qutrit()
        povm = construct_povm_hw_shift(instance, {"[3]": (1, 1), "[2,1]": (1, 1)}, tolerances)
        assert povm.path == PATH_HEISENBERG_WEYL
        verification = verify_povm(instance, povm, tolerances)
        assert verification.max_error <= 1e-9
        assert povm.completeness_defect <= 1e-9

    def test_clock_shift_is_orthogonal(self, tolerances):
        spectrum = BlockSpectrum((BlockTerm("a", 3, 3, 1.0),))
        instance = ExclusionInstance.block_level(spectrum)
        povm = construct_povm_hw_shift(instance, {"a": (1, 0)}, tolerances)
        assert verify_povm(instance, povm, tolerances).max_error <= 1e-12

    def test_identity_shift_rejected(self, tolerances):
        with pytest.raises(ShiftNotOrthogonal):
            construct_povm_hw_shift(_unbalanced_qutrit(), {"[3]": (0, 0)}, tolerances)

    def test_one_dimensional_block_rejected(self, tolerances):
        with pytest.raises(ShiftNotOrthogonal):
            construct_povm_hw_shift(_unbalanced_qutrit(), {"[1,1,1]": (1, 1)}, tolerances)


class TestAbelianDichotomy:
    def test_orthogonal_qubit_states(self, tolerances):
        certificate = check_abelian_iff(_qubit_instance(math.pi / 2), tolerances)
        assert certificate.verdict == Verdict.EXCLUDABLE
        assert certificate.path == PATH_POLYGON
        assert certificate.gap == pytest.approx(0.0, abs=1e-12)

    def test_pi_over_3(self, tolerances):
        certificate = check_abelian_iff(_qubit_instance(math.pi / 3), tolerances)
        assert certificate.verdict == Verdict.NOT_EXCLUDABLE
        assert certificate.path == PATH_ABELIAN_DUAL
        assert certificate.gap == pytest.approx(PI_OVER_3_GAP, abs=1e-12)
        assert certificate.optimal_error == pytest.approx(PI_OVER_3_GAP ** 2, abs=1e-12)

    def test_dual_operator(self, tolerances):
        dual = build_dual_certificate(_qubit_instance(math.pi / 3), tolerances)
        expected = PI_OVER_3_GAP * np.diag([math.sqrt(3) / 2, -0.5])
        np.testing.assert_allclose(dual.operator, expected, atol=1e-12)
        assert dual.trace == pytest.approx(PI_OVER_3_GAP ** 2, abs=1e-9)
        assert dual.max_lambda <= 1e-9
        assert dual.kernel_residual <= 1e-9

    def test_gap_not_positive(self, tolerances):
        with pytest.raises(GapNotPositive):
            build_dual_certificate(_qubit_instance(math.pi / 2), tolerances)

    @pytest.mark.parametrize("n", [2, 3, 5, 8])
    def test_uniform_cyclic_excludable(self, n, tolerances):
        assert check_abelian_iff(_clock_instance([1.0] * n), tolerances).verdict == Verdict.EXCLUDABLE

    def test_dominant_order_four(self, tolerances):
        instance = _clock_instance([0.8, 0.1, 0.1, 0.1])
        certificate = check_abelian_iff(instance, tolerances)
        assert certificate.verdict == Verdict.NOT_EXCLUDABLE
        dual = certificate.dual
        assert dual.max_lambda <= 1e-9
        assert dual.trace == pytest.approx(dual.gap ** 2, abs=1e-9)

    def test_dual_optimal_povm_attains_bound(self, tolerances):
        for instance in (_qubit_instance(math.pi / 3), _clock_instance([0.8, 0.1, 0.1, 0.1], phases=[0.3, 1.0, -2.0, 0.5])):
            certificate = check_abelian_iff(instance, tolerances)
            povm = dual_optimal_povm(instance)
            assert povm.completeness_defect <= 1e-9
            assert povm.min_eigenvalue >= -1e-9
            assert evaluate_error(instance, povm) == pytest.approx(certificate.optimal_error, abs=1e-8)

    def test_random_instances_exactly_one_branch(self, rng, tolerances):
        for _ in range(100):
            n = int(rng.integers(2, 7))
            instance = ExclusionInstance.from_seed(clock_rep(n, 1), random_state(rng, n))
            certificate = check_abelian_iff(instance, tolerances)
            if certificate.verdict == Verdict.EXCLUDABLE:
                assert certificate.max_error_residual <= 1e-9
                assert certificate.dual is None
            else:
                assert certificate.povm is None
                assert certificate.dual.max_lambda <= 1e-9

    def test_block_level_is_not_abelian(self, tolerances):
        with pytest.raises(NotAbelian):
            check_abelian_iff(_balanced_qutrit(), tolerances)


class TestCertify:
    def test_balanced_qutrit(self, tolerances):
        certificate = certify(_balanced_qutrit(), tolerances=tolerances)
        assert certificate.verdict == Verdict.EXCLUDABLE
        assert certificate.path == PATH_POLYGON
        assert certificate.max_error_residual <= 1e-9

    def test_unbalanced_qutrit_with_shifts(self, tolerances):
        certificate = certify(_unbalanced_qutrit(), {"[3]": (1, 1), "[2,1]": (1, 1)}, tolerances)
        assert certificate.verdict == Verdict.EXCLUDABLE
        assert certificate.path == PATH_HEISENBERG_WEYL

    def test_unbalanced_qutrit_without_shifts_is_undecided(self, tolerances):
        certificate = certify(_unbalanced_qutrit(), tolerances=tolerances)
        assert certificate.verdict == Verdict.UNDECIDED
        assert certificate.povm is None
        assert certificate.reason


class TestVerifyPovm:
    def test_uniform_povm_errors(self, tolerances):
        instance = _qubit_instance(math.pi / 3)
        povm = Povm.build(instance.labels, [np.eye(2) / 2, np.eye(2) / 2])
        verification = verify_povm(instance, povm, tolerances)
        for value in verification.errors.values():
            assert value == pytest.approx(0.5, abs=1e-12)
        assert not verification.passed

    def test_uniform_povm_on_larger_orbit(self, tolerances):
        instance = _clock_instance([0.6, 0.5, 0.4, 0.3, 0.2, 0.1])
        n = instance.orbit_size
        povm = Povm.build(instance.labels, [np.eye(n) / n] * n)
        verification = verify_povm(instance, povm, tolerances)
        np.testing.assert_allclose(list(verification.errors.values()), [1 / n] * n, atol=1e-12)

    def test_label_mismatch(self, tolerances):
        instance = _qubit_instance(math.pi / 3)
        povm = Povm.build(["a", "b"], [np.eye(2) / 2, np.eye(2) / 2])
        with pytest.raises(LabelMismatch):
            verify_povm(instance, povm, tolerances)

    def test_materialized_povm_matches_covariant(self, tolerances):
        instance = _clock_instance([1.0, 1.0, 1.0])
        covariant = construct_povm(instance, tolerances)
        explicit = covariant.materialize()
        a = verify_povm(instance, covariant, tolerances)
        b = verify_povm(instance, explicit, tolerances)
        assert a.max_error == pytest.approx(b.max_error, abs=1e-12)
        assert b.optimality_certified


class TestComplementPovm:
    @pytest.mark.parametrize("n", [2, 3, 4, 6, 8])
    def test_uniform_orbit(self, n, tolerances):
        instance = _clock_instance([1.0] * n)
        povm = complement_povm(instance, tolerances)
        assert povm.completeness_defect <= 1e-9
        verification = verify_povm(instance, povm, tolerances)
        assert verification.max_error <= 1e-12

    def test_requires_tight_frame(self, tolerances):
        with pytest.raises(CompletenessDefect):
            complement_povm(_qubit_instance(math.pi / 3), tolerances)


class TestDeclaredBlocks:
    def test_reference_extension(self):
        instance = _s3_instance([0.6, 0.6, 0.4])
        assert not instance.is_abelian
        assert instance.orbit_size == 6
        assert instance.reference_dim == 2
        assert instance.dim == 8
        assert [t.m for t in instance.spectrum.terms] == [2, 2, 2]
        assert np.linalg.norm(instance.seed) == pytest.approx(1.0, abs=1e-12)

    def test_orbit_uses_the_action(self):
        instance = _s3_instance([0.6, 0.6, 0.4])
        for g in range(instance.orbit_size):
            expected = np.kron(s3_block_matrices()[g], np.eye(2)) @ instance.seed
            np.testing.assert_allclose(instance.orbit_state(g), expected, atol=1e-12)

    def test_polygon_construction(self, tolerances):
        instance = _s3_instance([0.6, 0.6, 0.4])
        certificate = certify(instance, tolerances=tolerances)
        assert certificate.verdict == Verdict.EXCLUDABLE
        assert certificate.path == PATH_POLYGON
        verification = verify_povm(instance, certificate.povm, tolerances)
        assert verification.max_error <= 1e-9
        assert verification.completeness_defect <= 1e-9
        assert verification.psd_margin >= -1e-9
        assert verification.block_constraint_defect <= 1e-9

    def test_dominant_standard_block_is_undecided(self, tolerances):
        certificate = certify(_s3_instance([0.1, 0.1, 0.9]), tolerances=tolerances)
        assert certificate.verdict == Verdict.UNDECIDED
        assert certificate.gap > 0

    def test_shift_on_standard_block(self, tolerances):
        instance = _s3_instance([0.1, 0.1, 0.9])
        certificate = certify(instance, {"standard": (1, 0)}, tolerances)
        assert certificate.verdict == Verdict.EXCLUDABLE
        assert certificate.path == PATH_HEISENBERG_WEYL
        verification = verify_povm(instance, certificate.povm, tolerances)
        assert verification.max_error <= 1e-9
        assert verification.completeness_defect <= 1e-9
        assert verification.psd_margin >= -1e-9

    def test_shift_on_one_dimensional_block_rejected(self, tolerances):
        with pytest.raises(ShiftNotOrthogonal):
            construct_povm_hw_shift(_s3_instance([0.1, 0.1, 0.9]), {"sign": (1, 0)}, tolerances)

    def test_misordered_blocks_rejected(self):
        with pytest.raises(InvalidSpectrum):
            _s3_instance([0.4, 0.6, 0.6], labels=("standard", "trivial", "sign"), dims=(2, 1, 1))

    def test_merged_irreps_rejected(self):
        with pytest.raises(InvalidSpectrum):
            _s3_instance([0.6, 0.8], labels=("pair", "standard"), dims=(2, 2), mults=(1, 1))

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidSpectrum) as excinfo:
            _s3_instance([0.6, 0.6, 0.4], mults=(1, 1, 2))
        assert excinfo.value.details == {"covered": 6, "dim": 4}
