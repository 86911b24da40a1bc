import itertools
import math

import numpy as np
import pytest

from bbcap.channel import BroadcastChannelSpec, output_state_tmsv
from bbcap.fock import (
    DensityMatrix,
    FockState,
    InconclusiveVerificationError,
    channel_output_fock,
    cutoff_for_tail,
    entropy_fock,
    reduce_density,
    schmidt_spectrum_check,
    split_with_vacuum,
    tail_mass,
    thermal_weight,
    tmsv_fock,
    truncation_budget,
    verify_conditional_entropies,
)
from bbcap.gaussian import entropy_g, reduce, von_neumann_entropy

SPEC23 = BroadcastChannelSpec((0.2, 0.3))


class TestTmsvFock:
    def test_zero_energy_is_vacuum(self):
        st = tmsv_fock(0.0, 10)
        assert st.amplitudes == {(0, 0): 1.0}
        assert st.tail == 0.0

    def test_tail_matches_geometric_closed_form(self):
        for n_s, cutoff in ((0.5, 20), (1.0, 12), (0.2, 8), (3.0, 25)):
            st = tmsv_fock(n_s, cutoff)
            assert abs(st.tail - tail_mass(n_s, cutoff)) < 1e-14

    def test_half_energy_tail_value(self):
        assert tail_mass(0.5, 20) == pytest.approx((1.0 / 3.0) ** 21, rel=1e-12)
        assert tail_mass(0.5, 20) < 1e-10

    def test_marginal_spectrum_entropy_is_g(self):
        st = tmsv_fock(0.5, 25)
        budget = truncation_budget(0.5, 25)
        rho = reduce_density(st, ("A",))
        assert entropy_fock(rho) == pytest.approx(
            entropy_g(0.5), abs=budget.entropy_tolerance
        )

    def test_support_is_diagonal_pairs(self):
        st = tmsv_fock(0.7, 15)
        assert all(a == b for a, b in st.amplitudes)


class TestSplitWithVacuum:
    def test_full_transmittance_appends_vacuum(self):
        st = tmsv_fock(0.5, 12)
        out = split_with_vacuum(st, "A'", 1.0, "B")
        assert set(out.amplitudes) == {(k, k, 0) for k, _ in st.amplitudes}
        assert out.norm_sq == pytest.approx(st.norm_sq, abs=1e-15)

    def test_zero_transmittance_transfers_everything(self):
        st = tmsv_fock(0.5, 12)
        out = split_with_vacuum(st, "A'", 0.0, "B")
        assert set(out.amplitudes) == {(k, 0, k) for k, _ in st.amplitudes}

    def test_single_photon_balanced_amplitudes(self):
        one = FockState(("a",), {(1,): 1.0}, 1)
        out = split_with_vacuum(one, "a", 0.5, "b")
        # both output amplitudes positive under this package's convention
        assert out.amplitudes[(1, 0)] == pytest.approx(math.sqrt(0.5), abs=1e-15)
        assert out.amplitudes[(0, 1)] == pytest.approx(math.sqrt(0.5), abs=1e-15)
        rho = reduce_density(out, ("a",))
        assert sorted(np.round(rho.eigenvalues(), 12)) == [0.5, 0.5]

    def test_norm_and_photon_number_conserved(self):
        rng = np.random.RandomState(4)
        st = tmsv_fock(0.8, 18)
        for step, label in enumerate(("B", "C")):
            st = split_with_vacuum(st, "A'", rng.uniform(0.2, 0.9), label)
            assert abs(st.norm_sq - (1.0 - tail_mass(0.8, 18))) < 1e-14
            for occ in st.amplitudes:
                assert occ[0] == sum(occ[1:])  # sender count = everything else

    def test_bad_arguments(self):
        st = tmsv_fock(0.5, 5)
        with pytest.raises(ValueError):
            split_with_vacuum(st, "A'", 1.5, "B")
        with pytest.raises(ValueError):
            split_with_vacuum(st, "nope", 0.5, "B")
        with pytest.raises(ValueError):
            split_with_vacuum(st, "A'", 0.5, "A")


class TestReduceDensity:
    def test_keep_all_is_rank_one(self):
        st = tmsv_fock(0.6, 8)
        rho = reduce_density(st, st.mode_labels)
        eigs = rho.eigenvalues()
        assert eigs[0] == pytest.approx(st.norm_sq, abs=1e-12)
        assert np.all(np.abs(eigs[1:]) < 1e-12)

    def test_tmsv_arm_is_diagonal_thermal(self):
        st = tmsv_fock(0.5, 20)
        rho = reduce_density(st, ("A'",))
        # every block is 1x1: the photon-number populations themselves
        assert all(len(basis) == 1 for basis, _ in rho.blocks)
        pops = {basis[0][0]: float(mat[0, 0]) for basis, mat in rho.blocks}
        for k in range(21):
            assert pops[k] == pytest.approx(thermal_weight(0.5, k), abs=1e-14)

    def test_channel_receiver_marginal_is_attenuated_thermal(self):
        st = channel_output_fock(SPEC23, 0.5, 21)
        rho = reduce_density(st, ("B1",))
        budget = truncation_budget(0.5, 21)
        pops = {basis[0][0]: float(mat[0, 0]) for basis, mat in rho.blocks}
        for k in range(6):
            assert pops[k] == pytest.approx(
                thermal_weight(0.1, k), abs=budget.entropy_tolerance
            )
        gauss = von_neumann_entropy(reduce(output_state_tmsv(SPEC23, 0.5), ["B1"]))
        assert entropy_fock(rho) == pytest.approx(gauss, abs=budget.entropy_tolerance)

    def test_receiver_pair_blocks_conserve_total_photons(self):
        st = channel_output_fock(SPEC23, 0.5, 15)
        rho = reduce_density(st, ("B1", "B2"))
        for basis, _ in rho.blocks:
            totals = {sum(occ) for occ in basis}
            assert len(totals) == 1

    def test_unknown_label(self):
        with pytest.raises(ValueError):
            reduce_density(tmsv_fock(0.5, 5), ("X",))
        with pytest.raises(ValueError):
            reduce_density(tmsv_fock(0.5, 5), ())


class TestEntropyFock:
    def test_pure_projector_is_zero(self):
        # tail at this cutoff is ~1e-16, so the kept weight is 1 to precision
        st = tmsv_fock(0.4, 30)
        assert entropy_fock(reduce_density(st, st.mode_labels)) == pytest.approx(
            0.0, abs=1e-10
        )

    def test_balanced_qubit_is_one_bit(self):
        bell = FockState(("a", "b"), {(0, 0): math.sqrt(0.5), (1, 1): math.sqrt(0.5)}, 1)
        assert entropy_fock(reduce_density(bell, ("a",))) == pytest.approx(1.0, abs=1e-12)

    def test_truncated_thermal_matches_g(self):
        st = tmsv_fock(0.5, 20)
        assert entropy_fock(reduce_density(st, ("A",))) == pytest.approx(
            entropy_g(0.5), abs=1e-8
        )

    def test_negative_eigenvalue_raises(self):
        bad = DensityMatrix(("a",), ((((0,),), np.array([[-1e-6]])),), 1)
        with pytest.raises(RuntimeError):
            entropy_fock(bad)


class TestVerifyConditionalEntropies:
    def test_half_energy_reference_case(self):
        report = verify_conditional_entropies(SPEC23, 0.5, cutoff=25)
        assert report.passed
        assert report.max_abs_dev < 1e-6
        by_case = {c.case: c for c in report.cases}
        first = by_case["-H(B1|A,B2)"]
        assert first.fock_bits == pytest.approx(
            entropy_g(0.35) - entropy_g(0.25), abs=1e-6
        )
        assert first.closed_form_bits == pytest.approx(0.21218569170395585, abs=1e-12)

    def test_zero_energy_all_zero(self):
        report = verify_conditional_entropies(SPEC23, 0.0, cutoff=5)
        assert report.passed
        for case in report.cases:
            assert case.fock_bits == pytest.approx(0.0, abs=1e-12)

    def test_purity_case_present(self):
        report = verify_conditional_entropies(SPEC23, 0.5, cutoff=21)
        purity = [c for c in report.cases if c.case.startswith("purity")]
        assert len(purity) == 1 and purity[0].abs_dev < 1e-6

    def test_budget_violation_is_inconclusive(self):
        with pytest.raises(InconclusiveVerificationError):
            verify_conditional_entropies(SPEC23, 0.5, cutoff=10)
        with pytest.raises(InconclusiveVerificationError):
            verify_conditional_entropies(SPEC23, 3.0)  # needs cutoff > 60

    def test_too_many_receivers(self):
        with pytest.raises(ValueError):
            verify_conditional_entropies(BroadcastChannelSpec((0.1,) * 4), 0.2)

    def test_report_serializes_with_plain_types(self):
        import json

        report = verify_conditional_entropies(SPEC23, 0.2, cutoff=15)
        parsed = json.loads(json.dumps(report.to_dict()))
        assert parsed["pass"] is True
        assert {"case", "gaussian_bits", "fock_bits", "closed_form_bits",
                "abs_dev", "tail_mass", "pass"} <= set(parsed["cases"][0])


class TestSchmidtSpectrum:
    def test_untouched_tmsv(self):
        report = schmidt_spectrum_check(0.0, 0.5, cutoff=25)
        assert report.passed
        for k in range(10):
            assert report.spectrum[k] == pytest.approx(
                thermal_weight(0.5, k), abs=1e-10
            )

    def test_reference_case(self):
        report = schmidt_spectrum_check(0.2, 0.5, cutoff=25)
        assert report.passed and report.max_abs_dev < 1e-8
        for k in range(10):
            assert report.spectrum[k] == pytest.approx(
                thermal_weight(0.4, k), abs=1e-8
            )

    def test_spectrum_is_geometric(self):
        report = schmidt_spectrum_check(0.3, 0.6, cutoff=25)
        mu = 0.7 * 0.6
        ratio = mu / (mu + 1.0)
        spans = report.spectrum[:8]
        for a, b in zip(spans, spans[1:]):
            assert b / a == pytest.approx(ratio, abs=1e-6)

    def test_budget_checked(self):
        with pytest.raises(InconclusiveVerificationError):
            schmidt_spectrum_check(0.2, 0.5, cutoff=8)


class TestCutoffPolicy:
    def test_policy_cutoffs(self):
        assert cutoff_for_tail(0.2) == 12
        assert cutoff_for_tail(0.5) == 20
        assert cutoff_for_tail(1.0) == 33

    def test_refuses_past_sixty(self):
        with pytest.raises(InconclusiveVerificationError):
            cutoff_for_tail(3.0)

    def test_budget_tolerance_formula(self):
        b = truncation_budget(0.5, 21)
        assert b.tail_mass == pytest.approx((1.0 / 3.0) ** 22, rel=1e-12)
        assert b.entropy_tolerance == max(1e-6, 50.0 * b.tail_mass * 21)


class TestOracleVsGaussianEverywhere:
    def test_every_mode_subset_agrees(self):
        # every reduced entropy of the channel output, both routes
        n_s, cutoff = 0.5, 21
        budget = truncation_budget(n_s, cutoff)
        fock_state = channel_output_fock(SPEC23, n_s, cutoff)
        gauss_state = output_state_tmsv(SPEC23, n_s)
        labels = gauss_state.mode_labels
        for size in range(1, len(labels) + 1):
            for keep in itertools.combinations(labels, size):
                h_fock = entropy_fock(reduce_density(fock_state, keep))
                h_gauss = von_neumann_entropy(reduce(gauss_state, keep))
                assert h_fock == pytest.approx(h_gauss, abs=budget.entropy_tolerance), keep
