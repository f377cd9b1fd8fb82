import numpy as np
import pytest

from qpfaff import GridKernel, QMatrix, atom_oracle, chain_probabilities, conditional_oracle, sequential_sample
from qpfaff.errors import InvalidKernelError, SizeCapError, ZeroProbabilityError
from qpfaff.sampler import (
    AtomTable,
    SampleBatch,
    cells_of,
    gap_probability,
    inclusion_probabilities,
    kernel_hash,
    mask_of,
    step_probability,
)
from qpfaff.transforms import conditional_kernel, palm_one
from qpfaff.verify import dilute_cse, dilute_sine4, projection_kernel


def test_masks():
    assert mask_of([0, 2]) == 5
    assert cells_of(5) == [0, 2]
    assert cells_of(0) == []


class TestOracle:
    def test_zero_kernel(self):
        atoms = atom_oracle(GridKernel.from_matrix(np.zeros((3, 3))))
        assert atoms.probs[0] == 1 and np.all(atoms.probs[1:] == 0)

    def test_rank_one_pair(self):
        atoms = atom_oracle(GridKernel.from_matrix(np.full((2, 2), 0.5)))
        assert np.allclose(atoms.probs, [0, 0.5, 0.5, 0], atol=1e-15)
        assert atoms[[0]] == pytest.approx(0.5)

    def test_expected_count_is_trace(self, rng):
        for T in (projection_kernel(7, 3, rng), dilute_sine4(7), dilute_cse(7)):
            atoms = atom_oracle(T)
            assert atoms.expected_count() == pytest.approx(T.diagonal().real.sum(), abs=1e-12)
            assert atoms.probs.sum() == pytest.approx(1, abs=1e-12)

    def test_inclusion_roundtrip(self, rng):
        T = dilute_sine4(6)
        atoms = atom_oracle(T)
        assert np.allclose(atoms.inclusion(), inclusion_probabilities(T).real, atol=1e-14)

    def test_invalid_kernel_reports_subset(self):
        # atoms: empty -0.4, {0} 1.2, {1} -0.1, {0, 1} 0.3
        T = GridKernel.from_matrix(np.diag([1.5, 0.2]))
        with pytest.raises(InvalidKernelError) as info:
            atom_oracle(T)
        assert info.value.subset == []
        assert info.value.value == pytest.approx(-0.4)

    def test_cap(self):
        with pytest.raises(SizeCapError):
            atom_oracle(GridKernel.from_matrix(np.zeros((15, 15))))

    def test_gap(self, rng):
        atoms = atom_oracle(projection_kernel(5, 2, rng))
        assert gap_probability(atoms, []) == pytest.approx(1)
        assert gap_probability(atoms, range(5)) == pytest.approx(0, abs=1e-12)

    def test_csv(self):
        atoms = atom_oracle(GridKernel.from_matrix(np.full((2, 2), 0.5)))
        lines = atoms.to_csv().splitlines()
        assert lines[0] == "configuration,probability"
        assert lines[2] == "10,0.5"


class TestConditionalOracle:
    def test_empty_window(self, rng):
        atoms = atom_oracle(dilute_sine4(5))
        cond = conditional_oracle(atoms, [])
        assert np.allclose(cond.probs, atoms.probs)

    def test_example_n6(self, rng):
        T = projection_kernel(6, 2, rng)
        cond = conditional_oracle(atom_oracle(T), [1, 2], [])
        K = conditional_kernel(T, [1, 2], [])
        assert np.allclose(cond.inclusion()[[1, 2, 4, 8]], K.diagonal().real, atol=1e-8)
        assert cond.labels == (0, 3, 4, 5)

    def test_palm_cross_check(self):
        T = dilute_sine4(6)
        atoms = atom_oracle(T)
        cond = conditional_oracle(atoms, [2], [2])
        P = palm_one(T, T.ground.points[2])
        keep = [0, 1, 3, 4, 5]
        pred = inclusion_probabilities(GridKernel.from_matrix(P.table.submatrix(keep)))
        assert np.max(np.abs(cond.inclusion() - pred.real)) < 1e-8

    def test_factorization(self, rng):
        T = dilute_cse(6)
        atoms = atom_oracle(T)
        B = [0, 3]
        for S in range(1 << 6):
            occ = [c for c in B if S >> c & 1]
            p_b = sum(atoms.probs[m] for m in range(1 << 6)
                      if [c for c in B if m >> c & 1] == occ)
            cond = conditional_oracle(atoms, B, occ)
            rest = [c for c in cells_of(S) if c not in B]
            assert atoms.probs[S] == pytest.approx(p_b * cond[[cond.labels.index(c) for c in rest]], abs=1e-14)

    def test_zero_probability(self, rng):
        atoms = atom_oracle(projection_kernel(5, 1, rng))
        with pytest.raises(ZeroProbabilityError):
            conditional_oracle(atoms, [0, 1], [0, 1])
        with pytest.raises(ValueError):
            conditional_oracle(atoms, [0], [1])


class TestSequential:
    def test_zero_kernel(self):
        batch = sequential_sample(GridKernel.from_matrix(np.zeros((4, 4))), 1, 50)
        assert not batch.samples.any()

    def test_chain_consistency(self, rng):
        for T in (projection_kernel(6, 2, rng), dilute_sine4(6), dilute_cse(6)):
            assert np.max(np.abs(chain_probabilities(T) - atom_oracle(T).probs)) < 1e-9

    def test_first_step_is_diagonal(self):
        T = dilute_sine4(4)
        assert step_probability(T, ()) == pytest.approx(T.diagonal()[0].real)

    def test_reproducible_and_supported(self, rng):
        T = projection_kernel(6, 2, rng)
        a = sequential_sample(T, 42, 2000)
        b = sequential_sample(T, 42, 2000)
        c = sequential_sample(T, 43, 2000)
        assert a.to_csv() == b.to_csv()
        assert a.to_csv() != c.to_csv()
        support = atom_oracle(T).support()
        assert set(np.unique(a.masks()).tolist()) <= support
        assert (a.samples.sum(axis=1) == 2).all()

    def test_total_variation(self, rng):
        T = dilute_sine4(6)
        batch = sequential_sample(T, 7, 100_000)
        assert batch.empirical().total_variation(atom_oracle(T)) < 0.01

    def test_csv_roundtrip(self, rng):
        T = dilute_sine4(4)
        batch = sequential_sample(T, 3, 10)
        back = SampleBatch.from_csv(batch.to_csv())
        assert back.seed == 3 and back.count == 10
        assert back.kernel_hash == kernel_hash(T)
        assert np.array_equal(back.samples, batch.samples)

    def test_out_of_band_probability(self):
        with pytest.raises(InvalidKernelError):
            sequential_sample(GridKernel.from_matrix(np.diag([1.2, 0.1])), 0, 5)


def test_atom_table_validation():
    with pytest.raises(ValueError):
        AtomTable(2, [1, 0, 0])
