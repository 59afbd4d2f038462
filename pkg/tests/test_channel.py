import numpy as np
import pytest

from ghlab.channel import (
    decohere,
    dense_decohered_matrix,
    entropy,
    logical_z_expectation,
    observable_moments,
    pauli_mixture_expectation,
    pauli_mixture_expectation_branchwise,
    purity,
    scan_rows,
)
from ghlab.code import plaquette_op
from ghlab.errors import TooLargeError
from ghlab.exact import build_hamiltonian, ground_state_in_sector, stabilizer_ground_state
from ghlab.lattice import build_geometry
from ghlab.pauli import PauliOperator, PauliSum


@pytest.fixture(scope="module")
def geo32():
    return build_geometry(3, 2)


@pytest.fixture(scope="module")
def geo22():
    return build_geometry(2, 2)


@pytest.fixture(scope="module")
def psi32(geo32):
    return stabilizer_ground_state(geo32)


@pytest.fixture(scope="module")
def psi22(geo22):
    return stabilizer_ground_state(geo22)


def middle_pair_observable(geom):
    p1 = geom.plaquette_id(1, 1)
    p2 = geom.plaquette_id(1, 2)
    return PauliSum(
        [(0.5, plaquette_op(geom, p1)), (0.5, plaquette_op(geom, p2))]
    )


class TestDecohere:
    def test_identity_channel(self, geo32, psi32):
        d = decohere(psi32, geo32, 0.0)
        assert d.rank == 1
        assert d.eigenvalues[0] == pytest.approx(1.0, abs=1e-12)
        assert entropy(d) == pytest.approx(0.0, abs=1e-12)
        assert purity(d) == pytest.approx(1.0, abs=1e-12)

    def test_weights_normalized(self, geo32, psi32):
        d = decohere(psi32, geo32, 0.17)
        assert np.sum(d.branch_weights) == pytest.approx(1.0, abs=1e-12)
        assert np.all(d.eigenvalues >= -1e-12)
        assert np.sum(d.eigenvalues) == pytest.approx(1.0, abs=1e-10)

    def test_rank_bound(self, geo32, psi32):
        d = decohere(psi32, geo32, 0.25)
        assert d.rank <= 2 ** len(geo32.decohered_links())

    @pytest.mark.parametrize("lx,ly", [(2, 1), (2, 2)])
    @pytest.mark.parametrize("p_x", [0.1, 0.3, 0.5])
    def test_gram_spectrum_equals_dense_spectrum(self, lx, ly, p_x):
        geom = build_geometry(lx, ly)
        h = build_hamiltonian("tc", geom, 0.4)
        psi, _ = ground_state_in_sector(
            h, {"charge_parity": 1, "flux_parity": 1, "logical_z": 1}
        )
        d = decohere(psi, geom, p_x)
        rho = dense_decohered_matrix(psi, geom, p_x)
        dense_eigs = np.linalg.eigvalsh(rho)[::-1]
        k = d.eigenvalues.shape[0]
        assert np.allclose(dense_eigs[:k], d.eigenvalues, atol=1e-10)
        assert np.trace(rho).real == pytest.approx(1.0, abs=1e-12)

    def test_maximal_noise_uniform_spectrum(self, geo32, psi32):
        d = decohere(psi32, geo32, 0.5)
        nonzero = d.eigenvalues[d.eigenvalues > 1e-12]
        assert nonzero.shape[0] == 32
        assert np.allclose(nonzero, 1.0 / 32, atol=1e-12)
        assert entropy(d) == pytest.approx(np.log(32), abs=1e-10)
        assert purity(d) == pytest.approx(1.0 / 32, abs=1e-12)

    def test_probability_range_checked(self, geo32, psi32):
        with pytest.raises(ValueError):
            decohere(psi32, geo32, 0.6)
        with pytest.raises(ValueError):
            decohere(psi32, geo32, -0.1)

    def test_cap_enforced(self, geo32, psi32):
        with pytest.raises(TooLargeError):
            decohere(psi32, geo32, 0.2, cap=5)


class TestEntropyPurity:
    def test_entropy_monotone_in_noise(self, geo32):
        h = build_hamiltonian("tc", geo32, 0.3)
        psi, _ = ground_state_in_sector(
            h, {"charge_parity": 1, "flux_parity": 1, "logical_z": 1}
        )
        grid = np.arange(0.0, 0.51, 0.05)
        values = [entropy(decohere(psi, geo32, p)) for p in grid]
        assert all(b >= a - 1e-10 for a, b in zip(values, values[1:]))

    def test_purity_monotone_in_noise(self, geo32, psi32):
        grid = np.arange(0.0, 0.51, 0.05)
        values = [purity(decohere(psi32, geo32, p)) for p in grid]
        assert all(b <= a + 1e-10 for a, b in zip(values, values[1:]))

    def test_top_k_truncation_is_noop_at_300(self, geo32, psi32):
        d = decohere(psi32, geo32, 0.3)
        assert entropy(d, top_k=300) == pytest.approx(entropy(d), abs=1e-14)

    def test_base_two_option(self, geo32, psi32):
        d = decohere(psi32, geo32, 0.5)
        assert entropy(d, base=2) == pytest.approx(5.0, abs=1e-10)


class TestMoments:
    def test_pure_state_stabilizer(self, geo32, psi32):
        d = decohere(psi32, geo32, 0.0)
        obs = PauliSum([(1.0, plaquette_op(geo32, geo32.plaquette_id(1, 1)))])
        mean, var = observable_moments(d, obs)
        assert mean == pytest.approx(1.0, abs=1e-12)
        assert var == pytest.approx(0.0, abs=1e-12)

    def test_closed_form_matches_branchwise(self, geo32, psi32):
        d = decohere(psi32, geo32, 0.2)
        for p in (geo32.plaquette_id(1, 1), geo32.plaquette_id(0, 1)):
            op = plaquette_op(geo32, p)
            assert pauli_mixture_expectation(d, op) == pytest.approx(
                pauli_mixture_expectation_branchwise(d, op), abs=1e-12
            )

    def test_damping_exponent(self, geo32, psi32):
        # a middle plaquette has three non-smooth boundary links
        p_x = 0.2
        d = decohere(psi32, geo32, p_x)
        op = plaquette_op(geo32, geo32.plaquette_id(1, 1))
        assert pauli_mixture_expectation(d, op) == pytest.approx(
            (1 - 2 * p_x) ** 3, abs=1e-12
        )

    def test_variance_bounds(self, geo32, psi32):
        obs = middle_pair_observable(geo32)
        for p in (0.1, 0.3, 0.5):
            d = decohere(psi32, geo32, p)
            mean, var = observable_moments(d, obs)
            assert var >= 0.0
            assert var <= 4.0  # observable eigenvalues lie in [-1, 1]

    def test_variance_peak_from_closed_form(self, geo32, psi32):
        obs = middle_pair_observable(geo32)
        grid = np.arange(0.0, 0.51, 0.025)
        var = []
        for p in grid:
            d = decohere(psi32, geo32, p)
            var.append(observable_moments(d, obs)[1])
        # closed form at zero coupling: (1 + u^4)/2 - u^6, u = 1 - 2p
        u = 1 - 2 * grid
        ref = (1 + u ** 4) / 2 - u ** 6
        assert np.allclose(var, ref, atol=1e-12)

    def test_non_hermitian_rejected(self, geo32, psi32):
        d = decohere(psi32, geo32, 0.1)
        bad = PauliSum([(1.0j, plaquette_op(geo32, 0))])
        with pytest.raises(ValueError):
            observable_moments(d, bad)


class TestLogicalPreservation:
    @pytest.mark.parametrize("j", [0.0, 0.5, 1.0])
    def test_logical_z_pinned_across_noise(self, geo32, j):
        h = build_hamiltonian("tc", geo32, j)
        psi, _ = ground_state_in_sector(
            h, {"charge_parity": 1, "flux_parity": 1, "logical_z": 1}
        )
        for p in (0.0, 0.2, 0.5):
            d = decohere(psi, geo32, p)
            assert logical_z_expectation(d) == pytest.approx(1.0, abs=1e-10)


class TestScan:
    def test_single_point_matches_direct_calls(self, geo32, psi32):
        obs = middle_pair_observable(geo32)
        rows = scan_rows(geo32, [0.0], [0.2], observables=[("pair", obs)])
        assert len(rows) == 1
        row = rows[0]
        d = decohere(psi32, geo32, 0.2)
        assert row["entropy"] == pytest.approx(entropy(d), abs=1e-10)
        assert row["purity"] == pytest.approx(purity(d), abs=1e-10)
        mean, var = observable_moments(d, obs)
        assert row["pair_mean"] == pytest.approx(mean, abs=1e-10)
        assert row["pair_var"] == pytest.approx(var, abs=1e-10)
        assert row["status"] == "ok"

    def test_row_error_recorded_not_raised(self, geo22):
        rows = scan_rows(geo22, [0.0], [0.1, 0.2], cap=1)
        assert all(r["status"].startswith("error") for r in rows)
        assert len(rows) == 2
