import numpy as np
import pytest

from ghlab.code import logical_pair, plaquette_op, symmetry_pair, vertex_star_op
from ghlab.errors import SectorNotFoundError
from ghlab.exact import (
    apply_mapping_circuit,
    build_hamiltonian,
    dense_spectrum,
    energy_variance,
    expectation,
    ground_state_in_sector,
    hamiltonian_sparse,
    load_state,
    map_verify_report,
    mapping_circuit_gates,
    restrict_to_fixed_sector,
    save_state,
    stabilizer_ground_state,
    terms_equal,
)
from ghlab.lattice import build_geometry
from ghlab.pauli import PauliOperator


@pytest.fixture(scope="module")
def geo32():
    return build_geometry(3, 2)


@pytest.fixture(scope="module")
def geo22():
    return build_geometry(2, 2)


@pytest.fixture(scope="module")
def geo21():
    return build_geometry(2, 1)


class TestHamiltonians:
    def test_tc_term_counts(self, geo32):
        h0 = build_hamiltonian("tc", geo32, 0.0)
        assert len(h0.terms) == 12
        h = build_hamiltonian("tc", geo32, 0.5)
        assert len(h.terms) == 26  # 6 + 6 stabilizers, 7 + 7 field terms

    def test_tc_zero_coupling_ground_energy(self, geo32):
        h = build_hamiltonian("tc", geo32, 0.0)
        psi = stabilizer_ground_state(geo32)
        e = float(np.vdot(psi, hamiltonian_sparse(h) @ psi).real)
        assert e == pytest.approx(-12.0, abs=1e-12)

    def test_lghm_term_counts(self, geo22):
        h = build_hamiltonian("lghm", geo22, 1.0)
        kinds = {"x_field": 0, "z_field": 0, "hop": 0}
        for c, op in h.terms:
            if op.weight == 1:
                if op.x.any():
                    kinds["x_field"] += 1
                else:
                    kinds["z_field"] += 1
            else:
                kinds["hop"] += 1
        assert kinds["x_field"] == 4
        assert kinds["z_field"] == 3
        assert kinds["hop"] == len(geo22.dual_adjacency) + len(geo22.non_rough_links())

    def test_unknown_model_rejected(self, geo22):
        with pytest.raises(ValueError):
            build_hamiltonian("xyz", geo22, 0.0)

    def test_hermitian_terms(self, geo22):
        for model in ("tc", "gh", "lghm"):
            h = build_hamiltonian(model, geo22, 0.7)
            for c, op in h.terms:
                assert op.is_hermitian()
                assert np.isreal(c)


class TestSymmetries:
    @pytest.mark.parametrize("j", [0.0, 0.3, 0.8, 1.2])
    def test_tc_commutes_with_symmetries_and_logicals(self, geo32, j):
        h = build_hamiltonian("tc", geo32, j)
        par_x, par_z = symmetry_pair(geo32)
        log_x, log_z = logical_pair(geo32)
        for sym in (par_x, par_z, log_x, log_z):
            for c, term in h.terms:
                assert sym.commutes(term)


class TestGroundStates:
    def test_zero_coupling_state_matches_eigensolver(self, geo22):
        h = build_hamiltonian("tc", geo22, 0.0)
        psi, info = ground_state_in_sector(
            h, {"charge_parity": 1, "flux_parity": 1, "logical_z": 1}
        )
        ref = stabilizer_ground_state(geo22)
        overlap = abs(np.vdot(ref, psi))
        assert overlap == pytest.approx(1.0, abs=1e-10)
        assert info["degeneracy"] == 2

    def test_stabilizer_expectations(self, geo32):
        psi = stabilizer_ground_state(geo32)
        for v in range(geo32.n_vertices):
            assert expectation(psi, vertex_star_op(geo32, v)) == pytest.approx(1.0)
        for p in range(geo32.n_plaquettes):
            assert expectation(psi, plaquette_op(geo32, p)) == pytest.approx(1.0)

    def test_single_z_vanishes_at_zero_coupling(self, geo32):
        psi = stabilizer_ground_state(geo32)
        bulk = geo32.bulk_links()[0]
        val = expectation(psi, PauliOperator.single(geo32.n_links, bulk, "Z"))
        assert val == pytest.approx(0.0, abs=1e-12)

    def test_double_degeneracy_and_logical_label(self, geo22):
        h = build_hamiltonian("tc", geo22, 0.5)
        psi, info = ground_state_in_sector(
            h, {"charge_parity": 1, "flux_parity": 1, "logical_z": 1}
        )
        assert info["degeneracy"] == 2
        _, log_z = logical_pair(geo22)
        assert expectation(psi, log_z) == pytest.approx(1.0, abs=1e-10)
        minus, _ = ground_state_in_sector(
            h, {"charge_parity": 1, "flux_parity": 1, "logical_z": -1}
        )
        assert expectation(minus, log_z) == pytest.approx(-1.0, abs=1e-10)

    def test_logical_projection_contract(self, geo32):
        for j in (0.0, 0.5):
            h = build_hamiltonian("tc", geo32, j)
            psi, _ = ground_state_in_sector(
                h, {"charge_parity": 1, "flux_parity": 1, "logical_z": 1}
            )
            _, log_z = logical_pair(geo32)
            assert expectation(psi, log_z) == pytest.approx(1.0, abs=1e-10)

    def test_energy_variance_small(self, geo32):
        h = build_hamiltonian("tc", geo32, 0.5)
        psi, _ = ground_state_in_sector(
            h, {"charge_parity": 1, "flux_parity": 1, "logical_z": 1}
        )
        bound = h.coefficient_bound()
        assert energy_variance(h, psi) <= 1e-16 * bound * bound

    def test_bulk_plaquette_expectation_interior_value(self, geo32):
        h = build_hamiltonian("tc", geo32, 0.5)
        psi, _ = ground_state_in_sector(
            h, {"charge_parity": 1, "flux_parity": 1, "logical_z": 1}
        )
        p_mid = geo32.plaquette_id(1, 1)
        val = expectation(psi, plaquette_op(geo32, p_mid))
        assert 0.0 < val < 1.0

    def test_missing_sector_raises(self, geo21):
        h = build_hamiltonian("tc", geo21, 0.0)
        with pytest.raises(SectorNotFoundError):
            ground_state_in_sector(
                h, {"charge_parity": -1, "flux_parity": 1, "logical_z": 1}
            )


class TestMappingCircuit:
    @pytest.mark.parametrize("lx,ly", [(2, 1), (2, 2), (3, 2)])
    def test_term_identity_all_sizes(self, lx, ly):
        geom = build_geometry(lx, ly)
        for j in (0.0, 0.7):
            h = build_hamiltonian("lghm", geom, j)
            mapped = apply_mapping_circuit(h, geom, "forward")
            link_terms, dropped = restrict_to_fixed_sector(mapped.terms, geom)
            assert dropped == 0
            assert terms_equal(link_terms, build_hamiltonian("tc", geom, j).terms)

    @pytest.mark.parametrize("j", [0.0, 0.3, 0.7, 1.2])
    def test_sector_spectrum_matches(self, geo22, j):
        geom = geo22
        h = build_hamiltonian("lghm", geom, j)
        mapped = apply_mapping_circuit(h, geom, "forward")
        link_terms, _ = restrict_to_fixed_sector(mapped.terms, geom)
        spec_a = dense_spectrum(link_terms, geom.n_links)
        spec_b = dense_spectrum(build_hamiltonian("tc", geom, j).terms, geom.n_links)
        assert np.max(np.abs(spec_a - spec_b)) <= 1e-10

    def test_logicals_invariant(self, geo32):
        n = geo32.n_vertices + geo32.n_plaquettes + geo32.n_links
        off = geo32.n_vertices + geo32.n_plaquettes
        log_x, log_z = logical_pair(geo32, n=n, offset=off)
        assert apply_mapping_circuit(log_x, geo32, "forward") == log_x
        assert apply_mapping_circuit(log_z, geo32, "forward") == log_z

    def test_symmetry_operator_images(self, geo22):
        """Matter parities map onto boundary string operators at fixed sector."""
        geom = geo22
        n = geom.n_vertices + geom.n_plaquettes + geom.n_links
        off = geom.n_vertices + geom.n_plaquettes
        charge = PauliOperator.from_support(n, "X", range(geom.n_vertices))
        mapped = apply_mapping_circuit(charge, geom, "forward")
        link_part = PauliOperator(
            geom.n_links, mapped.x[off:], mapped.z[off:], 0
        )
        rough_x, smooth_z = symmetry_pair(geom)
        assert link_part.support_key() == rough_x.support_key()

    def test_circuit_involution_on_random_state(self, geo21):
        rng = np.random.default_rng(5)
        n = geo21.n_vertices + geo21.n_plaquettes + geo21.n_links
        psi = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
        psi /= np.linalg.norm(psi)
        fwd = apply_mapping_circuit(psi, geo21, "forward")
        back = apply_mapping_circuit(fwd, geo21, "inverse")
        assert np.max(np.abs(back - psi)) <= 1e-12

    def test_state_and_operator_pictures_agree(self, geo21):
        """<U psi| O |U psi> equals <psi| U*OU |psi> for the circuit."""
        rng = np.random.default_rng(9)
        n = geo21.n_vertices + geo21.n_plaquettes + geo21.n_links
        psi = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
        psi /= np.linalg.norm(psi)
        op = PauliOperator.from_support(n, "Z", [4, 6])
        u_psi = apply_mapping_circuit(psi, geo21, "forward")
        lhs = np.vdot(u_psi, op.apply(u_psi))
        conj = apply_mapping_circuit(op, geo21, "inverse")
        rhs = np.vdot(psi, conj.apply(psi))
        assert abs(lhs - rhs) <= 1e-12

    def test_map_verify_report(self, geo22):
        report = map_verify_report(geo22, [0.0, 0.3, 0.7, 1.2])
        assert report["passed"], report


class TestStateDump:
    def test_round_trip(self, tmp_path, geo21):
        psi = stabilizer_ground_state(geo21).astype(np.complex128)
        path = tmp_path / "state.bin"
        save_state(path, psi)
        back = load_state(path)
        assert np.array_equal(back, psi)
