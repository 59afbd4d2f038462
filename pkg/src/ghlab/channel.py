"""Gauge-operator decoherence applied to exact states on link qubits.

The channel flips every non-smooth link with probability p_x. Its output on
a pure state is a weighted mixture of 2**n_d flipped branches; the nonzero
spectrum of the mixture equals the spectrum of the branch Gram matrix, so
entropy and purity come out exactly without ever assembling the full
density matrix. Pauli expectations collapse branchwise to a closed form:
every decohered link whose flip anticommutes with the string contributes a
factor (1 - 2 p_x).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import TooLargeError
from .lattice import LatticeGeometry
from .pauli import PauliOperator, PauliSum

KRAUS_CAP_DEFAULT = 20


@dataclass
class DecoheredState:
    geometry: LatticeGeometry
    p_x: float
    base_state: np.ndarray
    decohered_links: list
    branch_masks: np.ndarray      # flip mask per branch, uint64
    branch_weights: np.ndarray    # p^|S| (1-p)^(n_d-|S|) per branch
    gram: np.ndarray              # sqrt(w w') <psi_S | psi_S'>
    eigenvalues: np.ndarray       # nonincreasing, clipped at zero

    @property
    def n_branches(self) -> int:
        return self.branch_masks.shape[0]

    @property
    def rank(self) -> int:
        return int(np.sum(self.eigenvalues > 1e-12))


def _branch_tables(geom: LatticeGeometry, p_x: float):
    deco = geom.decohered_links()
    n_d = len(deco)
    subsets = np.arange(1 << n_d, dtype=np.int64)
    masks = np.zeros(1 << n_d, dtype=np.int64)
    for bit, link in enumerate(deco):
        hit = (subsets >> bit) & 1
        masks ^= hit * (1 << link)
    sizes = np.zeros(1 << n_d, dtype=np.int64)
    for bit in range(n_d):
        sizes += (subsets >> bit) & 1
    weights = (p_x ** sizes) * ((1.0 - p_x) ** (n_d - sizes))
    return deco, masks, weights


def decohere(
    psi: np.ndarray,
    geom: LatticeGeometry,
    p_x: float,
    cap: int = KRAUS_CAP_DEFAULT,
) -> DecoheredState:
    """Exact Kraus expansion of the channel output for a pure input state."""
    if not 0.0 <= p_x <= 0.5:
        raise ValueError("flip probability must lie in [0, 1/2]")
    if psi.shape[0] != 1 << geom.n_links:
        raise ValueError("state does not live on the link qubits")
    deco = geom.decohered_links()
    if len(deco) > cap:
        raise TooLargeError(
            f"{len(deco)} decohered links exceed the exact cap {cap}; "
            "use a smaller geometry for exact scans"
        )
    if abs(np.linalg.norm(psi) - 1.0) > 1e-10:
        raise ValueError("input state is not normalized")
    psi = np.ascontiguousarray(psi, dtype=np.float64 if np.isrealobj(psi) else np.complex128)
    deco, masks, weights = _branch_tables(geom, p_x)
    n_b = masks.shape[0]

    # overlaps depend only on the branch difference: e[T] = <psi| X_T |psi>
    idx = np.arange(psi.shape[0], dtype=np.int64)
    e_table = np.empty(n_b, dtype=np.float64)
    for t in range(n_b):
        val = np.vdot(psi, psi[idx ^ masks[t]])
        e_table[t] = float(np.real(val))

    # masks is linear over GF(2) in the subset bits, so the branch difference
    # mask of (i, j) is masks[i ^ j]
    t_index = np.bitwise_xor.outer(
        np.arange(n_b, dtype=np.int64), np.arange(n_b, dtype=np.int64)
    )
    root_w = np.sqrt(weights)
    gram = np.outer(root_w, root_w) * e_table[t_index]
    eigs = np.linalg.eigvalsh(gram)[::-1]
    eigs = np.where(eigs > 0.0, eigs, 0.0)

    total = float(np.sum(eigs))
    if abs(total - 1.0) > 1e-10:
        raise AssertionError(f"branch spectrum sums to {total}, not 1")
    return DecoheredState(
        geometry=geom,
        p_x=float(p_x),
        base_state=psi,
        decohered_links=list(deco),
        branch_masks=masks.astype(np.uint64),
        branch_weights=weights,
        gram=gram,
        eigenvalues=eigs,
    )


def dense_decohered_matrix(psi: np.ndarray, geom: LatticeGeometry, p_x: float):
    """Full density matrix of the channel output; cross-check use only."""
    if geom.n_links > 10:
        raise TooLargeError("dense density matrix capped at 10 link qubits")
    deco, masks, weights = _branch_tables(geom, p_x)
    dim = psi.shape[0]
    idx = np.arange(dim, dtype=np.int64)
    rho = np.zeros((dim, dim), dtype=np.complex128)
    for m, w in zip(masks, weights):
        branch = psi[idx ^ m]
        rho += w * np.outer(branch, branch.conj())
    return rho


# ----- diagnostics -----------------------------------------------------------


def entropy(d: DecoheredState, top_k=None, base: float = np.e) -> float:
    """Mixture entropy from the branch spectrum; zero eigenvalues contribute 0."""
    eigs = d.eigenvalues
    if top_k is not None:
        eigs = eigs[: int(top_k)]
    eigs = eigs[eigs > 1e-15]
    s = float(-np.sum(eigs * np.log(eigs)))
    if base != np.e:
        s /= np.log(base)
    return max(s, 0.0)


def purity(d: DecoheredState) -> float:
    return float(np.sum(d.eigenvalues ** 2))


def pauli_mixture_expectation(d: DecoheredState, op: PauliOperator) -> float:
    """Tr[rho op] via the branchwise sign collapse, exact."""
    base = np.vdot(d.base_state, op.apply(d.base_state)).real
    damped = sum(1 for l in d.decohered_links if op.z[l])
    return float(((1.0 - 2.0 * d.p_x) ** damped) * base)


def pauli_mixture_expectation_branchwise(d: DecoheredState, op: PauliOperator) -> float:
    """Literal sum of <psi_S| op |psi_S>; cross-checks the closed form."""
    idx = np.arange(d.base_state.shape[0], dtype=np.int64)
    total = 0.0
    for m, w in zip(d.branch_masks.astype(np.int64), d.branch_weights):
        branch = d.base_state[idx ^ m]
        total += w * np.vdot(branch, op.apply(branch)).real
    return float(total)


def observable_moments(d: DecoheredState, op: PauliSum):
    """Mean and variance of a Hermitian string combination in the mixture."""
    if not op.is_hermitian():
        raise ValueError("observable must be Hermitian")
    mean = 0.0
    for c, term in op.terms:
        mean += (c * term.phase).real * pauli_mixture_expectation(d, term)
    second = 0.0
    for c, term in op.square().terms:
        second += (c * term.phase).real * pauli_mixture_expectation(d, term)
    variance = second - mean * mean
    if variance < 0 and variance > -1e-12:
        variance = 0.0
    return float(mean), float(variance)


def logical_z_expectation(d: DecoheredState) -> float:
    from .code import logical_pair

    _, log_z = logical_pair(d.geometry)
    return pauli_mixture_expectation(d, log_z)


# ----- grid scans -------------------------------------------------------------


def scan_rows(
    geom: LatticeGeometry,
    j_values,
    p_values,
    observables=None,
    top_k=None,
    log_base: float = np.e,
    cap: int = KRAUS_CAP_DEFAULT,
    stability_spec=None,
):
    """One result row per (coupling, flip probability) pair.

    observables: list of (name, PauliSum) evaluated per row. Errors inside a
    row are recorded in its status field and the scan continues.
    """
    from .exact import build_hamiltonian, ground_state_in_sector
    from .code import logical_pair

    observables = observables or []
    _, log_z = logical_pair(geom)
    rows = []
    for j in j_values:
        try:
            h = build_hamiltonian("tc", geom, float(j))
            psi, info = ground_state_in_sector(
                h, {"charge_parity": 1, "flux_parity": 1, "logical_z": 1}
            )
        except Exception as exc:  # recorded, not raised: the scan continues
            for p in p_values:
                rows.append(_error_row(j, p, f"ground state failed: {exc}"))
            continue
        for p in p_values:
            try:
                d = decohere(psi, geom, float(p), cap=cap)
                row = {
                    "j": float(j),
                    "p_x": float(p),
                    "energy": info["energy"],
                    "degeneracy": info["degeneracy"],
                    "entropy": entropy(d, top_k=top_k, base=log_base),
                    "purity": purity(d),
                    "logical_z": pauli_mixture_expectation(d, log_z),
                    "status": "ok",
                }
                for name, obs in observables:
                    mean, var = observable_moments(d, obs)
                    row[f"{name}_mean"] = mean
                    row[f"{name}_var"] = var
                if stability_spec is not None:
                    from .stability import cumulant_f, exact_f

                    mean, var = observable_moments(d, stability_spec.gauge_op)
                    row["f_abs_exact"] = abs(exact_f(d, stability_spec))
                    row["f_abs_cumulant"] = abs(
                        cumulant_f(mean, var, stability_spec.dt)
                    )
                rows.append(row)
            except Exception as exc:
                rows.append(_error_row(j, p, str(exc)))
    return rows


def _error_row(j, p, message):
    return {
        "j": float(j),
        "p_x": float(p),
        "status": f"error: {message}",
    }
