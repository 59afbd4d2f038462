"""Logical-qubit degradation under a short logical-gauge coupling pulse.

The pulse exp(-i dt L0 x O_G) leaves the diagonal of the reduced logical
state alone and multiplies the off-diagonal coherence by the gauge-sector
average of exp(-2i dt O_G). The deviation F is that average minus one; its
second-order cumulant form is controlled by the mean and variance of O_G
in the decohered gauge state.
"""

from __future__ import annotations

import cmath
import itertools
from dataclasses import dataclass, field

import numpy as np

from .channel import DecoheredState, observable_moments, pauli_mixture_expectation
from .code import logical_pair, plaquette_op
from .lattice import LatticeGeometry
from .pauli import PauliOperator, PauliSum


@dataclass
class CouplingSpec:
    logical_op: PauliOperator     # off-diagonal for the stored logical state
    gauge_op: PauliSum            # acts on the gauge sector only
    dt: float

    def validate(self, geom: LatticeGeometry):
        _, log_z = logical_pair(geom)
        if self.logical_op.commutes(log_z):
            raise ValueError(
                "logical coupling operator must anticommute with the stored label"
            )
        deco = set(geom.decohered_links())
        for _, term in self.gauge_op.terms:
            if not any(term.z[l] for l in deco):
                raise ValueError(
                    "every gauge term must anticommute with at least one channel flip"
                )
        if self.dt <= 0:
            raise ValueError("time step must be positive")


def default_gauge_observable(geom: LatticeGeometry) -> PauliSum:
    """Average of two adjacent plaquettes nearest the lattice middle."""
    p1, p2 = default_plaquette_pair(geom)
    return PauliSum(
        [(0.5, plaquette_op(geom, p1)), (0.5, plaquette_op(geom, p2))]
    )


def default_plaquette_pair(geom: LatticeGeometry):
    """Adjacent plaquette pair, preferring four-link rows near the center."""
    best = None
    center_row = geom.ly / 2.0
    center_col = (geom.lx - 1) / 2.0
    for p1, p2, link in geom.dual_adjacency:
        r1, c1 = divmod(p1, geom.lx - 1)
        r2, c2 = divmod(p2, geom.lx - 1)
        four_link = (0 < r1 < geom.ly) and (0 < r2 < geom.ly)
        distance = abs((r1 + r2) / 2 - center_row) + abs((c1 + c2) / 2 - center_col)
        score = (not four_link, distance, p1, p2)
        if best is None or score < best[0]:
            best = (score, (p1, p2))
    return best[1]


def default_coupling(geom: LatticeGeometry, dt: float = 0.05) -> CouplingSpec:
    log_x, _ = logical_pair(geom)
    spec = CouplingSpec(logical_op=log_x, gauge_op=default_gauge_observable(geom), dt=dt)
    spec.validate(geom)
    return spec


# ----- exact and cumulant deviations ------------------------------------------


def _commuting_terms(op: PauliSum) -> bool:
    terms = [t for _, t in op.terms]
    return all(a.commutes(b) for a, b in itertools.combinations(terms, 2))


def exponential_pauli_sum(op: PauliSum, prefactor: complex) -> PauliSum:
    """exp(prefactor * op) for mutually commuting Hermitian terms.

    Expands over joint sign patterns of the terms; exact because each term
    squares to the identity and all projectors commute.
    """
    if not _commuting_terms(op):
        raise ValueError("terms do not commute; use the dense route")
    coeffs = [complex(c).real for c, _ in op.terms]
    strings = [t for _, t in op.terms]
    k = len(strings)
    n = op.n
    out_terms = []
    for signs in itertools.product((1, -1), repeat=k):
        eigenvalue = sum(s * c for s, c in zip(signs, coeffs))
        weight = cmath.exp(prefactor * eigenvalue) / (2 ** k)
        for subset in range(1 << k):
            acc = PauliOperator.identity(n)
            sign_prod = 1
            for i in range(k):
                if (subset >> i) & 1:
                    acc = acc * strings[i]
                    sign_prod *= signs[i]
            out_terms.append((weight * sign_prod, acc))
    return PauliSum(out_terms, n=n)


def exact_f(d: DecoheredState, spec: CouplingSpec) -> complex:
    """Trace of exp(-2i dt O_G) against the decohered gauge state, minus one."""
    if spec.dt <= 0:
        raise ValueError("time step must be positive")
    phase = -2.0j * spec.dt
    if _commuting_terms(spec.gauge_op):
        expanded = exponential_pauli_sum(spec.gauge_op, phase)
        total = 0.0 + 0.0j
        for coeff, term in expanded.terms:
            total += coeff * term.phase * pauli_mixture_expectation(d, term)
        return total - 1.0
    return _exact_f_dense(d, spec)


def _exact_f_dense(d: DecoheredState, spec: CouplingSpec) -> complex:
    """Branchwise matrix-exponential fallback for non-commuting gauge terms."""
    from scipy.sparse.linalg import expm_multiply

    from .exact import pauli_sparse

    mat = None
    for c, term in spec.gauge_op.terms:
        contrib = (complex(c) * term.phase) * pauli_sparse(term)
        mat = contrib if mat is None else mat + contrib
    mat = (-2.0j * spec.dt) * mat
    idx = np.arange(d.base_state.shape[0], dtype=np.int64)
    total = 0.0 + 0.0j
    for m, w in zip(d.branch_masks.astype(np.int64), d.branch_weights):
        if w == 0.0:
            continue
        branch = d.base_state[idx ^ m].astype(np.complex128)
        total += w * np.vdot(branch, expm_multiply(mat, branch))
    return total - 1.0


def cumulant_f(mean: float, variance: float, dt: float) -> complex:
    """Second-order form: exp(-2i dt mean) (1 - 2 dt^2 variance) - 1."""
    return cmath.exp(-2.0j * dt * mean) * (1.0 - 2.0 * dt * dt * variance) - 1.0


def logical_deviation_matrix(f: complex) -> np.ndarray:
    """Reduced 2x2 deviation: zero diagonal, conjugate off-diagonal pair."""
    return np.array([[0.0, f], [np.conj(f), 0.0]], dtype=np.complex128)


def order_of_accuracy(
    d: DecoheredState, spec: CouplingSpec, dt_values
) -> float:
    """Log-log slope of |exact - cumulant| against the time step."""
    mean, var = observable_moments(d, spec.gauge_op)
    diffs = []
    for dt in dt_values:
        probe = CouplingSpec(spec.logical_op, spec.gauge_op, float(dt))
        diff = abs(exact_f(d, probe) - cumulant_f(mean, var, float(dt)))
        diffs.append(diff)
    logs = np.log(np.asarray(diffs))
    slope = np.polyfit(np.log(np.asarray(dt_values, dtype=float)), logs, 1)[0]
    return float(slope)


def stability_scan(geom: LatticeGeometry, j_values, p_values, spec: CouplingSpec = None):
    """Mean, variance and both deviation magnitudes per grid point."""
    from .exact import build_hamiltonian, ground_state_in_sector
    from .channel import decohere

    if spec is None:
        spec = default_coupling(geom)
    spec.validate(geom)
    rows = []
    for j in j_values:
        h = build_hamiltonian("tc", geom, float(j))
        psi, _ = ground_state_in_sector(
            h, {"charge_parity": 1, "flux_parity": 1, "logical_z": 1}
        )
        for p in p_values:
            d = decohere(psi, geom, float(p))
            mean, var = observable_moments(d, spec.gauge_op)
            f = exact_f(d, spec)
            rows.append(
                {
                    "j": float(j),
                    "p_x": float(p),
                    "mean": mean,
                    "variance": var,
                    "f_abs_exact": abs(f),
                    "f_abs_cumulant": abs(cumulant_f(mean, var, spec.dt)),
                    "status": "ok",
                }
            )
    return rows
