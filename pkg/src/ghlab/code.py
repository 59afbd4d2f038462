"""Code structures on the boundary lattice and the gauging-out transform.

Two operator spaces appear. The full lattice model lives on vertex matter,
plaquette matter and link qubits in that order; the plain stabilizer model
lives on link qubits only. Both encode one logical qubit through the same
pair of boundary string operators.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import LogicalDestroyedError
from .lattice import LatticeGeometry, logical_supports, symmetry_supports
from .pauli import PauliOperator, PauliSpan, centralizer_in_span, gf2_rank


@dataclass
class CodeStructure:
    n_qubits: int
    gauge: PauliSpan
    stabilizers: PauliSpan
    logical_x: PauliOperator
    logical_z: PauliOperator
    k: int
    stabilizer_names: list = field(default_factory=list)
    gauge_names: list = field(default_factory=list)
    geometry: LatticeGeometry = None
    model: str = ""


# ----- qubit layouts -------------------------------------------------------


def lghm_qubit_count(geom: LatticeGeometry) -> int:
    return geom.n_vertices + geom.n_plaquettes + geom.n_links


def lghm_link_qubit(geom: LatticeGeometry, link: int) -> int:
    return geom.n_vertices + geom.n_plaquettes + link


def lghm_vertex_qubit(geom: LatticeGeometry, vertex: int) -> int:
    return vertex


def lghm_plaquette_qubit(geom: LatticeGeometry, plaq: int) -> int:
    return geom.n_vertices + plaq


# ----- operator builders ---------------------------------------------------


def vertex_star_op(geom: LatticeGeometry, v: int, n=None, offset=0) -> PauliOperator:
    """X string on the links of one vertex star (link-only space by default)."""
    n = geom.n_links if n is None else n
    return PauliOperator.from_support(n, "X", [offset + l for l in geom.vertex_stars[v]])


def plaquette_op(geom: LatticeGeometry, p: int, n=None, offset=0) -> PauliOperator:
    n = geom.n_links if n is None else n
    return PauliOperator.from_support(
        n, "Z", [offset + l for l in geom.plaquette_boundaries[p]]
    )


def logical_pair(geom: LatticeGeometry, n=None, offset=0):
    n = geom.n_links if n is None else n
    lx_sup, lz_sup = logical_supports(geom)
    log_x = PauliOperator.from_support(n, "X", [offset + l for l in lx_sup])
    log_z = PauliOperator.from_support(n, "Z", [offset + l for l in lz_sup])
    return log_x, log_z


def symmetry_pair(geom: LatticeGeometry, n=None, offset=0):
    """Rough X parity and smooth Z parity string operators on link qubits."""
    n = geom.n_links if n is None else n
    rough_all, smooth_all = symmetry_supports(geom)
    par_x = PauliOperator.from_support(n, "X", [offset + l for l in rough_all])
    par_z = PauliOperator.from_support(n, "Z", [offset + l for l in smooth_all])
    return par_x, par_z


# ----- code constructions ---------------------------------------------------


def build_tc_code(geom: LatticeGeometry) -> CodeStructure:
    """Stabilizer code on link qubits: vertex stars plus plaquettes."""
    n = geom.n_links
    stabs = []
    names = []
    for v in range(geom.n_vertices):
        stabs.append(vertex_star_op(geom, v))
        names.append(f"vertex_star[{v}]")
    for p in range(geom.n_plaquettes):
        stabs.append(plaquette_op(geom, p))
        names.append(f"plaquette[{p}]")
    span = PauliSpan(stabs, n=n)
    log_x, log_z = logical_pair(geom)
    k = n - span.rank
    return CodeStructure(
        n_qubits=n,
        gauge=span,
        stabilizers=span,
        logical_x=log_x,
        logical_z=log_z,
        k=k,
        stabilizer_names=names,
        gauge_names=list(names),
        geometry=geom,
        model="tc",
    )


def build_lghm_code(geom: LatticeGeometry) -> CodeStructure:
    """Subsystem code on vertex, plaquette and link qubits.

    Gauge generators are the Hamiltonian terms: single vertex X, single
    plaquette Z, flux hoppings on links with two plaquette neighbours and
    matter hoppings on links with two vertex endpoints. Stabilizers are the
    Gauss-law operators, which commute with every gauge generator.
    """
    n = lghm_qubit_count(geom)
    off = geom.n_vertices + geom.n_plaquettes
    gauge = []
    gauge_names = []
    for v in range(geom.n_vertices):
        gauge.append(PauliOperator.single(n, v, "X"))
        gauge_names.append(f"vertex_field[{v}]")
    for p in range(geom.n_plaquettes):
        gauge.append(PauliOperator.single(n, geom.n_vertices + p, "Z"))
        gauge_names.append(f"plaquette_field[{p}]")
    for (p1, p2, link) in geom.dual_adjacency:
        term = PauliOperator.single(n, geom.n_vertices + p1, "X")
        term = term * PauliOperator.single(n, geom.n_vertices + p2, "X")
        term = term * PauliOperator.single(n, off + link, "X")
        gauge.append(term)
        gauge_names.append(f"flux_hop[{link}]")
    for link in geom.non_rough_links():
        v1, v2 = geom.links[link].vertices
        term = PauliOperator.single(n, v1, "Z")
        term = term * PauliOperator.single(n, v2, "Z")
        term = term * PauliOperator.single(n, off + link, "Z")
        gauge.append(term)
        gauge_names.append(f"matter_hop[{link}]")

    stabs = []
    names = []
    for v in range(geom.n_vertices):
        g = PauliOperator.single(n, v, "X") * vertex_star_op(geom, v, n=n, offset=off)
        stabs.append(g)
        names.append(f"gauss_vertex[{v}]")
    for p in range(geom.n_plaquettes):
        b = PauliOperator.single(n, geom.n_vertices + p, "Z") * plaquette_op(
            geom, p, n=n, offset=off
        )
        stabs.append(b)
        names.append(f"gauss_plaquette[{p}]")

    log_x, log_z = logical_pair(geom, n=n, offset=off)
    return CodeStructure(
        n_qubits=n,
        gauge=PauliSpan(gauge, n=n),
        stabilizers=PauliSpan(stabs, n=n),
        logical_x=log_x,
        logical_z=log_z,
        k=1,
        stabilizer_names=names,
        gauge_names=gauge_names,
        geometry=geom,
        model="lghm",
    )


def compute_center(code: CodeStructure) -> PauliSpan:
    """Center of the gauge span: its elements commuting with all gauge generators."""
    return centralizer_in_span(code.gauge, code.gauge.generators)


# ----- gauging out -----------------------------------------------------------


@dataclass
class GaugeOutResult:
    code: CodeStructure
    surviving: list        # names of old stabilizer generators that commute
    gauged_out: list       # names of old stabilizer generators removed
    noise_count: int


def gauge_out(code: CodeStructure, noise_ops) -> GaugeOutResult:
    """Stabilizer structure after maximal-strength Pauli noise.

    The new stabilizer span is the centralizer of the noise operators inside
    the span of (old stabilizers + noise). Old generators anticommuting with
    any noise operator are reported as gauged out. Raises if a logical
    operator fails to commute with the noise.
    """
    noise_ops = list(noise_ops)
    for idx, op in enumerate(noise_ops):
        if op.n != code.n_qubits:
            raise ValueError(f"noise operator {idx} acts on wrong qubit count")
        if not op.is_hermitian():
            raise ValueError(f"noise operator {idx} is not Hermitian")
    for name, logical in (("logical_x", code.logical_x), ("logical_z", code.logical_z)):
        for op in noise_ops:
            if not logical.commutes(op):
                raise LogicalDestroyedError(
                    f"{name} anticommutes with a noise operator; "
                    "the channel is not logical-preserving"
                )

    surviving = []
    gauged = []
    for name, g in zip(code.stabilizer_names, code.stabilizers.generators):
        if all(g.commutes(op) for op in noise_ops):
            surviving.append(name)
        else:
            gauged.append(name)

    combined = PauliSpan(
        list(code.stabilizers.generators) + noise_ops, n=code.n_qubits
    )
    new_span = centralizer_in_span(combined, noise_ops)
    new_names = [f"mixed_stabilizer[{i}]" for i in range(len(new_span))]
    new_code = CodeStructure(
        n_qubits=code.n_qubits,
        gauge=combined,
        stabilizers=new_span,
        logical_x=code.logical_x,
        logical_z=code.logical_z,
        k=code.k,
        stabilizer_names=new_names,
        gauge_names=list(code.gauge_names),
        geometry=code.geometry,
        model=code.model + "+gauged",
    )
    return GaugeOutResult(new_code, surviving, gauged, len(noise_ops))


# ----- verification -----------------------------------------------------------


def verify_code(code: CodeStructure) -> dict:
    """Machine-readable structural checks with counterexamples on failure."""
    checks = []

    def record(name, passed, detail=""):
        checks.append({"name": name, "passed": bool(passed), "detail": detail})

    bad = []
    for i, s in enumerate(code.stabilizers.generators):
        for j, g in enumerate(code.gauge.generators):
            if not s.commutes(g):
                bad.append((i, j))
    record(
        "stabilizers_commute_with_gauge",
        not bad,
        "" if not bad else f"stabilizer {bad[0][0]} vs gauge {bad[0][1]}",
    )

    bad = []
    gens = code.stabilizers.generators
    for i in range(len(gens)):
        for j in range(i + 1, len(gens)):
            if not gens[i].commutes(gens[j]):
                bad.append((i, j))
    record("stabilizers_mutually_commute", not bad, str(bad[:3]))

    lx_ok = all(code.logical_x.commutes(s) for s in gens)
    lz_ok = all(code.logical_z.commutes(s) for s in gens)
    record("logical_x_commutes_with_stabilizers", lx_ok)
    record("logical_z_commutes_with_stabilizers", lz_ok)
    record(
        "logical_pair_anticommutes",
        not code.logical_x.commutes(code.logical_z),
    )

    rank = code.stabilizers.rank
    if code.model == "tc":
        record(
            "logical_count",
            code.n_qubits - rank == code.k,
            f"n={code.n_qubits} rank={rank} k={code.k}",
        )
    else:
        # subsystem accounting: Gauss laws are independent, the logical pair
        # survives outside the stabilizer row space
        expected_rank = (
            code.geometry.n_vertices + code.geometry.n_plaquettes
            if code.geometry is not None
            else rank
        )
        in_span_x = code.stabilizers.contains(code.logical_x)
        in_span_z = code.stabilizers.contains(code.logical_z)
        record(
            "subsystem_rank_accounting",
            rank == expected_rank and not in_span_x and not in_span_z,
            f"rank={rank} expected={expected_rank}",
        )

    lx_gauge = all(code.logical_x.commutes(g) for g in code.gauge.generators)
    lz_gauge = all(code.logical_z.commutes(g) for g in code.gauge.generators)
    record("logicals_commute_with_gauge", lx_gauge and lz_gauge)

    return {"passed": all(c["passed"] for c in checks), "checks": checks}
