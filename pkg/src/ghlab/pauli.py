"""Signed multi-qubit Pauli strings in symplectic GF(2) form.

A string is stored as ``i**phase_power * X**x * Z**z`` with one x bit and
one z bit per qubit (qubit 0 first, X factors to the left of Z factors on
each qubit). Products, commutation checks and centralizers reduce to bit
arithmetic while the global phase stays exact in {+1, +i, -1, -i}.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError

_LETTER_FROM_BITS = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}
_BITS_FROM_LETTER = {v: k for k, v in _LETTER_FROM_BITS.items()}
_PHASE_TOKEN = {0: "+1", 1: "+i", 2: "-1", 3: "-i"}
_TOKEN_PHASE = {v: k for k, v in _PHASE_TOKEN.items()}
_PHASE_VALUE = {0: 1.0 + 0.0j, 1: 1.0j, 2: -1.0 + 0.0j, 3: -1.0j}


def _as_bits(data, n: int) -> np.ndarray:
    out = np.zeros(n, dtype=np.uint8)
    if isinstance(data, (list, tuple, set, frozenset, range)):
        idx = sorted(data)
        out[idx] = 1
    else:
        arr = np.asarray(data, dtype=np.uint8) & 1
        if arr.shape != (n,):
            raise DimensionMismatchError(f"bit vector of length {arr.shape} != {n}")
        out[:] = arr
    return out


@dataclass
class PauliOperator:
    """One signed Pauli string on ``n`` qubits."""

    n: int
    x: np.ndarray
    z: np.ndarray
    phase_power: int = 0

    def __post_init__(self):
        self.x = _as_bits(self.x, self.n)
        self.z = _as_bits(self.z, self.n)
        self.phase_power = int(self.phase_power) % 4

    # ----- constructors -------------------------------------------------
    @classmethod
    def identity(cls, n: int) -> "PauliOperator":
        return cls(n, np.zeros(n, dtype=np.uint8), np.zeros(n, dtype=np.uint8), 0)

    @classmethod
    def from_support(cls, n: int, kind: str, qubits) -> "PauliOperator":
        """Product of identical single-qubit factors, e.g. an X string."""
        qubits = sorted(qubits)
        x = np.zeros(n, dtype=np.uint8)
        z = np.zeros(n, dtype=np.uint8)
        k = 0
        if kind == "X":
            x[qubits] = 1
        elif kind == "Z":
            z[qubits] = 1
        elif kind == "Y":
            x[qubits] = 1
            z[qubits] = 1
            k = len(qubits)
        else:
            raise ValueError(f"unknown Pauli kind {kind!r}")
        return cls(n, x, z, k)

    @classmethod
    def single(cls, n: int, qubit: int, kind: str) -> "PauliOperator":
        return cls.from_support(n, kind, [qubit])

    @classmethod
    def from_string(cls, text: str) -> "PauliOperator":
        """Parse the textual rendering, e.g. ``"+1 XIZY"`` or ``"XIZY"``."""
        parts = text.split()
        if len(parts) == 2:
            token, letters = parts
        elif len(parts) == 1:
            token, letters = "+1", parts[0]
        else:
            raise ValueError(f"cannot parse Pauli string {text!r}")
        if token not in _TOKEN_PHASE:
            raise ValueError(f"unknown phase token {token!r}")
        n = len(letters)
        x = np.zeros(n, dtype=np.uint8)
        z = np.zeros(n, dtype=np.uint8)
        y_count = 0
        for q, letter in enumerate(letters):
            if letter not in _BITS_FROM_LETTER:
                raise ValueError(f"unknown Pauli letter {letter!r}")
            x[q], z[q] = _BITS_FROM_LETTER[letter]
            y_count += int(letter == "Y")
        return cls(n, x, z, (_TOKEN_PHASE[token] + y_count) % 4)

    # ----- rendering ----------------------------------------------------
    def to_string(self) -> str:
        """Render as phase token plus letters; round-trips bit-exactly."""
        y_count = int(np.sum(self.x & self.z))
        token = _PHASE_TOKEN[(self.phase_power - y_count) % 4]
        letters = "".join(
            _LETTER_FROM_BITS[(int(vx), int(vz))] for vx, vz in zip(self.x, self.z)
        )
        return f"{token} {letters}"

    def __repr__(self):
        return f"PauliOperator({self.to_string()!r})"

    # ----- basic queries ------------------------------------------------
    @property
    def phase(self) -> complex:
        return _PHASE_VALUE[self.phase_power]

    @property
    def weight(self) -> int:
        return int(np.sum(self.x | self.z))

    def is_identity_up_to_phase(self) -> bool:
        return not (self.x.any() or self.z.any())

    def is_hermitian(self) -> bool:
        return (self.phase_power - int(np.sum(self.x & self.z))) % 2 == 0

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.x | self.z)

    def key(self):
        return (self.x.tobytes(), self.z.tobytes(), self.phase_power)

    def support_key(self):
        return (self.x.tobytes(), self.z.tobytes())

    def copy(self) -> "PauliOperator":
        return PauliOperator(self.n, self.x.copy(), self.z.copy(), self.phase_power)

    def __eq__(self, other):
        return (
            isinstance(other, PauliOperator)
            and self.n == other.n
            and self.phase_power == other.phase_power
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.z, other.z)
        )

    # ----- algebra ------------------------------------------------------
    def _check(self, other: "PauliOperator"):
        if self.n != other.n:
            raise DimensionMismatchError(
                f"operators act on {self.n} and {other.n} qubits"
            )

    def multiply(self, other: "PauliOperator") -> "PauliOperator":
        """Exact operator product, reordering Z past X picks up -1 per hit."""
        self._check(other)
        swaps = int(np.sum(self.z & other.x))
        return PauliOperator(
            self.n,
            self.x ^ other.x,
            self.z ^ other.z,
            (self.phase_power + other.phase_power + 2 * swaps) % 4,
        )

    def __mul__(self, other):
        return self.multiply(other)

    def adjoint(self) -> "PauliOperator":
        xz = int(np.sum(self.x & self.z))
        return PauliOperator(self.n, self.x, self.z, (-self.phase_power + 2 * xz) % 4)

    def commutes(self, other: "PauliOperator") -> bool:
        self._check(other)
        return symplectic_overlap(self, other) == 0

    # ----- dense / state actions ----------------------------------------
    def apply(self, psi: np.ndarray) -> np.ndarray:
        """Apply to a 2**n state vector (qubit j = bit j of the index)."""
        if psi.shape[0] != 1 << self.n:
            raise DimensionMismatchError("state length does not match qubit count")
        xmask = _mask(self.x)
        zmask = _mask(self.z)
        idx = np.arange(psi.shape[0], dtype=np.int64)
        signs = 1.0 - 2.0 * (popcount64(idx & zmask) & 1)
        out = np.empty_like(psi, dtype=np.complex128)
        out[idx ^ xmask] = self.phase * signs * psi
        return out

    def dense(self) -> np.ndarray:
        if self.n > 14:
            raise DimensionMismatchError("dense form capped at 14 qubits")
        dim = 1 << self.n
        xmask = _mask(self.x)
        zmask = _mask(self.z)
        cols = np.arange(dim, dtype=np.int64)
        signs = 1.0 - 2.0 * (popcount64(cols & zmask) & 1)
        mat = np.zeros((dim, dim), dtype=np.complex128)
        mat[cols ^ xmask, cols] = self.phase * signs
        return mat


def _mask(bits: np.ndarray) -> int:
    return int(sum(1 << int(q) for q in np.flatnonzero(bits)))


def popcount64(values: np.ndarray) -> np.ndarray:
    v = values.astype(np.uint64)
    count = np.zeros_like(v)
    while True:
        nz = v != 0
        if not nz.any():
            break
        count[nz] += (v[nz] & 1).astype(np.uint64)
        v = v >> np.uint64(1)
    return count.astype(np.int64)


def symplectic_overlap(p: PauliOperator, q: PauliOperator) -> int:
    """Symplectic form <p.x, q.z> + <p.z, q.x> over GF(2); 1 means anticommute."""
    return int((np.sum(p.x & q.z) + np.sum(p.z & q.x)) % 2)


def expectation_sign(p: PauliOperator, flip_mask_bits: np.ndarray) -> int:
    """Sign of X_S P X_S relative to P for an X string with the given bits."""
    return -1 if int(np.sum(p.z & flip_mask_bits)) % 2 else 1


# ----- GF(2) linear algebra ---------------------------------------------


def gf2_rref(matrix: np.ndarray):
    """Reduced row echelon form over GF(2) with lowest-index pivoting.

    Returns (rref, pivot_columns). Zero rows are dropped.
    """
    m = np.array(matrix, dtype=np.uint8) & 1
    if m.ndim != 2:
        raise ValueError("need a 2D bit matrix")
    rows, cols = m.shape
    pivots = []
    r = 0
    for c in range(cols):
        hit = None
        for i in range(r, rows):
            if m[i, c]:
                hit = i
                break
        if hit is None:
            continue
        if hit != r:
            m[[r, hit]] = m[[hit, r]]
        for i in range(rows):
            if i != r and m[i, c]:
                m[i] ^= m[r]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return m[:r], pivots


def gf2_rank(matrix: np.ndarray) -> int:
    if len(matrix) == 0:
        return 0
    return gf2_rref(matrix)[0].shape[0]


def gf2_nullspace(matrix: np.ndarray) -> np.ndarray:
    """Basis (rows) of the right nullspace {v : M v = 0}, deterministic order."""
    m = np.asarray(matrix, dtype=np.uint8)
    if m.size == 0:
        cols = m.shape[1] if m.ndim == 2 else 0
        return np.eye(cols, dtype=np.uint8)
    rref, pivots = gf2_rref(m)
    cols = m.shape[1]
    free = [c for c in range(cols) if c not in pivots]
    basis = []
    for f in free:
        v = np.zeros(cols, dtype=np.uint8)
        v[f] = 1
        for r, p in enumerate(pivots):
            if rref[r, f]:
                v[p] = 1
        basis.append(v)
    if not basis:
        return np.zeros((0, cols), dtype=np.uint8)
    return np.array(basis, dtype=np.uint8)


def gf2_in_rowspace(matrix: np.ndarray, vector: np.ndarray) -> bool:
    """True if the bit vector lies in the row space of the bit matrix."""
    m = np.asarray(matrix, dtype=np.uint8)
    v = np.asarray(vector, dtype=np.uint8) & 1
    if m.size == 0:
        return not v.any()
    stacked = np.vstack([m, v[None, :]])
    return gf2_rank(stacked) == gf2_rank(m)


def gf2_solve_rowcombo(matrix: np.ndarray, vector: np.ndarray):
    """Coefficients a with a @ matrix == vector over GF(2), or None."""
    m = np.asarray(matrix, dtype=np.uint8) & 1
    v = np.asarray(vector, dtype=np.uint8) & 1
    rows = m.shape[0]
    aug = np.hstack([m.T, v[:, None]])
    rref, pivots = gf2_rref(aug)
    a = np.zeros(rows, dtype=np.uint8)
    for r, p in enumerate(pivots):
        if p == rows:
            return None
        if rref[r, rows]:
            a[p] = 1
    return a


# ----- spans and centralizers --------------------------------------------


class PauliSpan:
    """A list of Pauli generators viewed as a GF(2) row space (phases kept)."""

    def __init__(self, generators, n=None):
        generators = list(generators)
        if n is None:
            if not generators:
                raise ValueError("empty span needs an explicit qubit count")
            n = generators[0].n
        for g in generators:
            if g.n != n:
                raise DimensionMismatchError("span generators disagree on qubit count")
        self.n = n
        self.generators = generators
        self._rank = None

    @property
    def matrix(self) -> np.ndarray:
        if not self.generators:
            return np.zeros((0, 2 * self.n), dtype=np.uint8)
        return np.array(
            [np.concatenate([g.x, g.z]) for g in self.generators], dtype=np.uint8
        )

    @property
    def rank(self) -> int:
        if self._rank is None:
            self._rank = gf2_rank(self.matrix)
        return self._rank

    def __len__(self):
        return len(self.generators)

    def __iter__(self):
        return iter(self.generators)

    def contains(self, op: PauliOperator) -> bool:
        """Membership of the row space, ignoring the phase."""
        return gf2_in_rowspace(self.matrix, np.concatenate([op.x, op.z]))

    def reduced(self):
        """Independent generators in RREF order, products tracked with phases."""
        rows = [np.concatenate([g.x, g.z]).astype(np.uint8) for g in self.generators]
        ops = [g.copy() for g in self.generators]
        cols = 2 * self.n
        pivots = []
        r = 0
        for c in range(cols):
            hit = None
            for i in range(r, len(rows)):
                if rows[i][c]:
                    hit = i
                    break
            if hit is None:
                continue
            rows[r], rows[hit] = rows[hit], rows[r]
            ops[r], ops[hit] = ops[hit], ops[r]
            for i in range(len(rows)):
                if i != r and rows[i][c]:
                    rows[i] = rows[i] ^ rows[r]
                    ops[i] = ops[i].multiply(ops[r])
            pivots.append(c)
            r += 1
            if r == len(rows):
                break
        return rows[:r], ops[:r]

    def same_rowspace(self, other: "PauliSpan") -> bool:
        a, b = self.matrix, other.matrix
        ra, rb = gf2_rank(a), gf2_rank(b)
        if ra != rb:
            return False
        if a.size == 0:
            return True
        return gf2_rank(np.vstack([a, b])) == ra


def centralizer_in_span(span: PauliSpan, constraints) -> PauliSpan:
    """Generators of the subgroup of <span> commuting with every constraint.

    Works modulo phases on the GF(2) side; the returned generators carry the
    exact phases produced by multiplying the span generators.
    """
    constraints = list(constraints)
    for c in constraints:
        if c.n != span.n:
            raise DimensionMismatchError("constraint qubit count differs from span")
    rows, ops = span.reduced()
    if not rows:
        return PauliSpan([], n=span.n)
    r = len(rows)
    m = len(constraints)
    pairing = np.zeros((r, m), dtype=np.uint8)
    half = span.n
    for j, c in enumerate(constraints):
        cx, cz = c.x, c.z
        for i, row in enumerate(rows):
            rx, rz = row[:half], row[half:]
            pairing[i, j] = (int(np.sum(rx & cz)) + int(np.sum(rz & cx))) % 2
    null = gf2_nullspace(pairing.T) if m else np.eye(r, dtype=np.uint8)
    gens = []
    for vec in null:
        acc = PauliOperator.identity(span.n)
        for i in np.flatnonzero(vec):
            acc = acc.multiply(ops[i])
        gens.append(acc)
    return PauliSpan(gens, n=span.n)


# ----- real linear combinations of strings --------------------------------


class PauliSum:
    """Real or complex combination of Pauli strings, terms kept phase-free.

    Each stored term is (coefficient, string with phase_power 0); the string
    phase is folded into the coefficient so identical supports combine.
    """

    def __init__(self, terms, n=None):
        collected = {}
        order = []
        for coeff, op in terms:
            if n is None:
                n = op.n
            if op.n != n:
                raise DimensionMismatchError("sum terms disagree on qubit count")
            c = complex(coeff) * op.phase
            key = op.support_key()
            if key not in collected:
                collected[key] = [c, PauliOperator(n, op.x, op.z, 0)]
                order.append(key)
            else:
                collected[key][0] += c
        if n is None:
            raise ValueError("empty sum needs terms")
        self.n = n
        self.terms = [
            (collected[k][0], collected[k][1])
            for k in order
            if collected[k][0] != 0
        ]

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        for coeff, op in self.terms:
            herm = op.is_hermitian()
            if herm and abs(coeff.imag) > tol:
                return False
            if not herm and abs(coeff.real) > tol:
                return False
        return True

    def multiply(self, other: "PauliSum") -> "PauliSum":
        terms = []
        for ca, a in self.terms:
            for cb, b in other.terms:
                terms.append((ca * cb, a.multiply(b)))
        return PauliSum(terms, n=self.n)

    def square(self) -> "PauliSum":
        return self.multiply(self)

    def scale(self, factor) -> "PauliSum":
        return PauliSum([(factor * c, op) for c, op in self.terms], n=self.n)

    def coefficient_bound(self) -> float:
        return float(sum(abs(c) for c, _ in self.terms))

    def dense(self) -> np.ndarray:
        out = None
        for c, op in self.terms:
            mat = c * op.dense()
            out = mat if out is None else out + mat
        if out is None:
            dim = 1 << self.n
            out = np.zeros((dim, dim), dtype=np.complex128)
        return out

    def apply(self, psi: np.ndarray) -> np.ndarray:
        out = np.zeros_like(psi, dtype=np.complex128)
        for c, op in self.terms:
            out += c * op.apply(psi)
        return out
