"""Coupled protographs with sub-block locality.

A protograph is stored as an integer bi-adjacency matrix (rows are check
nodes, columns are variable nodes, entries are edge multiplicities). Coupled
protographs add a partition of the columns into sub-blocks and remember
where every check row came from in the coupled stack.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class ConstructionError(ValueError):
    """Raised when construction parameters violate a required bound."""


class ProtographFormatError(ValueError):
    """Raised when a protograph or partition text file is malformed."""


@dataclass(frozen=True)
class Protograph:
    """Bi-adjacency matrix of a protograph, shape ``(num_cns, num_vns)``."""

    adjacency: np.ndarray

    def __post_init__(self) -> None:
        a = np.asarray(self.adjacency)
        if a.ndim != 2:
            raise ConstructionError("adjacency must be a 2-D matrix")
        if a.size and (np.any(a < 0) or np.any(a != np.round(a))):
            raise ConstructionError("adjacency entries must be non-negative integers")
        a = np.array(a, dtype=np.int64)
        a.setflags(write=False)
        object.__setattr__(self, "adjacency", a)

    @property
    def num_cns(self) -> int:
        return int(self.adjacency.shape[0])

    @property
    def num_vns(self) -> int:
        return int(self.adjacency.shape[1])

    @property
    def vn_degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=0)

    @property
    def cn_degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)


@dataclass(frozen=True)
class PartitionMatrix:
    """Index matrix ``P`` with entries in ``{0..T}``.

    ``B_tau`` has a one wherever ``P == tau``. Rows that hold a nonzero entry
    produce coupling checks and must come first; ``t`` counts them.
    """

    entries: np.ndarray
    memory: int
    allow_extreme: bool = False

    def __post_init__(self) -> None:
        p = np.array(self.entries, dtype=np.int64)
        if p.ndim != 2:
            raise ConstructionError("partition matrix must be 2-D")
        if self.memory < 1:
            raise ConstructionError("memory T must be at least 1")
        if p.min(initial=0) < 0 or p.max(initial=0) > self.memory:
            raise ConstructionError(f"partition entries must lie in 0..{self.memory}")
        nz = np.flatnonzero(p.any(axis=1))
        t = nz.size
        if t and nz[-1] != t - 1:
            raise ConstructionError("locality violated: nonzero partition rows must precede all-zero rows")
        l = p.shape[0]
        if not self.allow_extreme and t > l - 2:
            raise ConstructionError(f"locality violated: t={t} coupling rows exceeds l-2={l - 2}")
        p.setflags(write=False)
        object.__setattr__(self, "entries", p)

    @property
    def l(self) -> int:
        return int(self.entries.shape[0])

    @property
    def r(self) -> int:
        return int(self.entries.shape[1])

    @property
    def t(self) -> int:
        return int(self.entries.any(axis=1).sum())

    def blocks(self) -> list[np.ndarray]:
        """Return ``[B_0, ..., B_T]``."""
        return [(self.entries == tau).astype(np.int64) for tau in range(self.memory + 1)]


@dataclass(frozen=True)
class CoupledParams:
    l: int
    r: int
    t: int
    T: int
    M: int


@dataclass(frozen=True)
class CoupledProtograph:
    """A protograph whose VNs are split into ``M`` chained sub-blocks.

    ``cn_origin[c]`` is ``(block_row, row)``: the 0-based position of check
    ``c`` in the coupled stack before all-zero rows were dropped. It is
    ``(-1, -1)`` for graphs that were parsed from a file.
    """

    graph: Protograph
    sub_blocks: tuple[np.ndarray, ...]
    params: CoupledParams | None = None
    partition: PartitionMatrix | None = None
    cn_origin: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        blocks = tuple(np.asarray(b, dtype=np.int64) for b in self.sub_blocks)
        allv = np.concatenate(blocks) if blocks else np.zeros(0, dtype=np.int64)
        if np.unique(allv).size != allv.size or allv.size != self.graph.num_vns:
            raise ConstructionError("sub-blocks must partition the variable nodes")
        object.__setattr__(self, "sub_blocks", blocks)
        if self.cn_origin is None:
            origin = -np.ones((self.graph.num_cns, 2), dtype=np.int64)
        else:
            origin = np.asarray(self.cn_origin, dtype=np.int64)
        origin.setflags(write=False)
        object.__setattr__(self, "cn_origin", origin)
        sb = np.empty(self.graph.num_vns, dtype=np.int64)
        for m, b in enumerate(blocks):
            sb[b] = m
        sb.setflags(write=False)
        object.__setattr__(self, "_vn_sb", sb)

    @property
    def M(self) -> int:
        return len(self.sub_blocks)

    @property
    def adjacency(self) -> np.ndarray:
        return self.graph.adjacency

    @property
    def vn_sub_block(self) -> np.ndarray:
        """0-based sub-block index of every VN."""
        return self._vn_sb  # type: ignore[attr-defined]

    def cn_members(self, c: int) -> frozenset[int]:
        """0-based sub-blocks touched by check ``c``."""
        cols = np.flatnonzero(self.adjacency[c])
        return frozenset(int(m) for m in np.unique(self.vn_sub_block[cols]))

    def all_cn_members(self) -> tuple[frozenset[int], ...]:
        """Sub-blocks touched by every check (cached)."""
        cache = self.__dict__.setdefault("_cache", {})
        if "members" not in cache:
            cache["members"] = tuple(self.cn_members(c) for c in range(self.graph.num_cns))
        return cache["members"]

    def classification(self) -> "CheckClassification":
        """Cached :func:`classify_checks` result."""
        cache = self.__dict__.setdefault("_cache", {})
        if "classes" not in cache:
            cache["classes"] = classify_checks(self)
        return cache["classes"]

    def find_cn(self, block_row: int, row: int) -> int | None:
        """Index of the check created at ``(block_row, row)``, if it survived."""
        hit = np.flatnonzero((self.cn_origin[:, 0] == block_row) & (self.cn_origin[:, 1] == row))
        return int(hit[0]) if hit.size else None


@dataclass(frozen=True)
class CheckClassification:
    """Local checks per sub-block (0-based keys) and the coupling checks."""

    local_checks: dict[int, np.ndarray]
    coupling_checks: np.ndarray


def couple_blocks(blocks: list[np.ndarray], M: int) -> tuple[np.ndarray, np.ndarray]:
    """Place ``B_0..B_T`` diagonally over ``M`` sub-blocks.

    Block row ``n`` holds ``B_tau`` in the columns of sub-block ``n - tau``.
    All-zero rows are dropped top to bottom. Returns the matrix and the
    ``(block_row, row)`` origin of each surviving row.
    """
    if M < 1:
        raise ConstructionError("M must be positive")
    shapes = {b.shape for b in blocks}
    if len(shapes) != 1:
        raise ConstructionError("all component matrices must share one shape")
    l, r = blocks[0].shape
    T = len(blocks) - 1
    H = np.zeros(((M + T) * l, M * r), dtype=np.int64)
    for n in range(M + T):
        for tau, B in enumerate(blocks):
            m = n - tau
            if 0 <= m < M:
                H[n * l:(n + 1) * l, m * r:(m + 1) * r] += B
    keep = H.any(axis=1)
    origin = np.stack(np.divmod(np.arange(H.shape[0]), l), axis=1)
    return H[keep], origin[keep]


def _chain_sub_blocks(M: int, r: int) -> tuple[np.ndarray, ...]:
    return tuple(np.arange(m * r, (m + 1) * r) for m in range(M))


def scldpcl_partition(l: int, r: int, t: int, allow_extreme: bool = False) -> PartitionMatrix:
    """Partition matrix (memory 1) equivalent to the staircase construction."""
    w = r // (t + 1)
    P = np.zeros((l, r), dtype=np.int64)
    for i in range(1, t + 1):
        P[i - 1, i * w:] = 1
    return PartitionMatrix(P, 1, allow_extreme=allow_extreme)


def _check_generalized(l: int, r: int, t: int, T: int) -> int:
    if not 3 <= l < r:
        raise ConstructionError(f"need 3 <= l < r, got l={l}, r={r}")
    if not 1 <= t <= l - 2:
        raise ConstructionError(f"need 1 <= t <= {l - 2}, got t={t}")
    if T < 1:
        raise ConstructionError(f"need T >= 1, got T={T}")
    return r // (t + 1)


def make_memory_partition(l: int, r: int, t: int) -> PartitionMatrix:
    """Coupling row ``i`` links each sub-block to the one ``i`` positions later.

    Memory equals ``t``; every coupling check joins exactly two sub-blocks.
    """
    w = _check_generalized(l, r, t, t)
    if l < 4 or t < 2:
        raise ConstructionError("need l >= 4 and t >= 2")
    P = np.zeros((l, r), dtype=np.int64)
    for i in range(1, t + 1):
        P[i - 1, i * w:] = i
    return PartitionMatrix(P, t)


def make_hyper_partition(l: int, r: int, t: int, T: int) -> PartitionMatrix:
    """Coupling rows split their tail into ``T`` runs with values ``1..T``.

    Each coupling check then joins ``T + 1`` consecutive sub-blocks. Columns
    left over after the ``T`` runs of length ``floor((r - i*w)/T)`` stay 0.
    """
    w = _check_generalized(l, r, t, T)
    P = np.zeros((l, r), dtype=np.int64)
    for i in range(1, t + 1):
        q = (r - i * w) // T
        if q == 0:
            raise ConstructionError(f"row {i} has fewer than T={T} free columns")
        for tau in range(1, T + 1):
            P[i - 1, i * w + (tau - 1) * q: i * w + tau * q] = tau
    return PartitionMatrix(P, T)


def build_scldpcl(l: int, r: int, t: int, M: int, allow_extreme: bool = False) -> CoupledProtograph:
    """Staircase-coupled ``(l, r, t)`` protograph over ``M`` sub-blocks.

    ``A_1`` row ``i`` has ones in its first ``i * floor(r/(t+1))`` columns,
    ``A_2`` is all ones, ``B_0 = (A_1; A_2)`` and ``B_1 = 1 - B_0``.

    Parameters
    ----------
    allow_extreme
        Also accept ``t = 0`` (uncoupled) and ``t = l - 1`` (no locality).
        These are outside the locality regime but are useful reference
        points.
    """
    if not 3 <= l < r:
        raise ConstructionError(f"need 3 <= l < r, got l={l}, r={r}")
    lo, hi = (0, l - 1) if allow_extreme else (1, l - 2)
    if not lo <= t <= hi:
        raise ConstructionError(f"need {lo} <= t <= {hi}, got t={t}")
    if M < 2:
        raise ConstructionError(f"need M >= 2, got M={M}")
    P = scldpcl_partition(l, r, t, allow_extreme=True)
    H, origin = couple_blocks(P.blocks(), M)
    return CoupledProtograph(
        Protograph(H), _chain_sub_blocks(M, r), CoupledParams(l, r, t, 1, M), P, origin
    )


def build_generalized(P: PartitionMatrix, M: int) -> CoupledProtograph:
    """Couple the components encoded by a partition matrix over ``M`` sub-blocks."""
    if M < P.memory + 1:
        raise ConstructionError(f"need M >= T+1 = {P.memory + 1}, got M={M}")
    H, origin = couple_blocks(P.blocks(), M)
    params = CoupledParams(P.l, P.r, P.t, P.memory, M)
    return CoupledProtograph(Protograph(H), _chain_sub_blocks(M, P.r), params, P, origin)


def build_from_blocks(B0: np.ndarray, B1: np.ndarray, M: int) -> CoupledProtograph:
    """Memory-one coupling of an arbitrary split ``B0 + B1`` (no locality checks)."""
    B0 = np.asarray(B0, dtype=np.int64)
    B1 = np.asarray(B1, dtype=np.int64)
    H, origin = couple_blocks([B0, B1], M)
    return CoupledProtograph(Protograph(H), _chain_sub_blocks(M, B0.shape[1]), None, None, origin)


def make_grid_partition(l: int, r: int, T: int) -> PartitionMatrix:
    """Two-coupling-row partition giving a two-dimensional sub-block grid.

    Row 1 links each sub-block to its successor (memory one) through the
    middle half of the columns; row 2 links it to the sub-block ``T`` away
    through the right half.
    """
    if l < 4:
        raise ConstructionError(f"need l >= 4, got l={l}")
    if r % 4:
        raise ConstructionError(f"r must be divisible by 4, got r={r}")
    if r // 4 < l / 4:
        raise ConstructionError("need r/4 >= l/4")
    if T <= 2:
        raise ConstructionError(f"need T > 2, got T={T}")
    P = np.zeros((l, r), dtype=np.int64)
    P[0, r // 4: 3 * r // 4] = 1
    P[1, r // 2:] = T
    return PartitionMatrix(P, T)


def classify_checks(G: CoupledProtograph) -> CheckClassification:
    """Split checks into per-sub-block local checks and coupling checks."""
    local: dict[int, list[int]] = {m: [] for m in range(G.M)}
    coupling: list[int] = []
    for c, members in enumerate(G.all_cn_members()):
        if len(members) == 1:
            local[next(iter(members))].append(c)
        else:
            coupling.append(c)
    return CheckClassification(
        {m: np.array(v, dtype=np.int64) for m, v in local.items()},
        np.array(coupling, dtype=np.int64),
    )


def local_protograph(G: CoupledProtograph, m: int) -> Protograph:
    """Induced graph of sub-block ``m`` (0-based) and its local checks."""
    if not 0 <= m < G.M:
        raise IndexError(f"sub-block {m} out of range 0..{G.M - 1}")
    rows = G.classification().local_checks[m]
    return Protograph(G.adjacency[np.ix_(rows, G.sub_blocks[m])])


def design_rate(G: CoupledProtograph | Protograph) -> float:
    """``1 - num_cns / num_vns``."""
    g = G.graph if isinstance(G, CoupledProtograph) else G
    return 1.0 - g.num_cns / g.num_vns


def has_no_two_full_rows(B0: np.ndarray, B1: np.ndarray) -> bool:
    """True when at most one row of ``(B0; B1)`` is all ones."""
    B0 = np.asarray(B0)
    B1 = np.asarray(B1)
    if B0.shape != B1.shape:
        raise ConstructionError("B0 and B1 must have equal shapes")
    if not (np.isin(B0, (0, 1)).all() and np.isin(B1, (0, 1)).all()) or not (B0 + B1 == 1).all():
        raise ConstructionError("B0 and B1 must be binary and sum to the all-ones matrix")
    stack = np.vstack([B0, B1])
    return int(stack.all(axis=1).sum()) <= 1


def cutting_vector_protograph(p: int, width: int = 1) -> Protograph:
    """Lower-triangular protograph ``(c | A)`` with ``p`` rows.

    Column 0 is the all-ones cutting column and ``A`` is lower-triangular
    with ones on and below the diagonal, each entry repeated ``width``
    times. Such graphs have zero BP threshold.
    """
    if p < 1 or width < 1:
        raise ConstructionError("p and width must be positive")
    A = np.tril(np.ones((p, p), dtype=np.int64))
    A = np.repeat(A, width, axis=1)
    return Protograph(np.hstack([np.ones((p, 1), dtype=np.int64), A]))


# ----------------------------------------------------------------------------
# text formats


def format_protograph(G: CoupledProtograph | Protograph) -> str:
    """Serialize: ``CNs VNs M`` header, matrix rows, then sub-block ranges."""
    if isinstance(G, Protograph):
        G = CoupledProtograph(G, (np.arange(G.num_vns),))
    H = G.adjacency
    lines = [f"{H.shape[0]} {H.shape[1]} {G.M}"]
    lines += [" ".join(str(int(v)) for v in row) for row in H]
    ranges = []
    for b in G.sub_blocks:
        if b.size and np.array_equal(b, np.arange(b[0], b[0] + b.size)):
            ranges.append(f"{b[0]}:{b[0] + b.size}")
        else:
            ranges.append(",".join(str(int(v)) for v in b))
    lines.append(" ".join(ranges))
    return "\n".join(lines) + "\n"


def _ints(line: str, lineno: int) -> list[int]:
    try:
        return [int(tok) for tok in line.split()]
    except ValueError as exc:
        raise ProtographFormatError(f"line {lineno}: non-integer token") from exc


def parse_protograph(text: str) -> CoupledProtograph:
    """Inverse of :func:`format_protograph`."""
    lines = text.splitlines()
    if not lines:
        raise ProtographFormatError("empty protograph file")
    head = _ints(lines[0], 1)
    if len(head) != 3:
        raise ProtographFormatError("header must be 'CNs VNs M'")
    n_cn, n_vn, M = head
    if len(lines) != n_cn + 2:
        raise ProtographFormatError(f"expected {n_cn + 2} lines, found {len(lines)}")
    rows = []
    for k in range(n_cn):
        row = _ints(lines[1 + k], 2 + k)
        if len(row) != n_vn:
            raise ProtographFormatError(f"line {2 + k}: ragged row of length {len(row)}, expected {n_vn}")
        rows.append(row)
    H = np.array(rows, dtype=np.int64).reshape(n_cn, n_vn)
    specs = lines[-1].split()
    if len(specs) != M:
        raise ProtographFormatError(f"expected {M} sub-block ranges, found {len(specs)}")
    blocks = []
    for spec in specs:
        try:
            if ":" in spec:
                a, b = spec.split(":")
                blocks.append(np.arange(int(a), int(b)))
            else:
                blocks.append(np.array([int(v) for v in spec.split(",")]))
        except ValueError as exc:
            raise ProtographFormatError(f"bad sub-block range {spec!r}") from exc
    try:
        return CoupledProtograph(Protograph(H), tuple(blocks))
    except ConstructionError as exc:
        raise ProtographFormatError(str(exc)) from exc


def format_partition(P: PartitionMatrix) -> str:
    lines = [f"{P.l} {P.r} {P.memory}"]
    lines += [" ".join(str(int(v)) for v in row) for row in P.entries]
    return "\n".join(lines) + "\n"


def parse_partition(text: str, allow_extreme: bool = False) -> PartitionMatrix:
    lines = text.splitlines()
    if not lines:
        raise ProtographFormatError("empty partition file")
    head = _ints(lines[0], 1)
    if len(head) != 3:
        raise ProtographFormatError("header must be 'l r T'")
    l, r, T = head
    if len(lines) != l + 1:
        raise ProtographFormatError(f"expected {l + 1} lines, found {len(lines)}")
    rows = []
    for k in range(l):
        row = _ints(lines[1 + k], 2 + k)
        if len(row) != r:
            raise ProtographFormatError(f"line {2 + k}: ragged row of length {len(row)}, expected {r}")
        rows.append(row)
    return PartitionMatrix(np.array(rows, dtype=np.int64), T, allow_extreme=allow_extreme)


def load_protograph(path: str | Path) -> CoupledProtograph:
    return parse_protograph(Path(path).read_text(encoding="utf-8"))


def save_protograph(G: CoupledProtograph | Protograph, path: str | Path) -> None:
    Path(path).write_text(format_protograph(G), encoding="utf-8")
