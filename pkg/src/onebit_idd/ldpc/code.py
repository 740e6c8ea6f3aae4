"""Regular LDPC code construction and systematic encoding.

Codes are built with progressive edge growth (PEG): variable nodes are
connected one edge at a time to the check node that is farthest in the
current Tanner graph (ties broken toward low check degree, then
randomly), which keeps the girth at 6 or better.  A systematic generator
is derived by GF(2) Gauss-Jordan elimination with column pivoting.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np


class ConstructionError(RuntimeError):
    """PEG construction failed after bounded retries."""


@dataclass(frozen=True)
class LdpcCode:
    """Parity-check structure plus the derived systematic encoder.

    h: binary parity-check matrix (m x n, uint8).
    message_cols / parity_cols: column split realizing the systematic
        form (message bits are copied into message_cols verbatim).
    parity_map: (k x m) GF(2) matrix; parity = message @ parity_map % 2.
    """

    h: np.ndarray
    message_cols: np.ndarray
    parity_cols: np.ndarray
    parity_map: np.ndarray
    seed: int | None = None
    # Dense per-node adjacency, precomputed for the decoder.
    row_cols: np.ndarray = field(init=False, repr=False)
    col_rows: np.ndarray = field(init=False, repr=False)
    col_slot: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        m, n = self.h.shape
        row_deg = self.h.sum(axis=1)
        col_deg = self.h.sum(axis=0)
        dc, dv = int(row_deg.max()), int(col_deg.max())
        if row_deg.min() != dc or col_deg.min() != dv:
            raise ValueError("decoder requires a regular parity-check matrix")
        row_cols = np.zeros((m, dc), dtype=np.int32)
        for r in range(m):
            row_cols[r] = np.flatnonzero(self.h[r])
        col_rows = np.zeros((n, dv), dtype=np.int32)
        col_slot = np.zeros((n, dv), dtype=np.int32)
        for c in range(n):
            rows = np.flatnonzero(self.h[:, c])
            col_rows[c] = rows
            for j, r in enumerate(rows):
                col_slot[c, j] = int(np.flatnonzero(row_cols[r] == c)[0])
        for name, arr in (("row_cols", row_cols), ("col_rows", col_rows),
                          ("col_slot", col_slot)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.h.shape[1]

    @property
    def m(self) -> int:
        return self.h.shape[0]

    @property
    def k(self) -> int:
        return self.n - self.m

    @property
    def generator(self) -> np.ndarray:
        """Dense k x n systematic generator matrix over GF(2)."""
        g = np.zeros((self.k, self.n), dtype=np.uint8)
        g[np.arange(self.k), self.message_cols] = 1
        g[:, self.parity_cols] = self.parity_map
        return g


def _peg_graph(n: int, m: int, dv: int, dc: int,
               rng: np.random.Generator) -> np.ndarray | None:
    """One PEG attempt; returns H or None if a check-degree cap binds."""
    cn_deg = np.zeros(m, dtype=np.int64)
    vn_adj = [[] for _ in range(n)]  # checks per variable
    cn_adj = [[] for _ in range(m)]  # variables per check

    def bfs_unreached(v: int) -> tuple[np.ndarray, list[np.ndarray]]:
        """Check nodes not yet reachable from v, and reached-per-level."""
        seen_c = np.zeros(m, dtype=bool)
        seen_v = np.zeros(n, dtype=bool)
        seen_v[v] = True
        frontier = deque(vn_adj[v])
        for c in vn_adj[v]:
            seen_c[c] = True
        levels = [np.array(vn_adj[v], dtype=np.int64)]
        while frontier:
            nxt = []
            for c in frontier:
                for u in cn_adj[c]:
                    if not seen_v[u]:
                        seen_v[u] = True
                        for c2 in vn_adj[u]:
                            if not seen_c[c2]:
                                seen_c[c2] = True
                                nxt.append(c2)
            if not nxt:
                break
            levels.append(np.array(nxt, dtype=np.int64))
            frontier = deque(nxt)
        return np.flatnonzero(~seen_c), levels

    for v in range(n):
        for e in range(dv):
            if e == 0:
                cand = np.flatnonzero(cn_deg < dc)
            else:
                unreached, levels = bfs_unreached(v)
                cand = unreached[cn_deg[unreached] < dc]
                depth = len(levels) - 1
                while cand.size == 0 and depth >= 0:
                    lvl = levels[depth]
                    cand = lvl[cn_deg[lvl] < dc]
                    depth -= 1
            if cand.size == 0:
                return None
            best = cand[cn_deg[cand] == cn_deg[cand].min()]
            c = int(best[rng.integers(best.size)])
            vn_adj[v].append(c)
            cn_adj[c].append(v)
            cn_deg[c] += 1

    h = np.zeros((m, n), dtype=np.uint8)
    for v, checks in enumerate(vn_adj):
        h[checks, v] = 1
    return h


def _gf2_systematic(h: np.ndarray):
    """Gauss-Jordan over GF(2); returns (pivot_cols, free_cols, reduced)."""
    r = h.astype(np.uint8).copy()
    m, n = r.shape
    pivots = []
    row = 0
    for col in range(n):
        if row == m:
            break
        hits = np.flatnonzero(r[row:, col]) + row
        if hits.size == 0:
            continue
        if hits[0] != row:
            r[[row, hits[0]]] = r[[hits[0], row]]
        others = np.flatnonzero(r[:, col])
        others = others[others != row]
        r[others] ^= r[row]
        pivots.append(col)
        row += 1
    if row < m:
        return None
    pivot_cols = np.array(pivots, dtype=np.int64)
    free_cols = np.setdiff1d(np.arange(n), pivot_cols)
    return pivot_cols, free_cols, r


def has_four_cycle(h: np.ndarray) -> bool:
    """True when two check rows share more than one variable."""
    overlap = (h.astype(np.int64) @ h.T.astype(np.int64))
    np.fill_diagonal(overlap, 0)
    return bool(overlap.max() > 1)


def construct_code(n: int = 512, rate: float = 0.5,
                   seed: int | None = 0, dv: int = 3,
                   max_attempts: int = 10) -> LdpcCode:
    """Build a (dv, dv/rate')-regular PEG code with girth >= 6.

    The default (3, 6) profile at rate 1/2 needs n even.  Construction
    is deterministic for a given seed.
    """
    m = round(n * (1.0 - rate))
    if n <= 0 or m <= 0 or m >= n:
        raise ValueError(f"invalid code size n={n}, rate={rate}")
    if (n * dv) % m:
        raise ValueError("regular profile requires m to divide n*dv")
    dc = n * dv // m
    ss = np.random.SeedSequence(seed)
    for attempt, child in enumerate(ss.spawn(max_attempts)):
        rng = np.random.Generator(np.random.Philox(child))
        h = _peg_graph(n, m, dv, dc, rng)
        if h is None or has_four_cycle(h):
            continue
        sysform = _gf2_systematic(h)
        if sysform is None:  # rank-deficient draw
            continue
        pivot_cols, free_cols, reduced = sysform
        code = LdpcCode(
            h=h,
            message_cols=free_cols,
            parity_cols=pivot_cols,
            parity_map=np.ascontiguousarray(reduced[:, free_cols].T),
            seed=seed,
        )
        assert not np.any(code.generator @ h.T % 2)
        return code
    raise ConstructionError(
        f"PEG failed to produce a girth-6 full-rank code in "
        f"{max_attempts} attempts (n={n}, rate={rate}, seed={seed})"
    )


def encode(bits: np.ndarray, code: LdpcCode) -> np.ndarray:
    """Systematic encoding; accepts (k,) or batched (..., k) messages."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.shape[-1] != code.k:
        raise ValueError(f"message length must be {code.k}")
    out = np.zeros(bits.shape[:-1] + (code.n,), dtype=np.uint8)
    out[..., code.message_cols] = bits
    out[..., code.parity_cols] = (bits @ code.parity_map) % 2
    return out


def save_alist(code_or_h, path) -> None:
    """Write a parity-check matrix in MacKay alist format."""
    h = code_or_h.h if isinstance(code_or_h, LdpcCode) else np.asarray(code_or_h)
    m, n = h.shape
    col_lists = [np.flatnonzero(h[:, c]) + 1 for c in range(n)]
    row_lists = [np.flatnonzero(h[r]) + 1 for r in range(m)]
    dv = max(len(x) for x in col_lists)
    dc = max(len(x) for x in row_lists)
    with open(path, "w") as fh:
        fh.write(f"{n} {m}\n{dv} {dc}\n")
        fh.write(" ".join(str(len(x)) for x in col_lists) + "\n")
        fh.write(" ".join(str(len(x)) for x in row_lists) + "\n")
        for entries, width in ((col_lists, dv), (row_lists, dc)):
            for idx in entries:
                padded = list(idx) + [0] * (width - len(idx))
                fh.write(" ".join(map(str, padded)) + "\n")


def load_alist(path) -> np.ndarray:
    """Read a parity-check matrix from MacKay alist format."""
    with open(path) as fh:
        tokens = fh.read().split()
    it = iter(tokens)
    n, m = int(next(it)), int(next(it))
    dv, dc = int(next(it)), int(next(it))
    col_deg = [int(next(it)) for _ in range(n)]
    [next(it) for _ in range(m)]  # row degrees, implied by the lists
    h = np.zeros((m, n), dtype=np.uint8)
    for c in range(n):
        for _ in range(dv):
            r = int(next(it))
            if r:
                h[r - 1, c] = 1
        if h[:, c].sum() != col_deg[c]:
            raise ValueError(f"alist column {c} degree mismatch")
    return h
