"""Trellis representations of the basic codes.

Two families are supported: feedforward convolutional codes (truncated or
tail-biting) and Cartesian products of the [8,4] extended Hamming code
RM(1,3), whose minimal bit-level trellis is built from a trellis-oriented
generator matrix.

Every trellis is stored as padded edge arrays so the numba kernels in
:mod:`srumcc.basic_code` can walk it without Python objects. A section
consumes at most one information bit; conv sections emit ``n_out`` bits and
RM sections emit one bit.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

TRUNCATED = "truncated"
TAILBITING = "tailbiting"
MODES = (TRUNCATED, TAILBITING)


@dataclass(frozen=True)
class GeneratorPolynomials:
    """Feedforward generator polynomials, octal and MSB-first.

    ``[27]_8 = 0b10111`` is ``D^4 + D^2 + D + 1``: bit ``i`` of the integer is
    the coefficient of ``D^i``.
    """

    taps: tuple[int, ...]

    def __post_init__(self):
        if len(self.taps) == 0:
            raise ValueError("polynomial list is empty")
        if any(t <= 0 for t in self.taps):
            raise ValueError(f"every tap must be nonzero, got {self.taps}")

    @classmethod
    def from_octal(cls, octal) -> "GeneratorPolynomials":
        return cls(tuple(int(str(o), 8) for o in octal))

    @property
    def memory(self) -> int:
        return max(t.bit_length() for t in self.taps) - 1

    @property
    def n_out(self) -> int:
        return len(self.taps)

    def octal(self) -> list[str]:
        return [format(t, "o") for t in self.taps]

    def coefficients(self, j: int) -> list[int]:
        """Coefficients of tap ``j``, index ``i`` holds the ``D^i`` term."""
        t = self.taps[j]
        return [(t >> i) & 1 for i in range(self.memory + 1)]


@dataclass(frozen=True, eq=False)
class Trellis:
    """Time-indexed edge-list trellis.

    Sections are ``t = 0..T-1``. Section ``t`` has ``num_edges[t]`` valid
    edges; edge ``e`` goes ``src[t, e] -> dst[t, e]``, carries information bit
    ``info[t, e]`` when ``info_len[t] == 1`` and emits ``out[t, e, :out_len[t]]``
    starting at codeword position ``out_off[t]``.
    """

    num_states: int
    src: np.ndarray
    dst: np.ndarray
    info: np.ndarray
    info_len: np.ndarray
    out: np.ndarray
    out_len: np.ndarray
    num_edges: np.ndarray
    mode: str = TRUNCATED
    start_state: int = 0
    label: str = ""
    # per-code extras not needed by the kernels
    meta: dict = field(default_factory=dict)

    @property
    def num_sections(self) -> int:
        return int(self.src.shape[0])

    @property
    def k(self) -> int:
        return int(self.info_len.sum())

    @property
    def n(self) -> int:
        return int(self.out_len.sum())

    @property
    def tail_biting(self) -> bool:
        return self.mode == TAILBITING

    @cached_property
    def out_off(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.out_len)[:-1]]).astype(np.int64)

    @cached_property
    def signs(self) -> np.ndarray:
        """BPSK image of the edge labels, zero in the padding."""
        s = 1.0 - 2.0 * self.out.astype(np.float64)
        mask = np.arange(self.out.shape[2])[None, :] < self.out_len[:, None]
        return np.where(mask[:, None, :], s, 0.0)

    @cached_property
    def start_states(self) -> np.ndarray:
        if self.tail_biting:
            return np.arange(self.num_states, dtype=np.int64)
        return np.array([self.start_state], dtype=np.int64)

    @cached_property
    def in_edges(self) -> tuple[np.ndarray, np.ndarray]:
        """``(edges, counts)``: incoming edge indices per ``(t, dst)``."""
        T, S = self.num_sections, self.num_states
        counts = np.zeros((T, S), dtype=np.int64)
        for t in range(T):
            for e in range(self.num_edges[t]):
                counts[t, self.dst[t, e]] += 1
        width = max(1, int(counts.max()))
        edges = np.full((T, S, width), -1, dtype=np.int64)
        fill = np.zeros((T, S), dtype=np.int64)
        for t in range(T):
            for e in range(self.num_edges[t]):
                d = self.dst[t, e]
                edges[t, d, fill[t, d]] = e
                fill[t, d] += 1
        return edges, counts

    @cached_property
    def edge_lookup(self) -> np.ndarray:
        """``edge_lookup[t, s, b]`` is the edge leaving ``s`` with info bit ``b``."""
        T, S = self.num_sections, self.num_states
        table = np.full((T, S, 2), -1, dtype=np.int64)
        for t in range(T):
            for e in range(self.num_edges[t]):
                table[t, self.src[t, e], self.info[t, e]] = e
        return table

    @cached_property
    def _out_mask(self) -> np.ndarray:
        return np.arange(self.out.shape[2])[None, :] < self.out_len[:, None]

    def path_codeword(self, path: np.ndarray) -> np.ndarray:
        """Code bits along a path given as one edge index per section."""
        rows = self.out[np.arange(self.num_sections), path]
        return rows[self._out_mask].astype(np.uint8)

    def path_info(self, path: np.ndarray) -> np.ndarray:
        bits = self.info[np.arange(self.num_sections), path]
        return bits[self.info_len == 1].astype(np.uint8)

    def encode_path(self, u: np.ndarray, start: int | None = None) -> np.ndarray:
        """Walk the trellis with information bits ``u``; returns the edge path.

        Tail-biting trellises start from the circular preload unless ``start`` is given.
        """
        u = np.asarray(u, dtype=np.int64)
        if u.shape != (self.k,):
            raise ValueError(f"expected {self.k} information bits, got {u.shape}")
        if start is None:
            start = tail_biting_start_state(u, self.meta["memory"]) if self.tail_biting else self.start_state
        s = start
        path = np.empty(self.num_sections, dtype=np.int64)
        j = 0
        for t in range(self.num_sections):
            b = 0
            if self.info_len[t]:
                b = int(u[j])
                j += 1
            e = self.edge_lookup[t, s, b]
            if e < 0:
                raise ValueError(f"no edge from state {s} at section {t}")
            path[t] = e
            s = int(self.dst[t, e])
        return path

    def encode(self, u: np.ndarray) -> np.ndarray:
        """Codeword of ``u`` obtained by walking the trellis (tail-biting aware)."""
        return self.path_codeword(self.encode_path(u))

    def path_end_state(self, path: np.ndarray) -> int:
        return int(self.dst[self.num_sections - 1, path[-1]])

    def path_start_state(self, path: np.ndarray) -> int:
        return int(self.src[0, path[0]])


def _register_state(bits_newest_first, m: int) -> int:
    s = 0
    for j, b in enumerate(bits_newest_first[:m]):
        s |= int(b) << j
    return s


def tail_biting_start_state(u, m: int) -> int:
    """Register preload for circular encoding: the last ``m`` bits of ``u``.

    The newest bit sits in the lowest position, so ``u[-1]`` is bit 0.
    """
    u = np.asarray(u)
    if len(u) < m:
        raise ValueError(f"tail-biting needs k >= m ({len(u)} < {m})")
    return _register_state(u[::-1], m)


def _parity(x: int) -> int:
    return bin(x).count("1") & 1


def build_trellis(polys: GeneratorPolynomials, k: int, mode: str = TRUNCATED) -> Trellis:
    if k < 1:
        raise ValueError("k must be >= 1")
    if mode not in MODES:
        raise ValueError(f"unknown trellis mode {mode!r}")
    m = polys.memory
    if mode == TAILBITING and k < m:
        raise ValueError(f"tail-biting needs k >= m ({k} < {m})")
    S = 1 << m
    E = 2 * S
    src = np.empty(E, dtype=np.int64)
    dst = np.empty(E, dtype=np.int64)
    info = np.empty(E, dtype=np.int64)
    out = np.empty((E, polys.n_out), dtype=np.uint8)
    for s in range(S):
        for b in (0, 1):
            e = 2 * s + b
            full = (s << 1) | b
            src[e], dst[e], info[e] = s, full & (S - 1), b
            out[e] = [_parity(full & g) for g in polys.taps]
    tile = lambda a: np.ascontiguousarray(np.broadcast_to(a, (k,) + a.shape))
    label = f"conv:[{','.join(polys.octal())}]o:k={k}" + (":tb" if mode == TAILBITING else "")
    return Trellis(
        num_states=S,
        src=tile(src),
        dst=tile(dst),
        info=tile(info),
        info_len=np.ones(k, dtype=np.int64),
        out=tile(out),
        out_len=np.full(k, polys.n_out, dtype=np.int64),
        num_edges=np.full(k, E, dtype=np.int64),
        mode=mode,
        label=label,
        meta={"memory": m, "taps": polys.taps},
    )


def conv_encode(polys: GeneratorPolynomials, u, mode: str = TRUNCATED) -> np.ndarray:
    """Direct polynomial convolution, independent of the trellis tables."""
    u = np.asarray(u, dtype=np.uint8)
    k, m = len(u), polys.memory
    if k < 1:
        raise ValueError("empty information block")
    if mode == TAILBITING:
        if k < m:
            raise ValueError(f"tail-biting needs k >= m ({k} < {m})")
        ext = np.concatenate([u[k - m:], u]) if m else u
    else:
        ext = np.concatenate([np.zeros(m, dtype=np.uint8), u])
    out = np.empty((k, polys.n_out), dtype=np.uint8)
    for j in range(polys.n_out):
        g = np.array(polys.coefficients(j), dtype=np.int64)
        # output at time t uses ext[t + m - i] * g_i
        full = np.convolve(ext.astype(np.int64), g)[m:m + k]
        out[:, j] = full & 1
    return out.reshape(-1)


# Trellis-oriented generator matrix of RM(1,3) = [8,4,4] extended Hamming.
# Row spans [0,3], [1,6], [2,5], [4,7] give the 1,2,4,8,4,8,4,2,1 profile.
RM84_TOGM = np.array(
    [
        [1, 1, 1, 1, 0, 0, 0, 0],
        [0, 1, 0, 1, 1, 0, 1, 0],
        [0, 0, 1, 1, 1, 1, 0, 0],
        [0, 0, 0, 0, 1, 1, 1, 1],
    ],
    dtype=np.uint8,
)


def _togm_sections(G: np.ndarray):
    """Bit-level minimal trellis sections of a generator matrix in TOGM form.

    The state before bit ``i`` lists the info bits of rows whose span started
    before ``i`` and is still open at ``i``; it is packed in row order.
    """
    k, n = G.shape
    starts = [int(np.flatnonzero(r)[0]) for r in G]
    ends = [int(np.flatnonzero(r)[-1]) for r in G]
    if starts != sorted(starts) or len(set(starts)) != k or len(set(ends)) != k:
        raise ValueError("generator matrix is not trellis oriented")

    def active(i):  # rows alive across the boundary before bit i
        return [j for j in range(k) if starts[j] < i <= ends[j]]

    sections = []
    for i in range(n):
        before, after = active(i), active(i + 1)
        new = [j for j in range(k) if starts[j] == i]
        here = [j for j in range(k) if starts[j] <= i <= ends[j]]
        edges = []
        for s in range(1 << len(before)):
            vals = {j: (s >> p) & 1 for p, j in enumerate(before)}
            for b in range(1 << len(new)):
                vv = dict(vals)
                for p, j in enumerate(new):
                    vv[j] = (b >> p) & 1
                bit = 0
                for j in here:
                    bit ^= vv[j] & int(G[j, i])
                d = sum(vv[j] << p for p, j in enumerate(after))
                edges.append((s, d, b, bit))
        sections.append((len(new), edges))
    return sections


def build_rm_product_trellis(copies: int) -> Trellis:
    """Concatenation of ``copies`` minimal trellises of RM[8,4]."""
    if copies < 1:
        raise ValueError("copies must be >= 1")
    sections = _togm_sections(RM84_TOGM) * copies
    T = len(sections)
    E = max(len(e) for _, e in sections)
    S = max(max(max(s, d) for s, d, _, _ in e) for _, e in sections) + 1
    src = np.zeros((T, E), dtype=np.int64)
    dst = np.zeros((T, E), dtype=np.int64)
    info = np.zeros((T, E), dtype=np.int64)
    out = np.zeros((T, E, 1), dtype=np.uint8)
    num_edges = np.zeros(T, dtype=np.int64)
    info_len = np.zeros(T, dtype=np.int64)
    for t, (nnew, edges) in enumerate(sections):
        info_len[t] = nnew
        num_edges[t] = len(edges)
        for e, (s, d, b, bit) in enumerate(edges):
            src[t, e], dst[t, e], info[t, e], out[t, e, 0] = s, d, b, bit
    return Trellis(
        num_states=S,
        src=src,
        dst=dst,
        info=info,
        info_len=info_len,
        out=out,
        out_len=np.ones(T, dtype=np.int64),
        num_edges=num_edges,
        mode=TRUNCATED,
        label=f"rm84x{copies}",
        meta={"copies": copies, "state_profile": _state_profile(sections)},
    )


def _state_profile(sections) -> list[int]:
    prof = [len({s for s, _, _, _ in e}) for _, e in sections]
    prof.append(len({d for _, d, _, _ in sections[-1][1]}))
    return prof


def rm_product_encode(u, copies: int) -> np.ndarray:
    u = np.asarray(u, dtype=np.int64).reshape(copies, 4)
    return (u @ RM84_TOGM.astype(np.int64) % 2).astype(np.uint8).reshape(-1)


# --- code specifications --------------------------------------------------

_CONV_RE = re.compile(r"^conv:\[([0-7,\s]+)\]o?:k=(\d+)(?::(tb|tr|truncated|tailbiting))?$")
_RM_RE = re.compile(r"^rm84x(\d+)$")


@dataclass(frozen=True)
class CodeSpec:
    """A basic code: conv taps + length + mode, or an RM[8,4] product.

    Text grammar::

        conv:[27,31]o:k=32:tb     tail-biting
        conv:[27,31]o:k=32        truncated (also ``:tr``)
        rm84x8                    RM[8,4]^8
    """

    kind: str
    k: int
    n: int
    taps: tuple[int, ...] = ()
    mode: str = TRUNCATED
    copies: int = 0

    @classmethod
    def parse(cls, text: str) -> "CodeSpec":
        text = text.strip().replace(" ", "")
        m = _CONV_RE.match(text)
        if m:
            polys = GeneratorPolynomials.from_octal(p for p in m.group(1).split(",") if p)
            k = int(m.group(2))
            mode = TAILBITING if m.group(3) in ("tb", "tailbiting") else TRUNCATED
            return cls("conv", k, k * polys.n_out, polys.taps, mode)
        m = _RM_RE.match(text)
        if m:
            c = int(m.group(1))
            if c < 1:
                raise ValueError("rm84 copies must be >= 1")
            return cls("rm", 4 * c, 8 * c, copies=c)
        raise ValueError(f"cannot parse code spec {text!r}")

    @property
    def polys(self) -> GeneratorPolynomials:
        return GeneratorPolynomials(self.taps)

    def __str__(self) -> str:
        if self.kind == "rm":
            return f"rm84x{self.copies}"
        tail = ":tb" if self.mode == TAILBITING else ""
        return f"conv:[{','.join(self.polys.octal())}]o:k={self.k}{tail}"

    @cached_property
    def trellis(self) -> Trellis:
        if self.kind == "rm":
            return build_rm_product_trellis(self.copies)
        return build_trellis(self.polys, self.k, self.mode)

    def encode(self, u) -> np.ndarray:
        if len(u) != self.k:
            raise ValueError(f"expected {self.k} information bits, got {len(u)}")
        if self.kind == "rm":
            return rm_product_encode(u, self.copies)
        return conv_encode(self.polys, u, self.mode)

    def generator_matrix(self) -> np.ndarray:
        """Materialize S by encoding unit vectors (linear codes only)."""
        eye = np.eye(self.k, dtype=np.uint8)
        return np.array([self.encode(row) for row in eye], dtype=np.uint8)
