"""SDPA sparse format (``.dat-s``) writer and reader.

SDPA states its primal as ``min c'x s.t. sum_i F_i x_i - F_0 >= 0`` and the dual
as ``max <F_0, Y> s.t. <F_i, Y> = c_i, Y >= 0``. An :class:`SdpProblem` maps onto
the SDPA dual with ``Y = X``, ``F_i = A_i``, ``c = b`` and ``F_0 = -C``.
Diagonal blocks are written with negative sizes.
"""
from __future__ import annotations

import re

import numpy as np
import scipy.sparse as sp

from ..errors import ExportError
from .problem import DIAGONAL, PSD, Block, SdpProblem

HEADER = '"SDPA sparse format: max <F0,Y> s.t. <Fi,Y> = ci, Y psd'


def _fmt(x: float) -> str:
    return repr(float(x) + 0.0)  # + 0.0 turns -0.0 into 0.0


def export_sdpa(problem: SdpProblem) -> str:
    if problem.n_free:
        raise ExportError(
            f"problem has {problem.n_free} free variables; split them first "
            "(momentcard.sdp.split_free_variables)"
        )
    lines = [HEADER, str(problem.m), str(len(problem.blocks))]
    lines.append(" ".join(str(blk.size if blk.kind == PSD else -blk.size) for blk in problem.blocks))
    lines.append(" ".join(_fmt(v) for v in problem.b))
    for k, blk in enumerate(problem.blocks):
        iu, ju = blk.upper_indices()
        for pos in np.flatnonzero(problem.C[k]):
            lines.append(f"0 {k + 1} {iu[pos] + 1} {ju[pos] + 1} {_fmt(-problem.C[k][pos])}")
    entries = []
    for k, blk in enumerate(problem.blocks):
        iu, ju = blk.upper_indices()
        coo = problem.A[k].tocoo()
        for r, pos, val in zip(coo.row, coo.col, coo.data):
            if val != 0.0:
                entries.append((r + 1, k + 1, iu[pos] + 1, ju[pos] + 1, val))
    entries.sort(key=lambda e: e[:4])
    lines.extend(f"{r} {k} {i} {j} {_fmt(v)}" for r, k, i, j, v in entries)
    return "\n".join(lines) + "\n"


def write_sdpa(problem: SdpProblem, path) -> None:
    with open(path, "w") as fh:
        fh.write(export_sdpa(problem))


_SPLIT = re.compile(r"[\s,{}()]+")


def read_sdpa(text: str) -> SdpProblem:
    """Parse SDPA sparse text into an :class:`SdpProblem` (inverse of :func:`export_sdpa`)."""
    body = [ln for ln in text.splitlines() if ln.strip() and ln.lstrip()[0] not in '"*']
    tokens = [t for t in _SPLIT.split(" ".join(body)) if t]
    m, nb = int(tokens[0]), int(tokens[1])
    sizes = [int(float(t)) for t in tokens[2 : 2 + nb]]
    pos = 2 + nb
    b = np.array([float(t) for t in tokens[pos : pos + m]])
    pos += m
    rest = tokens[pos:]
    if len(rest) % 5:
        raise ValueError("malformed SDPA entry list")
    blocks = [Block(abs(s), PSD if s > 0 else DIAGONAL) for s in sizes]
    trip = {k: ([], [], []) for k in range(nb)}
    C = [np.zeros(blk.n_entries) for blk in blocks]
    for t in range(0, len(rest), 5):
        mat, k, i, j = (int(v) for v in rest[t : t + 4])
        val = float(rest[t + 4])
        blk = blocks[k - 1]
        p = blk.entry_position(i - 1, j - 1)
        if mat == 0:
            C[k - 1][p] -= val
        else:
            rows, cols, vals = trip[k - 1]
            rows.append(mat - 1)
            cols.append(p)
            vals.append(val)
    A = []
    for k, blk in enumerate(blocks):
        rows, cols, vals = trip[k]
        mat = sp.coo_matrix((vals, (rows, cols)), shape=(m, blk.n_entries)).tocsr()
        mat.sum_duplicates()
        A.append(mat)
    return SdpProblem(blocks, A, C, b)


def load_sdpa(path) -> SdpProblem:
    with open(path) as fh:
        return read_sdpa(fh.read())
