"""Local block-inverse assembly.

The inverse of the maximum-determinant completion is the sum of the
inverses of the clique blocks minus the inverses of the separator blocks,
each embedded at its global index set.  Everything here works from the
partial matrix alone; the completed matrix is never formed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from . import matcore
from .chordal import CliqueTree

if TYPE_CHECKING:
    from .completion import PartialMatrix


class SingularBlockError(Exception):
    """A clique or separator block of the partial matrix is singular."""

    def __init__(self, kind: str, index: int, nodes: tuple[int, ...]):
        super().__init__(f"{kind} block {index} on nodes {list(nodes)} is singular")
        self.kind = kind
        self.index = index
        self.nodes = nodes


class NotUnitTriangularError(Exception):
    """Input is not unit upper triangular on its pattern."""


@dataclass(frozen=True)
class BlockTerm:
    indices: tuple[int, ...]
    sign: int
    block: np.ndarray


@dataclass(frozen=True)
class BlockAssembly:
    """Signed blocks to be embedded and summed into an n-by-n matrix.

    Signs are +1 for clique terms and -1 for separator (overlap) terms.
    """

    n: int
    terms: tuple[BlockTerm, ...]


def assemble(ba: BlockAssembly) -> np.ndarray:
    """Entrywise sum of the signed embedded blocks.

    Positions no term touches stay exactly 0.0.  Terms are added in order,
    so results are bit-for-bit reproducible.
    """
    out = np.zeros((ba.n, ba.n))
    for t in ba.terms:
        idx = list(t.indices)
        if any(i < 0 or i >= ba.n for i in idx):
            raise IndexError(f"block index set {idx} out of range for n={ba.n}")
        d = len(idx)
        if t.block.shape != (d, d):
            raise ValueError(f"block shape {t.block.shape} does not match index set size {d}")
        out[np.ix_(idx, idx)] += t.sign * t.block
    return out


def inverse_assembly(m0: "PartialMatrix", ct: CliqueTree) -> BlockAssembly:
    """Invert every clique and separator block of the partial matrix.

    Raises SingularBlockError naming the offending block.  Term order is
    blocks of the clique tree: cliques first, then separators.
    """
    if ct.n != m0.n:
        raise ValueError("clique tree and partial matrix sizes differ")
    terms = []
    for k, nodes in enumerate(ct.cliques):
        try:
            inv = matcore.invert(m0.block(nodes))
        except matcore.SingularMatrixError as exc:
            raise SingularBlockError("clique", k, nodes) from exc
        terms.append(BlockTerm(indices=nodes, sign=+1, block=inv))
    for k, nodes in enumerate(ct.separators):
        try:
            inv = matcore.invert(m0.block(nodes))
        except matcore.SingularMatrixError as exc:
            raise SingularBlockError("separator", k, nodes) from exc
        terms.append(BlockTerm(indices=nodes, sign=-1, block=inv))
    return BlockAssembly(n=m0.n, terms=tuple(terms))


def local_inverse(m0: "PartialMatrix", ct: CliqueTree) -> np.ndarray:
    """Inverse of the completed matrix, assembled from the partial one.

    Equals invert(complete_recursive(m0, ct).matrix) to tolerance, but is
    built purely from clique and separator blocks of m0, so every
    off-pattern position of the result is exactly zero.
    """
    return assemble(inverse_assembly(m0, ct))


def local_inverse_triangular(u0: "PartialMatrix", ct: CliqueTree) -> np.ndarray:
    """Specialization of local_inverse to unit upper triangular input.

    u0 must have unit diagonal and zero strictly-lower entries on its
    pattern (NotUnitTriangularError otherwise).  For a three-node chain with
    values u, v above the diagonal this returns
    [[1, -u, 0], [0, 1, -v], [0, 0, 1]].
    """
    if not np.all(u0.diag == 1.0):
        raise NotUnitTriangularError("diagonal entries must all be 1")
    for (i, j), value in u0.offdiag.items():
        if i > j and value != 0.0:
            raise NotUnitTriangularError(f"entry ({i},{j}) below the diagonal is {value!r}")
    return local_inverse(u0, ct)
