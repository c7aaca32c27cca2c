"""Graph-ordered block-sparse LDU factorization.

A linear system is described by a :class:`BlockGraph`: every node owns a
square diagonal block, every undirected edge owns the two off-diagonal
blocks coupling its endpoints. Nodes are eliminated in depth-first
post-order (leaves first). On an acyclic graph no fill-in is created and
both factorization and back-substitution touch each edge a constant number
of times; cycles create fill-in only among the nodes of the cycle.

The work is split in two phases. :func:`plan_elimination` runs the symbolic
elimination once (ordering, fill-in edges, block storage layout), and the
numeric kernels reuse that plan for every factorization.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np
from numba import njit


class SingularBlockError(ArithmeticError):
    """A diagonal block was singular at the time it was eliminated."""

    def __init__(self, node: int):
        super().__init__(f"singular pivot block at node {node}")
        self.node = node


class BlockGraph:
    """Undirected graph whose nodes carry square block dimensions."""

    def __init__(self, dims: Iterable[int] = (), edges: Iterable[tuple[int, int]] = ()):
        self.dims: list[int] = []
        self.adjacency: list[list[int]] = []
        self.edges: list[tuple[int, int]] = []
        self._edge_set: set[tuple[int, int]] = set()
        for d in dims:
            self.add_node(d)
        for i, j in edges:
            self.add_edge(i, j)

    @property
    def n_nodes(self) -> int:
        return len(self.dims)

    def add_node(self, dim: int) -> int:
        if dim <= 0:
            raise ValueError(f"node dimension must be positive, got {dim}")
        self.dims.append(int(dim))
        self.adjacency.append([])
        return len(self.dims) - 1

    def add_edge(self, i: int, j: int) -> None:
        n = self.n_nodes
        if not (0 <= i < n and 0 <= j < n):
            raise IndexError(f"edge ({i}, {j}) references a missing node")
        if i == j:
            raise ValueError("self-loops are not allowed")
        key = (min(i, j), max(i, j))
        if key in self._edge_set:
            raise ValueError(f"duplicate edge {key}")
        self._edge_set.add(key)
        self.edges.append((i, j))
        self.adjacency[i].append(j)
        self.adjacency[j].append(i)

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self._edge_set

    def total_dim(self) -> int:
        return sum(self.dims)

    def offsets(self) -> np.ndarray:
        """Start index of each node's slice in the stacked vector."""
        return np.concatenate(([0], np.cumsum(self.dims))).astype(np.int64)


def dfs_order(graph: BlockGraph, roots: Sequence[int] = ()) -> list[int]:
    """Depth-first post-order elimination ordering.

    Each root is searched in turn; nodes not reached from any root start new
    searches in index order. Neighbours are visited in adjacency-list order,
    so the result is deterministic for a given construction sequence. Roots
    come last within their component.
    """
    n = graph.n_nodes
    visited = [False] * n
    order: list[int] = []
    for root in list(roots) + list(range(n)):
        if visited[root]:
            continue
        visited[root] = True
        stack = [(root, iter(graph.adjacency[root]))]
        while stack:
            node, it = stack[-1]
            for nb in it:
                if not visited[nb]:
                    visited[nb] = True
                    stack.append((nb, iter(graph.adjacency[nb])))
                    break
            else:
                stack.pop()
                order.append(node)
    return order


@dataclass
class EliminationPlan:
    """Symbolic factorization: ordering, fill-in, and flat block storage layout."""

    graph: BlockGraph
    order: np.ndarray
    fill_ins: list[tuple[int, int]]
    block_index: dict[tuple[int, int], int]
    blk_off: np.ndarray
    diag_blk: np.ndarray
    later_ptr: np.ndarray
    later_idx: np.ndarray
    blk_ik: np.ndarray
    blk_ki: np.ndarray
    pair_ptr: np.ndarray
    pair_blk: np.ndarray
    piv_off: np.ndarray
    var_off: np.ndarray
    dims: np.ndarray
    n_values: int
    operation_count: int
    kernel_args: tuple = field(repr=False, default=())

    @property
    def n_vars(self) -> int:
        return int(self.var_off[-1])

    @property
    def fill_in_count(self) -> int:
        return len(self.fill_ins)


def plan_elimination(graph: BlockGraph, ordering: Sequence[int] | None = None) -> EliminationPlan:
    n = graph.n_nodes
    order = list(dfs_order(graph) if ordering is None else ordering)
    if sorted(order) != list(range(n)):
        raise ValueError("ordering must be a permutation of all nodes")
    pos = np.empty(n, dtype=np.int64)
    pos[order] = np.arange(n)

    adj = [set(a) for a in graph.adjacency]
    fill_ins: list[tuple[int, int]] = []
    later_lists: list[list[int]] = []
    for k in order:
        later = sorted((j for j in adj[k] if pos[j] > pos[k]), key=lambda j: pos[j])
        for a, b in combinations(later, 2):
            if b not in adj[a]:
                adj[a].add(b)
                adj[b].add(a)
                fill_ins.append((a, b))
        later_lists.append(later)

    dims = np.array(graph.dims, dtype=np.int64)
    block_index: dict[tuple[int, int], int] = {}
    sizes: list[int] = []

    def alloc(i: int, j: int) -> None:
        block_index[(i, j)] = len(sizes)
        sizes.append(int(dims[i] * dims[j]))

    for i in range(n):
        alloc(i, i)
    for i, j in list(graph.edges) + fill_ins:
        alloc(i, j)
        alloc(j, i)
    blk_off = np.concatenate(([0], np.cumsum(sizes))).astype(np.int64)

    later_ptr = [0]
    later_idx: list[int] = []
    blk_ik: list[int] = []
    blk_ki: list[int] = []
    pair_ptr = [0]
    pair_blk: list[int] = []
    ops = 0
    for k, later in zip(order, later_lists):
        for i in later:
            later_idx.append(i)
            blk_ik.append(block_index[(i, k)])
            blk_ki.append(block_index[(k, i)])
        for i in later:
            for j in later:
                pair_blk.append(block_index[(i, j)])
        later_ptr.append(len(later_idx))
        pair_ptr.append(len(pair_blk))
        m = len(later)
        # factor: pivot + m block solves + m^2 updates; substitution: pivot solve + 2m updates
        ops += (1 + m + m * m) + (1 + 2 * m)

    piv_off = np.concatenate(([0], np.cumsum(dims))).astype(np.int64)
    arr = lambda a: np.asarray(a, dtype=np.int64)  # noqa: E731
    plan = EliminationPlan(
        graph=graph,
        order=arr(order),
        fill_ins=fill_ins,
        block_index=block_index,
        blk_off=blk_off,
        diag_blk=arr([block_index[(i, i)] for i in range(n)]),
        later_ptr=arr(later_ptr),
        later_idx=arr(later_idx),
        blk_ik=arr(blk_ik),
        blk_ki=arr(blk_ki),
        pair_ptr=arr(pair_ptr),
        pair_blk=arr(pair_blk),
        piv_off=piv_off,
        var_off=piv_off.copy(),
        dims=dims,
        n_values=int(blk_off[-1]),
        operation_count=ops,
    )
    plan.kernel_args = (
        plan.order, plan.dims, plan.blk_off, plan.diag_blk, plan.later_ptr, plan.later_idx,
        plan.blk_ik, plan.blk_ki, plan.pair_ptr, plan.pair_blk, plan.piv_off, plan.var_off,
    )
    return plan


def operation_count(graph: BlockGraph, ordering: Sequence[int] | None = None) -> int:
    """Block operations (solves and multiply-subtracts) of one factorize + back-substitute."""
    if graph.n_nodes == 0:
        return 0
    return plan_elimination(graph, ordering).operation_count


class BlockSystem:
    """Block-sparse matrix stored in an :class:`EliminationPlan` layout."""

    def __init__(self, plan: EliminationPlan, values: np.ndarray | None = None):
        self.plan = plan
        self.values = np.zeros(plan.n_values) if values is None else values

    @classmethod
    def from_blocks(
        cls,
        graph: BlockGraph,
        blocks: Mapping[tuple[int, int], np.ndarray],
        ordering: Sequence[int] | None = None,
    ) -> "BlockSystem":
        system = cls(plan_elimination(graph, ordering))
        for (i, j), blk in blocks.items():
            if i != j and not graph.has_edge(i, j):
                raise ValueError(f"block ({i}, {j}) is not on a graph edge")
            system.block(i, j)[...] = blk
        return system

    @property
    def graph(self) -> BlockGraph:
        return self.plan.graph

    def block(self, i: int, j: int) -> np.ndarray:
        """Writable view of block (i, j)."""
        b = self.plan.block_index[(i, j)]
        lo, hi = self.plan.blk_off[b], self.plan.blk_off[b + 1]
        return self.values[lo:hi].reshape(self.plan.dims[i], self.plan.dims[j])

    def nonzero_blocks(self, tol: float = 0.0) -> set[tuple[int, int]]:
        return {key for key in self.plan.block_index if np.any(np.abs(self.block(*key)) > tol)}

    def to_dense(self) -> np.ndarray:
        off = self.plan.var_off
        A = np.zeros((self.plan.n_vars, self.plan.n_vars))
        for (i, j) in self.plan.block_index:
            A[off[i]:off[i + 1], off[j]:off[j + 1]] = self.block(i, j)
        return A


@dataclass
class Factorization:
    plan: EliminationPlan
    values: np.ndarray
    pivots: np.ndarray

    @property
    def fill_ins(self) -> list[tuple[int, int]]:
        return self.plan.fill_ins


def factorize(
    graph_or_system: BlockGraph | BlockSystem,
    blocks: Mapping[tuple[int, int], np.ndarray] | None = None,
    ordering: Sequence[int] | None = None,
) -> Factorization:
    """Block LDU factorization following the plan's elimination order.

    Accepts either a graph plus a ``{(i, j): block}`` mapping (missing blocks
    are zero) or a ready :class:`BlockSystem`. The input is not modified.
    """
    if isinstance(graph_or_system, BlockSystem):
        system = graph_or_system
    else:
        system = BlockSystem.from_blocks(graph_or_system, blocks or {}, ordering)
    plan = system.plan
    values = system.values.copy()
    pivots = np.zeros(max(plan.n_vars, 1), dtype=np.int64)
    bad = factor_k(*plan.kernel_args, values, pivots)
    if bad >= 0:
        raise SingularBlockError(int(bad))
    return Factorization(plan, values, pivots)


def back_substitute(f: Factorization, rhs) -> np.ndarray:
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape != (f.plan.n_vars,):
        raise ValueError(f"rhs has shape {rhs.shape}, expected ({f.plan.n_vars},)")
    return solve_k(*f.plan.kernel_args, f.values, f.pivots, rhs)


# --------------------------------------------------------------------------
# numeric kernels; blocks are row-major slices of one flat array

@njit(cache=True)
def lu_factor_k(a, off, n, piv, poff):
    for c in range(n):
        p = c
        best = abs(a[off + c * n + c])
        for r in range(c + 1, n):
            v = abs(a[off + r * n + c])
            if v > best:
                best = v
                p = r
        if not (best > 1e-300) or best != best:
            return False
        piv[poff + c] = p
        if p != c:
            for k in range(n):
                t = a[off + c * n + k]
                a[off + c * n + k] = a[off + p * n + k]
                a[off + p * n + k] = t
        inv = 1.0 / a[off + c * n + c]
        for r in range(c + 1, n):
            f = a[off + r * n + c] * inv
            a[off + r * n + c] = f
            if f != 0.0:
                for k in range(c + 1, n):
                    a[off + r * n + k] -= f * a[off + c * n + k]
    return True


@njit(cache=True)
def lu_solve_cols_k(a, off, n, piv, poff, b, boff, m):
    """In place: B <- D^-1 B for an n x m block B at b[boff]."""
    for c in range(n):
        p = piv[poff + c]
        if p != c:
            for k in range(m):
                t = b[boff + c * m + k]
                b[boff + c * m + k] = b[boff + p * m + k]
                b[boff + p * m + k] = t
    for r in range(n):
        for c in range(r):
            f = a[off + r * n + c]
            if f != 0.0:
                for k in range(m):
                    b[boff + r * m + k] -= f * b[boff + c * m + k]
    for r in range(n - 1, -1, -1):
        for c in range(r + 1, n):
            f = a[off + r * n + c]
            if f != 0.0:
                for k in range(m):
                    b[boff + r * m + k] -= f * b[boff + c * m + k]
        inv = 1.0 / a[off + r * n + r]
        for k in range(m):
            b[boff + r * m + k] *= inv


@njit(cache=True)
def factor_k(order, dims, blk_off, diag_blk, later_ptr, later_idx, blk_ik, blk_ki,
             pair_ptr, pair_blk, piv_off, var_off, vals, piv):
    """Returns -1 on success, otherwise the node whose pivot block was singular."""
    for pos in range(order.shape[0]):
        k = order[pos]
        dk = dims[k]
        doff = blk_off[diag_blk[k]]
        if not lu_factor_k(vals, doff, dk, piv, piv_off[k]):
            return k
        lo = later_ptr[pos]
        hi = later_ptr[pos + 1]
        for e in range(lo, hi):
            lu_solve_cols_k(vals, doff, dk, piv, piv_off[k], vals, blk_off[blk_ki[e]], dims[later_idx[e]])
        p = pair_ptr[pos]
        for e1 in range(lo, hi):
            di = dims[later_idx[e1]]
            aoff = blk_off[blk_ik[e1]]
            for e2 in range(lo, hi):
                dj = dims[later_idx[e2]]
                yoff = blk_off[blk_ki[e2]]
                coff = blk_off[pair_blk[p]]
                p += 1
                for r in range(di):
                    for c in range(dk):
                        f = vals[aoff + r * dk + c]
                        if f != 0.0:
                            for s in range(dj):
                                vals[coff + r * dj + s] -= f * vals[yoff + c * dj + s]
    return -1


@njit(cache=True)
def solve_k(order, dims, blk_off, diag_blk, later_ptr, later_idx, blk_ik, blk_ki,
            pair_ptr, pair_blk, piv_off, var_off, vals, piv, rhs):
    x = rhs.copy()
    n = order.shape[0]
    for pos in range(n):
        k = order[pos]
        dk = dims[k]
        ok = var_off[k]
        lu_solve_cols_k(vals, blk_off[diag_blk[k]], dk, piv, piv_off[k], x, ok, 1)
        for e in range(later_ptr[pos], later_ptr[pos + 1]):
            i = later_idx[e]
            di = dims[i]
            oi = var_off[i]
            aoff = blk_off[blk_ik[e]]
            for r in range(di):
                acc = 0.0
                for c in range(dk):
                    acc += vals[aoff + r * dk + c] * x[ok + c]
                x[oi + r] -= acc
    for pos in range(n - 1, -1, -1):
        k = order[pos]
        dk = dims[k]
        ok = var_off[k]
        for e in range(later_ptr[pos], later_ptr[pos + 1]):
            j = later_idx[e]
            dj = dims[j]
            oj = var_off[j]
            yoff = blk_off[blk_ki[e]]
            for r in range(dk):
                acc = 0.0
                for c in range(dj):
                    acc += vals[yoff + r * dj + c] * x[oj + c]
                x[ok + r] -= acc
    return x
