"""Kernel embedding of labeled point clouds.

A cloud is embedded as f(y) = sum_i label_i * k(y, x_i) with a squared
exponential kernel.  The registration functional between two clouds is the
inner product of their embeddings, which reduces to a double sum of
label agreement times kernel value over point pairs.  Pairs whose kernel
value falls below a threshold are dropped; a uniform voxel grid makes that
sparsification cheap.

All reductions over pair sets run in a fixed (i, j) order so results are
bit-reproducible regardless of how the entry lists were produced.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .liegroup import Isometry


@dataclass(frozen=True)
class KernelParams:
    """Squared-exponential kernel and sparsification settings.

    k(x, y) = sigma^2 * exp(-|x - y|^2 / (2 ell^2)); pairs with k below
    sparsify_threshold are dropped (threshold 0 keeps every pair).  Label
    agreement is label_scale times the euclidean inner product of the two
    label vectors.
    """

    sigma: float = 0.1
    ell: float = 0.15
    sparsify_threshold: float = 1e-3
    label_scale: float = 1e-5

    def __post_init__(self):
        if not (self.sigma > 0.0 and np.isfinite(self.sigma)):
            raise ValueError("sigma must be positive")
        if not (self.ell > 0.0 and np.isfinite(self.ell)):
            raise ValueError("ell must be positive")
        if not (self.sparsify_threshold >= 0.0):
            raise ValueError("sparsify_threshold must be >= 0")
        if not (self.label_scale > 0.0):
            raise ValueError("label_scale must be positive")


@dataclass(frozen=True)
class LabeledCloud:
    """Points (N, n) with one label vector per point (N, m); n in {2, 3}."""

    points: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        points = np.array(self.points, dtype=float)
        labels = np.array(self.labels, dtype=float)
        if points.ndim != 2 or points.shape[1] not in (2, 3):
            raise ValueError(f"points must be (N, 2) or (N, 3), got {points.shape}")
        if labels.ndim != 2 or labels.shape[0] != points.shape[0]:
            raise ValueError(
                f"labels {labels.shape} do not match points {points.shape}"
            )
        if not (np.all(np.isfinite(points)) and np.all(np.isfinite(labels))):
            raise ValueError("cloud contains non-finite values")
        points.flags.writeable = False
        labels.flags.writeable = False
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def kernel_eval(x: np.ndarray, y: np.ndarray, p: KernelParams) -> np.ndarray:
    """Kernel value for a point pair, or elementwise over stacked rows."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d2 = np.sum((x - y) ** 2, axis=-1)
    return p.sigma**2 * np.exp(-d2 / (2.0 * p.ell**2))


def label_inner(a: np.ndarray, b: np.ndarray, p: KernelParams) -> np.ndarray:
    """Scaled inner product of label vectors (elementwise over rows)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return p.label_scale * np.sum(a * b, axis=-1)


def cutoff_radius(p: KernelParams) -> float:
    """Distance beyond which the kernel falls below the threshold.

    inf when the threshold is zero (nothing is dropped); 0 when only exact
    coincidence can reach the threshold.
    """
    if p.sparsify_threshold <= 0.0:
        return np.inf
    ratio = p.sigma**2 / p.sparsify_threshold
    if ratio < 1.0:
        return -1.0  # no pair can qualify
    return p.ell * np.sqrt(2.0 * np.log(ratio))


@dataclass(frozen=True)
class SparseKernelMatrix:
    """Pairs (i, j) with kernel value at or above the threshold.

    Entries are stored sorted by (i, j); i indexes the fixed cloud X,
    j the moving cloud Z.
    """

    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    shape: tuple[int, int]

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.int64)
        cols = np.asarray(self.cols, dtype=np.int64)
        vals = np.asarray(self.vals, dtype=float)
        if not (rows.shape == cols.shape == vals.shape) or rows.ndim != 1:
            raise ValueError("rows, cols, vals must be equal-length 1-d arrays")
        for a in (rows, cols, vals):
            a.flags.writeable = False
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "vals", vals)

    @property
    def nnz(self) -> int:
        return self.rows.shape[0]

    def ordered_sum(self, weights: np.ndarray) -> float:
        """Reduce per-entry weights in the canonical order.

        Accumulates within each row segment first, then folds the row sums
        in index order; the result does not depend on how or in what order
        the entries were generated.
        """
        if self.nnz == 0:
            return 0.0
        starts = getattr(self, "_starts", None)
        if starts is None:
            starts = np.flatnonzero(np.r_[True, np.diff(self.rows) != 0])
            object.__setattr__(self, "_starts", starts)
        row_sums = np.add.reduceat(np.asarray(weights, dtype=float), starts)
        return float(np.add.reduce(row_sums))


class VoxelIndex:
    """Uniform grid over a fixed point set for radius-bounded pair search.

    Cell size equals the query radius, so every point within that radius
    of a query lies in one of the 3^n cells around the query's cell.
    """

    def __init__(self, points: np.ndarray, cell: float):
        points = np.asarray(points, dtype=float)
        if not (cell > 0.0 and np.isfinite(cell)):
            raise ValueError("cell size must be positive and finite")
        self.points = points
        self.cell = float(cell)
        self._cells: dict[tuple, np.ndarray] = {}
        keys = np.floor(points / cell).astype(np.int64)
        buckets: dict[tuple, list] = {}
        for i, key in enumerate(map(tuple, keys)):
            buckets.setdefault(key, []).append(i)
        for key, idx in buckets.items():
            self._cells[key] = np.asarray(idx, dtype=np.int64)
        n = points.shape[1]
        self._offsets = list(itertools.product((-1, 0, 1), repeat=n))
        self._hood: dict[tuple, np.ndarray] = {}

    def candidates(self, key: tuple) -> np.ndarray:
        """Indices of stored points in the 3^n cells around the given key.

        Results are memoized: the index is immutable, and callers tend to
        probe the same cells across registration iterations.
        """
        cached = self._hood.get(key)
        if cached is not None:
            return cached
        found = [
            self._cells[k]
            for off in self._offsets
            if (k := tuple(a + b for a, b in zip(key, off))) in self._cells
        ]
        out = np.concatenate(found) if found else np.empty(0, dtype=np.int64)
        self._hood[key] = out
        return out


def _group_by_cell(points: np.ndarray, cell: float):
    keys = np.floor(points / cell).astype(np.int64)
    groups: dict[tuple, list] = {}
    for j, key in enumerate(map(tuple, keys)):
        groups.setdefault(key, []).append(j)
    return [(key, np.asarray(idx, dtype=np.int64)) for key, idx in groups.items()]


def _empty_matrix(shape) -> SparseKernelMatrix:
    z = np.empty(0)
    return SparseKernelMatrix(z.astype(np.int64), z.astype(np.int64), z, shape)


def build_kernel_matrix(
    x: LabeledCloud,
    z_points: np.ndarray,
    p: KernelParams,
    index: VoxelIndex | None = None,
    threads: int = 1,
) -> SparseKernelMatrix:
    """All pairs (i, j) with k(x_i, z_j) >= sparsify_threshold.

    z_points are the already-transformed coordinates of the moving cloud.
    An existing VoxelIndex over x.points (built with cell = cutoff_radius)
    can be passed to amortize grid construction across iterations.
    """
    z_points = np.asarray(z_points, dtype=float)
    shape = (len(x), z_points.shape[0])
    if shape[0] == 0 or shape[1] == 0:
        return _empty_matrix(shape)
    if z_points.shape[1] != x.dim:
        raise ValueError("dimension mismatch between clouds")

    if p.sparsify_threshold <= 0.0:
        # dense: every pair qualifies
        d2 = np.sum((x.points[:, None, :] - z_points[None, :, :]) ** 2, axis=-1)
        vals = p.sigma**2 * np.exp(-d2 / (2.0 * p.ell**2))
        i, j = np.meshgrid(
            np.arange(shape[0], dtype=np.int64),
            np.arange(shape[1], dtype=np.int64),
            indexing="ij",
        )
        return SparseKernelMatrix(i.ravel(), j.ravel(), vals.ravel(), shape)

    r_cut = cutoff_radius(p)
    if r_cut < 0.0:
        return _empty_matrix(shape)
    cell = r_cut if r_cut > 0.0 else p.ell
    if index is None:
        index = VoxelIndex(x.points, cell)
    groups = _group_by_cell(z_points, index.cell)

    def sweep(group_slice):
        out_i, out_j, out_v = [], [], []
        for key, jidx in group_slice:
            cand = index.candidates(key)
            if cand.size == 0:
                continue
            block = kernel_eval(
                x.points[cand][None, :, :], z_points[jidx][:, None, :], p
            )
            keep = block >= p.sparsify_threshold
            if not np.any(keep):
                continue
            r, c = np.nonzero(keep)
            out_i.append(cand[c])
            out_j.append(jidx[r])
            out_v.append(block[keep])
        return out_i, out_j, out_v

    if threads > 1 and len(groups) > 1:
        chunks = [groups[k::threads] for k in range(threads)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(sweep, chunks))
    else:
        parts = [sweep(groups)]

    ii = [a for part in parts for a in part[0]]
    if not ii:
        return _empty_matrix(shape)
    rows = np.concatenate(ii)
    cols = np.concatenate([a for part in parts for a in part[1]])
    vals = np.concatenate([a for part in parts for a in part[2]])
    order = np.lexsort((cols, rows))
    return SparseKernelMatrix(rows[order], cols[order], vals[order], shape)


def pair_coefficients(
    m: SparseKernelMatrix, x: LabeledCloud, z: LabeledCloud, p: KernelParams
) -> np.ndarray:
    """Label agreement c_ij for every stored entry, in entry order."""
    if m.nnz == 0:
        return np.empty(0)
    return label_inner(x.labels[m.rows], z.labels[m.cols], p)


def inner_product(
    x: LabeledCloud,
    z: LabeledCloud,
    h: Isometry,
    p: KernelParams,
    threads: int = 1,
) -> float:
    """Registration functional F(h) = sum_ij c_ij k(x_i, h^-1 z_j)."""
    if len(z) == 0 or len(x) == 0:
        return 0.0
    z_moved = h.inverse_act(z.points)
    m = build_kernel_matrix(x, z_moved, p, threads=threads)
    c = pair_coefficients(m, x, z, p)
    return m.ordered_sum(c * m.vals)


def write_triplets(m: SparseKernelMatrix, path) -> None:
    """Dump entries as text lines 'i j value' in canonical order."""
    with open(path, "w") as fh:
        for i, j, v in zip(m.rows, m.cols, m.vals):
            fh.write(f"{i} {j} {v:.17g}\n")
