"""Nodal domains of sampled real fields and their census statistics."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.ndimage
import scipy.optimize

from .errors import DomainError
from .waves import ScalarField2D, sample_plane_wave_field

# Bulk percolation-model reference constants
NODAL_MEAN_CONSTANT = 0.0624
NODAL_VARIANCE_CONSTANT = 0.0502
AREA_EXPONENT = -187.0 / 91.0


class UnionFind:
    """Disjoint sets over 0..n-1 with path halving and union by size."""

    def __init__(self, n: int):
        self.parent = np.arange(n)
        self.size = np.ones(n, dtype=np.int64)

    def find(self, a: int) -> int:
        parent = self.parent
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return int(a)

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]

    def roots(self) -> np.ndarray:
        return np.array([self.find(i) for i in range(len(self.parent))])


@dataclass
class NodalReport:
    nu: int
    areas: np.ndarray = field(repr=False)  # physical areas (cell count / M^2)
    touches_boundary: np.ndarray = field(repr=False)
    signs: np.ndarray = field(repr=False)
    labels: np.ndarray | None = field(default=None, repr=False)


def _saddle_pairs(pos: np.ndarray, values: np.ndarray, periodic: bool):
    """2x2 blocks with a checkerboard sign pattern, and which diagonal the bilinear
    interpolant connects (sign of the block mean)."""
    if periodic:
        nxt = lambda a, ax: np.roll(a, -1, axis=ax)  # noqa: E731
        p00, p10, p01 = pos, nxt(pos, 0), nxt(pos, 1)
        p11 = nxt(p10, 1)
        v00, v10, v01 = values, nxt(values, 0), nxt(values, 1)
        v11 = nxt(v10, 1)
    else:
        p00, p10, p01, p11 = pos[:-1, :-1], pos[1:, :-1], pos[:-1, 1:], pos[1:, 1:]
        v00, v10, v01, v11 = values[:-1, :-1], values[1:, :-1], values[:-1, 1:], values[1:, 1:]
    checker = (p00 == p11) & (p10 == p01) & (p00 != p10)
    centre_pos = (v00 + v10 + v01 + v11) >= 0
    # True: the diagonal (00, 11) is joined; False: the diagonal (10, 01)
    main = checker & (p00 == centre_pos)
    anti = checker & ~(p00 == centre_pos)
    return np.nonzero(main), np.nonzero(anti)


def nodal_domains(field_: ScalarField2D | np.ndarray, *, periodic: bool | None = None,
                  saddle: str = "none", keep_labels: bool = False) -> NodalReport:
    """Sign domains of a sampled field with 4-connectivity for both signs.

    Zero values count as positive. With ``periodic`` opposite edges of the
    grid are glued. ``saddle="bilinear"`` additionally joins the diagonal of
    every checkerboard 2x2 block that the bilinear interpolant connects.
    """
    if isinstance(field_, ScalarField2D):
        values = field_.values
        periodic = field_.periodic if periodic is None else periodic
    else:
        values = np.asarray(field_, dtype=float)
        periodic = bool(periodic)
    if saddle not in ("none", "bilinear"):
        raise DomainError(f"unknown saddle rule {saddle!r}")
    M1, M2 = values.shape
    pos = values >= 0
    lab_p, n_p = scipy.ndimage.label(pos)
    lab_n, n_n = scipy.ndimage.label(~pos)
    labels = np.where(pos, lab_p, lab_n + n_p) - 1  # 0-based, positives first
    n = n_p + n_n
    uf = UnionFind(n)
    if periodic:
        for a, b in ((labels[-1, :], labels[0, :]), (labels[:, -1], labels[:, 0])):
            same = (a < n_p) == (b < n_p)
            for u, v in set(zip(a[same].tolist(), b[same].tolist())):
                uf.union(u, v)
    if saddle == "bilinear":
        (mi, mj), (ai, aj) = _saddle_pairs(pos, values, periodic)
        for i, j in zip(mi.tolist(), mj.tolist()):
            uf.union(labels[i, j], labels[(i + 1) % M1, (j + 1) % M2])
        for i, j in zip(ai.tolist(), aj.tolist()):
            uf.union(labels[(i + 1) % M1, j], labels[i, (j + 1) % M2])
    roots = uf.roots()
    uniq, final = np.unique(roots, return_inverse=True)
    dom = final[labels]
    counts = np.bincount(dom.ravel(), minlength=len(uniq))
    signs = np.zeros(len(uniq), dtype=int)
    signs[final] = np.where(np.arange(n) < n_p, 1, -1)
    touches = np.zeros(len(uniq), dtype=bool)
    if not periodic:
        for edge in (dom[0, :], dom[-1, :], dom[:, 0], dom[:, -1]):
            touches[np.unique(edge)] = True
    return NodalReport(len(uniq), counts / (M1 * M2), touches, signs, dom if keep_labels else None)


def flood_fill_count(values: np.ndarray, periodic: bool = False) -> int:
    """Reference domain count by breadth-first flood fill (slow; for cross-checks)."""
    pos = np.asarray(values) >= 0
    M1, M2 = pos.shape
    seen = np.zeros_like(pos, dtype=bool)
    count = 0
    for i0 in range(M1):
        for j0 in range(M2):
            if seen[i0, j0]:
                continue
            count += 1
            s = pos[i0, j0]
            stack = [(i0, j0)]
            seen[i0, j0] = True
            while stack:
                i, j = stack.pop()
                for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                    a, b = i + di, j + dj
                    if periodic:
                        a, b = a % M1, b % M2
                    elif not (0 <= a < M1 and 0 <= b < M2):
                        continue
                    if not seen[a, b] and pos[a, b] == s:
                        seen[a, b] = True
                        stack.append((a, b))
    return count


# ---------------------------------------------------------------------------
# Census


def expected_count(k: float, area: float = 1.0) -> float:
    """Weyl count ``area k^2 / (4 pi)`` used to normalize domain numbers."""
    return area * k * k / (4 * np.pi)


def fit_power_law(areas, a_min: float, a_max: float) -> tuple[float, float, int]:
    """Maximum-likelihood exponent of ``P(A) ~ A^{-tau}`` truncated to [a_min, a_max].

    Returns ``(-tau, stderr, n_used)``.
    """
    a = np.asarray(areas, dtype=float)
    a = a[(a >= a_min) & (a <= a_max)]
    n = a.size
    if n < 10:
        return float("nan"), float("nan"), n
    mean_log = float(np.mean(np.log(a)))
    la, lb = math.log(a_min), math.log(a_max)

    def log_norm(tau):
        s = 1.0 - tau
        if abs(s) < 1e-9:
            return math.log(lb - la)
        # log int_a^b A^{-tau} dA, evaluated stably
        hi, lo = s * lb, s * la
        big = max(hi, lo)
        return big + math.log(abs(math.exp(hi - big) - math.exp(lo - big))) - math.log(abs(s))

    def nll(tau):
        return tau * mean_log + log_norm(tau)

    res = scipy.optimize.minimize_scalar(nll, bounds=(0.0, 6.0), method="bounded",
                                         options={"xatol": 1e-10})
    tau = float(res.x)
    h = 1e-4
    curv = (nll(tau + h) - 2 * nll(tau) + nll(tau - h)) / h ** 2
    err = 1.0 / math.sqrt(n * curv) if curv > 0 else float("nan")
    return -tau, err, n


@dataclass
class CensusResult:
    k: float
    M: int
    seed: int
    periodic: bool
    saddle: str
    counts: list
    mean_ratio: float
    mean_ratio_stderr: float
    var_ratio: float
    var_ratio_stderr: float
    exponent: float
    exponent_stderr: float
    n_areas_fitted: int
    area_window: tuple
    area_hist_edges: list
    area_hist_counts: list

    def to_dict(self) -> dict:
        return asdict(self)


def nodal_census(k: float, n_samples: int, seed: int, *, M: int | None = None, periodic: bool = True,
                 saddle: str = "none", J: int | None = None) -> CensusResult:
    """Domain counts of n_samples plane-wave fields normalized by ``k^2 / (4 pi)``,
    plus the area distribution exponent fitted on ``[10/k^2, 1e-2]``."""
    if n_samples < 2:
        raise DomainError("the census needs at least two samples")
    M = M if M is not None else int(2 ** math.ceil(math.log2(16 * k / (2 * np.pi))))
    counts, areas = [], []
    for i in range(n_samples):
        f = sample_plane_wave_field(k, J, seed, M, index=i, periodic=periodic)
        rep = nodal_domains(f, saddle=saddle)
        counts.append(rep.nu)
        areas.append(rep.areas if periodic else rep.areas[~rep.touches_boundary])
    nbar = expected_count(k)
    c = np.array(counts, dtype=float)
    ratios = c / nbar
    n = len(c)
    var = float(c.var(ddof=1))
    m4 = float(np.mean((c - c.mean()) ** 4))
    var_err = math.sqrt(max(m4 - var ** 2, 0.0) / n)
    all_areas = np.concatenate(areas)
    a_min, a_max = 10.0 / k ** 2, 1e-2
    expo, expo_err, n_fit = fit_power_law(all_areas, a_min, a_max)
    edges = np.logspace(math.log10(max(all_areas.min(), 1.0 / M ** 2)), 0, 41)
    hist, _ = np.histogram(all_areas, bins=edges)
    return CensusResult(float(k), M, seed, periodic, saddle, [int(x) for x in counts], float(ratios.mean()),
                        float(ratios.std(ddof=1) / math.sqrt(n)), var / nbar, var_err / nbar, expo, expo_err,
                        n_fit, (a_min, a_max), edges.tolist(), hist.tolist())
