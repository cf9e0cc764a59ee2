"""Scores and nonparametric comparison of several methods over several datasets.

Pipeline: F1-macro per fold -> mean per (dataset, method) -> average ranks ->
Friedman test -> pairwise Wilcoxon signed-rank tests with Holm's step-down
correction -> cliques of non-significantly different methods for a
critical difference diagram.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from itertools import combinations
from xml.sax.saxutils import escape

import numpy as np

from .data import DomainError

EXACT_WILCOXON_MAX_N = 25


def f1_macro(y_true, y_pred, c: int) -> float:
    """Unweighted mean over all ``c`` classes of the per-class F1 (0 when undefined)."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape or y_true.ndim != 1 or len(y_true) == 0:
        raise DomainError("y_true and y_pred must be equal-length non-empty vectors")
    for name, arr in (("y_true", y_true), ("y_pred", y_pred)):
        if arr.min() < 0 or arr.max() >= c:
            raise DomainError(f"{name} has labels outside 0..{c - 1}")
    tp = np.bincount(y_true[y_true == y_pred], minlength=c).astype(np.float64)
    fp = np.bincount(y_pred, minlength=c) - tp
    fn = np.bincount(y_true, minlength=c) - tp
    denom = 2 * tp + fp + fn
    per_class = np.divide(2 * tp, denom, out=np.zeros(c), where=denom > 0)
    return float(per_class.mean())


def rank_descending(scores) -> np.ndarray:
    """Rank 1 for the highest score; tied scores share their average rank."""
    scores = np.asarray(scores, dtype=np.float64)
    order = np.argsort(-scores, kind="stable")
    ranks = np.empty(len(scores))
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _rank_ascending(values) -> np.ndarray:
    return rank_descending(-np.asarray(values, dtype=np.float64))


@dataclass(frozen=True)
class RankTable:
    methods: tuple[str, ...]
    datasets: tuple[str, ...]
    scores: np.ndarray  # N x k mean scores
    ranks: np.ndarray  # N x k

    @property
    def avg_ranks(self) -> np.ndarray:
        return self.ranks.mean(axis=0)

    @classmethod
    def from_scores(cls, methods, datasets, scores) -> "RankTable":
        scores = np.asarray(scores, dtype=np.float64)
        ranks = np.vstack([rank_descending(row) for row in scores])
        return cls(tuple(methods), tuple(datasets), scores, ranks)


def average_ranks(results) -> RankTable:
    """Rank methods within each dataset by their fold-averaged F1-macro.

    Failed cells (NaN scores) count as missing; every method must have a
    score on every dataset.
    """
    cells: dict[tuple[str, str], list[float]] = {}
    for r in results:
        cells.setdefault((r.dataset, r.method), [])
        if not math.isnan(r.f1_macro):
            cells[(r.dataset, r.method)].append(r.f1_macro)
    datasets = sorted({d for d, _ in cells})
    methods = sorted({m for _, m in cells})
    missing = [f"{d}/{m}" for d in datasets for m in methods if not cells.get((d, m))]
    if missing:
        raise DomainError("incomplete block design, missing cells: " + ", ".join(missing))
    if not datasets or len(methods) < 2:
        raise DomainError("need at least one dataset and two methods")
    scores = np.array([[float(np.mean(cells[(d, m)])) for m in methods] for d in datasets])
    return RankTable.from_scores(methods, datasets, scores)


# -- chi-square tail --------------------------------------------------------------

def _gamma_series(a, x):
    # lower regularized gamma P(a, x), valid for x < a + 1
    term = total = 1.0 / a
    ap = a
    for _ in range(10_000):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * 1e-16:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_cfrac(a, x):
    # upper regularized gamma Q(a, x) by modified Lentz, valid for x >= a + 1
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 10_000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        d = tiny if abs(d) < tiny else d
        c = b + an / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def gammaincc(a: float, x: float) -> float:
    """Regularized upper incomplete gamma function Q(a, x)."""
    if a <= 0:
        raise ValueError("a must be positive")
    if x <= 0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gamma_series(a, x)
    return _gamma_cfrac(a, x)


def chi2_sf(x: float, dof: int) -> float:
    return gammaincc(dof / 2.0, x / 2.0)


def friedman_test(table: RankTable) -> tuple[float, float]:
    """Friedman chi-square on the rank table and its upper-tail p-value (k - 1 dof)."""
    N, k = table.ranks.shape
    if N < 2 or k < 2:
        raise DomainError("Friedman test needs at least two datasets and two methods")
    rank_sums = table.ranks.sum(axis=0)
    # centered form of 12/(N k (k+1)) * sum R_j^2 - 3 N (k+1); exactly 0 for all-tied tables
    centre = N * (k + 1) / 2.0
    stat = 12.0 / (N * k * (k + 1)) * float(np.sum((rank_sums - centre) ** 2))
    return stat, chi2_sf(stat, k - 1)


# -- Wilcoxon signed-rank -------------------------------------------------------------

def _signed_rank_counts(doubled_ranks) -> list[int]:
    """Number of sign patterns reaching each (doubled) positive rank sum."""
    counts = [1] + [0] * int(sum(doubled_ranks))
    top = 0
    for r in doubled_ranks:
        top += r
        for s in range(top, r - 1, -1):
            counts[s] += counts[s - r]
    return counts


def wilcoxon_signed_rank(a, b, zero_method: str = "wilcox",
                         exact_max_n: int = EXACT_WILCOXON_MAX_N) -> float:
    """Two-sided p-value of the Wilcoxon signed-rank test on paired samples.

    ``zero_method="wilcox"`` drops zero differences before ranking;
    ``"pratt"`` ranks them and then drops them. Exact null distribution up
    to ``exact_max_n`` non-zero differences, tie-corrected normal
    approximation with continuity correction beyond that.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or len(a) == 0:
        raise DomainError("paired samples must be equal-length non-empty vectors")
    d = a - b
    if zero_method == "wilcox":
        d = d[d != 0]
    elif zero_method != "pratt":
        raise ValueError(f"unknown zero_method {zero_method!r}")
    all_ranks = _rank_ascending(np.abs(d))
    nz = int(np.sum(d == 0))
    ranks, d = all_ranks[d != 0], d[d != 0]
    n = len(d)
    if n == 0:
        return 1.0
    w_plus = float(ranks[d > 0].sum())
    if n <= exact_max_n:
        doubled = [int(round(2 * r)) for r in ranks]
        counts = _signed_rank_counts(doubled)
        w2 = int(round(2 * w_plus))
        lower = sum(counts[: w2 + 1])
        upper = sum(counts[w2:])
        return min(1.0, 2 * min(lower, upper) / 2**n)
    # moments over all ranks, minus the block of ranks held by zeros (Pratt)
    m = len(all_ranks)
    mean = (m * (m + 1) - nz * (nz + 1)) / 4.0
    _, tie_sizes = np.unique(ranks, return_counts=True)  # the zero block is not a tie group
    var = (m * (m + 1) * (2 * m + 1) - nz * (nz + 1) * (2 * nz + 1)) / 24.0
    var -= float(np.sum(tie_sizes**3 - tie_sizes)) / 48.0
    if var <= 0:
        return 1.0
    diff = w_plus - mean
    z = (diff - 0.5 * np.sign(diff)) / math.sqrt(var)
    return min(1.0, math.erfc(abs(z) / math.sqrt(2.0)))


def holm_adjust(pvals) -> np.ndarray:
    """Holm step-down adjusted p-values, in input order."""
    p = np.asarray(pvals, dtype=np.float64)
    if p.ndim != 1:
        raise DomainError("p-values must be a vector")
    if np.any((p < 0) | (p > 1)) or np.any(np.isnan(p)):
        raise DomainError("p-values must lie in [0, 1]")
    m = len(p)
    order = np.argsort(p, kind="stable")
    adjusted = np.empty(m)
    running = 0.0
    for j, idx in enumerate(order):
        running = max(running, min(1.0, (m - j) * p[idx]))
        adjusted[idx] = running
    return adjusted


# -- report -----------------------------------------------------------------------

@dataclass(frozen=True)
class PairwiseResult:
    method_a: str
    method_b: str
    wilcoxon_p: float
    holm_adjusted_p: float
    significant: bool


@dataclass(frozen=True)
class StatReport:
    methods: tuple[str, ...]
    avg_ranks: tuple[float, ...]
    friedman_stat: float
    friedman_p: float
    pairwise: tuple[PairwiseResult, ...]
    cliques: tuple[tuple[str, ...], ...]
    alpha: float = 0.05
    num_datasets: int = 0

    def to_json(self) -> str:
        doc = asdict(self)
        doc["pairwise"] = [asdict(p) for p in self.pairwise]
        return json.dumps(doc, indent=2)


def find_cliques(methods, avg_ranks, significant_pairs) -> list[tuple[str, ...]]:
    """Maximal runs of rank-adjacent methods with no significant pair inside.

    Runs of a single method are dropped (they draw no bar).
    """
    order = sorted(range(len(methods)), key=lambda i: (avg_ranks[i], methods[i]))
    names = [methods[i] for i in order]
    sig = {frozenset(p) for p in significant_pairs}
    cliques: list[tuple[str, ...]] = []
    last_end = -1
    for i in range(len(names)):
        j = i
        while j + 1 < len(names) and all(
            frozenset((names[x], names[j + 1])) not in sig for x in range(i, j + 1)
        ):
            j += 1
        if j > i and j > last_end:
            cliques.append(tuple(names[i:j + 1]))
            last_end = j
    return cliques


def compare_methods(table: RankTable, alpha: float = 0.05, zero_method: str = "wilcox") -> StatReport:
    if not 0 < alpha < 1:
        raise DomainError("alpha must lie in (0, 1)")
    stat, p = friedman_test(table)
    pairs = list(combinations(range(len(table.methods)), 2))
    raw = [wilcoxon_signed_rank(table.scores[:, i], table.scores[:, j], zero_method) for i, j in pairs]
    adjusted = holm_adjust(raw) if raw else np.array([])
    pairwise = tuple(
        PairwiseResult(table.methods[i], table.methods[j], float(pr), float(pa), bool(pa < alpha))
        for (i, j), pr, pa in zip(pairs, raw, adjusted)
    )
    significant = [(r.method_a, r.method_b) for r in pairwise if r.significant]
    avg = table.avg_ranks
    return StatReport(
        methods=table.methods,
        avg_ranks=tuple(float(r) for r in avg),
        friedman_stat=float(stat),
        friedman_p=float(p),
        pairwise=pairwise,
        cliques=tuple(find_cliques(table.methods, avg, significant)),
        alpha=alpha,
        num_datasets=len(table.datasets),
    )


def cd_diagram_svg(report: StatReport, width: int = 640) -> str:
    """Critical difference diagram: rank axis (best on the right), method labels, clique bars."""
    k = len(report.methods)
    if k < 2:
        raise DomainError("a diagram needs at least two methods")
    margin = 150
    axis_y = 60
    x0, x1 = margin, width - margin

    def x_of(rank):
        # rank k at the left end, rank 1 at the right end
        return x1 - (rank - 1) / (k - 1) * (x1 - x0)

    order = sorted(range(k), key=lambda i: (report.avg_ranks[i], report.methods[i]))
    half = (k + 1) // 2
    right, left = order[:half], order[half:]
    height = axis_y + 40 + 22 * max(len(right), len(left)) + 14 * len(report.cliques) + 20
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<line x1="{x0:.1f}" y1="{axis_y}" x2="{x1:.1f}" y2="{axis_y}" stroke="black"/>',
    ]
    for r in range(1, k + 1):
        x = x_of(r)
        out.append(f'<line x1="{x:.1f}" y1="{axis_y - 6}" x2="{x:.1f}" y2="{axis_y}" stroke="black"/>')
        out.append(f'<text x="{x:.1f}" y="{axis_y - 10}" text-anchor="middle">{r}</text>')
    bars_y = axis_y + 12
    for ci, clique in enumerate(report.cliques):
        ranks = [report.avg_ranks[report.methods.index(m)] for m in clique]
        y = bars_y + 8 * ci
        out.append(
            f'<line class="clique" x1="{x_of(max(ranks)) - 3:.1f}" y1="{y}" '
            f'x2="{x_of(min(ranks)) + 3:.1f}" y2="{y}" stroke="black" stroke-width="4"/>'
        )
    label_top = bars_y + 8 * len(report.cliques) + 20
    for side, members in (("right", right), ("left", left)):
        for row, i in enumerate(members):
            rank = report.avg_ranks[i]
            x = x_of(rank)
            y = label_top + 22 * row
            end = x1 + 20 if side == "right" else x0 - 20
            anchor = "start" if side == "right" else "end"
            tx = end + 4 if side == "right" else end - 4
            name = escape(report.methods[i])
            out.append(
                f'<polyline points="{x:.1f},{axis_y} {x:.1f},{y} {end:.1f},{y}" fill="none" stroke="black"/>'
            )
            out.append(
                f'<text class="method" x="{tx:.1f}" y="{y + 4}" text-anchor="{anchor}">'
                f'{name} ({rank:.2f})</text>'
            )
    out.append("</svg>")
    return "\n".join(out) + "\n"
