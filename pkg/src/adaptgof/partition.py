"""Covariate-space partitions and the greedy adaptive partition search.

A partition is an ordered list of disjoint groups whose union covers the whole
covariate space; each group is a conjunction of axis-aligned rules (threshold
rules on continuous columns, membership rules on discrete columns). The greedy
search grows a binary tree of such rules on training data, choosing at every
step the cut that maximizes the grouped chi-squared criterion of the two
children, until the target group count is reached or no feasible cut remains.

Determinism matters here: ties in the cut search are broken first by larger
criterion value, then by lexicographically smaller source name, then by
smaller threshold (or smaller membership set).
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass

import numpy as np

from .numkit import empirical_quantiles

__all__ = [
    "AxisRule",
    "Group",
    "Partition",
    "PartitionConfig",
    "InfeasiblePartitionError",
    "MissingColumnError",
    "CoverageError",
    "criterion_b",
    "grouped_chi2",
    "candidate_thresholds",
    "candidate_discrete_splits",
    "greedy_partition",
    "assign_groups",
    "probability_partition",
]

# Beyond this many distinct labels, membership splits are restricted to
# contiguous splits of the residual-mean ordering (CART-style reduction)
# instead of full enumeration.
_ENUMERATION_LIMIT = 6


class InfeasiblePartitionError(ValueError):
    """The requested partition cannot be built (e.g. the root admits no split)."""


class MissingColumnError(KeyError):
    """Rows to assign lack a column referenced by the partition."""


class CoverageError(RuntimeError):
    """A row matched zero or several groups; the partition does not tile the space."""


@dataclass(frozen=True)
class AxisRule:
    """A single axis-aligned condition.

    ``op`` is one of:
      * ``"le"`` / ``"gt"``: threshold rule, value <= t or value > t;
      * ``"in"`` / ``"not-in"``: membership rule on a label set. The "not-in"
        side is the designated complement: labels never seen during training
        fail the "in" test and therefore fall to the complement side.
    """

    source: str
    op: str
    threshold: float | None = None
    labels: tuple = ()

    def __post_init__(self):
        if self.op in ("le", "gt"):
            if self.threshold is None or not np.isfinite(self.threshold):
                raise ValueError("threshold rules need a finite threshold")
        elif self.op in ("in", "not-in"):
            if not self.labels:
                raise ValueError("membership rules need a non-empty label set")
        else:
            raise ValueError(f"unknown rule op {self.op!r}")

    def matches(self, columns: dict) -> np.ndarray:
        if self.source not in columns:
            raise MissingColumnError(self.source)
        col = columns[self.source]
        if self.op == "le":
            return np.asarray(col, dtype=float) <= self.threshold
        if self.op == "gt":
            return np.asarray(col, dtype=float) > self.threshold
        inside = np.isin(col, np.asarray(self.labels))
        return inside if self.op == "in" else ~inside

    def to_json(self) -> dict:
        if self.op in ("le", "gt"):
            op = "<=" if self.op == "le" else ">"
            return {"source": self.source, "op": op, "value": self.threshold}
        op = "in" if self.op == "in" else "not in"
        return {"source": self.source, "op": op, "labels": list(self.labels)}


@dataclass(frozen=True)
class Group:
    """A conjunction of axis rules plus the training-row count it captured."""

    rules: tuple
    train_count: int

    def matches(self, columns: dict) -> np.ndarray:
        n = len(next(iter(columns.values())))
        mask = np.ones(n, dtype=bool)
        for rule in self.rules:
            mask &= rule.matches(columns)
        return mask

    def to_json(self) -> dict:
        return {"rules": [r.to_json() for r in self.rules], "train_count": self.train_count}


@dataclass(frozen=True)
class Partition:
    """An ordered list of disjoint, covering groups."""

    groups: tuple
    sources: tuple = ()
    degenerate: bool = False

    def __post_init__(self):
        if not self.groups:
            raise ValueError("a partition needs at least one group")

    @property
    def size(self) -> int:
        return len(self.groups)

    def to_json(self) -> dict:
        return {
            "groups": [g.to_json() for g in self.groups],
            "sources": list(self.sources),
            "degenerate": self.degenerate,
        }


@dataclass(frozen=True)
class PartitionConfig:
    """Search configuration: target group count, minimum group size, sources."""

    k: int
    n_min: int
    continuous: tuple = ()
    discrete: tuple = ()
    score: str | None = None

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("k must be at least 2")
        if self.n_min < 1:
            raise ValueError("n_min must be at least 1")
        if not (self.continuous or self.discrete or self.score):
            raise ValueError("at least one splitting source must be named")
        object.__setattr__(self, "continuous", tuple(self.continuous))
        object.__setattr__(self, "discrete", tuple(self.discrete))


# ---------------------------------------------------------------------------
# Grouped chi-squared criterion
# ---------------------------------------------------------------------------


def grouped_chi2(y, phat, group_idx, n_groups: int | None = None):
    """Sum over groups of (residual sum)^2 / (variance sum).

    Returns ``(statistic, realized)`` where ``realized`` counts non-empty
    groups; empty groups contribute zero.
    """
    y = np.asarray(y, dtype=float)
    p = np.asarray(phat, dtype=float)
    g = np.asarray(group_idx, dtype=int)
    if y.size == 0:
        raise ValueError("no rows to group")
    k = int(n_groups) if n_groups is not None else int(g.max()) + 1
    resid_sums = np.bincount(g, weights=y - p, minlength=k)
    var_sums = np.bincount(g, weights=p * (1.0 - p), minlength=k)
    counts = np.bincount(g, minlength=k)
    live = counts > 0
    stat = float(np.sum(resid_sums[live] ** 2 / var_sums[live]))
    return stat, int(live.sum())


def criterion_b(y, phat, group_idx, n_groups: int | None = None) -> float:
    """Training-set partition criterion: the grouped chi-squared value.

    ``phat`` must lie strictly inside (0, 1) so the variance sums are positive.
    """
    p = np.asarray(phat, dtype=float)
    if np.any(p <= 0.0) or np.any(p >= 1.0):
        raise ValueError("fitted probabilities must lie strictly in (0, 1)")
    stat, _ = grouped_chi2(y, p, group_idx, n_groups)
    return stat


# ---------------------------------------------------------------------------
# Candidate cuts
# ---------------------------------------------------------------------------


def candidate_thresholds(values, n_min: int) -> list:
    """Feasible threshold candidates for one continuous column of one group.

    With n0 rows and rho = floor(n0 / n_min), the candidates are the j/rho
    lower empirical quantiles for j = 1..rho-1, deduplicated, keeping only
    thresholds that leave at least n_min rows on each side. Returns an empty
    list when no valid threshold exists.
    """
    v = np.asarray(values, dtype=float)
    n0 = v.size
    if n_min < 1:
        raise ValueError("n_min must be at least 1")
    rho = n0 // n_min
    if n0 < 2 * n_min or rho < 2:
        return []
    probs = [j / rho for j in range(1, rho)]
    qs = empirical_quantiles(v, probs)
    srt = np.sort(v)
    out = []
    for t in qs:
        t = float(t)
        if out and t <= out[-1]:
            continue
        left = int(np.searchsorted(srt, t, side="right"))
        if left >= n_min and n0 - left >= n_min:
            out.append(t)
    return out


def candidate_discrete_splits(labels, n_min: int, residuals=None) -> list:
    """Feasible binary label-set splits for one discrete column of one group.

    Each split is returned as the sorted tuple of labels on the "in" side;
    the other side is the complement. With m <= 6 distinct labels all
    2^(m-1) - 1 set splits are enumerated; with m > 6 the labels are ordered
    by within-group mean residual and only the m - 1 contiguous splits of
    that ordering are considered (``residuals`` is required then).
    """
    labs = np.asarray(labels)
    n0 = labs.size
    distinct = sorted(set(labs.tolist()))
    m = len(distinct)
    if m < 2:
        return []
    counts = Counter(labs.tolist())

    if m <= _ENUMERATION_LIMIT:
        first, rest = distinct[0], distinct[1:]
        subsets = []
        for bits in range(2 ** len(rest)):
            side = [first] + [lab for i, lab in enumerate(rest) if bits >> i & 1]
            if len(side) == m:
                continue
            subsets.append(tuple(side))
    else:
        if residuals is None:
            raise ValueError("residuals are required to order more than "
                             f"{_ENUMERATION_LIMIT} distinct labels")
        r = np.asarray(residuals, dtype=float)
        means = {lab: float(r[labs == lab].mean()) for lab in distinct}
        ordered = sorted(distinct, key=lambda lab: (means[lab], str(lab)))
        subsets = [tuple(sorted(ordered[: i + 1])) for i in range(m - 1)]

    out = []
    for side in subsets:
        size = sum(counts[lab] for lab in side)
        if size >= n_min and n0 - size >= n_min:
            out.append(tuple(sorted(side, key=str)))
    return out


# ---------------------------------------------------------------------------
# Greedy search
# ---------------------------------------------------------------------------


def _best_continuous_cut(vals, resid, var, n_min):
    """Best threshold for one column: (children B, threshold) or None."""
    cands = candidate_thresholds(vals, n_min)
    if not cands:
        return None
    order = np.argsort(vals, kind="stable")
    vs = vals[order]
    cum_r = np.cumsum(resid[order])
    cum_v = np.cumsum(var[order])
    tot_r, tot_v = cum_r[-1], cum_v[-1]
    best = None
    for t in cands:  # ascending: ties keep the smaller threshold
        i = int(np.searchsorted(vs, t, side="right")) - 1
        b = cum_r[i] ** 2 / cum_v[i] + (tot_r - cum_r[i]) ** 2 / (tot_v - cum_v[i])
        if best is None or b > best[0]:
            best = (float(b), float(t))
    return best


def _best_discrete_cut(labs, resid, var, n_min):
    """Best membership split for one column: (children B, label tuple) or None."""
    cands = candidate_discrete_splits(labs, n_min, residuals=resid)
    if not cands:
        return None
    tot_r, tot_v = float(resid.sum()), float(var.sum())
    best = None
    for side in cands:  # candidate order is deterministic; ties keep the first
        mask = np.isin(labs, np.asarray(side))
        lr, lv = float(resid[mask].sum()), float(var[mask].sum())
        b = lr**2 / lv + (tot_r - lr) ** 2 / (tot_v - lv)
        if best is None or b > best[0]:
            best = (float(b), side)
    return best


def greedy_partition(config: PartitionConfig, columns: dict, y, phat) -> Partition:
    """Tree-based greedy adaptive partition of the covariate space.

    Starting from the whole space, repeatedly scans the current group (queue
    order, breadth-first) for the best feasible cut across all sources and
    replaces it by its two children, until ``config.k`` groups exist or no
    group admits a cut. Every returned group holds at least ``config.n_min``
    training rows.

    Raises:
        InfeasiblePartitionError: when even the root cannot be split.
    """
    y = np.asarray(y, dtype=float)
    p = np.asarray(phat, dtype=float)
    if np.any(p <= 0.0) or np.any(p >= 1.0):
        raise ValueError("fitted probabilities must lie strictly in (0, 1)")
    n = y.size
    resid = y - p
    var = p * (1.0 - p)

    cont = list(config.continuous)
    if config.score is not None:
        cont.append(config.score)
    sources = sorted(set(cont) | set(config.discrete))
    is_discrete = {s: s in set(config.discrete) for s in sources}
    cols = {}
    for s in sources:
        if s not in columns:
            raise MissingColumnError(s)
        cols[s] = np.asarray(columns[s]) if is_discrete[s] else np.asarray(columns[s], dtype=float)

    def best_split(idx):
        n0 = idx.size
        if n0 < 2 * config.n_min:
            return None
        r, v = resid[idx], var[idx]
        best = None  # (b, source, kind, payload)
        for s in sources:  # lexicographic order; strict '>' keeps earlier source on ties
            col = cols[s][idx]
            if is_discrete[s]:
                found = _best_discrete_cut(col, r, v, config.n_min)
                kind = "in"
            else:
                found = _best_continuous_cut(col, r, v, config.n_min)
                kind = "le"
            if found is not None and (best is None or found[0] > best[0]):
                best = (found[0], s, kind, found[1])
        return best

    root = (np.arange(n), ())
    if n < 2 * config.n_min or best_split(root[0]) is None:
        raise InfeasiblePartitionError(
            "the root group admits no feasible split; lower n_min or provide more data"
        )

    queue = deque([root])
    finished = []
    total = 1
    while queue and total < config.k:
        idx, rules = queue.popleft()
        found = best_split(idx)
        if found is None:
            finished.append((idx, rules))
            continue
        _, source, kind, payload = found
        col = cols[source][idx]
        if kind == "le":
            left_mask = np.asarray(col, dtype=float) <= payload
            left_rule = AxisRule(source, "le", threshold=payload)
            right_rule = AxisRule(source, "gt", threshold=payload)
        else:
            left_mask = np.isin(col, np.asarray(payload))
            left_rule = AxisRule(source, "in", labels=payload)
            right_rule = AxisRule(source, "not-in", labels=payload)
        queue.append((idx[left_mask], rules + (left_rule,)))
        queue.append((idx[~left_mask], rules + (right_rule,)))
        total += 1

    nodes = finished + list(queue)
    groups = tuple(Group(rules=r, train_count=int(i.size)) for i, r in nodes)
    used = sorted({rule.source for g in groups for rule in g.rules})
    return Partition(groups=groups, sources=tuple(used))


def assign_groups(partition: Partition, columns: dict) -> np.ndarray:
    """Map each row to the index of the group containing it (0-based).

    Raises:
        MissingColumnError: if a referenced column is absent.
        CoverageError: if any row matches zero or several groups.
    """
    n = len(next(iter(columns.values())))
    hits = np.zeros(n, dtype=int)
    idx = np.full(n, -1, dtype=int)
    for gi, group in enumerate(partition.groups):
        mask = group.matches(columns)
        hits += mask
        idx[mask & (idx < 0)] = gi
    if np.any(hits != 1):
        bad = int(np.flatnonzero(hits != 1)[0])
        raise CoverageError(f"row {bad} matched {int(hits[bad])} groups instead of 1")
    return idx


def probability_partition(scores, k: int, source: str = "score") -> Partition:
    """Partition the unit interval of a score column by its training quantiles.

    Thresholds sit at the j/k lower empirical quantiles of the training
    scores (j = 1..k-1, deduplicated); groups are the induced intervals
    (score <= t1 | t1 < score <= t2 | ... | score > t_last). All-equal scores
    collapse to a single group flagged as degenerate.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    s = np.asarray(scores, dtype=float)
    if s.size == 0:
        raise ValueError("empty score sample")
    if np.any(s < 0.0) or np.any(s > 1.0):
        raise ValueError("scores must lie in [0, 1]")
    qs = empirical_quantiles(s, [j / k for j in range(1, k)])
    thresholds = []
    for t in qs:
        t = float(t)
        if not thresholds or t > thresholds[-1]:
            thresholds.append(t)
    # Boundary thresholds equal to the max score would leave an empty top
    # interval; drop them.
    thresholds = [t for t in thresholds if t < float(s.max())]
    if not thresholds:
        return Partition(
            groups=(Group(rules=(), train_count=int(s.size)),),
            sources=(source,),
            degenerate=True,
        )
    groups = []
    for i in range(len(thresholds) + 1):
        rules = []
        if i > 0:
            rules.append(AxisRule(source, "gt", threshold=thresholds[i - 1]))
        if i < len(thresholds):
            rules.append(AxisRule(source, "le", threshold=thresholds[i]))
        lo = -np.inf if i == 0 else thresholds[i - 1]
        hi = np.inf if i == len(thresholds) else thresholds[i]
        count = int(np.sum((s > lo) & (s <= hi)))
        groups.append(Group(rules=tuple(rules), train_count=count))
    return Partition(groups=tuple(groups), sources=(source,))
