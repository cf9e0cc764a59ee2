"""Supervised interval forest in the spirit of STSF.

Per estimator: a stratified bootstrap of the training set, then for each of
three representations (raw series, first differences, periodogram
magnitude) a supervised interval search. The search cuts an interval at a
random point and keeps whichever half has the larger Fisher score for its
mean, repeating until the interval is too short to cut. Mean, standard
deviation and slope over every kept interval feed a Gini decision tree.
"""

import numpy as np
from sklearn.tree import DecisionTreeClassifier

MIN_INTERVAL = 3
FISHER_EPS = 1e-12
REPRESENTATIONS = ("raw", "diff", "periodogram")


def fisher_score(values, labels) -> float:
    """Between-class variance of ``values`` over within-class variance.

    Both variances weight each class by its share of the samples; the
    denominator carries a 1e-12 guard.
    """
    values = np.asarray(values, dtype=np.float64)
    labels = np.asarray(labels)
    classes, inverse, counts = np.unique(labels, return_inverse=True, return_counts=True)
    if len(classes) < 2:
        raise ValueError("fisher_score needs at least two classes")
    weights = counts / len(values)
    means = np.bincount(inverse, weights=values) / counts
    grand = values.mean()
    between = np.sum(weights * (means - grand) ** 2)
    within = np.sum(weights * (np.bincount(inverse, weights=(values - means[inverse]) ** 2) / counts))
    return float(between / (within + FISHER_EPS))


def representations(X):
    X = np.asarray(X, dtype=np.float64)
    return (X, np.diff(X, axis=1), np.abs(np.fft.rfft(X, axis=1)))


def interval_features(R, start, end):
    """Mean, std and least-squares slope of ``R[:, start:end]``; shape (n, 3)."""
    seg = R[:, start:end]
    m = end - start
    mean = seg.mean(axis=1)
    std = seg.std(axis=1)
    if m > 1:
        t = np.arange(m) - (m - 1) / 2.0
        slope = (seg - mean[:, None]) @ t / (t @ t)
    else:
        slope = np.zeros(len(seg))
    return np.column_stack([mean, std, slope])


def _interval_means(cumsum, start, end):
    return (cumsum[:, end] - cumsum[:, start]) / (end - start)


def supervised_intervals(R, y, rng):
    """Kept (start, end) half-open intervals for one representation."""
    length = R.shape[1]
    if length < 2 * MIN_INTERVAL:
        return [(0, length)] if length > 0 else []
    cumsum = np.concatenate([np.zeros((len(R), 1)), np.cumsum(R, axis=1)], axis=1)
    cut = int(rng.integers(MIN_INTERVAL, length - MIN_INTERVAL + 1))
    kept = []
    for start, end in ((0, cut), (cut, length)):
        kept.append((start, end))
        while end - start >= 2 * MIN_INTERVAL:
            cut = int(rng.integers(start + MIN_INTERVAL, end - MIN_INTERVAL + 1))
            left = fisher_score(_interval_means(cumsum, start, cut), y)
            right = fisher_score(_interval_means(cumsum, cut, end), y)
            start, end = (start, cut) if left >= right else (cut, end)
            kept.append((start, end))
    return kept


def _features(reps, intervals):
    cols = [interval_features(reps[r], s, e) for r, s, e in intervals]
    return np.hstack(cols) if cols else np.zeros((len(reps[0]), 0))


def _stratified_bootstrap(y, rng):
    picks = []
    for cls in np.unique(y):
        members = np.flatnonzero(y == cls)
        picks.append(rng.choice(members, size=len(members), replace=True))
    return np.sort(np.concatenate(picks))


def fit_forest(X, y, classes, n_estimators=50, seed=0):
    reps = representations(X)
    class_index = {c: k for k, c in enumerate(classes)}
    yk = np.array([class_index[v] for v in y])
    estimators = []
    for e in range(n_estimators):
        rng = np.random.default_rng([int(seed), e])
        bag = _stratified_bootstrap(yk, rng)
        bag_reps = [R[bag] for R in reps]
        intervals = [
            (r, s, t)
            for r, R in enumerate(bag_reps)
            for s, t in supervised_intervals(R, yk[bag], rng)
        ]
        F = _features(bag_reps, intervals)
        tree = DecisionTreeClassifier(criterion="gini", random_state=int(rng.integers(2**31)))
        tree.fit(F, yk[bag])
        t = tree.tree_
        leaf_class = tree.classes_[np.argmax(t.value[:, 0, :], axis=1)]
        estimators.append({
            "intervals": [list(iv) for iv in intervals],
            "left": t.children_left.astype(np.int64),
            "right": t.children_right.astype(np.int64),
            "feature": t.feature.astype(np.int64),
            "threshold": t.threshold.astype(np.float64),
            "leaf_class": leaf_class.astype(np.int64),
        })
    return estimators


def _tree_predict(est, F):
    # sklearn compares float32 features against its thresholds
    F = F.astype(np.float32)
    left, right = np.asarray(est["left"]), np.asarray(est["right"])
    feature, threshold = np.asarray(est["feature"]), np.asarray(est["threshold"])
    node = np.zeros(len(F), dtype=np.int64)
    active = left[node] != -1
    rows = np.arange(len(F))
    while active.any():
        idx = rows[active]
        cur = node[idx]
        go_left = F[idx, feature[cur]] <= threshold[cur]
        node[idx] = np.where(go_left, left[cur], right[cur])
        active = left[node] != -1
    return np.asarray(est["leaf_class"])[node]


def vote_shares(estimators, X, n_classes):
    reps = representations(X)
    votes = np.zeros((len(reps[0]), n_classes))
    rows = np.arange(len(reps[0]))
    for est in estimators:
        F = _features(reps, [tuple(iv) for iv in est["intervals"]])
        votes[rows, _tree_predict(est, F)] += 1.0
    return votes / len(estimators)
