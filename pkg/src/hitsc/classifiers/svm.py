"""One-vs-rest L2-regularized hinge-loss linear classifier.

Each binary problem minimizes

    0.5 * ||w||^2 + (C / n) * sum_i max(0, 1 - y_i * w.x_i)

with the intercept folded into ``w`` as a constant unit feature. Averaging
the loss (rather than summing it) makes the optimum invariant to repeating
the training set. The dual is solved by coordinate descent over the box
``0 <= alpha_i <= C / n``.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _dual_cd(X, y, upper, max_epochs, tol, seed):
    n, d = X.shape
    np.random.seed(seed)
    alpha = np.zeros(n)
    w = np.zeros(d)
    sqnorm = np.empty(n)
    for i in range(n):
        sqnorm[i] = X[i] @ X[i]
    order = np.arange(n)
    gap = np.inf
    epochs = 0
    for epoch in range(max_epochs):
        epochs = epoch + 1
        np.random.shuffle(order)
        for i in order:
            if sqnorm[i] == 0.0:
                continue
            g = y[i] * (w @ X[i]) - 1.0
            a = alpha[i]
            if a == 0.0:
                pg = min(g, 0.0)
            elif a == upper:
                pg = max(g, 0.0)
            else:
                pg = g
            if pg != 0.0:
                a_new = min(max(a - g / sqnorm[i], 0.0), upper)
                delta = (a_new - a) * y[i]
                if delta != 0.0:
                    w += delta * X[i]
                alpha[i] = a_new
        # duality gap P(w) - D(alpha)
        ww = w @ w
        hinge = 0.0
        for i in range(n):
            m = 1.0 - y[i] * (w @ X[i])
            if m > 0.0:
                hinge += m
        primal = 0.5 * ww + upper * hinge
        dual = alpha.sum() - 0.5 * ww
        gap = primal - dual
        if gap < tol:
            break
    return w, gap, epochs


def fit_ovr(X, y, classes, C=10.0, max_epochs=1000, tol=1e-6, seed=0):
    """Fit one binary problem per class; returns (coef, intercept), shapes (k, L) and (k,).

    With exactly two classes a single problem is solved and mirrored, so the
    two decision scores are exact negatives.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    n = X.shape[0]
    Xa = np.hstack([X, np.ones((n, 1))])
    upper = C / n
    seed = int(seed) % (2**32)
    if len(classes) == 2:
        targets = [classes[1]]
    else:
        targets = list(classes)
    rows = []
    for k, cls in enumerate(targets):
        yk = np.where(y == cls, 1.0, -1.0)
        w, _, _ = _dual_cd(Xa, yk, upper, max_epochs, tol, (seed + k) % (2**32))
        rows.append(w)
    W = np.array(rows)
    if len(classes) == 2:
        W = np.vstack([-W[0], W[0]])
    return W[:, :-1].copy(), W[:, -1].copy()


def decision_function(coef, intercept, X):
    return np.asarray(X, dtype=np.float64) @ coef.T + intercept
