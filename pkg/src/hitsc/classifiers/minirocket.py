"""Random-bias convolution transform with PPV pooling (MiniRocket style).

The kernel bank is fixed: the 84 length-9 kernels with weight -1 everywhere
except three positions weighted 2. Dilations grow exponentially up to the
series length; each kernel/dilation pair gets one or more biases taken as
quantiles of its convolution output on a subsample of the training series.
Every feature is the proportion of positive values (PPV) of
``conv(x) - bias``.
"""

from itertools import combinations

import numpy as np
from numba import njit

KERNEL_LENGTH = 9
NUM_KERNELS = 84
MAX_DILATIONS_PER_KERNEL = 32
BIAS_SUBSAMPLE = 64

# positions of the three weight-2 taps of each kernel
KERNEL_INDICES = np.array(list(combinations(range(KERNEL_LENGTH), 3)), dtype=np.int64)


def _dilations(length, per_kernel):
    max_exponent = max(0.0, np.log2(max(length - 1, 1) / (KERNEL_LENGTH - 1)))
    count = min(per_kernel, MAX_DILATIONS_PER_KERNEL)
    raw = np.logspace(0, max_exponent, count, base=2).astype(np.int64)
    dilations, per_dilation = np.unique(np.maximum(raw, 1), return_counts=True)
    per_dilation = (per_dilation * (per_kernel / count)).astype(np.int64)
    i = 0
    while per_dilation.sum() < per_kernel:
        per_dilation[i] += 1
        i = (i + 1) % len(per_dilation)
    return dilations, per_dilation


def _quantiles(n):
    # golden-ratio stride: a low-discrepancy sequence over (0, 1)
    phi = (np.sqrt(5.0) + 1.0) / 2.0
    return (np.arange(1, n + 1) * phi) % 1.0


def plan(length, num_features):
    """Lay out (dilation, kernel, padded, n_biases) for every kernel/dilation combo.

    Features beyond ``84 * (num_features // 84)`` are handed out one by one
    to the combos in order, so the total is exactly ``num_features``.
    """
    if num_features < NUM_KERNELS:
        raise ValueError(f"num_features must be at least {NUM_KERNELS}")
    per_kernel = num_features // NUM_KERNELS
    dilations, per_dilation = _dilations(length, per_kernel)
    combo_dilation, combo_kernel, combo_padded, combo_count = [], [], [], []
    for di, (d, count) in enumerate(zip(dilations, per_dilation)):
        for ki in range(NUM_KERNELS):
            padded = (di + ki) % 2 == 0 or length - (KERNEL_LENGTH - 1) * d <= 0
            combo_dilation.append(d)
            combo_kernel.append(ki)
            combo_padded.append(padded)
            combo_count.append(count)
    combo_count = np.array(combo_count, dtype=np.int64)
    extra = num_features - combo_count.sum()
    combo_count[np.arange(extra) % len(combo_count)] += 1
    return (
        np.array(combo_dilation, dtype=np.int64),
        np.array(combo_kernel, dtype=np.int64),
        np.array(combo_padded, dtype=np.bool_),
        combo_count,
    )


@njit(cache=True)
def _convolve(x, dilation, i0, i1, i2, padded, out):
    """Write the convolution of ``x`` into ``out``; returns the valid length."""
    L = x.shape[0]
    half = (KERNEL_LENGTH // 2) * dilation
    if padded:
        start, stop = 0, L
    else:
        start, stop = half, L - half
    m = 0
    for t in range(start, stop):
        acc = 0.0
        for k in range(KERNEL_LENGTH):
            j = t + (k - KERNEL_LENGTH // 2) * dilation
            if 0 <= j < L:
                v = x[j]
                if k == i0 or k == i1 or k == i2:
                    acc += 2.0 * v
                else:
                    acc -= v
        out[m] = acc
        m += 1
    return m


@njit(cache=True)
def _fit_biases(X, dilations, kernels, padded, counts, indices, quantiles):
    n, L = X.shape
    biases = np.empty(quantiles.shape[0])
    pool = np.empty(n * L)
    buf = np.empty(L)
    f = 0
    for c in range(dilations.shape[0]):
        ki = kernels[c]
        m = 0
        for s in range(n):
            used = _convolve(X[s], dilations[c], indices[ki, 0], indices[ki, 1],
                             indices[ki, 2], padded[c], buf)
            pool[m:m + used] = buf[:used]
            m += used
        sorted_pool = np.sort(pool[:m])
        for _ in range(counts[c]):
            # linear-interpolation quantile
            pos = quantiles[f] * (m - 1)
            lo = int(np.floor(pos))
            hi = min(lo + 1, m - 1)
            frac = pos - lo
            biases[f] = sorted_pool[lo] * (1.0 - frac) + sorted_pool[hi] * frac
            f += 1
    return biases


@njit(cache=True)
def _transform(X, dilations, kernels, padded, counts, indices, biases):
    n, L = X.shape
    out = np.empty((n, biases.shape[0]))
    buf = np.empty(L)
    for s in range(n):
        f = 0
        for c in range(dilations.shape[0]):
            ki = kernels[c]
            m = _convolve(X[s], dilations[c], indices[ki, 0], indices[ki, 1],
                          indices[ki, 2], padded[c], buf)
            for _ in range(counts[c]):
                b = biases[f]
                positive = 0
                for t in range(m):
                    if buf[t] > b:
                        positive += 1
                out[s, f] = positive / m
                f += 1
    return out


def fit_transform_params(X, num_features=512, seed=0):
    """Choose dilations, paddings and biases from training series ``X``."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    n, L = X.shape
    dilations, kernels, padded, counts = plan(L, num_features)
    rng = np.random.default_rng(seed)
    sub = np.sort(rng.choice(n, size=min(n, BIAS_SUBSAMPLE), replace=False))
    quantiles = _quantiles(num_features)
    biases = _fit_biases(X[sub], dilations, kernels, padded, counts, KERNEL_INDICES, quantiles)
    return {"length": L, "num_features": num_features, "biases": biases}


def apply_transform(params, X):
    X = np.ascontiguousarray(X, dtype=np.float64)
    dilations, kernels, padded, counts = plan(params["length"], params["num_features"])
    return _transform(X, dilations, kernels, padded, counts, KERNEL_INDICES,
                      np.asarray(params["biases"], dtype=np.float64))


def minirocket_transform(X, num_features=512, seed=0):
    """Fit the transform on ``X`` and return its ``n x num_features`` PPV features."""
    params = fit_transform_params(X, num_features, seed)
    return apply_transform(params, X)


def fit_ridge(F, y, classes, alpha=1.0):
    """One-vs-rest ridge least squares on standardized features with ±1 targets."""
    mean = F.mean(axis=0)
    scale = F.std(axis=0)
    scale[scale < 1e-12] = 1.0
    Z = (F - mean) / scale
    T = np.where(y[:, None] == np.asarray(classes)[None, :], 1.0, -1.0)
    t_mean = T.mean(axis=0)
    Tc = T - t_mean
    n, p = Z.shape
    if n < p:
        # dual form: W = Z' (Z Z' + a I)^-1 T
        coef = Z.T @ np.linalg.solve(Z @ Z.T + alpha * np.eye(n), Tc)
    else:
        coef = np.linalg.solve(Z.T @ Z + alpha * np.eye(p), Z.T @ Tc)
    coef = coef.T / scale[None, :]
    intercept = t_mean - coef @ mean
    return coef, intercept
