"""Pure-numpy fallback for :mod:`quadcurl._jetkernels` (same signatures)."""

import numpy as np

_CHUNK = 1 << 14


def _starts(target):
    return np.flatnonzero(np.r_[True, np.diff(target) != 0])


def jet_mul(a, b, target, left, right, ncoef):
    # triples are sorted by target and every target occurs (alpha = gamma, beta = 0)
    starts = _starts(target)
    out = np.empty((a.shape[0], ncoef))
    for s in range(0, a.shape[0], _CHUNK):
        sl = slice(s, s + _CHUNK)
        out[sl] = np.add.reduceat(a[sl][:, left] * b[sl][:, right], starts, axis=1)
    return out


def jet_horner(delta, series, target, left, right, ncoef):
    acc = np.zeros((delta.shape[0], ncoef))
    acc[:, 0] = series[:, -1]
    for m in range(series.shape[1] - 2, -1, -1):
        acc = jet_mul(acc, delta, target, left, right, ncoef)
        acc[:, 0] += series[:, m]
    return acc
