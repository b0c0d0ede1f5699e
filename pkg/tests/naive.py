"""Loop-level transcription of the estimator, used as an independent oracle."""

import math

from flir.spectral import gamma


def naive_estimate(records, alpha, nu=0.0):
    """``records`` is a list of ``(y, X, W)`` with ``X``/``W`` as ``{k: complex}`` dicts."""
    n = len(records)
    ks = sorted(records[0][1])
    out = {}
    for k in ks:
        c = sum(X[k].conjugate() * W[k] for _, X, W in records) / n
        w = sum(abs(W[k]) ** 2 for _, _, W in records) / n
        weight = c.conjugate() / w if w >= alpha else 0.0
        inst = [weight * W[k] for _, _, W in records]
        lam = sum(abs(v) ** 2 for v in inst) / n
        g = sum(y * v for (y, _, _), v in zip(records, inst)) / n
        keep = lam / math.pow(gamma(k), nu) >= alpha
        out[k] = g / lam if keep else 0j
    return out


def records_of(sample):
    return [(y, X.to_dict(), W.to_dict()) for y, X, W in sample.records()]
