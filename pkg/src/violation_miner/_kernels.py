"""JIT-compiled inner loops for SGD training.

Both kernels apply the same simultaneous-update step as the per-pair
functions in `trainer` (gradients computed from pre-step parameters, then
applied); a test pins that equivalence. Single-threaded by design so that a
fixed seed reproduces matrices exactly.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def run_negative_sampling(w_in, w_out, centers, contexts, negatives, lrs):
    """One pass over pre-generated pairs with per-pair learning rates.
    negatives has one row of noise ids per pair (k may be 0).
    Returns the summed logistic loss."""
    n_pairs = centers.shape[0]
    k = negatives.shape[1]
    d = w_in.shape[1]
    grad_h = np.empty(d, dtype=np.float64)
    coef = np.empty(k + 1, dtype=np.float64)
    total_loss = 0.0
    for t in range(n_pairs):
        c = centers[t]
        o = contexts[t]
        lr = lrs[t]
        # gradient coefficients from pre-step parameters
        s = 0.0
        for j in range(d):
            s += w_in[c, j] * w_out[o, j]
        if s >= 0.0:
            total_loss += math.log1p(math.exp(-s))
            sig = 1.0 / (1.0 + math.exp(-s))
        else:
            total_loss += -s + math.log1p(math.exp(s))
            e = math.exp(s)
            sig = e / (1.0 + e)
        coef[0] = sig - 1.0
        for j in range(d):
            grad_h[j] = coef[0] * w_out[o, j]
        for i in range(k):
            neg = negatives[t, i]
            s = 0.0
            for j in range(d):
                s += w_in[c, j] * w_out[neg, j]
            if s >= 0.0:
                total_loss += s + math.log1p(math.exp(-s))
                sig = 1.0 / (1.0 + math.exp(-s))
            else:
                total_loss += math.log1p(math.exp(s))
                e = math.exp(s)
                sig = e / (1.0 + e)
            coef[i + 1] = sig
            for j in range(d):
                grad_h[j] += sig * w_out[neg, j]
        # apply: w_in[c] is untouched until last, so rows see the old h
        for j in range(d):
            w_out[o, j] -= lr * coef[0] * w_in[c, j]
        for i in range(k):
            neg = negatives[t, i]
            for j in range(d):
                w_out[neg, j] -= lr * coef[i + 1] * w_in[c, j]
        for j in range(d):
            w_in[c, j] -= lr * grad_h[j]
    return total_loss


@njit(cache=True)
def run_full_softmax(w_in, w_out, centers, contexts, lrs):
    """Full softmax pass: every output row participates in each step.
    Returns the summed cross-entropy loss."""
    n_pairs = centers.shape[0]
    n_vocab = w_out.shape[0]
    d = w_in.shape[1]
    logits = np.empty(n_vocab, dtype=np.float64)
    grad_h = np.empty(d, dtype=np.float64)
    total_loss = 0.0
    for t in range(n_pairs):
        c = centers[t]
        o = contexts[t]
        lr = lrs[t]
        m = -np.inf
        for v in range(n_vocab):
            s = 0.0
            for j in range(d):
                s += w_in[c, j] * w_out[v, j]
            logits[v] = s
            if s > m:
                m = s
        z = 0.0
        for v in range(n_vocab):
            z += math.exp(logits[v] - m)
        log_z = m + math.log(z)
        total_loss += log_z - logits[o]
        for j in range(d):
            grad_h[j] = 0.0
        # each output row is read once, so it can be updated in place
        for v in range(n_vocab):
            e = math.exp(logits[v] - log_z)
            if v == o:
                e -= 1.0
            for j in range(d):
                grad_h[j] += e * w_out[v, j]
                w_out[v, j] -= lr * e * w_in[c, j]
        for j in range(d):
            w_in[c, j] -= lr * grad_h[j]
    return total_loss
