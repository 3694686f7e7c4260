"""Pure numpy fallback for :mod:`frodo._core`.

Same signatures and in-place semantics as the compiled kernels.
"""
import numpy as np


def weighted_ring_sum(weights, ring, head, count, out):
    """out = sum_{n < count} weights[n] * ring[(head - n) mod capacity]."""
    if count == 0:
        out[:] = 0.0
        return
    rows = (head - np.arange(count)) % ring.shape[0]
    np.dot(weights[:count], ring[rows], out=out)


def memory_descent(x, grad, weights, ring, head, count, alpha, beta, scratch):
    """In place: x <- (x - alpha*grad) - beta*M, M = ring-weighted history sum."""
    weighted_ring_sum(weights, ring, head, count, scratch)
    x[:] = (x - alpha * grad) - beta * scratch


def consensus_csr(indptr, indices, states, out):
    """out[i] = mean of states[j] over j in indices[indptr[i]:indptr[i+1]]."""
    for i in range(out.shape[0]):
        lo, hi = indptr[i], indptr[i + 1]
        acc = states[indices[lo]].copy()
        for p in range(lo + 1, hi):
            acc += states[indices[p]]
        out[i] = acc / (hi - lo)
