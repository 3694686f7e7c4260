# cython: language_level=3
"""Compiled kernels for the per-round hot loops.

Mirrors :mod:`frodo._pycore` function for function. The fallback sums
through BLAS, so the two backends agree to rounding error, not bitwise.
"""

cimport cython
import numpy as np


@cython.boundscheck(False)
@cython.wraparound(False)
def weighted_ring_sum(const double[::1] weights, const double[:, ::1] ring,
                      Py_ssize_t head, Py_ssize_t count, double[::1] out):
    """out = sum_{n < count} weights[n] * ring[(head - n) mod capacity]."""
    cdef Py_ssize_t cap = ring.shape[0]
    cdef Py_ssize_t dim = ring.shape[1]
    cdef Py_ssize_t n, j, row
    cdef double w
    for j in range(dim):
        out[j] = 0.0
    row = head
    for n in range(count):
        w = weights[n]
        for j in range(dim):
            out[j] += w * ring[row, j]
        row -= 1
        if row < 0:
            row = cap - 1


@cython.boundscheck(False)
@cython.wraparound(False)
def memory_descent(double[::1] x, const double[::1] grad,
                   const double[::1] weights, const double[:, ::1] ring,
                   Py_ssize_t head, Py_ssize_t count,
                   double alpha, double beta, double[::1] scratch):
    """In place: x <- (x - alpha*grad) - beta*M, M = ring-weighted history sum."""
    cdef Py_ssize_t dim = x.shape[0]
    cdef Py_ssize_t j
    weighted_ring_sum(weights, ring, head, count, scratch)
    for j in range(dim):
        x[j] = (x[j] - alpha * grad[j]) - beta * scratch[j]


@cython.boundscheck(False)
@cython.wraparound(False)
def consensus_csr(const Py_ssize_t[::1] indptr, const Py_ssize_t[::1] indices,
                  const double[:, ::1] states, double[:, ::1] out):
    """out[i] = mean of states[j] over j in indices[indptr[i]:indptr[i+1]]."""
    cdef Py_ssize_t n_agents = out.shape[0]
    cdef Py_ssize_t dim = states.shape[1]
    cdef Py_ssize_t i, p, j, src
    cdef double deg
    for i in range(n_agents):
        for j in range(dim):
            out[i, j] = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            src = indices[p]
            for j in range(dim):
                out[i, j] += states[src, j]
        deg = <double>(indptr[i + 1] - indptr[i])
        for j in range(dim):
            out[i, j] = out[i, j] / deg
