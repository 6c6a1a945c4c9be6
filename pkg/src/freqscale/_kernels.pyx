# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled block coding kernel; see _kernels_py for the shared contract.

Quantization and dequantization reuse numpy's vectorized arithmetic with the
same expressions as the fallback, which keeps the two paths bit-identical.
Only the zigzag rate accumulation (last-nonzero scan plus signed exp-Golomb
code lengths), which is branchy and gather-heavy, runs as a compiled loop.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

cdef extern from *:
    """
    #if defined(__GNUC__) || defined(__clang__)
    #define FREQSCALE_BITLEN(u) (64 - __builtin_clzll(u))
    #else
    static int FREQSCALE_BITLEN(unsigned long long u) {
        int n = 0;
        while (u) { u >>= 1; n++; }
        return n;
    }
    #endif
    """
    int FREQSCALE_BITLEN(unsigned long long u) nogil


cdef long long _rate_bits(const long long[:, ::1] flat,
                          const long long[::1] scan) except -1 nogil:
    cdef Py_ssize_t n = flat.shape[0]
    cdef Py_ssize_t area = scan.shape[0]
    cdef long long total = 0
    cdef long long value, mapped
    cdef Py_ssize_t b, p, last

    for b in range(n):
        last = -1
        for p in range(area - 1, -1, -1):
            if flat[b, scan[p]] != 0:
                last = p
                break
        total += 8
        for p in range(last + 1):
            value = flat[b, scan[p]]
            mapped = 2 * value - 1 if value > 0 else -2 * value
            if mapped >= (<long long> 1) << 44:
                with gil:
                    raise ValueError(
                        "quantization index magnitude too large for rate surrogate")
            total += 2 * FREQSCALE_BITLEN(<unsigned long long> (mapped + 1)) - 1
    return total


def code_blocks(coeffs, steps, scan):
    cdef cnp.ndarray[double, ndim=3, mode="c"] carr = np.ascontiguousarray(
        coeffs, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2, mode="c"] sarr = np.ascontiguousarray(
        steps, dtype=np.float64)
    cdef cnp.ndarray[long long, ndim=1, mode="c"] zarr = np.ascontiguousarray(
        scan, dtype=np.int64)

    indices = np.floor(carr / sarr + 0.5).astype(np.int64)
    dequantized = indices * sarr

    cdef const long long[:, ::1] flat = indices.reshape(indices.shape[0], -1)
    cdef const long long[::1] zv = zarr
    cdef long long total

    with nogil:
        total = _rate_bits(flat, zv)
    return int(total), indices, dequantized
