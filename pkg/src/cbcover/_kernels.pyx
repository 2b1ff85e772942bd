# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled contiguous pattern matching; same contract as ``_pymatch``."""

from libc.stdlib cimport malloc, calloc, free


def first_match_ends(codes, patterns):
    cdef Py_ssize_t n = len(codes)
    cdef Py_ssize_t m = len(patterns)
    cdef Py_ssize_t total = 0
    cdef Py_ssize_t i, j, k, p, length, start, vocab = 0
    for pat in patterns:
        total += len(pat)
        for c in pat:
            if c + 1 > vocab:
                vocab = c + 1
    result = [-1] * m
    if n == 0 or m == 0 or vocab == 0:
        return result

    cdef int *trace = <int *> malloc(n * sizeof(int))
    cdef int *flat = <int *> malloc((total + 1) * sizeof(int))
    cdef Py_ssize_t *offset = <Py_ssize_t *> malloc((m + 1) * sizeof(Py_ssize_t))
    cdef Py_ssize_t *found = <Py_ssize_t *> malloc((m + 1) * sizeof(Py_ssize_t))
    # patterns bucketed by their first code (CSR layout)
    cdef Py_ssize_t *head = <Py_ssize_t *> calloc(vocab + 1, sizeof(Py_ssize_t))
    cdef Py_ssize_t *bucket = <Py_ssize_t *> malloc((m + 1) * sizeof(Py_ssize_t))
    cdef Py_ssize_t *fill = <Py_ssize_t *> calloc(vocab + 1, sizeof(Py_ssize_t))
    cdef Py_ssize_t remaining = 0
    cdef int c0
    try:
        for i in range(n):
            trace[i] = codes[i]
        k = 0
        for p in range(m):
            offset[p] = k
            found[p] = -1
            pat = patterns[p]
            for c in pat:
                flat[k] = c
                k += 1
            if len(pat) > 0:
                head[flat[offset[p]] + 1] += 1
                remaining += 1
        offset[m] = k
        for i in range(vocab):
            head[i + 1] += head[i]
        for p in range(m):
            if offset[p + 1] > offset[p]:
                c0 = flat[offset[p]]
                bucket[head[c0] + fill[c0]] = p
                fill[c0] += 1

        for start in range(n):
            c0 = trace[start]
            if c0 < 0 or c0 >= vocab:
                continue
            for j in range(head[c0], head[c0 + 1]):
                p = bucket[j]
                if found[p] >= 0:
                    continue
                length = offset[p + 1] - offset[p]
                if start + length > n:
                    continue
                k = 1
                while k < length and trace[start + k] == flat[offset[p] + k]:
                    k += 1
                if k == length:
                    found[p] = start + length - 1
                    remaining -= 1
            if remaining == 0:
                break
        for p in range(m):
            result[p] = found[p]
    finally:
        free(trace)
        free(flat)
        free(offset)
        free(found)
        free(head)
        free(bucket)
        free(fill)
    return result
