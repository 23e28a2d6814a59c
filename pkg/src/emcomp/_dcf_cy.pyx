# cython: boundscheck=False, wraparound=False, language_level=3
"""Compiled kernel: thin wrapper over the AES-NI core in dcf_core.h.

Import fails (and the package falls back to the Python kernel) when the CPU
lacks AES-NI.  Output is bit-identical to emcomp._dcf_py.
"""

import numpy as np

from libc.stdint cimport uint8_t, uint64_t

cdef extern from "dcf_core.h":
    void emcomp_init_keys(const uint8_t *keys4x16) nogil
    int emcomp_cpu_ok() nogil
    uint64_t emcomp_eval_one(int party, const uint8_t *key, uint64_t x,
                             int in_bits, uint64_t omask) nogil
    void emcomp_gen_one(uint64_t alpha, uint64_t beta, int in_bits,
                        uint64_t omask, const uint8_t *root0,
                        const uint8_t *root1, uint8_t *k0, uint8_t *k1) nogil

LEVEL_BYTES = 26
HEADER_BYTES = 16
FINAL_BYTES = 8

if not emcomp_cpu_ok():
    raise ImportError("AES-NI not available on this CPU")


def _init() -> None:
    from .prf import PRG_KEYS
    cdef bytes blob = b"".join(PRG_KEYS)
    emcomp_init_keys(<const uint8_t *>blob)


_init()


def key_size(int in_bits) -> int:
    return HEADER_BYTES + LEVEL_BYTES * in_bits + FINAL_BYTES


cdef uint64_t _omask(int out_bits):
    if out_bits >= 64:
        return <uint64_t>0xFFFFFFFFFFFFFFFF
    return (<uint64_t>1 << out_bits) - 1


def gen_batch(alphas, betas, int in_bits, int out_bits, root0, root1):
    cdef uint64_t[::1] av = np.ascontiguousarray(alphas, dtype=np.uint64)
    cdef uint64_t[::1] bv = np.ascontiguousarray(betas, dtype=np.uint64)
    cdef const uint8_t[:, ::1] r0 = np.ascontiguousarray(root0, dtype=np.uint8)
    cdef const uint8_t[:, ::1] r1 = np.ascontiguousarray(root1, dtype=np.uint8)
    cdef Py_ssize_t n = av.shape[0]
    cdef int size = key_size(in_bits)
    k0_arr = np.zeros((n, size), dtype=np.uint8)
    k1_arr = np.zeros((n, size), dtype=np.uint8)
    cdef uint8_t[:, ::1] k0 = k0_arr
    cdef uint8_t[:, ::1] k1 = k1_arr
    cdef uint64_t om = _omask(out_bits)
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            emcomp_gen_one(av[i], bv[i], in_bits, om, &r0[i, 0], &r1[i, 0],
                           &k0[i, 0], &k1[i, 0])
    return k0_arr, k1_arr


def eval_batch(int party, keys, xs, int in_bits, int out_bits):
    cdef const uint8_t[:, ::1] kv = np.ascontiguousarray(keys, dtype=np.uint8)
    cdef uint64_t[::1] xv = np.ascontiguousarray(xs, dtype=np.uint64)
    cdef Py_ssize_t n = kv.shape[0]
    if kv.shape[1] != key_size(in_bits):
        raise ValueError("key array shape does not match in_bits")
    out_arr = np.empty(n, dtype=np.uint64)
    cdef uint64_t[::1] out = out_arr
    cdef uint64_t om = _omask(out_bits)
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            out[i] = emcomp_eval_one(party, &kv[i, 0], xv[i], in_bits, om)
    return out_arr
