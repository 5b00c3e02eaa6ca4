# cython: language_level=3
"""Compiled contraction kernels for truncated expansion values.

Same contract as _kernels_py.contract_batch, specialised for float64 and
multiplicities k <= 6.  Zero coefficients are skipped (Legendre parity makes
the tensors roughly half zeros), which the einsum fallback cannot do.
"""
import numpy as np

cimport numpy as cnp

cnp.import_array()


def contract_batch(C, zetas, plan):
    cdef int k = C.ndim
    if k > 6:
        raise ValueError("multiplicity above 6 not supported")
    cdef cnp.ndarray[cnp.float64_t, ndim=1] flat = np.ascontiguousarray(C, dtype=np.float64).ravel()
    cdef int pp = C.shape[0]
    cdef int batch = zetas[0].shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=3] z = np.empty((k, batch, pp))
    cdef int g
    for g in range(k):
        z[g, :, :] = zetas[g]
    out = np.zeros(batch)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] acc = out
    # encode each matching: position -> reduced-axis id; free mask
    cdef cnp.ndarray[cnp.int32_t, ndim=1] axis_of = np.empty(k, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] idx = np.empty(k, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] jval = np.empty(k, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] free_pos = np.empty(k, dtype=np.int32)
    cdef int naxes, nfree, sign, b, a, pos, flat_idx, done
    cdef double c, prod
    cdef double[:, :, :] zv = z
    cdef double[:] accv = acc
    cdef double[:] flatv = flat
    cdef int[:] axv = axis_of
    cdef int[:] idxv = idx
    cdef int[:] jv = jval
    cdef int[:] fv = free_pos

    for pairs, free in plan:
        # assign reduced axes: one per unpaired-or-pair-leader position
        naxes = 0
        for pos in range(k):
            axv[pos] = -1
        for pos in range(k):
            if axv[pos] < 0:
                axv[pos] = naxes
                naxes += 1
                for (r, q) in pairs:
                    if r == pos:
                        axv[q] = axv[pos]
        nfree = len(free)
        for g in range(nfree):
            fv[g] = free[g]
        sign = -1 if (len(pairs) % 2) else 1
        # odometer over the reduced index space of size pp**naxes
        for a in range(naxes):
            idxv[a] = 0
        done = 0
        while not done:
            for pos in range(k):
                jv[pos] = idxv[axv[pos]]
            flat_idx = 0
            for pos in range(k):
                flat_idx = flat_idx * pp + jv[pos]
            c = flatv[flat_idx]
            if c != 0.0:
                c = c * sign
                for b in range(batch):
                    prod = c
                    for g in range(nfree):
                        prod = prod * zv[fv[g], b, jv[fv[g]]]
                    accv[b] += prod
            # increment odometer
            a = naxes - 1
            while a >= 0:
                idxv[a] += 1
                if idxv[a] < pp:
                    break
                idxv[a] = 0
                a -= 1
            if a < 0:
                done = 1
    return out


BACKEND_NAME = "cython"
