# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled argmin over the contribution table.

Same summation order as the NumPy backend; (patient, room) blocks whose lower
bound cannot beat the incumbent are skipped without changing the result.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY, fabs

cnp.import_array()


def argmin_entry(double[:, ::1] A, double[:, :, ::1] Ue, double[:, :, ::1] Ul,
                 double[:, :, ::1] Un, double[:, :, :, ::1] D, mask=None):
    cdef Py_ssize_t P = A.shape[0], R = A.shape[1]
    cdef Py_ssize_t E = Ue.shape[1], L = Ul.shape[1], N = Un.shape[1]
    cdef Py_ssize_t p, r, e, l, n
    cdef double best = INFINITY, a, s1, s2, v, lb, me, ml, mn
    cdef Py_ssize_t bp = -1, br = -1, be = -1, bl = -1, bn = -1
    cdef unsigned char[:, :, :, :, ::1] M
    cdef bint use_mask = mask is not None
    cdef double[::1] minD = np.empty(P)
    if use_mask:
        M = mask
    for p in range(P):
        minD[p] = INFINITY
        for e in range(E):
            for l in range(L):
                for n in range(N):
                    if D[p, e, l, n] < minD[p]:
                        minD[p] = D[p, e, l, n]
    with nogil:
        for p in range(P):
            for r in range(R):
                a = A[p, r]
                if a == INFINITY:
                    continue
                if best != INFINITY:
                    me = INFINITY
                    for e in range(E):
                        if Ue[p, e, r] < me:
                            me = Ue[p, e, r]
                    ml = INFINITY
                    for l in range(L):
                        if Ul[p, l, r] < ml:
                            ml = Ul[p, l, r]
                    mn = INFINITY
                    for n in range(N):
                        if Un[p, n, r] < mn:
                            mn = Un[p, n, r]
                    lb = a + me + ml + mn + minD[p]
                    if lb > best + 1e-9 * (1.0 + fabs(best)):
                        continue
                for e in range(E):
                    s1 = a + Ue[p, e, r]
                    for l in range(L):
                        s2 = s1 + Ul[p, l, r]
                        for n in range(N):
                            if use_mask and not M[p, r, e, l, n]:
                                continue
                            v = (s2 + Un[p, n, r]) + D[p, e, l, n]
                            if v < best:
                                best = v
                                bp = p
                                br = r
                                be = e
                                bl = l
                                bn = n
    if bp < 0:
        return None
    return (bp, br, be, bl, bn, best)
