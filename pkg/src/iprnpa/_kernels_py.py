"""NumPy implementation of the contribution-table kernels.

Entry ``(p, r, e, l, n)`` of the table is always evaluated as
``(((A[p,r] + Ue[p,e,r]) + Ul[p,l,r]) + Un[p,n,r]) + D[p,e,l,n]`` so that every
backend produces bit-identical values.  Masked or infinite entries are absent.
"""
from __future__ import annotations

import numpy as np


def table_block(A, Ue, Ul, Un, D, mask, p):
    """Values for one patient as an (R, E, L, N) array; absent entries are inf."""
    v = A[p][:, None, None, None] + Ue[p].T[:, :, None, None]
    v = v + Ul[p].T[:, None, :, None]
    v = v + Un[p].T[:, None, None, :]
    v = v + D[p][None, :, :, :]
    if mask is not None:
        v = np.where(mask[p].astype(bool), v, np.inf)
    return v


def argmin_entry(A, Ue, Ul, Un, D, mask=None):
    """First minimal entry in (patient, room, early, late, night) order.

    Returns ``(p, r, e, l, n, value)`` or ``None`` when every entry is absent.
    """
    best = np.inf
    arg = None
    for p in range(A.shape[0]):
        if not np.isfinite(A[p]).any():
            continue
        v = table_block(A, Ue, Ul, Un, D, mask, p)
        k = int(np.argmin(v))
        val = float(v.flat[k])
        if val < best:
            best = val
            arg = (p, *np.unravel_index(k, v.shape))
    if arg is None:
        return None
    return (*(int(i) for i in arg), best)


def materialize(A, Ue, Ul, Un, D, mask=None):
    """Full (P, R, E, L, N) value tensor."""
    out = np.empty((A.shape[0], A.shape[1], Ue.shape[1], Ul.shape[1], Un.shape[1]))
    for p in range(A.shape[0]):
        out[p] = table_block(A, Ue, Ul, Un, D, mask, p)
    return out
