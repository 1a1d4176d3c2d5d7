import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from iprnpa import kernels
from iprnpa._kernels_py import argmin_entry as py_argmin, materialize

needs_compiled = pytest.mark.skipif("compiled" not in kernels.available_backends(),
                                    reason="compiled extension not built")


def random_blocks(rng, P, R, E, L, N, coarse, with_mask, inf_rate):
    draw = (lambda *s: rng.integers(0, 3, size=s).astype(float)) if coarse else (lambda *s: rng.normal(size=s))
    A = draw(P, R)
    A[rng.random((P, R)) < inf_rate] = np.inf
    Ue, Ul, Un = draw(P, E, R), draw(P, L, R), draw(P, N, R)
    D = draw(P, E, L, N)
    mask = (rng.random((P, R, E, L, N)) < 0.7).astype(np.uint8) if with_mask else None
    return A, Ue, Ul, Un, D, mask


def brute_argmin(A, Ue, Ul, Un, D, mask):
    vals = materialize(A, Ue, Ul, Un, D, mask)
    if not np.isfinite(vals).any():
        return None
    k = int(np.argmin(vals))
    return (*(int(i) for i in np.unravel_index(k, vals.shape)), float(vals.flat[k]))


shapes = st.tuples(*[st.integers(1, 4)] * 5)


@settings(max_examples=150, deadline=None)
@given(shapes, st.integers(0, 2 ** 31), st.booleans(), st.booleans(), st.sampled_from([0.0, 0.5, 1.0]))
def test_python_kernel_matches_brute_force(shape, seed, coarse, with_mask, inf_rate):
    blocks = random_blocks(np.random.default_rng(seed), *shape, coarse, with_mask, inf_rate)
    assert py_argmin(*blocks) == brute_argmin(*blocks)


@needs_compiled
@settings(max_examples=300, deadline=None)
@given(shapes, st.integers(0, 2 ** 31), st.booleans(), st.booleans(), st.sampled_from([0.0, 0.5, 1.0]))
def test_compiled_kernel_is_bit_identical(shape, seed, coarse, with_mask, inf_rate):
    blocks = random_blocks(np.random.default_rng(seed), *shape, coarse, with_mask, inf_rate)
    assert kernels.get_argmin("compiled")(*blocks) == py_argmin(*blocks)


def test_backend_selection():
    assert kernels.BACKEND in kernels.available_backends()
    assert kernels.get_argmin("python") is py_argmin
    with pytest.raises(ValueError):
        kernels.get_argmin("gpu")
