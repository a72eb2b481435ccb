import functools

import numpy as np
import pytest

from ncgfdm.filterbank import build_transmit_matrix, prototype_filter
from ncgfdm.params import WaveformParams, qam_constellation
from ncgfdm.smoothing import build_basis, build_nc_operators


@functools.lru_cache(maxsize=32)
def built(K, M, n_cp=0, beta=0.0, V=0, filter_kind="rc"):
    """Cached (params, filter, transmit matrix) for a configuration."""
    p = WaveformParams(K=K, M=M, n_cp=n_cp, beta=beta, V=V, filter_kind=filter_kind)
    g = prototype_filter(p)
    return p, g, build_transmit_matrix(g, p)


@functools.lru_cache(maxsize=32)
def built_ops(K, M, n_cp, beta, V):
    """Cached full operator set."""
    p, g, tm = built(K, M, n_cp, beta, V)
    basis = build_basis(g, p)
    ops = build_nc_operators(tm, basis, p, is_unitary=g.is_dirichlet)
    return p, g, tm, ops


@pytest.fixture(scope="session")
def qam16():
    return qam_constellation(16)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
