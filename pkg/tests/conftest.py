"""Shared fixtures: small meshes, a small generator and the synthetic scene."""

import numpy as np
import pytest

from uvtex.fixtures import head_mesh, make_fixture
from uvtex.generator.corpus import synth_corpus
from uvtex.generator.model import fit_pca
from uvtex.geometry.mesh import Mesh

SMALL_SIZE = 16


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def head():
    return head_mesh(segments=24, rings=16)


@pytest.fixture
def quad():
    """Unit square in the z = 0 plane, UVs equal to (x, y)."""
    return Mesh(
        vertices=[[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]],
        triangles=[[0, 1, 2], [0, 2, 3]],
        uv_corners=[[[0, 0], [1, 0], [1, 1]], [[0, 0], [1, 1], [0, 1]]],
    )


@pytest.fixture(scope="session")
def small_corpus():
    return synth_corpus(None, 12, SMALL_SIZE, seed=3)


@pytest.fixture(scope="session")
def small_model(small_corpus):
    return fit_pca(small_corpus, 4, seed=7)


@pytest.fixture(scope="session")
def scene(tmp_path_factory):
    return make_fixture(tmp_path_factory.mktemp("scene"))
