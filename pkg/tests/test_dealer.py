"""Provisioning: determinism, serialisation, exact consumption."""

import numpy as np
import pytest

from emcomp.dealer import (
    MaterialError,
    PartyMaterial,
    deserialize_material,
    provision,
    serialize_material,
)
from emcomp.protocol import Embedding, EmbeddingDb, ProtocolConfig, run_simulated
from emcomp.ring import RingConfig

CFG = RingConfig(ell=64, frac=16)


def _instance(m, n, seed):
    rng = np.random.default_rng(seed)
    mat = rng.normal(size=(m, n))
    mat /= np.linalg.norm(mat, axis=1, keepdims=True)
    q = rng.normal(size=n)
    return Embedding(q / np.linalg.norm(q)), EmbeddingDb([Embedding(r) for r in mat])


def test_same_seed_identical_files():
    a0, a1 = provision("fss", "bit", "division", 3, 4, CFG, seed=99)
    b0, b1 = provision("fss", "bit", "division", 3, 4, CFG, seed=99)
    assert serialize_material(a0) == serialize_material(b0)
    assert serialize_material(a1) == serialize_material(b1)
    c0, _ = provision("fss", "bit", "division", 3, 4, CFG, seed=100)
    assert serialize_material(a0) != serialize_material(c0)


def test_serialisation_roundtrip_runs_protocol():
    query, db = _instance(3, 4, 0)
    for variant in ("fss", "ss"):
        for mode in ("indices", "bit"):
            pcfg = ProtocolConfig(threshold=0.2, mode=mode, variant=variant, ring=CFG)
            mat0, mat1 = provision(variant, mode, "division", db.m, db.n, CFG, seed=5)
            r0 = deserialize_material(serialize_material(mat0))
            r1 = deserialize_material(serialize_material(mat1))
            out_direct, _ = run_simulated(query, db, pcfg, seed=5)
            out_loaded, _ = run_simulated(query, db, pcfg, seed=5, materials=(r0, r1))
            if mode == "indices":
                assert np.array_equal(out_direct.indices, out_loaded.indices)
            else:
                assert out_direct.bit == out_loaded.bit


def test_every_bundle_consumed_with_zero_remainder():
    # provision(m=1, n=2) then one run consumes everything, nothing left over
    query, db = _instance(1, 2, 1)
    for variant in ("fss", "ss"):
        for mode in ("indices", "bit"):
            pcfg = ProtocolConfig(mode=mode, variant=variant, ring=CFG)
            mats = provision(variant, mode, "division", 1, 2, CFG, seed=7)
            run_simulated(query, db, pcfg, seed=7, materials=mats)  # asserts inside
            for mat in mats:
                mat.assert_exhausted()


def test_empty_db_rejected():
    with pytest.raises(ValueError):
        provision("fss", "indices", "division", 0, 4, CFG, seed=1)


def test_undersized_dimension_rejected():
    with pytest.raises(ValueError):
        provision("fss", "indices", "division", 1, 1, CFG, seed=1)


def test_missing_material_detected():
    mat0, _ = provision("fss", "indices", "division", 1, 2, CFG, seed=2)
    mat0.take("cmp")
    with pytest.raises(MaterialError):
        mat0.take("cmp")
    with pytest.raises(MaterialError):
        mat0.take("not-a-bundle")
    with pytest.raises(MaterialError):
        mat0.assert_exhausted()


def test_header_counts_match_plan():
    mat0, _ = provision("ss", "bit", "division", 2, 3, CFG, seed=3)
    blob = serialize_material(mat0)
    assert blob[:4] == b"EMC1"
    loaded = deserialize_material(blob)
    assert loaded.meta.m == 2 and loaded.meta.n == 3
    assert loaded.meta.variant == "ss" and loaded.meta.mode == "bit"
    assert sorted(loaded.names()) == sorted(mat0.names())


def test_mode_material_differs():
    ind, _ = provision("fss", "indices", "division", 2, 3, CFG, seed=4)
    bit, _ = provision("fss", "bit", "division", 2, 3, CFG, seed=4)
    assert "pos" in bit.names() and "pos" not in ind.names()
