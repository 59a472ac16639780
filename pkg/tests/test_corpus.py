import json

import numpy as np
import pytest

from orliczps.corpus import (
    FIELD_KINDS,
    body_from_spec,
    build_bodies,
    build_phis,
    default_config,
    field_from_spec,
    load_config,
    profile,
)
from orliczps.affine_ball import make_quadrature
from orliczps.field import Grid, support_volume
from orliczps.orlicz import validate
from orliczps.star import StarBody


def test_default_corpus_sizes():
    cfg = default_config(0)
    assert len(cfg["fields"]) == 20
    assert len(cfg["bodies"]) == 12
    assert sum(s.get("radial", False) for s in cfg["fields"]) == 5
    assert len({s["name"] for s in cfg["fields"]}) == 20


def test_default_fields_are_admissible_on_the_default_grid():
    cfg = default_config(0)
    g = Grid.square(1.0, 64)
    for spec in cfg["fields"]:
        f = field_from_spec(g, spec)
        assert f.max() > 0
        assert support_volume(f) < 0.6 * 4.0
        assert f.meta["name"] == spec["name"]


def test_profiles_are_one_at_zero_and_vanish_at_one():
    t = np.array([0.0, 1.0, 1.5])
    for name in ("cone", "quadratic", "biquadratic", "smooth", "plateau"):
        v = profile(name)(t)
        assert v[0] == 1.0 and v[1] == 0.0 and v[2] == 0.0
    with pytest.raises(ValueError):
        profile("spline")


def test_unknown_kinds_rejected():
    assert "radial" in FIELD_KINDS
    with pytest.raises(ValueError):
        field_from_spec(Grid.square(1.0, 16), {"kind": "teapot"})
    with pytest.raises(ValueError):
        body_from_spec(make_quadrature(2, 64), {"kind": "teapot"})


def test_seeded_generation_is_deterministic():
    a = default_config(5)["fields"]
    b = default_config(5)["fields"]
    c = default_config(6)["fields"]
    assert a == b
    assert a != c
    g = Grid.square(1.0, 48)
    spec = {"kind": "noise", "seed": 9, "radius": 0.5}
    np.testing.assert_array_equal(field_from_spec(g, spec).values, field_from_spec(g, spec).values)


def test_bodies_and_phis_build():
    cfg = default_config(0)
    cfg["quadrature"]["count"] = 128
    bodies = build_bodies(cfg)
    assert all(isinstance(K, StarBody) and np.all(K.radial > 0) for K in bodies)
    assert bodies[0].name == "disk"
    for phi in build_phis(cfg):
        assert validate(phi, 10, 64).passed


def test_load_config_fills_defaults(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({"seed": 3, "grid": {"resolution": 32}}))
    cfg = load_config(p)
    assert cfg["seed"] == 3 and cfg["grid"]["resolution"] == 32
    assert len(cfg["phis"]) == 6
