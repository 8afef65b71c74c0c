import json
import math

import numpy as np
import pytest

from gapcross.potentials import (
    DislocationPotential,
    InterfacePotential,
    MuffinTinPotential,
    RotatedPotential,
    ShiftedPotential,
    TrigPotential1D,
    default_potential_2d,
    default_step_potential,
)
from gapcross.specio import (
    SpecError,
    load_potential,
    manifest,
    pmap,
    potential_from_dict,
    potential_to_dict,
    write_csv,
    write_json,
)

SAMPLES = [
    default_step_potential(),
    TrigPotential1D(1.0, ((1, 2.0),), ((2, -0.5),)),
    default_potential_2d(),
    MuffinTinPotential(0.3, (0.5, 0.5), 50.0),
    DislocationPotential(default_potential_2d(), 0.25),
    RotatedPotential(default_potential_2d(), 0.1),
    InterfacePotential(ShiftedPotential(default_potential_2d(), 0.5, 0.0), default_potential_2d()),
]


@pytest.mark.parametrize("V", SAMPLES, ids=lambda V: type(V).__name__)
def test_roundtrip_through_json(V):
    d = json.loads(json.dumps(potential_to_dict(V)))
    W = potential_from_dict(d)
    pts = np.random.default_rng(1).uniform(-2, 2, (2, 50))
    if V.ndim == 1:
        assert np.allclose(V(pts[0]), W(pts[0]))
    else:
        assert np.allclose(V(*pts), W(*pts))


def test_toml_file_with_fraction_strings(tmp_path):
    p = tmp_path / "step.toml"
    p.write_text('[potential]\nkind = "step"\nlevels = [[0, "1/2", 10.0], ["1/2", 1, 0.0]]\n')
    V = load_potential(p)
    assert V(np.array([0.25, 0.75])) == pytest.approx([10.0, 0.0])


def test_rotation_by_tangent(tmp_path):
    p = tmp_path / "rot.json"
    p.write_text(json.dumps({"kind": "rotation", "tan": "3/4", "base": potential_to_dict(default_potential_2d())}))
    assert load_potential(p).theta == pytest.approx(math.atan(0.75))


def test_missing_file_names_the_path(tmp_path):
    with pytest.raises(SpecError, match="nope.toml"):
        load_potential(tmp_path / "nope.toml")


@pytest.mark.parametrize("d", [{"levels": []}, {"kind": "blob"}, {"kind": "muffin", "r": "wide"},
                               {"kind": "step", "levels": [[0, 0.5, 1.0]]}])
def test_invalid_tables_raise(d):
    with pytest.raises(SpecError):
        potential_from_dict(d)


def test_artifact_writers_are_deterministic(tmp_path):
    rows = [{"a": 0.1, "b": 2}, {"a": 1 / 3, "b": 3}]
    p = write_csv(tmp_path / "x.csv", rows)
    assert p.read_text() == "a,b\n0.1,2\n0.3333333333333333,3\n"
    q = write_json(tmp_path / "x.json", {"z": np.float64(math.inf), "a": np.arange(2)})
    assert json.loads(q.read_text()) == {"a": [0, 1], "z": "inf"}
    m1 = manifest("x", {"k": 1}, [p, q], 0)
    m2 = manifest("x", {"k": 1}, [p, q], 0)
    assert m1 == m2 and set(m1["outputs"]) == {"x.csv", "x.json"}
    assert not any(f.name.endswith(".tmp") for f in tmp_path.iterdir())


def test_pmap_preserves_order():
    assert pmap(abs, [-3, 2, -1], jobs=2) == [3, 2, 1]


def test_infinite_muffin_height_survives_roundtrip():
    d = potential_to_dict(MuffinTinPotential(0.3, (0.5, 0.5), math.inf))
    assert d["height"] == "inf"
    assert math.isinf(potential_from_dict(json.loads(json.dumps(d))).height)
