import json
import math
import os
from pathlib import Path

import pytest

import kdmdp

DATA = Path(os.environ.get("KDMDP_DATA_DIR", Path(__file__).resolve().parents[2] / "data"))


def trivial_model(prob=1.0):
    rect = {"low": [0.0], "high": [1.0]}
    doc = {
        "dims": 1,
        "discrete_states": ["s"],
        "actions": ["a"],
        "horizon": 2,
        "entries": [
            {
                "state": "s",
                "action": "a",
                "reward": [{"rect": rect, "linear_fns": [{"coeffs": [1.0], "offset": 0.0}]}],
                "discrete_transition": [{"rect": rect, "successors": {"s": 1.0}}],
                "continuous": {"s": [{"rect": rect, "outcomes": [{"kind": "relative", "target": [0.0], "prob": prob}]}]},
            }
        ],
    }
    return json.dumps(doc)


@pytest.fixture(scope="module")
def rover():
    return kdmdp.generate_rover(str(DATA / "rover_1d.json"), resolution=5)


def test_round_trip():
    m = kdmdp.load_model(trivial_model())
    assert m.dims == 1
    assert m.discrete_states == ["s"]
    assert kdmdp.load_model(m.to_json()).to_json() == m.to_json()


def test_invalid_model_raises():
    with pytest.raises(kdmdp.ModelError, match="probabilities sum to 0.5"):
        kdmdp.load_model(trivial_model(0.5))
    with pytest.raises(kdmdp.ParseError):
        kdmdp.load_model("{")


def test_linear_reward_accumulates():
    sol = kdmdp.solve(kdmdp.load_model(trivial_model()))
    assert sol.stages == 2
    assert sol.value("s", [0.25]) == pytest.approx(0.5, abs=1e-12)
    assert sol.action("s", [0.25]) == "a"


def test_rover_solve_grid_and_simulate(rover):
    assert len(rover.discrete_states) == 13
    assert rover.metadata["label"] == "reconstruction"
    sol = kdmdp.solve(rover)
    v = sol.value("start", [0.8])
    assert math.isfinite(v)
    assert sol.leaf_count(sol.stages) >= len(rover.discrete_states)
    assert sol.stats[0].keys() == {"stage", "state", "leaves", "vectors", "seconds"}

    grid = kdmdp.grid_solve(rover, 5)
    assert grid.cells == 5

    res = kdmdp.simulate(sol, "start", [0.8], episodes=20000, seed=3)
    assert abs(res["mean"] - v) <= 4 * res["stderr"] + 1e-12
    assert kdmdp.simulate(sol, "start", [0.8], episodes=20000, seed=3) == res


def test_dumps_are_deterministic(rover):
    a = kdmdp.solve(rover)
    b = kdmdp.solve(rover)
    assert a.dump_values() == b.dump_values()
    assert json.loads(a.dump_policies())["format"] == "kdmdp.policies"
    assert a.stats_csv().splitlines()[0] == "stage,state,leaves,vectors,seconds"
    assert a.leaf_csv("start").splitlines()[0] == "low_0,high_0,vectors,fns"


def test_errors(rover):
    sol = kdmdp.solve(rover)
    with pytest.raises(kdmdp.DomainError):
        sol.value("start", [1.5])
    with pytest.raises(kdmdp.DomainError):
        sol.value("nowhere", [0.5])
    with pytest.raises(kdmdp.ResourceCapError):
        kdmdp.grid_solve(rover, 100, max_cells=10)


def test_discretize_gaussian():
    buckets = kdmdp.discretize_gaussian(0.3, 0.04, 2)
    assert [p for _, p in buckets] == pytest.approx([0.5, 0.5])
