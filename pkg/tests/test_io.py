import json
import math
from importlib import resources

import pytest

from hemsmip.generate import generate_instance
from hemsmip.io import (ScenarioError, dumps_scenario, load_scenario, loads_scenario, save_scenario,
                        scenario_from_dict, scenario_to_dict)
from hemsmip.scenario import case_study_scenario


def test_bundled_fixture_is_the_case_study():
    path = resources.files("hemsmip") / "fixtures" / "paper_2house.json"
    assert load_scenario(path) == case_study_scenario()


def test_round_trip_case(tmp_path):
    s = case_study_scenario()
    p = tmp_path / "s.json"
    save_scenario(s, p)
    assert load_scenario(p) == s


@pytest.mark.parametrize("seed", range(20))
def test_round_trip_random(seed):
    s = generate_instance(1 + seed % 4, 2 + seed % 5, 1 + seed % 3, seed)
    assert loads_scenario(dumps_scenario(s)) == s


def test_real_fields_load_as_float():
    d = scenario_to_dict(case_study_scenario())
    d["grid_price"] = [1] * 8
    s = scenario_from_dict(d)
    assert all(isinstance(p, float) for p in s.grid_price)


def test_unknown_key_reports_path():
    d = scenario_to_dict(case_study_scenario())
    d["households"][1]["appliances"][1]["colour"] = "red"
    with pytest.raises(ScenarioError) as err:
        scenario_from_dict(d)
    assert "households[1].appliances[1].colour: unknown key" in err.value.problems


def test_missing_key_reports_path():
    d = scenario_to_dict(case_study_scenario())
    del d["households"][0]["storage"]["efficiency"]
    with pytest.raises(ScenarioError) as err:
        scenario_from_dict(d)
    assert "households[0].storage.efficiency: missing" in err.value.problems


def test_optional_keys_may_be_omitted():
    d = scenario_to_dict(case_study_scenario())
    for hh in d["households"]:
        for a in hh["appliances"]:
            del a["interruptible"], a["requests"]
    s = scenario_from_dict(d)
    assert all(a.interruptible for hh in s.households for a in hh.appliances)


def test_validation_errors_are_collected():
    d = scenario_to_dict(case_study_scenario())
    d["households"][0]["storage"]["efficiency"] = 1.5
    d["grid_price"][0] = -1.0
    with pytest.raises(ScenarioError) as err:
        scenario_from_dict(d)
    assert len(err.value.problems) >= 2


def test_nan_rejected():
    text = dumps_scenario(case_study_scenario()).replace('"grid_limit": 20.0', '"grid_limit": NaN', 1)
    with pytest.raises(ScenarioError):
        loads_scenario(text)


def test_parse_error_has_location():
    with pytest.raises(ScenarioError, match=r"^bad\.json:2:\d+: "):
        loads_scenario('{\n  "horizon": ,\n}', "bad.json")


def test_missing_file(tmp_path):
    with pytest.raises(ScenarioError):
        load_scenario(tmp_path / "nope.json")


def test_not_an_object():
    with pytest.raises(ScenarioError):
        loads_scenario(json.dumps([1, 2, 3]))
