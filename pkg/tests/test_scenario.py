import json

import numpy as np
import pytest

from gavriflow.errors import DataError, ParameterError
from gavriflow.scenario import FlowScenario, figure1_scenario, load_scenario, scenario_from_dict


def test_figure1_constants_pass_both_checks(fig1):
    fig1.check_initial_point()
    assert (fig1.alpha0, fig1.beta0, fig1.gamma0, fig1.f0, fig1.epsilon) == (1.0, 0.01, 0.5, 0.97, 1)


@pytest.mark.parametrize("kw", [dict(alpha0=0.0), dict(beta0=-0.1), dict(gamma0=-0.01, beta0=0.01)])
def test_profile_data_violations(kw):
    with pytest.raises(ParameterError):
        figure1_scenario(**kw).check_profiles_data()


@pytest.mark.parametrize("kw", [dict(f0=0.05), dict(f0=3.0), dict(gamma0=2.0), dict(gamma0=-1.0)])
def test_initial_point_violations(kw):
    # f0 below sqrt(beta0), or eps f0^2 + gamma0 outside its window
    with pytest.raises(ParameterError):
        figure1_scenario(**kw).check_initial_point()


def test_bad_sign_and_steps():
    with pytest.raises(ParameterError):
        figure1_scenario(epsilon=0)
    with pytest.raises(ParameterError):
        figure1_scenario(p_step=0.0)


def test_nodes_hit_zero():
    sc = figure1_scenario(z_min=-0.0105, z_max=0.02, z_step=1e-3)
    z = sc.z_nodes()
    assert 0.0 in z
    assert z[0] == pytest.approx(-0.01)
    assert np.allclose(np.diff(z), 1e-3)


def test_roundtrip_and_file_errors(tmp_path, fig1):
    path = tmp_path / "s.json"
    path.write_text(json.dumps(fig1.to_dict()))
    assert load_scenario(path) == fig1
    path.write_text("{not json")
    with pytest.raises(DataError):
        load_scenario(path)
    with pytest.raises(DataError):
        scenario_from_dict({"alpha0": 1, "beta0": 0, "gamma0": 1})
    with pytest.raises(DataError):
        scenario_from_dict({**fig1.to_dict(), "colour": 1})
    with pytest.raises(DataError):
        scenario_from_dict({**fig1.to_dict(), "f0": "abc"})
