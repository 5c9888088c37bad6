import json

import numpy as np
import pytest

from conftest import make_config
from relaxed_svgd import baselines, io, svgd, targets
from relaxed_svgd.baselines import LmcState
from relaxed_svgd.config import parse_config

STD = targets.gaussian(2)


def test_noise_free_step_is_gradient_descent():
    out = baselines.lmc_step(LmcState([[1.0, 0.0]]), STD, 0.1, _noise=False)
    np.testing.assert_allclose(out.positions, [[0.9, 0.0]])
    assert out.rng_counter == 1


def test_noise_scale_and_stream():
    state = LmcState(np.zeros((3, 2)), seed=9, rng_counter=4)
    out = baselines.lmc_step(state, STD, 0.2)
    np.testing.assert_allclose(out.positions, np.sqrt(0.4) * baselines.noise(9, 4, (3, 2)))


def test_same_seed_same_trajectory():
    def path(seed):
        st = LmcState(np.ones((5, 2)), seed=seed)
        for _ in range(10):
            st = baselines.lmc_step(st, STD, 0.1)
        return st.positions

    np.testing.assert_array_equal(path(3), path(3))
    assert not np.array_equal(path(3), path(4))


def test_noise_depends_on_counter_not_history():
    a = baselines.noise(1, 5, (4, 3))
    b = baselines.noise(1, 5, (4, 3))
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, baselines.noise(1, 6, (4, 3)))
    # chain c, coordinate j sits at flat position c * d + j
    np.testing.assert_array_equal(baselines.noise(1, 5, (12,)).reshape(4, 3), a)


def test_stationary_moments_small():
    st = LmcState(np.zeros((4000, 1)), seed=1)
    for _ in range(200):
        st = baselines.lmc_step(st, targets.gaussian(1), 0.1)
    x = st.positions.ravel()
    var = x.var(ddof=1)
    se = var * np.sqrt(2 / (x.size - 1))
    assert abs(var - 1 / 0.95) <= 3 * se
    assert abs(x.mean()) <= 3 * np.sqrt(var / x.size)


def test_rejects_bad_gamma_and_blow_up():
    with pytest.raises(ValueError):
        baselines.lmc_step(LmcState([[0.0, 0.0]]), STD, -1.0)
    t = targets.generalized_gaussian(4, 1)
    with np.errstate(over="ignore", invalid="ignore"), pytest.raises(svgd.StepRejected):
        baselines.lmc_step(LmcState([[1e150]]), t, 1.0)


def test_run_lmc_writes_svgd_schema(tmp_path):
    doc = make_config(steps=6, output_dir=str(tmp_path / "lmc"), step_policy={"mode": "fixed", "gamma": 0.1})
    res = baselines.run_lmc(parse_config(json.dumps(doc)))
    rows = io.read_trace(tmp_path / "lmc" / "trace.csv")
    assert len(rows) == 7 and res.ok
    ens = svgd.Ensemble.standard_normal(10, 2, seed=0)
    spec = parse_config(json.dumps(doc)).build_kernel(ens.positions)
    assert rows[0]["ksd2"] == svgd.ksd_squared(ens, STD, spec)
    st = LmcState(ens.positions, seed=0)
    for _ in range(6):
        st = baselines.lmc_step(st, STD, 0.1)
    np.testing.assert_array_equal(res.ensemble.positions, st.positions)
    assert (tmp_path / "lmc" / "particles_000006.csv").exists()


def test_run_lmc_needs_gamma():
    doc = make_config(step_policy={"mode": "adaptive"})
    with pytest.raises(targets.ConfigurationError):
        baselines.run_lmc(parse_config(json.dumps(doc)), write=False)
