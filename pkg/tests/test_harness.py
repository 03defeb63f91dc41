import configparser
import math

import numpy as np
import pytest

from ecdsep.benchmarks import QuadraticBasin
from ecdsep.core import RngStream
from ecdsep.harness.analysis import concentration_report, eta_monotonicity_report, is_nonincreasing
from ecdsep.harness.averaging import best_tail_average, swa_average
from ecdsep.harness.config import (
    ConfigError,
    Range,
    RunConfig,
    SweepSpec,
    build_hparams,
    build_problem,
    parse_space_value,
    parse_theta0,
    run_config_from_parser,
    sweep_spec_from_parser,
)
from ecdsep.harness.io import read_trajectory_csv, write_json, write_trajectory_csv
from ecdsep.harness.runner import run_single, run_sweep
from ecdsep.optimizer import EcdHyperParams, TrajectoryLog


def parser_from(text):
    p = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    p.optionxform = str
    p.read_string(text)
    return p


HAND_TRACE = """
[run]
problem = quadratic
optimizer = ecdsep
max_steps = 1
theta0 = 1
[problem]
n = 1
[ecdsep]
eta = 1
dt = 0.4
nu = 0
"""


# ---------------------------------------------------------------- config


def test_run_config_parsing():
    cfg = run_config_from_parser(parser_from(HAND_TRACE))
    assert cfg.hparams == EcdHyperParams(eta=1, dt=0.4, nu=0)
    assert cfg.max_steps == 1 and cfg.record_every == 1


def test_logistic_defaults_to_sparse_records():
    cfg = run_config_from_parser(parser_from("[run]\nproblem = logistic\noptimizer = adam\n"))
    assert cfg.record_every == 10


@pytest.mark.parametrize(
    "text",
    [
        "[run]\nproblem = nope\noptimizer = ecdsep\n[ecdsep]\neta = 1\n",
        "[run]\nproblem = zakharov\noptimizer = sgd\n",
        "[run]\nproblem = zakharov\noptimizer = ecdsep\n",
        "[run]\nproblem = zakharov\noptimizer = ecdsep\n[ecdsep]\neta = 1\nlr = 3\n",
        "[run]\nproblem = zakharov\noptimizer = ecdsep\n[ecdsep]\neta = fast\n",
        "[run]\nproblem = zakharov\noptimizer = ecdsep\n[ecdsep]\neta = 0.5\n",
        "[run]\nproblem = zakharov\noptimizer = ecdsep\nmax_steps = 0\n[ecdsep]\neta = 1\n",
        "[run]\noptimizer = ecdsep\n",
        "[other]\nx = 1\n",
    ],
    ids=["problem", "optimizer", "missing-eta", "unknown-key", "not-a-number", "bad-eta", "zero-steps",
         "no-problem", "no-section"],
)
def test_config_errors(text):
    with pytest.raises(ConfigError):
        run_config_from_parser(parser_from(text))


def test_build_hparams_for_each_optimizer():
    assert build_hparams("gdm", {"alpha": "0.1"}).beta == 0.9
    assert build_hparams("adamw", {}).decoupled_wd is True
    assert build_hparams("adam", {}).decoupled_wd is False
    assert build_hparams("ecdsep", {"eta": "3", "self_tune_f0": "true"}).self_tune_f0 is True


def test_parse_theta0():
    obj = build_problem("quadratic", {"n": "3"})
    assert np.array_equal(parse_theta0("2", "quadratic", obj), np.full(3, 2.0))
    assert np.array_equal(parse_theta0("1, 2, 3", "quadratic", obj), np.array([1.0, 2.0, 3.0]))
    assert np.array_equal(parse_theta0(None, "ackley", build_problem("ackley", {})), np.array([-4.0, 3.0]))
    with pytest.raises(ConfigError):
        parse_theta0("1 2", "quadratic", obj)


def test_ranges():
    gen = np.random.default_rng(0)
    r = Range.parse("log:1e-3:1e1")
    xs = [r.sample(gen) for _ in range(2000)]
    assert min(xs) >= 1e-3 and max(xs) <= 1e1
    assert np.mean(np.log10(xs)) == pytest.approx(-1.0, abs=0.1)
    assert Range.parse("int:2:4").sample(gen) in (2, 3, 4)
    assert Range.parse("choice:a, b").sample(gen) in ("a", "b")
    assert parse_space_value("0.5") == "0.5"
    for bad in ("log:0:1", "uniform:2:1", "gauss:0:1"):
        with pytest.raises(ConfigError):
            Range.parse(bad)


def test_sweep_budgets_cannot_differ():
    text = "[sweep]\nproblem = zakharov\npreset = zakharov\n[sweep.gdm]\ntrials = 3\n"
    with pytest.raises(ConfigError):
        sweep_spec_from_parser(parser_from(text))
    spec = sweep_spec_from_parser(parser_from("[sweep]\nproblem = zakharov\npreset = zakharov\ntrials = 7\n"))
    assert set(spec.budgets().values()) == {(7, 250)}


def test_sweep_space_overrides_preset():
    spec = sweep_spec_from_parser(parser_from(
        "[sweep]\nproblem = ackley\npreset = ackley\noptimizers = gdm\n[sweep.gdm]\nalpha = log:1e-8:1e-7\n"))
    assert spec.spaces["gdm"]["alpha"] == Range("log", 1e-8, 1e-7)
    assert spec.spaces["gdm"]["beta"] == Range("uniform", 0.8, 1.0)


# ---------------------------------------------------------------- io and runner


def test_run_single_hand_trace():
    out = run_single(run_config_from_parser(parser_from(HAND_TRACE)))
    assert out.log[0].theta_norm == pytest.approx(0.6097560975609756, abs=1e-12)
    assert out.steps == 1 and out.status == "running"


def test_record_every_gives_exact_row_count(tmp_path):
    cfg = RunConfig("quadratic", "ecdsep", EcdHyperParams(eta=1, dt=0.1), max_steps=100, record_every=10,
                    problem_params={"n": "3", "f_min": "1"})
    out = run_single(cfg)
    write_trajectory_csv(tmp_path / "t.csv", out.log)
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert len(lines) == 11 and lines[0] == "step,f,energy,pi_norm,theta_norm"


def test_csv_round_trip(tmp_path):
    cfg = RunConfig("zakharov", "ecdsep", EcdHyperParams(eta=1.5, dt=1.0, nu=1e-3), max_steps=50,
                    problem_params={"n": "4"})
    log = run_single(cfg).log
    write_trajectory_csv(tmp_path / "t.csv", log)
    back = read_trajectory_csv(tmp_path / "t.csv")
    assert np.array_equal(back.data, log.data)
    steps = back.steps
    assert np.all(np.diff(steps) > 0)


def test_csv_reader_rejects_foreign_header(tmp_path):
    (tmp_path / "x.csv").write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_trajectory_csv(tmp_path / "x.csv")


def test_json_non_finite_becomes_null(tmp_path):
    write_json(tmp_path / "s.json", {"a": math.inf, "b": np.float64(1.5), "c": [np.int64(2)]})
    assert (tmp_path / "s.json").read_text() == '{\n  "a": null,\n  "b": 1.5,\n  "c": [\n    2\n  ]\n}\n'


def test_diverged_run_is_reported_not_raised():
    cfg = RunConfig("quadratic", "gdm", build_hparams("gdm", {"alpha": "10", "beta": "1"}), max_steps=5000,
                    problem_params={"n": "1"})
    out = run_single(cfg)
    assert out.failed and out.final_f == math.inf


def _tiny_spec(**kw):
    spaces = {
        "ecdsep": {"eta": Range("uniform", 1.0, 2.0), "dt": Range("log", 1e-2, 1.0)},
        "gdm": {"alpha": Range("log", 1e-4, 1e-2)},
        "adam": {"alpha": Range("log", 1e-3, 1e-1)},
    }
    base = dict(problem="zakharov", optimizers=("ecdsep", "gdm", "adam"), spaces=spaces, trials=4, steps=30,
                problem_params={"n": "3"})
    base.update(kw)
    return SweepSpec(**base)


def test_sweep_one_trial_one_row_per_optimizer():
    res = run_sweep(_tiny_spec(trials=1))
    assert sorted(r.optimizer for r in res) == ["adam", "ecdsep", "gdm"]
    assert all(r.rank == 1 for r in res)


def test_sweep_is_deterministic_and_thread_independent():
    a = run_sweep(_tiny_spec())
    b = run_sweep(_tiny_spec(workers=4))
    key = lambda rs: [(r.optimizer, r.rank, r.trial, r.metric, r.params_text()) for r in rs]
    assert key(a) == key(b)


def test_sweep_ranks_failures_last():
    spec = _tiny_spec(optimizers=("gdm",), spaces={"gdm": {"alpha": Range("log", 1e-3, 1e3), "beta": "1"}},
                      trials=8, steps=200)
    res = run_sweep(spec)
    metrics = [r.metric for r in res]
    assert metrics == sorted(metrics)
    assert any(r.status == "diverged" for r in res)
    assert res[-1].metric == math.inf


def test_sweep_spec_validation():
    with pytest.raises(ConfigError):
        _tiny_spec(trials=0)
    with pytest.raises(ConfigError):
        _tiny_spec(metric="median")
    with pytest.raises(ConfigError):
        _tiny_spec(optimizers=("ecdsep", "lion"))


# ---------------------------------------------------------------- averaging


def test_swa_examples():
    thetas = [np.array([5.0, 5.0]), np.array([0.0, 0.0]), np.array([2.0, 2.0])]
    assert np.array_equal(swa_average(thetas, 1), [1.0, 1.0])
    assert np.array_equal(swa_average(thetas, 2), [2.0, 2.0])
    assert np.array_equal(swa_average([np.full(3, 0.7)] * 5, 0), np.full(3, 0.7))
    with pytest.raises(ValueError):
        swa_average(thetas, 3)


def test_best_tail_monotone_sequence_picks_last():
    obj = QuadraticBasin(2)
    thetas = [np.full(2, 1.0 / (k + 1)) for k in range(20)]
    avg, idx = best_tail_average(thetas, obj)
    assert idx == 19 and np.array_equal(avg, thetas[-1])


def test_best_tail_beats_final_iterate_on_noise():
    gen = np.random.default_rng(0)
    thetas = [gen.normal(scale=0.3, size=5) for _ in range(200)]
    obj = QuadraticBasin(5)
    avg, idx = best_tail_average(thetas, obj)
    assert obj.evaluate(avg).value <= obj.evaluate(thetas[-1]).value
    assert 100 <= idx < 200
    # returns the argmin over the scanned tails
    vals = [obj.evaluate(swa_average(thetas, i)).value for i in range(100, 200)]
    assert obj.evaluate(avg).value == pytest.approx(min(vals), rel=1e-12)


def test_best_tail_accepts_callables():
    avg, idx = best_tail_average([np.ones(1), np.zeros(1)], lambda t: float(t[0] ** 2))
    assert idx == 1


# ---------------------------------------------------------------- analysis


def test_concentration_report_small():
    basin = QuadraticBasin(4, 1.0, 1.0)
    hp = EcdHyperParams(eta=1, dt=0.1, nu=0.1, delta_e=20.0)
    rep = concentration_report(basin, hp, 20_000, 2_000, 20, np.ones(4), RngStream(0))
    assert rep.status == "ok" and rep.samples == 18_000
    assert rep.counts.sum() == 18_000
    assert rep.predicted_radius_sq == pytest.approx(3.0) and rep.predicted_f == pytest.approx(4.0)
    d = rep.to_dict()
    assert set(d) >= {"empirical", "theory", "relative_deviation", "status"}


def test_concentration_at_zero_gap_peaks_at_origin():
    basin = QuadraticBasin(4, 1.0, 0.0)
    hp = EcdHyperParams(eta=1, dt=0.1, nu=0.1, delta_e=20.0)
    rep = concentration_report(basin, hp, 50_000, 0, 20, np.ones(4), RngStream(0))
    assert rep.predicted_radius_sq == 0.0
    assert int(np.argmax(rep.counts)) == 0


def test_burn_in_changes_histogram():
    basin = QuadraticBasin(4, 1.0, 1.0)
    hp = EcdHyperParams(eta=1, dt=0.1, nu=0.1, delta_e=20.0)
    a = concentration_report(basin, hp, 5_000, 0, 20, np.ones(4), RngStream(0))
    b = concentration_report(basin, hp, 5_000, 4_000, 20, np.ones(4), RngStream(0))
    assert a.counts.sum() != b.counts.sum()


def test_concentration_report_validation():
    basin = QuadraticBasin(4, 1.0, 1.0)
    with pytest.raises(ValueError):
        concentration_report(basin, EcdHyperParams(eta=1, nu=0), 100, 10, 5)
    with pytest.raises(ValueError):
        concentration_report(basin, EcdHyperParams(eta=1, nu=0.1), 100, 100, 5)


def test_eta_report_order_independent():
    basin = QuadraticBasin(4, 1.0, 1.0)
    hp = EcdHyperParams(eta=1, dt=0.1, nu=0.1)
    a = eta_monotonicity_report(basin, [1, 2, 3], hp, 2000)
    b = eta_monotonicity_report(basin, [3, 1, 2], hp, 2000)
    assert [r.__dict__ for r in a] == [r.__dict__ for r in b]
    assert [r.eta for r in a] == [1.0, 2.0, 3.0]
    assert len(eta_monotonicity_report(basin, [2], hp, 100)) == 1


def test_is_nonincreasing():
    assert is_nonincreasing([3, 2, 2, 1])
    assert not is_nonincreasing([1, 2])
