import json
from dataclasses import replace

import numpy as np
import pytest

from flownet.controllers import Controller
from flownet.dynamics import simulate
from flownet.errors import ParseError, ValidationError
from flownet.network import DemandPiece, DemandProfile, RoutingMatrix, dump_demand, dump_network
from flownet.scenarios import (
    OutputsConfig,
    ScenarioConfig,
    _panels,
    average_inflow,
    average_inflow_tracker,
    check_pieces,
    emit_plots,
    final_quarter_slope,
    first_outside_scale,
    format_check,
    load_inputs,
    lyapunov_table,
    read_trajectory_csv,
    run_scenario,
    write_trajectory_csv,
)
from flownet.stability import Verdict, membership_margin

from conftest import FOUR, SCENARIOS, two_phase_node


def write_case(tmp_path, spec, demand, **extra):
    dump_network(spec, tmp_path / "network.json")
    dump_demand(spec, demand, tmp_path / "demand.json")
    data = {"network": "network.json", "demand": "demand.json", **extra}
    (tmp_path / "scenario.json").write_text(json.dumps(data))
    return tmp_path / "scenario.json"


def test_config_defaults_and_paths(tmp_path):
    path = write_case(tmp_path, two_phase_node(), DemandProfile.constant([0.1, 0.1], RoutingMatrix.zeros(2)))
    cfg = ScenarioConfig.load(path)
    assert cfg.network_file == tmp_path / "network.json"
    assert cfg.horizon == 100.0 and cfg.dt == 1e-3 and cfg.sample_stride == 100
    assert cfg.controller.kind == "gpa"
    out = cfg.with_outputs(tmp_path / "o")
    assert out.outputs.trajectory_csv == tmp_path / "o" / "trajectory.csv"


@pytest.mark.parametrize(
    "bad, match",
    [
        ({"horizon": 0}, "positive"),
        ({"horizon": 1, "dt": 2}, "horizon"),
        ({"sample_stride": 0}, "sample_stride"),
        ({"colour": 1}, "unknown keys"),
        ({"controller": {"kind": "static"}}, "static_u"),
        ({"controller": {"kind": "gpa", "speed": 2}}, "unknown keys"),
        ({"controller": {"kind": "fuzzy"}}, "kind"),
    ],
)
def test_config_errors(tmp_path, bad, match):
    data = {"network": "n.json", "demand": "d.json", **bad}
    with pytest.raises(ParseError, match=match):
        ScenarioConfig.from_dict(data, tmp_path)


def test_missing_network_key(tmp_path):
    with pytest.raises(ParseError, match="missing key 'network'"):
        ScenarioConfig.from_dict({"demand": "d.json"}, tmp_path)


def test_static_controller_from_file(tmp_path):
    path = write_case(
        tmp_path, two_phase_node(), DemandProfile.constant([0.1, 0.1], RoutingMatrix.zeros(2)),
        controller={"kind": "static", "static_u": {"v": [0.4, 0.4]}}, horizon=2.0, dt=0.01,
    )
    s = run_scenario(ScenarioConfig.load(path), write=False)
    assert np.allclose(s.trajectory.u, [0.4, 0.4])


def test_validation_error_carries_file(tmp_path):
    spec = two_phase_node()
    bad = DemandProfile.constant([0.1, -0.1], RoutingMatrix.zeros(2))
    path = write_case(tmp_path, spec, bad)
    cfg = ScenarioConfig.load(path)
    with pytest.raises(ValidationError, match="demand.json"):
        run_scenario(cfg)


def test_unknown_x0_cell(tmp_path):
    path = write_case(tmp_path, two_phase_node(), DemandProfile.constant([0.1, 0.1], RoutingMatrix.zeros(2)), x0={"zz": 1})
    with pytest.raises(ParseError, match="zz"):
        run_scenario(ScenarioConfig.load(path), write=False)


def test_average_inflow_examples():
    R = RoutingMatrix.zeros(2)
    const = DemandProfile.constant([0.3, 0.1], R)
    for t in (0.0, 1.0, 123.4):
        np.testing.assert_allclose(average_inflow(const, t), [0.3, 0.1])
    halved = DemandProfile((DemandPiece(0, [0.4, 0.2], R), DemandPiece(5, [0.2, 0.1], R)))
    np.testing.assert_allclose(average_inflow(halved, 10.0), [0.3, 0.15])


def test_average_inflow_tracker_follows_routing_pieces(four_inputs):
    spec, demand = four_inputs
    tr = simulate(spec, demand, Controller(spec), np.zeros(spec.n), 150.0, dt=0.05, sample_stride=100)
    trace = average_inflow_tracker(tr, demand)
    # routing change only: lam_bar is constant, the margin changes with the piece
    np.testing.assert_allclose(trace.lam_bar, demand.pieces[0].lam[None, :].repeat(len(tr), 0))
    m0 = trace.margin[trace.piece == 0]
    m1 = trace.margin[trace.piece == 1]
    assert np.ptp(m0) == 0 and np.ptp(m1) == 0
    assert m0[0] == pytest.approx(0.0739773, abs=1e-6)
    assert m1[0] == pytest.approx(0.0663112, abs=1e-6)


def test_zero_demand_scenario_loses_mass(tmp_path):
    path = write_case(
        tmp_path, two_phase_node(), DemandProfile.constant([0.0, 0.0], RoutingMatrix.zeros(2)),
        x0={"1": 1.0, "2": 3.0}, horizon=10.0, dt=0.01, sample_stride=10,
    )
    s = run_scenario(ScenarioConfig.load(path), write=False)
    assert s.terminal_volume <= s.initial_volume


def test_bundled_scenarios_validate():
    files = sorted(SCENARIOS.glob("*/scenario*.json"))
    assert len(files) >= 4
    for f in files:
        cfg = ScenarioConfig.load(f)
        spec, demand = load_inputs(cfg.network_file, cfg.demand_file)
        assert set(cfg.x0) <= set(spec.cell_index)


def test_example5_runs_have_distinct_limits():
    ends = []
    for tag in ("a", "b"):
        cfg = replace(ScenarioConfig.load(SCENARIOS / "ex5_nonunique" / f"scenario_{tag}.json"), outputs=OutputsConfig())
        s = run_scenario(cfg, write=False)
        assert np.isfinite(s.max_x_inf)
        ends.append(s.trajectory.x[-1])
    assert np.abs(ends[0] - ends[1]).max() > 0.05


def test_four_junction_run(four_run):
    cfg, s = four_run
    assert [p.verdict for p in s.pieces] == ["Interior", "Interior"]
    assert s.pieces[1].start == pytest.approx(100.0)
    assert s.max_x_inf < 5.0
    tr = s.trajectory
    ids = list(s.terminal_x)
    for p in s.pieces:
        i0 = int(np.searchsorted(tr.t, p.start - 1e-9))
        i1 = int(np.searchsorted(tr.t, p.end - 1e-9))
        i1 = min(i1, len(tr) - 1)
        assert tr.t[i0] == pytest.approx(p.start) and tr.t[i1] == pytest.approx(p.end)
        # per cell: arrivals minus outflow over the piece equal the volume change
        gap = np.array([p.avg_arrival[c] - p.avg_outflow[c] for c in ids]) * (p.end - p.start)
        np.testing.assert_allclose(gap, tr.x[i1] - tr.x[i0], atol=1e-9)
        # by the end of each piece every cell is served at about its aggregate demand or more;
        # the first piece lasts 100 time units, the last one 200
        a = np.array([p.aggregate_demand[c] for c in ids])
        assert np.all(tr.zeta[i1 - 1] >= a - 5e-3)
    assert np.all(tr.zeta[-1] >= a - 1e-3)
    report = json.loads(cfg.outputs.report.read_text())
    assert report["samples"] == len(s.trajectory)
    assert len(report["pieces"]) == 2


def test_four_junction_plots(four_run):
    cfg, _ = four_run
    files = sorted(p.name for p in cfg.outputs.plots.iterdir())
    assert files == ["controls.png", "volumes.png"]
    panels = _panels(read_trajectory_csv(cfg.outputs.trajectory_csv))
    assert [p[0] for p in panels] == ["v1", "v2", "v3", "v4"]
    assert all(len(cells) == 5 and len(u) == 3 for _, cells, u in panels)


def test_csv_round_trip_and_determinism(tmp_path, four_run):
    cfg, s = four_run
    table = read_trajectory_csv(cfg.outputs.trajectory_csv)
    assert table.header[0] == "t" and table.header[-2:] == ["V", "W"]
    np.testing.assert_array_equal(table.column("x.v1_1"), s.trajectory.x[:, 0])
    again = write_trajectory_csv(s.trajectory, tmp_path / "again.csv", cfg)
    assert again.read_bytes() == cfg.outputs.trajectory_csv.read_bytes()


def test_rerun_is_byte_identical(tmp_path):
    cfg = ScenarioConfig.load(SCENARIOS / "ex5_nonunique" / "scenario_b.json")
    cfg = replace(cfg, horizon=5.0)
    a = run_scenario(cfg.with_outputs(tmp_path / "a"))
    b = run_scenario(cfg.with_outputs(tmp_path / "b"))
    assert (tmp_path / "a" / "trajectory.csv").read_bytes() == (tmp_path / "b" / "trajectory.csv").read_bytes()
    assert a.terminal_x == b.terminal_x


def test_lyapunov_table_matches_run(four_run):
    cfg, s = four_run
    spec, demand = load_inputs(cfg.network_file, cfg.demand_file)
    table = lyapunov_table(spec, demand, read_trajectory_csv(cfg.outputs.trajectory_csv), cfg.empty_threshold)
    np.testing.assert_allclose(table.column("V.diag"), table.column("V"), rtol=1e-9, atol=1e-12)
    assert len(table.columns("w.")) == spec.n


def test_plot_edge_cases(tmp_path):
    spec = two_phase_node()
    tr = simulate(spec, DemandProfile.constant([0.1, 0.1], RoutingMatrix.zeros(2)), Controller(spec), np.ones(2), 0.01, dt=0.01)
    one = write_trajectory_csv(replace(tr, t=tr.t[:1], x=tr.x[:1], u=tr.u[:1], z=tr.z[:1]), tmp_path / "one.csv")
    assert len(read_trajectory_csv(one)) == 1
    assert len(emit_plots(one, tmp_path / "p1")) == 2
    empty = tmp_path / "empty.csv"
    empty.write_text(",".join(read_trajectory_csv(one).header) + "\n")
    with pytest.raises(ParseError):
        emit_plots(empty, tmp_path / "p0")
    assert not (tmp_path / "p0").exists()


def test_check_report(four_inputs):
    spec, demand = four_inputs
    results = check_pieces(spec, demand)
    assert all(r.certificate.interior for r in results)
    text = format_check(spec, results)
    assert "verdict: Interior" in text and "node slack b_k" in text
    outside = check_pieces(spec, demand.scaled(2.0))
    assert all(r.certificate.verdict is Verdict.OUTSIDE for r in outside)
    assert "n/a" in format_check(spec, outside)
    zero = check_pieces(spec, demand.scaled(0.0))
    assert zero[0].certificate.margin == pytest.approx(membership_margin(spec, np.zeros(spec.n)).margin)


def test_outside_scale_and_slope(four_inputs):
    spec, demand = four_inputs
    assert first_outside_scale(spec, demand) == pytest.approx(1.3)
    t = np.linspace(0, 10, 41)
    assert final_quarter_slope(t, 3 * t + 1) == pytest.approx(3.0)
    with pytest.raises(ValueError):
        final_quarter_slope([0.0, 1.0], [0.0, 1.0])
