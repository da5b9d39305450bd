"""Command-line interface: subcommands, exit codes, replay equivalence."""

import csv
import json

import pytest

from netinverse.cli import main
from netinverse.learner import OnlineState, load_state, online_update
from netinverse.network import (
    CapacitySpec,
    load_network,
    load_observations,
)


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestNetValidate:
    def test_queens_network_ok(self, capsys, data_dir):
        code, out, _ = run(capsys, "net", "validate", str(data_dir / "queens_links.csv"))
        assert code == 0
        assert "ok" in out
        assert "17 nodes, 40 links" in out

    def test_missing_file_is_data_error(self, capsys, tmp_path):
        code, _, err = run(capsys, "net", "validate", str(tmp_path / "nope.csv"))
        assert code == 2
        assert "data error" in err

    def test_malformed_file_is_data_error(self, capsys, tmp_path):
        f = tmp_path / "links.csv"
        f.write_text("link_id,start_node,end_node,cost\n1,a,a,3\n")
        code, _, err = run(capsys, "net", "validate", str(f))
        assert code == 2

    def test_unknown_subcommand_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 1

    def test_missing_required_option_is_usage_error(self, capsys, data_dir):
        with pytest.raises(SystemExit) as exc:
            main(["monitor", str(data_dir / "nd_links.csv"), "obs.csv"])
        assert exc.value.code == 1


class TestSimulate:
    def test_infeasible_capacities_exit_solver_failure(self, capsys, data_dir, tmp_path):
        caps = tmp_path / "caps.csv"
        # links 1 and 2 are the only links leaving node 1: total cap 200 < 1200
        caps.write_text("link_id,capacity\n1,100\n2,100\n")
        scn = tmp_path / "bad.scn"
        scn.write_text(
            "kind = FLOW_SAMPLING\n"
            f"network = {data_dir / 'nd_links.csv'}\n"
            f"demand = {data_dir / 'nd_demand.csv'}\n"
            f"capacities = {caps}\n"
            "seed = 1\nsamples = 10\n"
        )
        code, _, err = run(capsys, "simulate", str(scn), "-o", str(tmp_path / "o.csv"))
        assert code == 3
        assert "solver failure" in err

    def test_simulate_writes_observations(self, capsys, data_dir, tmp_path):
        out_file = tmp_path / "obs.csv"
        code, out, _ = run(
            capsys,
            "simulate",
            str(data_dir / "scenarios" / "flow_sampling_800.scn"),
            "-o",
            str(out_file),
        )
        assert code == 0
        net = load_network(data_dir / "nd_links.csv")
        assert len(load_observations(out_file, net)) == 100


class TestEstimateCosts:
    def test_scalar_prior_run(self, capsys, data_dir, tmp_path):
        obs_file = tmp_path / "obs.csv"
        obs_file.write_text(
            "agent_id,timestamp,origin,destination,link_seq\n"
            "a,,1,4,1;4\nb,,1,4,2;5\nc,,1,4,1;3;5\n"
        )
        trace_dir = tmp_path / "trace"
        code, out, _ = run(
            capsys,
            "estimate-costs",
            str(data_dir / "fourlink_links.csv"),
            str(obs_file),
            "--prior", "0.5",
            "-o", str(trace_dir),
        )
        assert code == 0
        assert "converged" in out
        assert (trace_dir / "prior_trace.csv").exists()
        assert (trace_dir / "agent_posteriors.csv").exists()
        assert (trace_dir / "summary.txt").exists()


class TestRecoverDuals:
    def test_published_fixed_point(self, capsys, data_dir, tmp_path):
        obs_file = tmp_path / "obs.csv"
        code, _, _ = run(
            capsys,
            "simulate",
            str(data_dir / "scenarios" / "flow_sampling_800.scn"),
            "-o", str(obs_file),
        )
        assert code == 0
        trace_dir = tmp_path / "trace"
        code, out, _ = run(
            capsys,
            "recover-duals",
            str(data_dir / "nd_links.csv"),
            str(obs_file),
            "--priced", "1,7",
            "-o", str(trace_dir),
        )
        assert code == 0
        rows = list(csv.DictReader((trace_dir / "prior_trace.csv").open()))
        last_iteration = max(int(r["iteration"]) for r in rows)
        final = {
            int(r["link_id"]): float(r["prior_value"])
            for r in rows
            if int(r["iteration"]) == last_iteration
        }
        assert f"{final[1]:.6f}" == "7.000000"
        assert f"{final[7]:.6f}" == "5.000000"

    def test_bad_priced_ids(self, capsys, data_dir, tmp_path):
        obs_file = tmp_path / "obs.csv"
        obs_file.write_text(
            "agent_id,timestamp,origin,destination,link_seq\na,,1,2,2;18;11\n"
        )
        code, _, err = run(
            capsys,
            "recover-duals",
            str(data_dir / "nd_links.csv"),
            str(obs_file),
            "--priced", "1,99",
            "-o", str(tmp_path / "t"),
        )
        assert code == 2


class TestMonitor:
    def test_replay_equals_fold_and_state_resumes(self, capsys, data_dir, tmp_path):
        stream_file = tmp_path / "stream.csv"
        code, _, _ = run(
            capsys,
            "simulate",
            str(data_dir / "scenarios" / "regime_stream.scn"),
            "-o", str(stream_file),
        )
        assert code == 0
        net = load_network(data_dir / "nd_links.csv")
        observations = load_observations(stream_file, net)

        state_file = tmp_path / "state.json"
        log_file = tmp_path / "log.csv"
        code, _, _ = run(
            capsys,
            "monitor",
            str(data_dir / "nd_links.csv"),
            str(stream_file),
            "--priced", "1,7",
            "--state", str(state_file),
            "-o", str(log_file),
        )
        assert code == 0

        priced = CapacitySpec.priced_only([1, 7])
        folded = OnlineState({1: 0.0, 7: 0.0})
        for ob in observations:
            folded = online_update(folded, ob, net, net.base_costs(), priced)
        saved = load_state(state_file)
        assert saved.prices == folded.prices
        assert saved.update_count == folded.update_count

        log_rows = list(csv.DictReader(log_file.open()))
        assert len(log_rows) == 300 * 2  # one row per priced link per update
        assert {r["update_index"] for r in log_rows} == {str(i) for i in range(1, 301)}

        # resuming from the saved state continues counting
        second_log = tmp_path / "log2.csv"
        code, _, _ = run(
            capsys,
            "monitor",
            str(data_dir / "nd_links.csv"),
            str(stream_file),
            "--priced", "1,7",
            "--state", str(state_file),
            "-o", str(second_log),
        )
        assert code == 0
        assert load_state(state_file).update_count == 600

    def test_incomplete_state_file_is_data_error(self, tmp_path, data_dir, capsys):
        state_file = tmp_path / "state.json"
        state_file.write_text('{"prices": {"1": 7.0}, "update_count": 3}\n')
        obs_file = tmp_path / "one.csv"
        obs_file.write_text(
            "agent_id,timestamp,origin,destination,link_seq\na,1,1,2,2;18;11\n"
        )
        code, _, err = run(
            capsys,
            "monitor",
            str(data_dir / "nd_links.csv"),
            str(obs_file),
            "--priced", "1,7",
            "--state", str(state_file),
            "-o", str(tmp_path / "log.csv"),
        )
        assert code == 2
        assert "lacks prices" in err

    def test_state_file_round_trips_through_cli(self, tmp_path, data_dir, capsys):
        state_file = tmp_path / "state.json"
        obs_file = tmp_path / "one.csv"
        obs_file.write_text(
            "agent_id,timestamp,origin,destination,link_seq\na,1,1,2,2;18;11\n"
        )
        code, _, _ = run(
            capsys,
            "monitor",
            str(data_dir / "nd_links.csv"),
            str(obs_file),
            "--priced", "1,7",
            "--state", str(state_file),
            "-o", str(tmp_path / "log.csv"),
        )
        assert code == 0
        payload = json.loads(state_file.read_text())
        assert set(payload["prices"]) == {"1", "7"}
        assert payload["update_count"] == 1
