"""Command-line interface: every subcommand exercised through main(),
including exit codes for domain and usage errors."""

from __future__ import annotations

import json

import pytest

from trustgate.cli import main
from trustgate.engine import policy_to_obj
from trustgate.model import write_events
from trustgate.reputation import InteractionLedger, save_ledger
from trustgate.simnet import (
    ResourceSpec,
    config_to_obj,
    default_policy,
)

from conftest import make_event
from test_simnet import small_scenario


def run_cli(capsys, *argv: str) -> tuple[int, str, str]:
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def run_json(capsys, *argv: str):
    code, out, err = run_cli(capsys, *argv)
    assert code == 0, f"stderr: {err}"
    return json.loads(out)


@pytest.fixture
def events_path(tmp_path):
    path = tmp_path / "events.jsonl"
    write_events(path, [
        make_event(1, 100, value=200),
        make_event(2, 110, value=1, parents=(1,)),
        make_event(3, 120, value=1, parents=(2,)),
        make_event(4, 130, value=1, parents=(3,)),
        make_event(5, 140, value=300, parents=(4,)),
    ])
    return path


@pytest.fixture
def policy_path(tmp_path):
    policy = default_policy(
        resources=(ResourceSpec("res-a", 0.5, "standard"),)
    )
    path = tmp_path / "policy.json"
    path.write_text(json.dumps(policy_to_obj(policy)))
    return path


@pytest.fixture
def rules_path(tmp_path):
    path = tmp_path / "rules.json"
    path.write_text(json.dumps([{
        "rule_name": "io-burst",
        "attribute": "io_operation_count",
        "op": ">=",
        "threshold": 100,
        "severity": "high",
    }]))
    return path


@pytest.fixture
def scenario_path(tmp_path):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(config_to_obj(small_scenario())))
    return path


class TestSimulateReplay:
    def test_simulate_writes_artifacts_and_report(self, capsys, tmp_path,
                                                  scenario_path):
        out_dir = tmp_path / "run"
        report = run_json(
            capsys, "simulate",
            "--config", str(scenario_path), "--out", str(out_dir),
        )
        assert report["grants"] + report["denies"] == report["total_requests"]
        stored = json.loads((out_dir / "report.json").read_text())
        assert stored == report

    def test_replay_round_trip(self, capsys, tmp_path, scenario_path):
        out_dir = tmp_path / "run"
        report = run_json(
            capsys, "simulate",
            "--config", str(scenario_path), "--out", str(out_dir),
        )
        replayed = run_json(capsys, "replay", "--out", str(out_dir))
        assert replayed == report

    def test_replay_rejects_tampering(self, capsys, tmp_path, scenario_path):
        out_dir = tmp_path / "run"
        run_json(
            capsys, "simulate",
            "--config", str(scenario_path), "--out", str(out_dir),
        )
        stored = json.loads((out_dir / "report.json").read_text())
        stored["denies"] -= 1
        stored["grants"] += 1
        (out_dir / "report.json").write_text(json.dumps(stored))
        code, _, err = run_cli(capsys, "replay", "--out", str(out_dir))
        assert code == 1
        assert "error:" in err
        assert "mismatch" in err

    def test_seed_override_changes_digest(self, capsys, tmp_path,
                                          scenario_path):
        first = run_json(
            capsys, "simulate", "--config", str(scenario_path),
            "--seed", "1", "--out", str(tmp_path / "a"),
        )
        second = run_json(
            capsys, "simulate", "--config", str(scenario_path),
            "--seed", "2", "--out", str(tmp_path / "b"),
        )
        assert first["config_digest"] != second["config_digest"]


class TestScore:
    def test_score_reports_window_and_verdict_inputs(self, capsys,
                                                     events_path,
                                                     policy_path):
        result = run_json(
            capsys, "score",
            "--events", str(events_path), "--policy", str(policy_path),
            "--triplet", "user-a,dev-a,res-a",
        )
        assert result["triplet"] == ["user-a", "dev-a", "res-a"]
        assert result["now"] == 140                      # max timestamp
        assert result["window_attributes"] == {"io_operation_count": 300}
        assert 0.0 <= result["behavioral"] <= 1.0
        assert result["threshold"] == 0.5
        assert result["sensitivity"] == "standard"
        # alpha = 0.5, reputation defaults to 1.0
        assert result["combined"] == pytest.approx(
            0.5 * result["behavioral"] + 0.5
        )

    def test_score_respects_window_bound(self, capsys, events_path,
                                         policy_path):
        result = run_json(
            capsys, "score",
            "--events", str(events_path), "--policy", str(policy_path),
            "--triplet", "user-a,dev-a,res-a",
            "--now", "120", "--window", "15",
        )
        # (105, 120] contains events at 110 and 120; the later one wins.
        assert result["window_attributes"] == {"io_operation_count": 1}

    def test_malformed_triplet_is_domain_error(self, capsys, events_path,
                                               policy_path):
        code, _, err = run_cli(
            capsys, "score",
            "--events", str(events_path), "--policy", str(policy_path),
            "--triplet", "only-two,parts",
        )
        assert code == 1
        assert "error:" in err

    def test_missing_events_file(self, capsys, policy_path, tmp_path):
        code, _, err = run_cli(
            capsys, "score",
            "--events", str(tmp_path / "nope.jsonl"),
            "--policy", str(policy_path),
            "--triplet", "u,d,r",
        )
        assert code == 1
        assert "error:" in err


class TestCompressionCommands:
    def test_compress_decompress_round_trip(self, capsys, events_path,
                                            tmp_path):
        archive_path = tmp_path / "log.ztlc"
        stats = run_json(
            capsys, "compress",
            "--in", str(events_path), "--out", str(archive_path),
        )
        assert stats["records"] == 5
        assert archive_path.exists()

        out_path = tmp_path / "records.jsonl"
        summary = run_json(
            capsys, "decompress",
            "--in", str(archive_path), "--out", str(out_path),
        )
        assert summary["records"] == 5
        lines = out_path.read_text().splitlines()
        records = [json.loads(line) for line in lines]
        assert records[0] == {"io_operation_count": 200}
        assert records[4] == {"io_operation_count": 300}

    def test_decompress_to_stdout(self, capsys, events_path, tmp_path):
        archive_path = tmp_path / "log.ztlc"
        run_json(capsys, "compress",
                 "--in", str(events_path), "--out", str(archive_path))
        code, out, _ = run_cli(capsys, "decompress",
                               "--in", str(archive_path))
        assert code == 0
        assert len(out.splitlines()) == 5

    def test_verify_accepts_clean_archive(self, capsys, events_path,
                                          tmp_path):
        archive_path = tmp_path / "log.ztlc"
        run_json(capsys, "compress",
                 "--in", str(events_path), "--out", str(archive_path))
        result = run_json(capsys, "verify-archive", "--in",
                          str(archive_path))
        assert result["records"] == 5

    def test_verify_rejects_corrupt_archive(self, capsys, events_path,
                                            tmp_path):
        archive_path = tmp_path / "log.ztlc"
        run_json(capsys, "compress",
                 "--in", str(events_path), "--out", str(archive_path))
        data = bytearray(archive_path.read_bytes())
        data[0] ^= 0xFF                       # break the magic
        archive_path.write_bytes(bytes(data))
        code, _, err = run_cli(capsys, "verify-archive",
                               "--in", str(archive_path))
        assert code == 1
        assert "error:" in err

    def test_verify_rejects_truncation(self, capsys, events_path, tmp_path):
        archive_path = tmp_path / "log.ztlc"
        run_json(capsys, "compress",
                 "--in", str(events_path), "--out", str(archive_path))
        data = archive_path.read_bytes()
        archive_path.write_bytes(data[:-1])
        code, _, err = run_cli(capsys, "verify-archive",
                               "--in", str(archive_path))
        assert code == 1
        assert "error:" in err


class TestSkeleton:
    def test_inline_skeleton(self, capsys, events_path, rules_path):
        result = run_json(
            capsys, "skeleton",
            "--in", str(events_path), "--rules", str(rules_path),
        )
        assert result["nodes_before"] == 5
        assert result["nodes_after"] == 2
        assert result["alerts"] == 2
        assert result["summary_edges"] == 1
        ids = [n["event_id"] for n in result["skeleton"]["nodes"]]
        assert ids == [1, 5]

    def test_skeleton_to_file(self, capsys, events_path, rules_path,
                              tmp_path):
        out_path = tmp_path / "skeleton.json"
        result = run_json(
            capsys, "skeleton",
            "--in", str(events_path), "--rules", str(rules_path),
            "--out", str(out_path),
        )
        assert "skeleton" not in result
        stored = json.loads(out_path.read_text())
        assert [n["event_id"] for n in stored["nodes"]] == [1, 5]
        assert stored["summary_edges"] == [[1, 5, 3]]


class TestReputation:
    def test_symmetric_triangle(self, capsys, tmp_path):
        ledger = InteractionLedger(peers=("p1", "p2", "p3"))
        for a in ("p1", "p2", "p3"):
            for b in ("p1", "p2", "p3"):
                if a != b:
                    ledger.record_sat(a, b)
        path = tmp_path / "ledger.json"
        save_ledger(path, ledger)
        result = run_json(
            capsys, "reputation",
            "--ledger", str(path), "--pretrusted", "p1,p2,p3",
            "--a", "0.0",
        )
        for peer in ("p1", "p2", "p3"):
            assert result["scores"][peer] == pytest.approx(1 / 3)
        assert result["converged"] is True
        assert result["zero_rows"] == []

    def test_silent_peer_listed_in_zero_rows(self, capsys, tmp_path):
        ledger = InteractionLedger(peers=("p1", "p2", "p3"))
        ledger.record_sat("p1", "p2")
        ledger.record_sat("p2", "p1")
        path = tmp_path / "ledger.json"
        save_ledger(path, ledger)
        result = run_json(
            capsys, "reputation",
            "--ledger", str(path), "--pretrusted", "p1",
        )
        assert result["zero_rows"] == ["p3"]


class TestShareCommands:
    def test_split_join_round_trip(self, capsys, tmp_path):
        share_dir = tmp_path / "shares"
        listing = run_json(
            capsys, "share-split",
            "--secret", "123456789", "--n", "5", "--z", "3",
            "--seed", "11", "--out", str(share_dir),
        )
        assert len(listing["files"]) == 5
        assert listing["chunks"] == 1
        rebuilt = run_json(
            capsys, "share-join", "--shares", *listing["files"][:3],
        )
        assert rebuilt == {"secret": 123456789}

    def test_any_three_of_five_work(self, capsys, tmp_path):
        share_dir = tmp_path / "shares"
        listing = run_json(
            capsys, "share-split",
            "--secret", "42", "--n", "5", "--z", "3",
            "--seed", "12", "--out", str(share_dir),
        )
        picks = [listing["files"][i] for i in (1, 3, 4)]
        rebuilt = run_json(capsys, "share-join", "--shares", *picks)
        assert rebuilt == {"secret": 42}

    def test_split_inline_output(self, capsys):
        shares = run_json(
            capsys, "share-split",
            "--secret", "7", "--n", "4", "--z", "2", "--seed", "1",
        )
        assert len(shares) == 4
        assert all(len(chunks) == 1 for chunks in shares)

    def test_mixed_schemes_fail_join(self, capsys, tmp_path):
        first = run_json(
            capsys, "share-split",
            "--secret", "1", "--n", "3", "--z", "2",
            "--seed", "1", "--out", str(tmp_path / "a"),
        )
        second = run_json(
            capsys, "share-split",
            "--secret", "2", "--n", "3", "--z", "2",
            "--seed", "2", "--out", str(tmp_path / "b"),
        )
        code, _, err = run_cli(
            capsys, "share-join",
            "--shares", first["files"][0], second["files"][1],
        )
        assert code == 1
        assert "error:" in err

    def test_large_secret_spans_chunks(self, capsys, tmp_path):
        secret = str(2**200 + 12345)
        listing = run_json(
            capsys, "share-split",
            "--secret", secret, "--n", "5", "--z", "3",
            "--seed", "3", "--out", str(tmp_path / "s"),
        )
        assert listing["chunks"] == 4
        rebuilt = run_json(
            capsys, "share-join", "--shares", *listing["files"][2:],
        )
        assert rebuilt == {"secret": int(secret)}


class TestCacheBench:
    def test_trace_tiers(self, capsys, tmp_path):
        trace = tmp_path / "trace.jsonl"
        rows = [
            {"triplet": ["u", "d", "r"], "now": 0},
            {"triplet": ["u", "d", "r"], "now": 10},
            {"triplet": ["u", "d", "r"], "now": 20},
            {"triplet": ["u2", "d2", "r2"], "now": 20},
        ]
        trace.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
        result = run_json(
            capsys, "cache-bench",
            "--trace", str(trace), "--capacity", "4",
        )
        assert result["operations"] == 4
        assert result["tiers"] == {
            "cache_hit": 2, "store_hit": 0, "recomputed": 2,
        }
        assert result["max_served_age"] == 20

    def test_bad_trace_line(self, capsys, tmp_path):
        trace = tmp_path / "trace.jsonl"
        trace.write_text('{"triplet": ["u","d","r"]}\n')   # missing now
        code, _, err = run_cli(
            capsys, "cache-bench", "--trace", str(trace),
        )
        assert code == 1
        assert "trace line 1" in err


class TestUsageErrors:
    def test_unknown_command(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2

    def test_missing_required_argument(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["simulate"])                 # --out is required
        assert exc.value.code == 2

    def test_no_command(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2
