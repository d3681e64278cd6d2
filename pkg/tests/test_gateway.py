"""Gateway: config validation, tick-loop behavior, trace determinism,
audit fault detection, serve-mode control contract, CLI exit codes."""
from __future__ import annotations

import hashlib
import json
import queue
import threading
import time

import pytest
from starlette.testclient import TestClient

from strata.datafiles import data_path
from strata.gateway.cli import main as cli_main
from strata.gateway.config import (
    ScenarioValidationError,
    load_scenario_config,
    parse_scenario,
)
from strata.gateway.runner import Runner, tactical_ticks_match_world
from strata.gateway.server import Broadcaster, ControlState, ServeLoop, create_app
from strata.gateway.trace import (
    audit_trace,
    goal_ids_in_trace,
    read_trace,
    thoughts_from_trace,
    trace_body,
)
from strata.strategic.explain import explain


def lost_keys_config(**overrides):
    cfg = load_scenario_config(data_path("lost_keys.scenario"))
    for key, value in overrides.items():
        setattr(cfg, key, value)
    return cfg


def run_headless(tmp_path, name="t.jsonl", **overrides):
    cfg = lost_keys_config(**overrides)
    runner = Runner(cfg, tmp_path / name)
    summary = runner.run_headless()
    return runner, summary


class TestConfig:
    def test_shipped_scenario_parses(self):
        cfg = load_scenario_config(data_path("lost_keys.scenario"))
        assert cfg.name == "lost-keys"
        assert cfg.seed == 42
        assert [r.robot_id for r in cfg.robots] == ["rover", "skye"]
        assert cfg.script[0].text == "Find my keys"

    def test_missing_map_is_validation_error(self, tmp_path):
        text = data_path("lost_keys.scenario").read_text().replace(
            "map apartment.map", "map nowhere.map"
        )
        bad = tmp_path / "bad.scenario"
        bad.write_text(text)
        with pytest.raises(ScenarioValidationError, match="map"):
            load_scenario_config(bad)

    def test_seed_required(self, tmp_path):
        text = "\n".join(
            line for line in data_path("lost_keys.scenario").read_text().splitlines()
            if not line.startswith("seed")
        )
        cfg = parse_scenario(text, data_path("."))
        with pytest.raises(ScenarioValidationError, match="seed"):
            cfg.validate()

    def test_unknown_directive_names_line(self):
        with pytest.raises(ScenarioValidationError, match="line 1"):
            parse_scenario("frobnicate 3\n", data_path("."))

    def test_script_sender_must_be_human(self, tmp_path):
        text = data_path("lost_keys.scenario").read_text().replace(
            "say 20 danny", "say 20 rover"
        )
        bad = tmp_path / "bad.scenario"
        bad.write_text(text)
        with pytest.raises(ScenarioValidationError, match="declared human"):
            load_scenario_config(bad)


class TestHeadlessRun:
    def test_zero_max_ticks(self, tmp_path):
        _, summary = run_headless(tmp_path, max_ticks=0)
        assert summary.ticks == 0
        assert trace_body(summary.trace_path) == ""

    def test_lost_keys_completes(self, tmp_path):
        runner, summary = run_headless(tmp_path)
        assert summary.goals_achieved == 1
        assert summary.collisions == 0
        assert summary.ticks <= 5000
        texts = [m["text"] for m in runner.chat_log]
        assert any("I found the keys" in t for t in texts)

    def test_chat_messages_all_analyzed_or_flagged(self, tmp_path):
        _, summary = run_headless(tmp_path)
        _, events = read_trace(summary.trace_path)
        chat_msgs = [e for e in events if e["kind"] == "chat"]
        tmr_events = [e for e in events if e["kind"] in ("tmr", "analysis_error")]
        assert len(chat_msgs) >= 4
        assert len(tmr_events) >= len(chat_msgs)  # every utterance got meaning

    def test_tactical_runs_every_world_tick(self, tmp_path):
        runner, _ = run_headless(tmp_path)
        assert tactical_ticks_match_world(runner)

    def test_unparsed_chat_triggers_clarification(self, tmp_path):
        cfg = lost_keys_config()
        cfg.script[0].text = "Flibber the wug"
        runner = Runner(cfg, tmp_path / "clarify.jsonl")
        for _ in range(60):
            runner.tick_once()
        summary = runner.finalize()
        _, events = read_trace(summary.trace_path)
        assert any(e["kind"] == "analysis_error" for e in events)
        texts = [m["text"] for m in runner.chat_log]
        assert any("Please rephrase" in t for t in texts)
        # only the lead robot asks, so exactly one clarification
        assert sum(1 for t in texts if "rephrase" in t) == 1

    def test_stop_request_abandons_goals_and_stops(self, tmp_path):
        cfg = lost_keys_config()
        from strata.gateway.config import ScriptLine

        cfg.script.append(ScriptLine(tick=60, sender="danny", text="Stop"))
        runner = Runner(cfg, tmp_path / "stop.jsonl")
        summary = runner.run_headless()
        texts = [m["text"] for m in runner.chat_log]
        assert any("Stopping now." == t for t in texts)
        _, events = read_trace(summary.trace_path)
        stop_cmds = [
            e for e in events
            if e["kind"] == "command" and e["payload"]["verb"] == "STOP"
        ]
        assert len(stop_cmds) == 2  # both robots wind down
        abandoned = [
            e for e in events
            if e["kind"] == "thought" and e["payload"]["kind"] == "goal_abandoned"
        ]
        assert len(abandoned) >= 2

    def test_direct_commands_from_chat(self, tmp_path):
        cfg = lost_keys_config()
        cfg.script[0].text = "Go to the kitchen"
        from strata.gateway.config import ScriptLine

        cfg.script.append(ScriptLine(tick=40, sender="danny", text="recharge"))
        runner = Runner(cfg, tmp_path / "direct.jsonl")
        summary = runner.run_headless()
        _, events = read_trace(summary.trace_path)
        verbs = [e["payload"]["verb"] for e in events if e["kind"] == "command"]
        assert "MOVE-TO" in verbs
        assert "RETURN-TO-DOCK" in verbs
        assert summary.goals_achieved >= 2  # both direct requests completed
        assert audit_trace(summary.trace_path).ok

    def test_unfindable_object_ends_in_not_found_reports(self, tmp_path):
        cfg = lost_keys_config()
        cfg.objects = [o for o in cfg.objects if o.instance_id != "keys-1"]
        runner = Runner(cfg, tmp_path / "nokeys.jsonl")
        summary = runner.run_headless()
        assert summary.goals_achieved == 0
        assert summary.ticks < cfg.max_ticks  # gave up, not timed out
        texts = [m["text"] for m in runner.chat_log]
        assert sum(1 for t in texts if t == "I could not find the keys.") == 2
        report = audit_trace(summary.trace_path)
        assert report.ok, report.violations

    def test_inject_utterance_validation(self, tmp_path):
        runner = Runner(lost_keys_config(), tmp_path / "x.jsonl")
        with pytest.raises(ValueError):
            runner.inject_human_utterance("", "danny")
        with pytest.raises(ValueError):
            runner.inject_human_utterance("hello", "stranger")
        msg_id = runner.inject_human_utterance("Find my keys", "danny")
        assert msg_id.startswith("msg-")


class TestDeterminism:
    def test_same_seed_byte_identical_bodies(self, tmp_path):
        _, s1 = run_headless(tmp_path, "a.jsonl")
        _, s2 = run_headless(tmp_path, "b.jsonl")
        assert trace_body(s1.trace_path) == trace_body(s2.trace_path)

    def test_different_seed_changes_digest(self, tmp_path):
        _, s1 = run_headless(tmp_path, "a.jsonl")
        _, s2 = run_headless(tmp_path, "b.jsonl", seed=43)
        d1 = hashlib.sha256(trace_body(s1.trace_path).encode()).hexdigest()
        d2 = hashlib.sha256(trace_body(s2.trace_path).encode()).hexdigest()
        assert d1 != d2


class TestAudit:
    def test_clean_run_audits_clean(self, tmp_path):
        _, summary = run_headless(tmp_path)
        report = audit_trace(summary.trace_path)
        assert report.ok, report.violations

    def test_missing_terminal_report_detected(self, tmp_path):
        _, summary = run_headless(tmp_path)
        lines = open(summary.trace_path).read().splitlines()
        kept = []
        removed = 0
        for line in lines:
            obj = json.loads(line)
            if (
                not removed
                and obj.get("kind") == "report"
                and obj["payload"]["kind"] in ("success", "preempted")
            ):
                removed += 1
                continue
            kept.append(line)
        corrupt = tmp_path / "corrupt.jsonl"
        corrupt.write_text("\n".join(kept) + "\n")
        report = audit_trace(corrupt)
        assert any("terminal" in v for v in report.violations)

    def test_tick_regression_detected(self, tmp_path):
        _, summary = run_headless(tmp_path)
        lines = open(summary.trace_path).read().splitlines()
        obj = json.loads(lines[-1])
        obj["tick"] = 0
        lines.append(json.dumps(obj, sort_keys=True))
        corrupt = tmp_path / "corrupt.jsonl"
        corrupt.write_text("\n".join(lines) + "\n")
        report = audit_trace(corrupt)
        assert any("monotonicity" in v for v in report.violations)

    def test_empty_trace_is_clean(self, tmp_path):
        empty = tmp_path / "empty.jsonl"
        empty.write_text('{"kind":"header"}\n')
        assert audit_trace(empty).ok

    def test_explanations_reconstruct_from_trace(self, tmp_path):
        _, summary = run_headless(tmp_path)
        goal_ids = goal_ids_in_trace(summary.trace_path)
        assert len(goal_ids) == 2  # one FIND goal per robot
        thoughts = thoughts_from_trace(summary.trace_path)
        texts = [explain(goal_id, thoughts) for goal_id in goal_ids]
        assert any("achieved" in t for t in texts)
        assert any("abandoned" in t for t in texts)
        for text in texts:
            assert "Danny" in text
            assert "search" in text.lower()


class TestStallTolerance:
    def test_stalled_strategic_layer_never_blocks_tactical(self, tmp_path):
        cfg = lost_keys_config()
        runner = Runner(cfg, tmp_path / "stall.jsonl", stall_window=(40, 50))
        summary = runner.run_headless()
        assert tactical_ticks_match_world(runner)
        assert summary.collisions == 0
        assert summary.goals_achieved == 1
        # commands in flight at the stall completed after it
        _, events = read_trace(summary.trace_path)
        cmd_ticks = {
            e["payload"]["command_id"]: e["tick"]
            for e in events if e["kind"] == "command"
        }
        terminal = {
            e["payload"]["command_id"]: (e["payload"]["kind"], e["tick"])
            for e in events
            if e["kind"] == "report" and e["payload"]["kind"] in
            ("success", "failure", "preempted", "expired")
        }
        in_flight = [c for c, t in cmd_ticks.items() if t < 40]
        assert in_flight
        for cid in in_flight:
            kind, tick = terminal[cid]
            assert tick >= 90 or kind == "success"


class TestServeMode:
    def make_serving(self, tmp_path, paused: bool = False, speed: float = 500.0):
        cfg = lost_keys_config()
        runner = Runner(cfg, tmp_path / "serve.jsonl")
        control = ControlState(speed=speed)
        control.paused = paused
        hub = Broadcaster()
        loop = ServeLoop(runner, control, hub)
        thread = threading.Thread(target=loop.run, daemon=True)
        return runner, control, hub, loop, thread

    def drain(self, q: "queue.Queue[str]", seconds: float = 0.6) -> list[dict]:
        out = []
        deadline = time.monotonic() + seconds
        while time.monotonic() < deadline:
            try:
                out.append(json.loads(q.get(timeout=0.05)))
            except queue.Empty:
                pass
        return out

    def test_pause_then_step_emits_exactly_three_deltas(self, tmp_path):
        runner, control, hub, loop, thread = self.make_serving(tmp_path, paused=True)
        q = hub.attach(decimate=1)
        thread.start()
        time.sleep(0.1)
        assert runner.world.tick == 0  # paused before the first tick
        control.submit({"kind": "step", "n": 3})
        messages = self.drain(q)
        deltas = [m for m in messages if m.get("kind") == "delta"]
        assert len(deltas) == 3
        assert [d["tick"] for d in deltas] == [1, 2, 3]
        control.submit({"kind": "resume"})
        loop.finished.wait(timeout=30)

    def test_two_sessions_see_identical_sequences(self, tmp_path):
        runner, control, hub, loop, thread = self.make_serving(tmp_path)
        q1, q2 = hub.attach(1), hub.attach(1)
        thread.start()
        loop.finished.wait(timeout=60)
        seq1 = [json.loads(x) if isinstance(x, str) else x for x in self._drain_all(q1)]
        seq2 = [json.loads(x) if isinstance(x, str) else x for x in self._drain_all(q2)]
        assert seq1 == seq2
        assert any(m.get("kind") == "trace_event" for m in seq1)

    @staticmethod
    def _drain_all(q: "queue.Queue[str]") -> list[str]:
        out = []
        while True:
            try:
                out.append(q.get_nowait())
            except queue.Empty:
                return out

    def test_serve_without_clients_matches_headless_trace(self, tmp_path):
        _, headless_summary = run_headless(tmp_path, "headless.jsonl")
        runner, control, hub, loop, thread = self.make_serving(tmp_path, speed=1000.0)
        thread.start()
        loop.finished.wait(timeout=60)
        assert trace_body(loop.summary.trace_path) == trace_body(headless_summary.trace_path)

    def test_websocket_snapshot_first_and_utterance_ack(self, tmp_path):
        runner, control, hub, loop, thread = self.make_serving(tmp_path, paused=True)
        thread.start()
        app = create_app(runner, control, hub)
        with TestClient(app) as client:
            with client.websocket_connect("/ws") as ws:
                first = json.loads(ws.receive_text())
                assert first["kind"] == "snapshot"
                assert {r["robot_id"] for r in first["robots"]} == {"rover", "skye"}
                assert first["map"]["cell_size"] == 0.25
                ws.send_text(json.dumps({"kind": "utterance", "sender": "danny",
                                         "text": "Find my keys"}))
                ack = None
                for _ in range(50):
                    message = json.loads(ws.receive_text())
                    if message.get("op") == "utterance":
                        ack = message
                        break
                assert ack is not None and ack["kind"] == "ack"
                ws.send_text(json.dumps({"kind": "bogus"}))
                for _ in range(50):
                    message = json.loads(ws.receive_text())
                    if message.get("kind") == "error":
                        break
                assert message["kind"] == "error"
        control.submit({"kind": "resume"})
        loop.finished.wait(timeout=60)

    def test_unknown_utterance_sender_publishes_error(self, tmp_path):
        runner, control, hub, loop, thread = self.make_serving(tmp_path, paused=True)
        q = hub.attach(1)
        thread.start()
        control.submit({"kind": "utterance", "sender": "stranger", "text": "hi"})
        messages = self.drain(q, 0.4)
        assert any(m.get("kind") == "error" for m in messages)
        control.submit({"kind": "resume"})
        loop.finished.wait(timeout=30)


class TestCli:
    def test_headless_cli_success(self, tmp_path, capsys):
        code = cli_main([
            "--scenario", str(data_path("lost_keys.scenario")),
            "--headless", "--trace-out", str(tmp_path / "cli.jsonl"), "--audit",
        ])
        out = capsys.readouterr().out
        assert code == 0
        assert '"goals_achieved": 1' in out
        assert "audit: clean" in out

    def test_validation_error_exit_code(self, tmp_path, capsys):
        missing = tmp_path / "missing.scenario"
        code = cli_main(["--scenario", str(missing), "--headless"])
        assert code == 2

    def test_seed_override_changes_trace(self, tmp_path):
        code = cli_main([
            "--scenario", str(data_path("lost_keys.scenario")), "--seed", "7",
            "--headless", "--trace-out", str(tmp_path / "seed7.jsonl"),
        ])
        assert code == 0
        header, _ = read_trace(tmp_path / "seed7.jsonl")
        assert header["seed"] == 7
