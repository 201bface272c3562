import json

import pytest

from graalf.cli import main, parse_interval_ms

AUDIT_LINES = """\
type=SYSCALL msg=audit(100.000:1): syscall=2 success=yes exit=3 pid=10 ppid=2 comm="cat"
type=PATH msg=audit(100.000:1): name="/etc/hosts" inode=44
type=EOE msg=audit(100.000:1):
type=SYSCALL msg=audit(100.100:2): syscall=0 success=yes exit=9 a0=3 pid=10 ppid=2 comm="cat"
type=EOE msg=audit(100.100:2):
"""

CSV_LINES = """\
ts,syscall,pid,pname,ppid,ppname,path
1000000,read,7,scp,3,bash,/important-files/plan.cad
2000000,write,7,scp,3,bash,/tmp/out
"""


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


class TestIngestQuery:
    def test_audit_ingest_then_query(self, tmp_path, capsys):
        log = tmp_path / "audit.log"
        log.write_text(AUDIT_LINES)
        store_dir = tmp_path / "store"
        code, out = run_cli(capsys, "--store", str(store_dir), "ingest",
                            "--format", "audit", "--host", "h1", str(log))
        assert code == 0
        stats = json.loads(out)
        assert stats["parsed"] == 1
        assert stats["state_only"] == 1
        assert (store_dir / "journal.tsv").exists()

        code, out = run_cli(capsys, "--store", str(store_dir), "query",
                            "select * from file where name has /etc")
        assert code == 0
        body = json.loads(out)
        assert [n["title"] for n in body["graph"]["nodes"]] == ["/etc/hosts"]

    def test_csv_ingest_with_inline_header(self, tmp_path, capsys):
        log = tmp_path / "events.csv"
        log.write_text(CSV_LINES)
        store_dir = tmp_path / "store"
        code, out = run_cli(capsys, "--store", str(store_dir), "ingest",
                            "--format", "csv", "--host", "h1", str(log))
        assert json.loads(out)["parsed"] == 2

        code, out = run_cli(capsys, "--store", str(store_dir), "query",
                            "back select * from file where name has /tmp/out")
        titles = [n["title"] for n in json.loads(out)["graph"]["nodes"]]
        assert "/important-files/plan.cad" in titles
        assert "scp" in titles

    def test_query_without_store_errors(self, tmp_path, capsys):
        code = main(["query", "select * from file where name has x"])
        assert code == 2

    def test_bad_query_exit_code(self, tmp_path, capsys):
        store_dir = tmp_path / "store"
        store_dir.mkdir()
        code = main(["--store", str(store_dir), "query", "select * from *"])
        assert code == 1


class TestExportImport:
    def test_round_trip(self, tmp_path, capsys):
        log = tmp_path / "events.csv"
        log.write_text(CSV_LINES)
        store_dir = tmp_path / "store"
        run_cli(capsys, "--store", str(store_dir), "ingest",
                "--format", "csv", "--host", "h1", str(log))
        snap = tmp_path / "snap"
        code, out = run_cli(capsys, "--store", str(store_dir), "export",
                            "--two-table", str(snap))
        assert code == 0
        report = json.loads(out)
        assert report["vertices"] > 0
        assert (snap / "vertices.tsv").exists()
        assert (snap / "edges.tsv").exists()

        code, out = run_cli(capsys, "import", str(snap))
        assert code == 0
        assert json.loads(out)["nodes_resident"] == report["vertices"]


class TestMonitorSubcommand:
    def test_add_and_list_against_running_server(self, tmp_path, capsys):
        import socket
        import threading
        import time

        import uvicorn

        from graalf.query.engine import QueryEngine
        from graalf.service.api import ServiceState, create_app
        from graalf.store import GraphStore

        state = ServiceState(QueryEngine(GraphStore()))
        with socket.socket() as probe:
            probe.bind(("127.0.0.1", 0))
            port = probe.getsockname()[1]
        server = uvicorn.Server(uvicorn.Config(create_app(state),
                                               host="127.0.0.1", port=port,
                                               log_level="error"))
        thread = threading.Thread(target=server.run, daemon=True)
        thread.start()
        try:
            deadline = time.time() + 10
            while not server.started:
                assert time.time() < deadline
                time.sleep(0.02)
            url = f"http://127.0.0.1:{port}"
            code, out = run_cli(capsys, "monitor", "add",
                                "select * from file where name has /srv/",
                                "--interval", "1s", "--url", url)
            assert code == 0
            assert json.loads(out)["interval_ms"] == 1000
            code, out = run_cli(capsys, "monitor", "list", "--url", url)
            assert code == 0
            assert len(json.loads(out)) == 1
        finally:
            server.should_exit = True
            thread.join(timeout=5)


class TestServeSubcommand:
    def test_serve_end_to_end(self, tmp_path):
        import socket
        import subprocess
        import sys
        import time

        import requests

        log = tmp_path / "events.csv"
        log.write_text(CSV_LINES)
        store_dir = tmp_path / "store"
        subprocess.run(
            [sys.executable, "-m", "graalf.cli", "--store", str(store_dir),
             "ingest", "--format", "csv", "--host", "h1", str(log)],
            check=True, capture_output=True)
        with socket.socket() as probe:
            probe.bind(("127.0.0.1", 0))
            port = probe.getsockname()[1]
        proc = subprocess.Popen(
            [sys.executable, "-m", "graalf.cli", "--store", str(store_dir),
             "serve", "--port", str(port), "--preload"],
            stdout=subprocess.PIPE, stderr=subprocess.PIPE)
        try:
            url = f"http://127.0.0.1:{port}"
            deadline = time.time() + 15
            while True:
                try:
                    sid = requests.post(f"{url}/api/sessions",
                                        timeout=2).json()["session_id"]
                    break
                except requests.RequestException:
                    assert time.time() < deadline, "server did not come up"
                    time.sleep(0.1)
            body = requests.post(
                f"{url}/api/sessions/{sid}/query",
                json={"text": "select * from file where name has /important-files/"},
                timeout=5).json()
            titles = [n["title"] for n in body["graph"]["nodes"]]
            assert titles == ["/important-files/plan.cad"]
        finally:
            proc.terminate()
            proc.wait(timeout=10)


class TestEnvConfig:
    def test_env_vars_supply_defaults(self, monkeypatch):
        from graalf.cli import build_parser

        monkeypatch.setenv("GRAALF_COMPRESS", "c2")
        monkeypatch.setenv("GRAALF_MEMORY_LIMIT", "1048576")
        monkeypatch.setenv("GRAALF_EVICT_THRESHOLD", "0.8")
        args = build_parser().parse_args(["console"])
        assert args.compress == "c2"
        assert args.memory_limit == 1048576
        assert args.evict_threshold == 0.8
        # an explicit flag still wins
        args = build_parser().parse_args(["--compress", "c0", "console"])
        assert args.compress == "c0"


class TestIntervals:
    @pytest.mark.parametrize("text,expected", [
        ("500ms", 500), ("1s", 1000), ("2m", 120000), ("750", 750),
    ])
    def test_parse(self, text, expected):
        assert parse_interval_ms(text) == expected

    def test_bad_interval(self):
        with pytest.raises(SystemExit):
            parse_interval_ms("soon")
