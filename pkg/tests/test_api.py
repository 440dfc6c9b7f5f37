import csv
import hashlib
import io
import json
import re

import pytest
from fastapi.testclient import TestClient

from hashfleet import protocol
from hashfleet.api.app import create_app, export_csv, format_csv_plaintext
from hashfleet.api.auth import TokenTable, create_user
from hashfleet.coordinator import Coordinator
from hashfleet.models import CrackedResult, HashAlgorithm
from hashfleet.store import Store

from harness import ScriptedAgent

MD5 = HashAlgorithm.MD5


def md5_hex(data: bytes) -> str:
    return hashlib.md5(data).hexdigest()


HASHES8 = [md5_hex(f"pw{i}".encode()) for i in range(8)]


class Env:
    def __init__(self, client, coordinator, store, tokens, users):
        self.client = client
        self.coordinator = coordinator
        self.store = store
        self.tokens = tokens
        self.users = users

    def login(self, username, password):
        r = self.client.post("/auth/login", json={"username": username,
                                                  "password": password})
        assert r.status_code == 200, r.text
        return r.json()["token"]

    def auth(self, token):
        return {"Authorization": f"Bearer {token}"}


@pytest.fixture
def env(wordlist_dir):
    store = Store(":memory:")
    coordinator = Coordinator(store, wordlist_dir=wordlist_dir)
    tokens = TokenTable()
    users = {
        "admin": create_user(store, "root", "rootpw", role="admin"),
        "alice": create_user(store, "alice", "alicepw"),
        "bob": create_user(store, "bob", "bobpw"),
    }
    app = create_app(coordinator, store, tokens, tick_interval=0.25)
    with TestClient(app) as client:
        yield Env(client, coordinator, store, tokens, users)
    store.close()


def register_scripted(env, name="worker", hps=4.0):
    agent = ScriptedAgent(env.coordinator)
    agent.send(protocol.Register(agent_name=name, os="Linux", arch="x86_64",
                                 engine="builtin", benchmark={"md5": hps}))
    agent.node_id = agent.messages()[0].node_id
    return agent


def job_body(node_ids, hashes=None, **mode):
    return {
        "algorithm": "md5",
        "mode": mode or {"mode": "dictionary", "wordlists": ["common1k"]},
        "node_ids": node_ids,
        "hashes": hashes if hashes is not None else HASHES8,
    }


# ---------------------------------------------------------------------------
# login


def test_login_good_and_bad(env):
    token = env.login("alice", "alicepw")
    assert token
    r = env.client.post("/auth/login", json={"username": "alice", "password": "nope"})
    assert r.status_code == 401
    assert r.json()["code"] == "unauthorized"
    r = env.client.post("/auth/login", json={"username": "ghost", "password": "x"})
    assert r.status_code == 401  # unknown user indistinguishable from bad password


def test_logout_revokes(env):
    token = env.login("alice", "alicepw")
    assert env.client.post("/auth/logout", headers=env.auth(token)).status_code == 204
    assert env.client.get("/nodes", headers=env.auth(token)).status_code == 401


def test_token_expiry():
    clock = {"now": 0.0}
    table = TokenTable(ttl=100.0, clock=lambda: clock["now"])
    from hashfleet.api.auth import AuthUser

    token = table.issue(AuthUser("u", "u", "user"))
    assert table.resolve(token) is not None
    clock["now"] = 101.0
    assert table.resolve(token) is None


# ---------------------------------------------------------------------------
# authorization matrix


def test_route_authorization_matrix(env):
    agent = register_scripted(env)
    alice = env.login("alice", "alicepw")
    bob = env.login("bob", "bobpw")
    admin = env.login("root", "rootpw")

    # A job owned by alice, for the per-resource rows.
    r = env.client.post("/jobs", json=job_body([agent.node_id]),
                        headers=env.auth(alice))
    assert r.status_code == 201, r.text
    job_id = r.json()["job_id"]

    post_jobs = ("POST", "/jobs", lambda: job_body([agent.node_id]))
    post_user = ("POST", "/admin/users", lambda: {"username": f"u{id(object())}",
                                                  "password": "pw"})
    matrix = [
        # (method, path, body) -> {caller: expected status}
        (("GET", "/nodes", None), (401, 200, 200, 200)),
        (("GET", "/wordlists", None), (401, 200, 200, 200)),
        (post_jobs, (401, 201, 201, 201)),
        (("GET", "/jobs", None), (401, 200, 200, 200)),
        (("GET", f"/jobs/{job_id}", None), (401, 200, 403, 200)),
        (("GET", f"/jobs/{job_id}/results", None), (401, 200, 403, 200)),
        (("GET", f"/jobs/{job_id}/results.csv", None), (401, 200, 403, 200)),
        (("GET", "/jobs/doesnotexist", None), (401, 404, 404, 404)),
        (("GET", "/stats/me", None), (401, 200, 200, 200)),
        (("GET", "/admin/stats", None), (401, 403, 403, 200)),
        (("GET", "/admin/users", None), (401, 403, 403, 200)),
        (post_user, (401, 403, 403, 201)),
    ]
    callers = [None, alice, bob, admin]
    for (method, path, body), expected in matrix:
        for token, want in zip(callers, expected):
            headers = env.auth(token) if token else {}
            kwargs = {"headers": headers}
            if body is not None:
                kwargs["json"] = body()
            r = env.client.request(method, path, **kwargs)
            assert r.status_code == want, (
                f"{method} {path} as {token and token[:6]}: "
                f"got {r.status_code}, want {want}: {r.text}")
            if r.status_code in (401, 403, 404):
                assert r.json()["code"] in ("unauthorized", "forbidden", "not_found")


# ---------------------------------------------------------------------------
# submission validation


def test_submit_empty_hash_box_names_field(env):
    register_scripted(env)
    token = env.login("alice", "alicepw")
    agent_id = env.coordinator.list_nodes()[0].node_id
    r = env.client.post("/jobs", json=job_body([agent_id], hashes=[]),
                        headers=env.auth(token))
    assert r.status_code == 422
    body = r.json()
    assert body["field"] == "hashes"
    assert body["code"] == "empty_hashes"


def test_submit_bad_mode_constraint(env):
    agent = register_scripted(env)
    token = env.login("alice", "alicepw")
    body = job_body([agent.node_id])
    body["mode"] = {"mode": "brute", "min_length": 2, "max_length": 1}
    r = env.client.post("/jobs", json=body, headers=env.auth(token))
    assert r.status_code == 422
    assert r.json()["code"] == "mode_constraint"


def test_submit_unknown_wordlist(env):
    agent = register_scripted(env)
    token = env.login("alice", "alicepw")
    body = job_body([agent.node_id])
    body["mode"] = {"mode": "dictionary", "wordlists": ["nope"]}
    r = env.client.post("/jobs", json=body, headers=env.auth(token))
    assert r.status_code == 422
    assert r.json()["code"] == "unknown_wordlist"


def test_submit_disconnected_node(env):
    agent = register_scripted(env)
    agent.disconnect()
    token = env.login("alice", "alicepw")
    r = env.client.post("/jobs", json=job_body([agent.node_id]),
                        headers=env.auth(token))
    assert r.status_code == 422
    assert r.json()["code"] == "unknown_node"


def test_submit_bad_hash_text(env):
    agent = register_scripted(env)
    token = env.login("alice", "alicepw")
    body = job_body([agent.node_id], hashes=[])
    body.pop("hashes")
    body["hashes_text"] = "zzzz\n"
    r = env.client.post("/jobs", json=body, headers=env.auth(token))
    assert r.status_code == 422
    assert r.json()["code"] == "invalid_hash"


def test_submit_multipart_file_upload(env):
    agent = register_scripted(env)
    token = env.login("alice", "alicepw")
    spec = {"algorithm": "md5", "mode": {"mode": "dictionary",
                                         "wordlists": ["common1k"]},
            "node_ids": [agent.node_id]}
    content = ("\r\n".join(h.upper() for h in HASHES8) + "\r\n\r\n").encode()
    r = env.client.post(
        "/jobs", headers=env.auth(token),
        data={"spec": json.dumps(spec)},
        files={"hashes_file": ("hashes.txt", content, "text/plain")},
    )
    assert r.status_code == 201, r.text
    job_id = r.json()["job_id"]
    detail = env.client.get(f"/jobs/{job_id}", headers=env.auth(token)).json()
    assert detail["total_hashes"] == 8  # normalized and deduplicated


def test_textbox_and_file_paths_validate_identically(env):
    agent = register_scripted(env)
    token = env.login("alice", "alicepw")
    body = {"algorithm": "md5", "mode": {"mode": "dictionary",
                                         "wordlists": ["common1k"]},
            "node_ids": [agent.node_id],
            "hashes_text": "\n".join(HASHES8)}
    r = env.client.post("/jobs", json=body, headers=env.auth(token))
    assert r.status_code == 201


# ---------------------------------------------------------------------------
# job detail, results, CSV


def run_job_with_cracks(env, cracks):
    """Submit as alice, drive a scripted agent through `cracks` pairs."""
    agent = register_scripted(env)
    token = env.login("alice", "alicepw")
    r = env.client.post("/jobs", json=job_body([agent.node_id]),
                        headers=env.auth(token))
    assert r.status_code == 201
    job_id = r.json()["job_id"]
    assign = agent.messages()[0]
    agent.send(protocol.TaskAccept(task_id=assign.task_id))
    for digest_hex, plaintext in cracks:
        agent.send(protocol.CrackedMsg(task_id=assign.task_id, hash=digest_hex,
                                       plaintext_hex=plaintext.hex()))
    agent.send(protocol.TaskDone(task_id=assign.task_id, outcome="exhausted"))
    return job_id, token


def test_job_detail_and_results(env):
    cracks = [(HASHES8[i], f"pw{i}".encode()) for i in range(5)]
    job_id, token = run_job_with_cracks(env, cracks)
    detail = env.client.get(f"/jobs/{job_id}", headers=env.auth(token)).json()
    assert detail["status"] == "completed"
    assert detail["cracked_count"] == 5
    assert detail["recovery_percent"] == pytest.approx(62.5)
    results = env.client.get(f"/jobs/{job_id}/results", headers=env.auth(token)).json()
    assert {r["hash"] for r in results} == {h for h, _ in cracks}


CSV_ESCAPE = re.compile(r"\\x([0-9a-fA-F]{2})")


def csv_plaintext_to_bytes(fieldtext: str) -> bytes:
    out = bytearray()
    i = 0
    while i < len(fieldtext):
        m = CSV_ESCAPE.match(fieldtext, i)
        if m:
            out.append(int(m.group(1), 16))
            i = m.end()
        else:
            out.append(ord(fieldtext[i]))
            i += 1
    return bytes(out)


def test_csv_export_header_only_when_no_cracks(env):
    job_id, token = run_job_with_cracks(env, [])
    r = env.client.get(f"/jobs/{job_id}/results.csv", headers=env.auth(token))
    assert r.status_code == 200
    assert r.text == "hash,plaintext,cracked_at,node\n"
    assert r.headers["content-type"].startswith("text/csv")


def test_csv_export_roundtrips_exact_pairs(env):
    cracks = [(HASHES8[i], f"pw{i}".encode()) for i in range(5)]
    job_id, token = run_job_with_cracks(env, cracks)
    r = env.client.get(f"/jobs/{job_id}/results.csv", headers=env.auth(token))
    rows = list(csv.reader(io.StringIO(r.text)))
    assert rows[0] == ["hash", "plaintext", "cracked_at", "node"]
    recovered = {row[0]: csv_plaintext_to_bytes(row[1]) for row in rows[1:]}
    assert recovered == dict(cracks)


def test_csv_quoting_rules():
    assert format_csv_plaintext(b'pa"ss') == '"pa""ss"'
    assert format_csv_plaintext(b"plain") == '"plain"'
    assert format_csv_plaintext(b"a,b") == '"a,b"'
    assert format_csv_plaintext(b"\x00\xff") == '"\\x00\\xff"'
    assert format_csv_plaintext(b"back\\slash") == '"back\\x5cslash"'


def test_csv_nonprintable_roundtrip(env):
    # Feed a crack whose plaintext is raw bytes, then re-read it from CSV.
    h = hashlib.md5(b"\x01,\x02\"three\\").hexdigest()
    agent = register_scripted(env)
    token = env.login("alice", "alicepw")
    r = env.client.post("/jobs", json=job_body([agent.node_id], hashes=[h]),
                        headers=env.auth(token))
    job_id = r.json()["job_id"]
    assign = agent.messages()[0]
    agent.send(protocol.CrackedMsg(task_id=assign.task_id, hash=h,
                                   plaintext_hex=b"\x01,\x02\"three\\".hex()))
    agent.send(protocol.TaskDone(task_id=assign.task_id, outcome="all_cracked"))
    r = env.client.get(f"/jobs/{job_id}/results.csv", headers=env.auth(token))
    rows = list(csv.reader(io.StringIO(r.text)))
    assert csv_plaintext_to_bytes(rows[1][1]) == b"\x01,\x02\"three\\"


def test_csv_rows_chronological(env):
    cracks = [(HASHES8[i], f"pw{i}".encode()) for i in range(5)]
    job_id, token = run_job_with_cracks(env, cracks)
    r = env.client.get(f"/jobs/{job_id}/results.csv", headers=env.auth(token))
    rows = list(csv.reader(io.StringIO(r.text)))[1:]
    times = [row[2] for row in rows]
    assert times == sorted(times)
    assert len(rows) == 5  # 6 lines total with the header


# ---------------------------------------------------------------------------
# stats endpoints


def test_stats_me_counts_modes(env):
    agent = register_scripted(env)
    token = env.login("alice", "alicepw")
    for _ in range(2):
        r = env.client.post("/jobs", json=job_body([agent.node_id]),
                            headers=env.auth(token))
        assign = [m for m in agent.messages()
                  if isinstance(m, protocol.TaskAssign)][0]
        agent.send(protocol.TaskDone(task_id=assign.task_id, outcome="exhausted"))
    stats = env.client.get("/stats/me", headers=env.auth(token)).json()
    assert stats["total_jobs"] == 2
    assert stats["completed"] == 2
    assert stats["mode_percent"] == {"dictionary": 100.0}
    assert sum(stats["by_mode"].values()) == 2
    assert sum(stats["activity_by_day"].values()) == 2


def test_admin_stats_include_nodes(env):
    register_scripted(env, name="inventory-node", hps=42.0)
    admin = env.login("root", "rootpw")
    stats = env.client.get("/admin/stats", headers=env.auth(admin)).json()
    assert stats["users"] == 3
    names = [n["agent_name"] for n in stats["nodes"]]
    assert "inventory-node" in names
    node = stats["nodes"][names.index("inventory-node")]
    assert node["power"]["md5"] == 42.0
    assert node["connected"] is True


def test_admin_create_duplicate_user(env):
    admin = env.login("root", "rootpw")
    r = env.client.post("/admin/users", headers=env.auth(admin),
                        json={"username": "alice", "password": "x"})
    assert r.status_code == 422
    assert r.json()["field"] == "username"


# ---------------------------------------------------------------------------
# websocket endpoints


def test_ws_agent_endpoint_speaks_protocol(env):
    with env.client.websocket_connect("/ws/agent") as ws:
        ws.send_text(protocol.encode_message(protocol.Register(
            agent_name="ws-node", os="Linux", arch="x86_64", engine="builtin",
            benchmark={"md5": 5.0})))
        ack = protocol.decode_message(ws.receive_text())
        assert isinstance(ack, protocol.RegisterAck)
        ws.send_text(protocol.encode_message(protocol.Ping()))
        assert isinstance(protocol.decode_message(ws.receive_text()), protocol.Pong)
    # Clean close flips the node to disconnected.
    import time

    deadline = time.monotonic() + 5
    while time.monotonic() < deadline:
        if all(p.agent_name != "ws-node" for p in env.coordinator.list_nodes()):
            break
        time.sleep(0.01)
    assert all(p.agent_name != "ws-node" for p in env.coordinator.list_nodes())


def test_ws_ui_streams_cracked_events(env):
    agent = register_scripted(env)
    token = env.login("alice", "alicepw")
    r = env.client.post("/jobs", json=job_body([agent.node_id]),
                        headers=env.auth(token))
    job_id = r.json()["job_id"]
    assign = agent.messages()[0]

    with env.client.websocket_connect(f"/ws/ui?job={job_id}&token={token}") as ws:
        first = json.loads(ws.receive_text())
        assert first["type"] == "status"
        agent.send(protocol.CrackedMsg(task_id=assign.task_id, hash=HASHES8[0],
                                       plaintext_hex=b"pw0".hex()))
        agent.send(protocol.TaskDone(task_id=assign.task_id, outcome="exhausted"))
        seen_cracked = seen_status = False
        for _ in range(5):
            event = json.loads(ws.receive_text())
            if event["type"] == "cracked" and event["hash"] == HASHES8[0]:
                assert event["plaintext_hex"] == b"pw0".hex()
                seen_cracked = True
            if event["type"] == "status" and event["status"] == "completed":
                seen_status = True
                break
        assert seen_cracked and seen_status


def test_ws_ui_rejects_bad_token_and_foreign_job(env):
    from starlette.websockets import WebSocketDisconnect

    agent = register_scripted(env)
    alice = env.login("alice", "alicepw")
    bob = env.login("bob", "bobpw")
    r = env.client.post("/jobs", json=job_body([agent.node_id]),
                        headers=env.auth(alice))
    job_id = r.json()["job_id"]

    for query in (f"job={job_id}&token=bogus", f"job={job_id}&token={bob}",
                  f"job=missing&token={alice}"):
        with pytest.raises(WebSocketDisconnect):
            with env.client.websocket_connect(f"/ws/ui?{query}") as ws:
                ws.receive_text()


# ---------------------------------------------------------------------------
# static dashboard serving


def test_static_dashboard_served_at_root(wordlist_dir, tmp_path):
    dist = tmp_path / "dist"
    dist.mkdir()
    (dist / "index.html").write_text("<!doctype html><title>dash</title>")
    store = Store(":memory:")
    coordinator = Coordinator(store, wordlist_dir=wordlist_dir)
    app = create_app(coordinator, store, TokenTable(), static_dir=dist)
    with TestClient(app) as client:
        r = client.get("/")
        assert r.status_code == 200
        assert "dash" in r.text
        # API routes still win over the static mount.
        assert client.get("/nodes").status_code == 401
    store.close()
