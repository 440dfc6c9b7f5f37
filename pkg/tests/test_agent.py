import hashlib
import queue
import threading
import time

import pytest

from hashfleet import protocol
from hashfleet.agent import Agent, AgentConfig, TransportClosed
from hashfleet.models import EngineKind, HashAlgorithm, JobStatus

from harness import Harness, InProcTransport

MD5 = HashAlgorithm.MD5


def md5_hex(data: bytes) -> str:
    return hashlib.md5(data).hexdigest()


@pytest.fixture
def harness(wordlist_dir):
    h = Harness(wordlist_dir=wordlist_dir)
    yield h
    h.shutdown()


# ---------------------------------------------------------------------------
# reconnect backoff


def test_backoff_schedule_doubles_to_cap():
    sleeps = []
    attempts = {"n": 0}

    def factory():
        attempts["n"] += 1
        raise ConnectionRefusedError("coordinator down")

    config = AgentConfig(agent_name="a", reconnect_initial=1.0, reconnect_max=30.0)
    agent = Agent(config, factory, sleeper=sleeps.append)

    def run_some():
        while attempts["n"] < 9 and not agent._shutdown.is_set():
            try:
                agent._factory()
            except Exception:
                pass
            break

    # Drive the real run loop but stop it after enough failures.
    def stopping_sleeper(seconds):
        sleeps.append(seconds)
        if len(sleeps) >= 8:
            agent._shutdown.set()

    agent._sleep = stopping_sleeper
    agent.run()
    assert sleeps == [1.0, 2.0, 4.0, 8.0, 16.0, 30.0, 30.0, 30.0]


def test_backoff_resets_after_successful_registration(harness):
    sleeps = []
    fails = {"n": 2}

    def factory():
        if fails["n"] > 0:
            fails["n"] -= 1
            raise ConnectionRefusedError()
        return InProcTransport(harness.coordinator)

    config = AgentConfig(agent_name="flaky", fixed_benchmark={MD5: 10.0},
                         reconnect_initial=1.0, reconnect_max=30.0,
                         heartbeat_interval=0.2)

    agent = Agent(config, factory, sleeper=lambda s: sleeps.append(s))
    agent.start()
    harness.wait_for(lambda: agent.node_id is not None, "never registered")
    assert sleeps == [1.0, 2.0]
    agent.stop()


# ---------------------------------------------------------------------------
# registration content


def test_register_carries_benchmark_os_arch(harness):
    agent = harness.add_agent("probe", md5_power=123.0)
    profile = {p.agent_name: p for p in harness.coordinator.list_nodes()}["probe"]
    assert profile.power[MD5] == 123.0
    assert profile.os
    assert profile.arch
    assert profile.engine_kind is EngineKind.BUILTIN
    assert agent.node_id == profile.node_id


def test_register_uses_measured_benchmark_when_not_fixed(harness):
    config = AgentConfig(agent_name="bench", benchmark_budget=0.02,
                         reconnect_initial=0.01, heartbeat_interval=0.5)
    agent = Agent(config, lambda: InProcTransport(harness.coordinator))
    agent.start()
    harness.wait_for(lambda: agent.node_id is not None, "never registered")
    profile = {p.agent_name: p for p in harness.coordinator.list_nodes()}["bench"]
    assert all(hps > 0 for hps in profile.power.values())
    assert set(profile.power) == set(HashAlgorithm)
    agent.stop()


# ---------------------------------------------------------------------------
# task execution through the real runtime


def submit_dictionary(harness, planted, node_names):
    from hashfleet.models import Dictionary, JobRequest

    request = JobRequest(
        owner="tester", algorithm=MD5, mode=Dictionary(("common1k",)),
        hashes=tuple(planted), node_ids=tuple(harness.node_id(n) for n in node_names))
    return harness.coordinator.submit_job(request)


def test_assign_run_events_and_done(harness, wordlist_dir, planted_md5):
    harness.add_agent("solo", md5_power=5.0, wordlist_dir=wordlist_dir)
    job = submit_dictionary(harness, planted_md5, ["solo"])
    status = harness.wait_job_terminal(job.id)
    assert status is JobStatus.COMPLETED
    results = harness.coordinator.cracked_results(job.id)
    assert {r.hash: r.plaintext for r in results} == planted_md5


def test_second_assign_while_working_gets_busy_error(harness):
    agent = harness.add_agent("busy1", md5_power=5.0)
    transport = InProcTransport(harness.coordinator)

    # Occupy the agent directly with a fake long task via its inbox: register
    # is done, so feed a brute task big enough to still be running.
    node_id = agent.node_id
    coordinator = harness.coordinator
    from hashfleet.models import BruteForce, JobRequest

    job = coordinator.submit_job(JobRequest(
        owner="t", algorithm=MD5, mode=BruteForce(3, 3),
        hashes=(md5_hex(b"~~~"),), node_ids=(node_id,)))
    harness.wait_for(
        lambda: any(t.status.value == "running"
                    for t in coordinator.tasks_for_job(job.id)),
        "task never started")

    # Sneak a duplicate assignment past the coordinator, straight to the agent.
    errors = []
    state = coordinator._nodes[node_id]
    original_sender = state.sender
    rogue = protocol.TaskAssign(task_id="rogue", job_id=job.id, algorithm="md5",
                                mode="brute", hashes=(md5_hex(b"x"),),
                                keyspace=protocol.KeyspaceRef(length=1, start=0, end=95))
    state.sender(protocol.encode_message(rogue))

    deadline = time.monotonic() + 10
    while time.monotonic() < deadline:
        busy = [e for e in harness.store.events("agent_error") if "busy" in (e[5] or "")]
        if busy:
            break
        time.sleep(0.01)
    assert busy, "agent never reported busy"
    status = harness.wait_job_terminal(job.id)
    assert status is JobStatus.COMPLETED  # original task unaffected


def test_missing_wordlist_fails_task_not_agent(harness, tmp_path):
    harness.add_agent("nolists", md5_power=5.0, wordlist_dir=tmp_path / "empty")
    from hashfleet.models import Dictionary, JobRequest

    harness.coordinator.wordlists = {
        "common1k": __import__("hashfleet.models", fromlist=["WordlistMeta"]).WordlistMeta(
            id="common1k", path="x", line_count=1000, byte_size=1)}
    job = harness.coordinator.submit_job(JobRequest(
        owner="t", algorithm=MD5, mode=Dictionary(("common1k",)),
        hashes=(md5_hex(b"w"),), node_ids=(harness.node_id("nolists"),)))
    status = harness.wait_job_terminal(job.id)
    assert status is JobStatus.FAILED
    # Agent survived: still registered and connected.
    assert harness.coordinator.list_nodes()


def test_cracked_precede_task_done_in_transcript(harness, wordlist_dir, planted_md5):
    frames = []
    original = harness.coordinator.agent_frame

    def spy(conn_id, frame):
        frames.append(frame)
        original(conn_id, frame)

    harness.coordinator.agent_frame = spy
    harness.add_agent("orderly", md5_power=5.0, wordlist_dir=wordlist_dir)
    job = submit_dictionary(harness, planted_md5, ["orderly"])
    harness.wait_job_terminal(job.id)

    kinds = []
    for frame in frames:
        msg = protocol.decode_message(frame)
        if isinstance(msg, protocol.CrackedMsg):
            kinds.append("cracked")
        elif isinstance(msg, protocol.TaskDone):
            kinds.append("done")
    assert kinds.count("cracked") == 8
    assert kinds.count("done") == 1
    assert kinds.index("done") > max(i for i, k in enumerate(kinds) if k == "cracked")


def test_zero_cracks_yields_single_task_done(harness, wordlist_dir):
    harness.add_agent("empty", md5_power=5.0, wordlist_dir=wordlist_dir)
    job = submit_dictionary(harness, [md5_hex(b"not-in-the-list")], ["empty"])
    status = harness.wait_job_terminal(job.id)
    assert status is JobStatus.COMPLETED
    assert harness.coordinator.cracked_results(job.id) == []


def test_reconnect_replays_buffered_events_without_duplicates(wordlist_dir, planted_md5):
    """Drop one agent's link mid-task while a sibling keeps the job alive;
    buffered events replay after reconnect and dedup keeps rows unique."""
    harness = Harness(wordlist_dir=wordlist_dir)
    try:
        coordinator = harness.coordinator
        harness.add_agent("steady", md5_power=1.0, wordlist_dir=wordlist_dir)

        flaky = {"first": True}

        class FlakyTransport:
            """Dies (from both ends) after relaying two cracked messages."""

            def __init__(self):
                self.inner = InProcTransport(coordinator)
                self.cracked_sent = 0
                self.dead = False

            def send(self, frame):
                if self.dead:
                    raise TransportClosed("flaky link down")
                if '"type":"cracked"' in frame and flaky["first"]:
                    self.cracked_sent += 1
                    if self.cracked_sent > 2:
                        flaky["first"] = False
                        self.dead = True
                        self.inner.close()  # coordinator notices the drop
                        raise TransportClosed("flaky link down")
                self.inner.send(frame)

            def recv(self, timeout=None):
                if self.dead:
                    raise TransportClosed("flaky link down")
                return self.inner.recv(timeout=timeout)

            def close(self):
                self.inner.close()

        config = AgentConfig(agent_name="flaky2", wordlist_dir=wordlist_dir,
                             fixed_benchmark={MD5: 3.0}, progress_every=100,
                             reconnect_initial=0.02, reconnect_max=0.1,
                             heartbeat_interval=1.0)
        agent = Agent(config, FlakyTransport)
        harness.agents.append(agent)
        agent.start()
        harness.wait_for(lambda: agent.node_id is not None, "never registered")

        # flaky2 (power 3) gets the 6-hash slice, steady (power 1) gets 2.
        job = submit_dictionary(harness, planted_md5, ["flaky2", "steady"])
        status = harness.wait_job_terminal(job.id, timeout=20)
        assert status is JobStatus.COMPLETED
        results = coordinator.cracked_results(job.id)
        assert len(results) == 8
        assert {r.hash: r.plaintext for r in results} == planted_md5
        assert flaky["first"] is False  # the drop really happened
    finally:
        harness.shutdown()
