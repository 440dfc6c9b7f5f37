import hashlib
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    """One visible PASS/FAIL line per acceptance criterion."""
    outcome = yield
    report = outcome.get_result()
    criterion = getattr(item.function, "_criterion", None)
    if criterion and report.when == "call":
        verdict = "PASS" if report.passed else "FAIL"
        sys.stderr.write(f"\nACCEPTANCE [{criterion}]: {verdict}\n")


@pytest.fixture
def wordlist_dir(tmp_path):
    """A directory with one 1000-line wordlist (id 'common1k')."""
    d = tmp_path / "wordlists"
    d.mkdir()
    words = [f"word{i:04d}" for i in range(1000)]
    (d / "common1k.txt").write_text("\n".join(words) + "\n")
    return d


@pytest.fixture
def planted_md5(wordlist_dir):
    """Eight MD5 targets planted across the common1k wordlist."""
    words = [f"word{i:04d}" for i in (3, 77, 150, 420, 555, 700, 888, 999)]
    pairs = {hashlib.md5(w.encode()).hexdigest(): w.encode() for w in words}
    return pairs  # digest -> plaintext bytes
