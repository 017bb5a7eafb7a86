import time

import pytest

_KEY = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_KEY] = {}


class Criterion:
    """Collects the verdict for one acceptance criterion."""

    def __init__(self, store, cid: str, title: str, limit_s: float | None):
        self.store, self.cid, self.title, self.limit_s = store, cid, title, limit_s
        self.t0 = time.perf_counter()
        self.lines: list[str] = []

    def note(self, text: str):
        self.lines.append(text)

    def finish(self, ok: bool, summary: str) -> bool:
        elapsed = time.perf_counter() - self.t0
        fast = self.limit_s is None or elapsed < self.limit_s
        if self.limit_s is not None:
            summary += f"; runtime {elapsed:.1f}s (limit {self.limit_s:g}s)"
        verdict = ok and fast
        self.store[self.cid] = (verdict, self.title, summary, self.lines)
        return verdict


@pytest.fixture
def criterion(request):
    store = request.config.stash[_KEY]

    def start(cid: str, title: str, limit_s: float | None = None) -> Criterion:
        return Criterion(store, cid, title, limit_s)

    return start


def _order(cid: str):
    head = cid.rstrip("abcdefghijklmnopqrstuvwxyz+")
    return (int(head), cid)


def pytest_terminal_summary(terminalreporter, config):
    store = config.stash.get(_KEY, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(store, key=_order):
        ok, title, summary, lines = store[cid]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {cid:<4} {title}: {summary}")
        for line in lines:
            terminalreporter.write_line(f"       {line}")
