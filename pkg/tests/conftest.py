import dataclasses

import pytest

from adaptive_hermite.experiments import run

# criterion number -> list of (label, passed, detail)
ACCEPTANCE: dict = {}
_RUNS: dict = {}


class Verdicts:
    def __call__(self, criterion: int, label: str, passed: bool, detail: str = "") -> bool:
        passed = bool(passed)
        ACCEPTANCE.setdefault(criterion, []).append((label, passed, detail))
        print(f"{'PASS' if passed else 'FAIL'} criterion {criterion} [{label}] {detail}")
        return passed


@pytest.fixture(scope="session")
def verdict():
    return Verdicts()


def _key(config):
    d = config.to_dict()
    d["keep_event_fields"] = config.keep_event_fields
    return repr(sorted((k, repr(v)) for k, v in d.items()))


@pytest.fixture(scope="session")
def cached_run():
    """Run a configuration once per session; long runs are shared between criteria."""
    def get(config):
        key = _key(config)
        if key not in _RUNS:
            _RUNS[key] = run(config)
        return _RUNS[key]
    return get


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.write_sep("=", "acceptance criteria")
    for crit in sorted(ACCEPTANCE):
        checks = ACCEPTANCE[crit]
        ok = all(p for _, p, _ in checks)
        tr.write_line(f"{'PASS' if ok else 'FAIL'} criterion {crit}: "
                      + "; ".join(f"{label}={'ok' if p else 'FAILED'}" for label, p, _ in checks))
        for label, p, detail in checks:
            if detail:
                tr.write_line(f"    {label}: {detail}")
