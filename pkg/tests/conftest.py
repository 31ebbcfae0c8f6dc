"""Shared fixtures and the acceptance-criteria terminal summary."""

from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

# criterion number -> (label, "PASS"/"FAIL", detail string with the numbers)
_ACCEPTANCE: dict[int, tuple[str, str, str]] = {}


def record_acceptance(num: int, label: str, passed: bool, detail: str) -> None:
    _ACCEPTANCE[num] = (label, "PASS" if passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_ACCEPTANCE):
        label, status, detail = _ACCEPTANCE[num]
        terminalreporter.write_line(f"{status}  criterion {num:>2}: {label}  [{detail}]")
