"""Shared fixtures.

Every successful ``two_phase_round`` made anywhere in the suite is re-checked
from scratch: the emitted circuit is rebuilt with the oracle builder and its
distance to the target must not exceed the threshold.
"""
import contextlib
import importlib

import numpy as np
import pytest

import oracles

# module objects; ``rzround.partition`` the attribute is the function of that name
rzround = importlib.import_module("rzround")
cli, partition_mod, tcount = (importlib.import_module(f"rzround.{m}") for m in ("cli", "partition", "tcount"))

SOUNDNESS = {"checked": 0, "violations": []}
CRITERIA = {}

_real_round = tcount.two_phase_round


def _checked_round(circuit, initial_params=None, cfg=tcount.ThresholdConfig(), *args, **kwargs):
    out = _real_round(circuit, initial_params, cfg, *args, **kwargs)
    if out.success:
        target = kwargs.get("target")
        if target is None:
            target = oracles.unitary(circuit, initial_params)
        d = oracles.aligned_distance(np.asarray(target), oracles.unitary(out.final_circuit, out.residual_params))
        SOUNDNESS["checked"] += 1
        if d > cfg.threshold:
            SOUNDNESS["violations"].append((circuit.num_qubits, circuit.num_params, d, cfg.threshold))
        assert d <= cfg.threshold, f"accepted run exceeds threshold: {d} > {cfg.threshold}"
    return out


# installed before any test module imports the function by name
for _mod in (rzround, tcount, partition_mod, cli):
    _mod.two_phase_round = _checked_round


@pytest.fixture
def criterion():
    """Record PASS/FAIL for an acceptance criterion; the summary prints one line each."""

    @contextlib.contextmanager
    def record(number, title):
        detail = {}
        try:
            yield detail
        except BaseException:
            CRITERIA[number] = (False, title, detail)
            raise
        CRITERIA[number] = (True, title, detail)

    return record


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(CRITERIA):
            ok, title, detail = CRITERIA[n]
            extra = ", ".join(f"{k}={v}" for k, v in detail.items())
            terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {title}  [{extra}]")
    terminalreporter.write_line(
        f"soundness: {SOUNDNESS['checked']} accepted rounding runs re-checked, "
        f"{len(SOUNDNESS['violations'])} violations"
    )
