import logging
from types import SimpleNamespace

import pytest

from qexclusion.utils.solver_logger import log_solver_call

LOGGER = "qexclusion.utils.solver_logger"


@log_solver_call(solver_name="toy", metadata_fields={"iterations": lambda r: r.iterations, "dim": lambda r: r.missing})
def toy_solve(dim=None):
    return SimpleNamespace(iterations=7)


@log_solver_call(solver_name="toy")
def toy_fail():
    raise ValueError("boom")


@log_solver_call(solver_name="quiet", level=logging.DEBUG)
def toy_quiet():
    return 1


def test_success_line(caplog):
    caplog.set_level(logging.INFO, logger=LOGGER)
    assert toy_solve().iterations == 7
    message = caplog.records[-1].getMessage()
    assert message.startswith("[solver=call] [solver_name=toy] method=test_solver_logger.toy_solve status=success")
    assert "iterations=7" in message
    assert "dim=" not in message


def test_keyword_metadata_wins(caplog):
    caplog.set_level(logging.INFO, logger=LOGGER)
    toy_solve(dim=4)
    assert "dim=4" in caplog.records[-1].getMessage()


def test_failure_logged_and_reraised(caplog):
    caplog.set_level(logging.INFO, logger=LOGGER)
    with pytest.raises(ValueError):
        toy_fail()
    record = caplog.records[-1]
    assert record.levelno == logging.WARNING
    assert "status=error" in record.getMessage()
    assert "error_type=ValueError error=boom" in record.getMessage()


def test_debug_level_suppressed_at_info(caplog):
    caplog.set_level(logging.INFO, logger=LOGGER)
    assert toy_quiet() == 1
    assert not [r for r in caplog.records if "solver_name=quiet" in r.getMessage()]
