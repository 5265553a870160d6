import pytest

from ofdmqkd.params import TABLE_DEFAULTS, validate


@pytest.fixture()
def table1():
    """Nominal parameter set (N = 16)."""
    return validate(dict(TABLE_DEFAULTS))


@pytest.fixture()
def table1_no_switch():
    cfg = dict(TABLE_DEFAULTS)
    cfg["switch_loss_db"] = 0.0
    return validate(cfg)
