import numpy as np
import pytest

from imcflow.checkpoint import MAGIC, Checkpoint, load_checkpoint, save_checkpoint
from imcflow.errors import CheckpointError
from imcflow.flows import GaugeData
from imcflow.oracles import UmbilicSolution, torus_random_state


def test_round_trip_is_bit_exact(tmp_path, torus2):
    st = torus_random_state(torus2, 0.2, 1)
    st = st.with_fields(st.g, st.h, 1 / 3)
    path = tmp_path / "a.imck"
    save_checkpoint(path, Checkpoint(st, 17, "text", "abc", constants={"H0": 0.1, "k": 2}))
    ck = load_checkpoint(path)
    assert ck.step == 17 and ck.state.t == 1 / 3 and ck.scenario_text == "text"
    assert ck.state.dom == torus2
    assert np.array_equal(ck.state.g.data, st.g.data) and np.array_equal(ck.state.h.data, st.h.data)
    assert ck.constants == {"H0": 0.1, "k": 2}


def test_gauge_fields_round_trip(tmp_path, ball3):
    st = UmbilicSolution(3, 1.0).state(0.0, ball3)
    gauge = GaugeData.identity(st.g, ball3)
    path = tmp_path / "g.imck"
    save_checkpoint(path, Checkpoint(st, 0, gauge=gauge))
    back = load_checkpoint(path).gauge
    assert np.array_equal(back.F, gauge.F) and np.array_equal(back.s.data, gauge.s.data)


@pytest.fixture
def saved(tmp_path):
    path = tmp_path / "c.imck"
    save_checkpoint(path, Checkpoint(UmbilicSolution(3, 1.0).state(0.5), 3))
    return path


def test_bad_magic(saved):
    raw = saved.read_bytes()
    saved.write_bytes(b"NOTACKPT" + raw[len(MAGIC):])
    with pytest.raises(CheckpointError, match="magic"):
        load_checkpoint(saved)


def test_unsupported_version(saved):
    raw = bytearray(saved.read_bytes())
    raw[8] = 99
    saved.write_bytes(bytes(raw))
    with pytest.raises(CheckpointError, match="version"):
        load_checkpoint(saved)


def test_truncated(saved):
    saved.write_bytes(saved.read_bytes()[:-8])
    with pytest.raises(CheckpointError, match="truncated"):
        load_checkpoint(saved)


def test_trailing_bytes(saved):
    saved.write_bytes(saved.read_bytes() + b"\0" * 8)
    with pytest.raises(CheckpointError, match="trailing"):
        load_checkpoint(saved)
