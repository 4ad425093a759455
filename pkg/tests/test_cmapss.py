import io

import numpy as np
import pytest

from fmlp_rul.cmapss import (
    WINDOW_LENGTHS,
    EngineTrajectory,
    format_trajectories,
    load_subset,
    parse_rul_file,
    parse_trajectory_file,
)
from fmlp_rul.errors import IntegrityError, ParseError
from fmlp_rul.preprocess import slide_windows


def make_line(unit, cycle, value=1.0):
    fields = [str(unit), str(cycle)] + [f"{value:.4f}"] * 24
    return " ".join(fields)


def test_parse_counts_fd001(fd001_subset):
    assert len(fd001_subset.train) == 100
    assert len(fd001_subset.test) == 100


def test_fd001_unit1_has_144_cycles(fd001_subset):
    assert fd001_subset.train[0].unit_id == 1
    assert fd001_subset.train[0].n_cycles == 144


def test_parse_empty_stream():
    assert parse_trajectory_file(io.StringIO("")) == []


def test_parse_rul_counts_fd002(fd002_root):
    with open(fd002_root / "RUL_FD002.txt", encoding="utf-8") as fh:
        values = parse_rul_file(fh)
    assert len(values) == 259
    assert all(v >= 0 for v in values)


def test_parse_rul_simple():
    assert parse_rul_file("0\n7\n") == [0, 7]


def test_parse_rul_negative_rejected():
    with pytest.raises(ParseError) as err:
        parse_rul_file("5\n-3\n")
    assert err.value.line_no == 2


def test_parse_rul_noninteger_rejected():
    with pytest.raises(ParseError):
        parse_rul_file("5\nxy\n")


def test_load_subset_fd003(fd003_root):
    subset = load_subset(fd003_root, "FD003")
    assert len(subset.train) == 100
    assert len(subset.test) == 100
    assert subset.window_length == 38


def test_load_subset_fd004_window_length(fd004_root):
    subset = load_subset(fd004_root, "FD004")
    assert subset.window_length == 19
    assert WINDOW_LENGTHS == {"FD001": 31, "FD002": 21, "FD003": 38, "FD004": 19}


def test_load_subset_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError) as err:
        load_subset(tmp_path, "FD001")
    assert "train_FD001.txt" in str(err.value)


def test_load_subset_rul_count_mismatch(fd001_root, tmp_path):
    for name in ("train_FD001.txt", "test_FD001.txt"):
        (tmp_path / name).write_text((fd001_root / name).read_text())
    rul_lines = (fd001_root / "RUL_FD001.txt").read_text().splitlines()
    (tmp_path / "RUL_FD001.txt").write_text("\n".join(rul_lines[:-1]) + "\n")
    with pytest.raises(IntegrityError):
        load_subset(tmp_path, "FD001")


def test_parse_malformed_field_reports_line():
    text = make_line(1, 1) + "\n" + make_line(1, 2).replace("1.0000", "oops", 1) + "\n"
    with pytest.raises(ParseError) as err:
        parse_trajectory_file(text)
    assert err.value.line_no == 2


def test_parse_too_few_fields():
    with pytest.raises(ParseError):
        parse_trajectory_file("1 1 0.5 0.5\n")


def test_parse_non_contiguous_cycles_names_unit():
    text = make_line(3, 1) + "\n" + make_line(3, 4) + "\n"
    with pytest.raises(IntegrityError) as err:
        parse_trajectory_file(text)
    assert "3" in str(err.value)


def test_parse_ignores_trailing_fields():
    line = make_line(1, 1) + " 42.0 43.0"
    trajs = parse_trajectory_file(line + "\n")
    assert len(trajs) == 1
    assert trajs[0].sensors.shape == (1, 21)


def test_parse_preserves_file_order():
    text = "\n".join([make_line(9, 1), make_line(9, 2), make_line(2, 1)]) + "\n"
    trajs = parse_trajectory_file(text)
    assert [t.unit_id for t in trajs] == [9, 2]


def test_round_trip(fd001_subset):
    sample = fd001_subset.train[:4]
    reparsed = parse_trajectory_file(format_trajectories(sample))
    assert len(reparsed) == 4
    for before, after in zip(sample, reparsed):
        assert before.unit_id == after.unit_id
        assert np.array_equal(before.cycles, after.cycles)
        assert np.array_equal(before.op_settings, after.op_settings)
        assert np.array_equal(before.sensors, after.sensors)


def test_window_count_identity(fd001_subset):
    m = fd001_subset.window_length
    for traj in fd001_subset.train[:25]:
        expected = max(0, traj.n_cycles - m + 1)
        assert len(slide_windows(traj, m)) == expected


def test_trajectory_invariants_enforced():
    n = 5
    settings = np.zeros((n, 3))
    sensors = np.zeros((n, 21))
    with pytest.raises(IntegrityError):
        EngineTrajectory(1, np.arange(2, n + 2), settings, sensors)  # starts at 2
    with pytest.raises(IntegrityError):
        EngineTrajectory(1, np.arange(1, n + 1), settings, sensors[:, :20])
    with pytest.raises(IntegrityError):
        EngineTrajectory(0, np.arange(1, n + 1), settings, sensors)
