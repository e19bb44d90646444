import csv

import numpy as np
import pytest

from hdelm.geometry import BoxDomain
from hdelm.metrics import errors, slice_grid, write_slice_csv


def test_errors_identical():
    pair = errors(np.ones(5), np.ones(5))
    assert pair.e_inf == 0.0 and pair.e_rms == 0.0
    assert pair.n_points == 5


def test_errors_constant_offset():
    pair = errors(np.zeros(17) + 1e-3, np.zeros(17))
    assert pair.e_inf == pytest.approx(1e-3)
    assert pair.e_rms == pytest.approx(1e-3)


def test_errors_hand_arithmetic():
    pair = errors(np.array([3.0, 4.0]), np.zeros(2))
    assert pair.e_inf == 4.0
    assert pair.e_rms == pytest.approx(np.sqrt(12.5))


def test_errors_rejects_mismatch():
    with pytest.raises(ValueError):
        errors(np.zeros(3), np.zeros(4))
    with pytest.raises(ValueError):
        errors(np.zeros(0), np.zeros(0))


def test_errors_permutation_and_scaling():
    rng = np.random.default_rng(0)
    delta = rng.normal(0, 1, 40)
    base = errors(delta, np.zeros(40))
    perm = rng.permutation(40)
    assert errors(delta[perm], np.zeros(40)) == base
    scaled = errors(3.0 * delta, np.zeros(40))
    assert scaled.e_inf == pytest.approx(3.0 * base.e_inf)
    assert scaled.e_rms == pytest.approx(3.0 * base.e_rms)
    assert base.e_rms <= base.e_inf


def test_slice_grid_corners():
    grid = slice_grid(BoxDomain.cube(2), (0, 1), q=2)
    corners = {tuple(row) for row in grid}
    assert corners == {(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)}


def test_slice_grid_defaults_mid_domain():
    grid = slice_grid(BoxDomain.cube(7), (1, 2), q=3)
    others = np.delete(grid, [1, 2], axis=1)
    assert np.all(others == 0.0)
    dyn = slice_grid(BoxDomain.cube(3, time_extent=2.0), (0, 1), q=3)
    assert np.all(dyn[:, -1] == 1.0)  # t = T/2


def test_slice_grid_size_and_time_plane():
    grid = slice_grid(BoxDomain.cube(5), (0, 1), q=800)
    assert grid.shape == (640000, 5)
    tplane = slice_grid(BoxDomain.cube(2, time_extent=1.0), (0, 2), q=4)
    assert tplane[:, 2].min() == 0.0 and tplane[:, 2].max() == 1.0


def test_slice_grid_validation():
    box = BoxDomain.cube(3)
    with pytest.raises(ValueError):
        slice_grid(box, (1, 1), q=4)
    with pytest.raises(ValueError):
        slice_grid(box, (0, 1), fixed={2: 4.0}, q=4)
    with pytest.raises(ValueError):
        slice_grid(box, (0, 1), fixed={1: 0.0}, q=4)


def test_write_slice_csv(tmp_path):
    box = BoxDomain.cube(2)
    path = tmp_path / "slice.csv"
    write_slice_csv(path, box, (0, 1),
                    predict=lambda p: p[:, 0] + p[:, 1],
                    exact=lambda p: p[:, 0], q=3, block_rows=2)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["xi", "xj", "u_pred", "u_exact", "abs_err"]
    assert len(rows) == 1 + 9
    xi, xj, up, ue, err = (float(v) for v in rows[1])
    assert (xi, xj) == (-1.0, -1.0)
    assert up == -2.0 and ue == -1.0 and err == 1.0
