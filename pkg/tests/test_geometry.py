import itertools

import numpy as np
import pytest

from hdelm.geometry import (BoxDomain, FaceId, UnsupportedConfigurationError,
                            align_shared_faces, decompose, locate_subdomain,
                            sample_collocation, sample_faces, sample_interior,
                            sample_test_set, spatial_faces,
                            subdomain_collocation)


def test_box_validation():
    with pytest.raises(ValueError):
        BoxDomain(np.array([0.0, 1.0]), np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        BoxDomain.cube(2, time_extent=-1.0)
    box = BoxDomain.cube(3, time_extent=2.0)
    assert box.d == 3 and box.dim_total == 4


def test_sample_interior_empty_and_bounds():
    box = BoxDomain.cube(5)
    assert sample_interior(box, 0, seed=1).shape == (0, 5)
    pts = sample_interior(box, 1000, seed=1)
    assert pts.shape == (1000, 5)
    assert np.all(pts > -1.0) and np.all(pts < 1.0)


def test_sample_interior_deterministic():
    box = BoxDomain.cube(3)
    assert np.array_equal(sample_interior(box, 50, seed=9),
                          sample_interior(box, 50, seed=9))


def test_sample_faces_counts_and_pinning():
    box = BoxDomain.cube(5)
    faces, initial = sample_faces(box, 100, 0, seed=2)
    assert len(faces) == 10
    assert sum(b.shape[0] for b in faces.values()) == 1000
    assert initial.shape == (0, 5)
    for face, block in faces.items():
        pinned = 1.0 if face.side else -1.0
        assert np.all(block[:, face.axis] == pinned)
        others = np.delete(block, face.axis, axis=1)
        assert np.all(others > -1.0) and np.all(others < 1.0)


def test_sample_faces_time_dependent():
    box = BoxDomain.cube(3, time_extent=1.0)
    faces, initial = sample_faces(box, 100, 1000, seed=3)
    assert sum(b.shape[0] for b in faces.values()) == 600
    assert initial.shape == (1000, 4)
    assert np.all(initial[:, -1] == 0.0)
    for block in faces.values():
        assert np.all(block[:, -1] > 0.0) and np.all(block[:, -1] < 1.0)


def test_sample_faces_1d():
    box = BoxDomain(np.array([2.0]), np.array([5.0]))
    faces, _ = sample_faces(box, 1, 0, seed=4)
    vals = sorted(float(b[0, 0]) for b in faces.values())
    assert vals == [2.0, 5.0]


def test_sample_faces_rejects_t0_on_stationary():
    with pytest.raises(ValueError):
        sample_faces(BoxDomain.cube(2), 10, 5, seed=1)


def test_decompose_trivial():
    box = BoxDomain.cube(4)
    dec = decompose(box, [], [])
    assert dec.n_subdomains == 1
    assert np.array_equal(dec.boxes[0].lo, box.lo)
    assert np.array_equal(dec.boxes[0].hi, box.hi)
    assert dec.interfaces == ()


def test_decompose_bisection():
    dec = decompose(BoxDomain.cube(2), [0], [2])
    assert dec.n_subdomains == 2
    assert dec.boxes[0].hi[0] == 0.0 and dec.boxes[1].lo[0] == 0.0
    assert len(dec.interfaces) == 1
    itf = dec.interfaces[0]
    assert (itf.lo_id, itf.hi_id, itf.axis) == (0, 1, 0)


def brute_force_interfaces(dec):
    """Adjacency by direct box comparison."""
    found = set()
    for i, j in itertools.combinations(range(dec.n_subdomains), 2):
        a, b = dec.boxes[i], dec.boxes[j]
        for axis in range(a.d):
            touch = a.hi[axis] == b.lo[axis] or b.hi[axis] == a.lo[axis]
            same_elsewhere = all(
                a.lo[k] == b.lo[k] and a.hi[k] == b.hi[k]
                for k in range(a.d) if k != axis)
            if touch and same_elsewhere:
                found.add((min(i, j), max(i, j), axis))
    return found


def test_decompose_2x3_interfaces():
    dec = decompose(BoxDomain.cube(7), [0, 3], [2, 3])
    assert dec.n_subdomains == 6
    assert len(dec.interfaces) == 7
    got = {(itf.lo_id, itf.hi_id, itf.axis) for itf in dec.interfaces}
    assert got == brute_force_interfaces(dec)


def test_decompose_tiling_volume():
    box = BoxDomain(np.array([-2.0, 0.0, 1.0]), np.array([1.0, 4.0, 3.0]))
    dec = decompose(box, [1, 2], [3, 2])
    vol = sum(np.prod(b.hi - b.lo) for b in dec.boxes)
    assert vol == pytest.approx(np.prod(box.hi - box.lo), rel=1e-14)


def test_decompose_rejects_three_directions():
    with pytest.raises(UnsupportedConfigurationError):
        decompose(BoxDomain.cube(5), [0, 1, 2], [2, 2, 2])


def test_align_trivial_and_pairs():
    dec = decompose(BoxDomain.cube(2), [], [])
    cset = sample_collocation(dec.boxes[0], 10, 4, 0, seed=5)
    aligned = align_shared_faces(dec, [cset])
    assert np.array_equal(aligned[0].faces[FaceId(0, 0)],
                          cset.faces[FaceId(0, 0)])

    # two sub-domains, n_bc=2: shared blocks identical after alignment
    dec = decompose(BoxDomain.cube(2), [0], [2])
    sets = [sample_collocation(b, 5, 2, 0, seed=10 + i)
            for i, b in enumerate(dec.boxes)]
    assert not np.array_equal(sets[0].faces[FaceId(0, 1)],
                              sets[1].faces[FaceId(0, 0)])
    aligned = align_shared_faces(dec, sets)
    assert np.array_equal(aligned[0].faces[FaceId(0, 1)],
                          aligned[1].faces[FaceId(0, 0)])


def test_align_2x3_exhaustive_and_idempotent():
    dec = decompose(BoxDomain.cube(3), [0, 2], [2, 3])
    sets = subdomain_collocation(dec, 8, 3, 0, seed=21)
    for itf in dec.interfaces:
        assert np.array_equal(sets[itf.lo_id].faces[FaceId(itf.axis, 1)],
                              sets[itf.hi_id].faces[FaceId(itf.axis, 0)])
    again = align_shared_faces(dec, sets)
    for a, b in zip(sets, again):
        for face in spatial_faces(3):
            assert np.array_equal(a.faces[face], b.faces[face])


def test_align_rejects_mismatched_nbc():
    dec = decompose(BoxDomain.cube(2), [0], [2])
    sets = [sample_collocation(dec.boxes[0], 5, 2, 0, seed=1),
            sample_collocation(dec.boxes[1], 5, 3, 0, seed=2)]
    with pytest.raises(ValueError):
        align_shared_faces(dec, sets)


def test_test_set_counts_stationary():
    pts = sample_test_set(BoxDomain.cube(5), 100, 7000, seed=1)
    assert pts.shape == (7000 + 10 * 100, 5)
    single = sample_test_set(BoxDomain.cube(5), 0, 1, seed=1)
    assert single.shape == (1, 5)
    assert np.all(np.abs(single) < 1.0)


def test_test_set_terminal_time():
    box = BoxDomain.cube(3, time_extent=1.0)
    pts = sample_test_set(box, 100, 7000, seed=2)
    assert pts.shape == (7000 + 600, 4)
    assert np.all(pts[:, -1] == 1.0)


def test_locate_subdomain():
    dec = decompose(BoxDomain.cube(2), [0, 1], [2, 2])
    pts = np.array([[-0.5, -0.5], [0.5, -0.5], [-0.5, 0.5], [0.5, 0.5]])
    assert list(locate_subdomain(dec, pts)) == [0, 2, 1, 3]


def test_subdomain_seeds_are_independent():
    dec = decompose(BoxDomain.cube(2), [0], [2])
    sets = subdomain_collocation(dec, 20, 5, 0, seed=77)
    assert not np.array_equal(sets[0].interior, sets[1].interior)
    rerun = subdomain_collocation(dec, 20, 5, 0, seed=77)
    assert np.array_equal(sets[0].interior, rerun[0].interior)


def test_collocation_counts():
    box = BoxDomain.cube(3, time_extent=1.0)
    cset = sample_collocation(box, 50, 10, 30, seed=6)
    assert cset.n_in == 50 and cset.n_bc == 10 and cset.n_t0 == 30
    assert cset.n_bc_tot == 60
    assert cset.all_points().shape == (50 + 60 + 30, 4)
    assert cset.boundary_stack().shape == (90, 4)
