"""Box domains, face bookkeeping, random collocation and decomposition.

Collocation follows the random-sampling protocol for high dimensions:
interior points uniform on the open box, N_bc points on each of the 2d
spatial hyperfaces (fixed coordinate pinned exactly to the face value),
and, for time-dependent domains, N_t0 points on the initial face t=0.
Spatial face points of time-dependent problems carry t uniform in
(0, T); test sets of time-dependent problems live on the terminal slice
t = T.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .seeding import derive_seed, make_rng


class UnsupportedConfigurationError(ValueError):
    """Raised for configurations the method deliberately does not cover."""


@dataclass(frozen=True)
class BoxDomain:
    """Hyper-rectangle prod_i [lo_i, hi_i], optionally extended by [0, T]."""

    lo: np.ndarray
    hi: np.ndarray
    time_extent: float | None = None

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lo and hi must be 1-d arrays of equal length")
        if not np.all(lo < hi):
            raise ValueError("every lo[i] must be strictly below hi[i]")
        if self.time_extent is not None and not (self.time_extent > 0):
            raise ValueError("time_extent must be positive when present")
        lo.setflags(write=False)
        hi.setflags(write=False)

    @classmethod
    def cube(cls, d: int, a: float = -1.0, b: float = 1.0,
             time_extent: float | None = None) -> "BoxDomain":
        return cls(np.full(d, float(a)), np.full(d, float(b)), time_extent)

    @property
    def d(self) -> int:
        return self.lo.shape[0]

    @property
    def dim_total(self) -> int:
        return self.d + (1 if self.time_extent is not None else 0)

    @property
    def time_dependent(self) -> bool:
        return self.time_extent is not None


@dataclass(frozen=True, order=True)
class FaceId:
    """A spatial hyperface (axis, side) or the initial-time face.

    side is 0 for the low face x_axis = lo[axis], 1 for the high face.
    The initial face is FaceId(-1, 0); there is never a terminal-time
    face (no condition is imposed at t = T).
    """

    axis: int
    side: int

    @classmethod
    def initial(cls) -> "FaceId":
        return cls(-1, 0)

    @property
    def is_initial(self) -> bool:
        return self.axis < 0


def spatial_faces(d: int) -> list[FaceId]:
    """The 2d spatial faces in axis-major, low-before-high order."""
    return [FaceId(axis, side) for axis in range(d) for side in (0, 1)]


def _open_uniform(rng: np.random.Generator, lo, hi, size) -> np.ndarray:
    """Uniform samples strictly inside (lo, hi); redraws boundary hits."""
    u = rng.random(size)
    mask = u == 0.0
    while np.any(mask):
        u[mask] = rng.random(int(mask.sum()))
        mask = u == 0.0
    return lo + (hi - lo) * u


def sample_interior(domain: BoxDomain, n: int, seed: int) -> np.ndarray:
    """n i.i.d. uniform points in the open box (time in (0,T) if present)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    rng = make_rng(seed)
    lo, hi = domain.lo, domain.hi
    if domain.time_dependent:
        lo = np.append(lo, 0.0)
        hi = np.append(hi, domain.time_extent)
    return _open_uniform(rng, lo, hi, (n, domain.dim_total))


def sample_faces(domain: BoxDomain, n_bc: int, n_t0: int,
                 seed: int) -> tuple[dict[FaceId, np.ndarray], np.ndarray]:
    """Per-face boundary blocks plus the initial block.

    Returns (faces, initial): `faces` maps each spatial FaceId to an
    (n_bc, dim_total) block with the pinned coordinate exact, `initial`
    is the (n_t0, dim_total) block at t = 0 (empty when stationary).
    """
    if n_bc < 0 or n_t0 < 0:
        raise ValueError("counts must be >= 0")
    if n_t0 > 0 and not domain.time_dependent:
        raise ValueError("n_t0 > 0 requires a time-dependent domain")
    rng = make_rng(seed)
    lo, hi = domain.lo, domain.hi
    faces: dict[FaceId, np.ndarray] = {}
    for face in spatial_faces(domain.d):
        block = np.empty((n_bc, domain.dim_total))
        block[:, :domain.d] = _open_uniform(rng, lo, hi, (n_bc, domain.d))
        block[:, face.axis] = hi[face.axis] if face.side else lo[face.axis]
        if domain.time_dependent:
            block[:, -1] = _open_uniform(rng, 0.0, domain.time_extent, n_bc)
        faces[face] = block
    if domain.time_dependent:
        initial = np.empty((n_t0, domain.dim_total))
        initial[:, :domain.d] = _open_uniform(rng, lo, hi, (n_t0, domain.d))
        initial[:, -1] = 0.0
    else:
        initial = np.empty((0, domain.dim_total))
    return faces, initial


@dataclass(frozen=True)
class CollocationSet:
    """Interior, per-face and initial collocation blocks for one box."""

    domain: BoxDomain
    interior: np.ndarray
    faces: dict[FaceId, np.ndarray]
    initial: np.ndarray
    seed: int

    @property
    def n_in(self) -> int:
        return self.interior.shape[0]

    @property
    def n_bc(self) -> int:
        blocks = list(self.faces.values())
        return blocks[0].shape[0] if blocks else 0

    @property
    def n_t0(self) -> int:
        return self.initial.shape[0]

    @property
    def n_bc_tot(self) -> int:
        return sum(b.shape[0] for b in self.faces.values())

    def boundary_stack(self) -> np.ndarray:
        """All face blocks in face order followed by the initial block."""
        blocks = [self.faces[f] for f in spatial_faces(self.domain.d)]
        blocks.append(self.initial)
        return np.vstack(blocks)

    def all_points(self) -> np.ndarray:
        """Interior then boundary: the x = [x_in; y] ordering."""
        return np.vstack([self.interior, self.boundary_stack()])


def sample_collocation(domain: BoxDomain, n_in: int, n_bc: int, n_t0: int,
                       seed: int) -> CollocationSet:
    """Sample a full collocation set from derived interior/face streams."""
    interior = sample_interior(domain, n_in, derive_seed(seed, "interior"))
    faces, initial = sample_faces(domain, n_bc, n_t0, derive_seed(seed, "faces"))
    return CollocationSet(domain, interior, faces, initial, int(seed))


def sample_test_set(domain: BoxDomain, n_bc_v: int, n_in_v: int,
                    seed: int) -> np.ndarray:
    """Random test points; at t = T exactly for time-dependent domains.

    Stationary: n_in_v interior points plus n_bc_v per spatial face.
    Time-dependent: the same layout on the terminal slice Omega x {T},
    every point carrying t = T.
    """
    rng = make_rng(derive_seed(seed, "test"))
    lo, hi, d = domain.lo, domain.hi, domain.d
    blocks = []
    interior = np.empty((n_in_v, domain.dim_total))
    interior[:, :d] = _open_uniform(rng, lo, hi, (n_in_v, d))
    if domain.time_dependent:
        interior[:, -1] = domain.time_extent
    blocks.append(interior)
    for face in spatial_faces(d):
        block = np.empty((n_bc_v, domain.dim_total))
        block[:, :d] = _open_uniform(rng, lo, hi, (n_bc_v, d))
        block[:, face.axis] = hi[face.axis] if face.side else lo[face.axis]
        if domain.time_dependent:
            block[:, -1] = domain.time_extent
        blocks.append(block)
    return np.vstack(blocks)


@dataclass(frozen=True)
class Interface:
    """An adjacent sub-box pair; the shared face is normal to `axis`."""

    lo_id: int
    hi_id: int
    axis: int


@dataclass(frozen=True)
class Decomposition:
    parent: BoxDomain
    dirs: tuple[int, ...]
    counts: tuple[int, ...]
    boxes: tuple[BoxDomain, ...]
    interfaces: tuple[Interface, ...]

    @property
    def n_subdomains(self) -> int:
        return len(self.boxes)


MAX_SPLIT_DIRECTIONS = 2


def decompose(domain: BoxDomain, dirs, counts) -> Decomposition:
    """Uniformly tile the box along at most two directions.

    Sub-domain IDs are lexicographic over the split grid (row-major in
    the order the directions are given); the interface registry lists
    every adjacent pair once with the lower ID first.
    """
    dirs = tuple(int(i) for i in dirs)
    counts = tuple(int(c) for c in counts)
    if len(dirs) != len(counts):
        raise ValueError("dirs and counts must have equal length")
    if len(dirs) > MAX_SPLIT_DIRECTIONS:
        raise UnsupportedConfigurationError(
            f"decomposition along {len(dirs)} directions exceeds the "
            f"maximum of {MAX_SPLIT_DIRECTIONS}")
    if len(set(dirs)) != len(dirs):
        raise ValueError("split directions must be distinct")
    if any(i < 0 or i >= domain.d for i in dirs):
        raise ValueError("split directions must index spatial axes")
    if any(c < 1 for c in counts):
        raise ValueError("split counts must be >= 1")

    grid_shape = counts if counts else ()
    n_boxes = int(np.prod(grid_shape)) if grid_shape else 1
    boxes = []
    for flat in range(n_boxes):
        coords = np.unravel_index(flat, grid_shape) if grid_shape else ()
        lo = domain.lo.copy()
        hi = domain.hi.copy()
        for axis, count, cell in zip(dirs, counts, coords):
            width = (domain.hi[axis] - domain.lo[axis]) / count
            # keep outer bounds exact so external-face detection is bitwise
            lo[axis] = domain.lo[axis] + cell * width
            hi[axis] = (domain.hi[axis] if cell + 1 == count
                        else domain.lo[axis] + (cell + 1) * width)
        boxes.append(BoxDomain(lo, hi, domain.time_extent))

    interfaces = []
    for flat in range(n_boxes):
        coords = list(np.unravel_index(flat, grid_shape)) if grid_shape else []
        for k, (axis, count) in enumerate(zip(dirs, counts)):
            if coords[k] + 1 < count:
                nbr = coords.copy()
                nbr[k] += 1
                hi_id = int(np.ravel_multi_index(nbr, grid_shape))
                interfaces.append(Interface(flat, hi_id, axis))
    interfaces.sort(key=lambda itf: (itf.lo_id, itf.hi_id))
    return Decomposition(domain, dirs, counts, tuple(boxes), tuple(interfaces))


def align_shared_faces(decomp: Decomposition,
                       sets: list[CollocationSet]) -> list[CollocationSet]:
    """Make interface blocks identical across each adjacent pair.

    The higher-ID sub-domain's block on the shared face is replaced by
    the lower-ID neighbour's block on that face. Idempotent.
    """
    if len(sets) != decomp.n_subdomains:
        raise ValueError("one collocation set per sub-domain required")
    n_bc = {s.n_bc for s in sets}
    if len(n_bc) > 1:
        raise ValueError(f"mismatched n_bc across sub-domains: {sorted(n_bc)}")
    faces = [dict(s.faces) for s in sets]
    for itf in decomp.interfaces:
        donor = faces[itf.lo_id][FaceId(itf.axis, 1)]
        faces[itf.hi_id][FaceId(itf.axis, 0)] = donor
    return [replace(s, faces=f) for s, f in zip(sets, faces)]


def subdomain_collocation(decomp: Decomposition, n_in: int, n_bc: int,
                          n_t0: int, seed: int) -> list[CollocationSet]:
    """Independent per-sub-domain sets (derived seeds), face-aligned."""
    sets = [
        sample_collocation(box, n_in, n_bc, n_t0, derive_seed(seed, "sub", i))
        for i, box in enumerate(decomp.boxes)
    ]
    return align_shared_faces(decomp, sets)


def locate_subdomain(decomp: Decomposition, points: np.ndarray) -> np.ndarray:
    """Sub-domain ID containing each point (interface points pick a side)."""
    if decomp.n_subdomains == 1:
        return np.zeros(points.shape[0], dtype=int)
    coords = []
    for axis, count in zip(decomp.dirs, decomp.counts):
        lo = decomp.parent.lo[axis]
        width = (decomp.parent.hi[axis] - lo) / count
        cell = np.floor((points[:, axis] - lo) / width).astype(int)
        coords.append(np.clip(cell, 0, count - 1))
    return np.ravel_multi_index(coords, decomp.counts)
