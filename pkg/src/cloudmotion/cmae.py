"""Cloud motion vectors from gridded snapshot pairs by displacement search.

For every 2-D integer-cell displacement within the speed cap, the mean
absolute error between overlapping parts of snapshot pairs (t, t + Ts) is
accumulated over the whole observation window.  The three displacements
with the lowest cumulative error, inverse-error weighted, give a sub-cell
velocity and direction estimate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .gridding import GridSnapshot

try:
    from numba import njit
except ImportError:  # pragma: no cover - exercised only without numba
    njit = None

V_CAP_MPS = 40.0
MIN_OVERLAP_FRACTION = 0.1


if njit is not None:

    @njit(cache=True, fastmath=True)
    def _sad_per_displacement(a_stack, b_stack, dxs, dys):
        """Sum of |a - shifted b| over pairs and overlap cells, per displacement.

        Pairs stream in the outer loop so one (ny, nx) pair stays cache-hot
        for the whole displacement sweep.
        """
        n_pairs, ny, nx = a_stack.shape
        m = dxs.shape[0]
        out = np.zeros(m, dtype=np.float64)
        for p in range(n_pairs):
            a = a_stack[p]
            b = b_stack[p]
            for i in range(m):
                dx = dxs[i]
                dy = dys[i]
                ay0 = -dy if dy < 0 else 0
                ay1 = (ny - dy) if dy > 0 else ny
                ax0 = -dx if dx < 0 else 0
                ax1 = (nx - dx) if dx > 0 else nx
                total = 0.0
                for iy in range(ay0, ay1):
                    # 0-based equal-length views keep the reduction SIMD-able
                    ra = a[iy, ax0:ax1]
                    rb = b[iy + dy, ax0 + dx : ax1 + dx]
                    row = np.float32(0.0)
                    for ix in range(ra.shape[0]):
                        row += abs(ra[ix] - rb[ix])
                    total += row
                out[i] += total
        return out

else:  # pragma: no cover
    _sad_per_displacement = None


class EmptyOverlapError(ValueError):
    """Displacement leaves no overlapping cells; exclude it from the search."""


class InsufficientPairsError(RuntimeError):
    """No valid snapshot pair to accumulate over."""


@dataclass(frozen=True)
class Displacement:
    """Integer grid-cell shift per time step; world offset is (dx, dy) * dmin."""

    dx: int
    dy: int

    @property
    def cells(self) -> float:
        return math.hypot(self.dx, self.dy)


@dataclass(frozen=True)
class CmaeSurface:
    """Cumulative MAE per candidate displacement.

    cmae[i] is the sum of per-pair MAEs for displacements[i]; pair_count is
    shared by construction (pairs touching an invalid snapshot are skipped
    for every displacement alike).
    """

    displacements: np.ndarray  # (M, 2) int, columns dx, dy
    cmae: np.ndarray  # (M,) float64
    pair_count: int

    def as_dict(self) -> dict:
        return {
            Displacement(int(dx), int(dy)): (float(c), self.pair_count)
            for (dx, dy), c in zip(self.displacements, self.cmae)
        }


@dataclass(frozen=True)
class CmvEstimate:
    """Estimated cloud motion vector with search diagnostics.

    top3 holds (dx, dy, cmae) for the best candidates actually used;
    n_candidates < 3 flags an unusually thin search space.
    """

    speed: float
    direction_deg: float
    valid: bool
    top3: tuple
    n_candidates: int


def displacement_candidates(
    nx: int,
    ny: int,
    dmin: float,
    timestep_s: float,
    v_cap: float = V_CAP_MPS,
    min_overlap_frac: float = MIN_OVERLAP_FRACTION,
) -> np.ndarray:
    """All integer displacements within the speed cap and overlap floor.

    Rows are (dx, dy), ordered by dy then dx.  The overlap floor drops
    shifts whose overlap falls below min_overlap_frac of the grid, where a
    handful of cells would make the MAE meaninglessly noisy.
    """
    r = int(math.floor(v_cap * timestep_s / dmin))
    dxs, dys = np.meshgrid(np.arange(-r, r + 1), np.arange(-r, r + 1))
    dxs, dys = dxs.ravel(), dys.ravel()
    speed = dmin * np.hypot(dxs, dys) / timestep_s
    overlap = np.maximum(nx - np.abs(dxs), 0) * np.maximum(ny - np.abs(dys), 0)
    keep = (speed <= v_cap) & (overlap >= min_overlap_frac * nx * ny) & (overlap > 0)
    return np.column_stack([dxs[keep], dys[keep]])


def _overlap_slices(nx: int, ny: int, dx: int, dy: int) -> tuple:
    """Index windows so a[ay, ax] aligns with b[ay + dy, ax + dx]."""
    ax0, ax1 = max(0, -dx), nx - max(0, dx)
    ay0, ay1 = max(0, -dy), ny - max(0, dy)
    return (slice(ay0, ay1), slice(ax0, ax1)), (slice(ay0 + dy, ay1 + dy), slice(ax0 + dx, ax1 + dx))


def mae_for_displacement(a: GridSnapshot, b: GridSnapshot, d: Displacement) -> float:
    """Mean |a(cell) - b(cell + d)| over the N = (nx-|dx|)(ny-|dy|) overlap cells."""
    if not (a.valid and b.valid):
        raise ValueError("MAE needs two valid snapshots")
    ny, nx = a.values.shape
    if abs(d.dx) >= nx or abs(d.dy) >= ny:
        raise EmptyOverlapError(f"displacement {d} leaves no overlap on a {ny}x{nx} grid")
    sa, sb = _overlap_slices(nx, ny, d.dx, d.dy)
    diff = a.values[sa] - b.values[sb]
    return float(np.abs(diff).mean())


def accumulate_cmae(
    grids: list,
    timestep_s: int,
    dmin: float,
    v_cap: float = V_CAP_MPS,
    min_overlap_frac: float = MIN_OVERLAP_FRACTION,
) -> CmaeSurface:
    """Accumulate per-pair MAEs over every (t, t + timestep_s) pair.

    Pairs touching an invalid snapshot are skipped for all displacements,
    keeping the candidate CMAEs comparable.
    """
    if len(grids) < 2:
        raise InsufficientPairsError("need at least two snapshots")
    spacing = grids[1].t - grids[0].t
    if spacing <= 0 or timestep_s % spacing != 0:
        raise ValueError(f"timestep {timestep_s} is not a multiple of the spacing {spacing}")
    step = timestep_s // spacing
    if step < 1 or step >= len(grids):
        raise InsufficientPairsError(f"no pairs {timestep_s} s apart in {len(grids)} snapshots")

    pair_idx = [
        i for i in range(len(grids) - step) if grids[i].valid and grids[i + step].valid
    ]
    if not pair_idx:
        raise InsufficientPairsError("every candidate pair touches an invalid snapshot")

    ny, nx = grids[pair_idx[0]].values.shape
    a_stack = np.stack([grids[i].values for i in pair_idx]).astype(np.float32)
    b_stack = np.stack([grids[i + step].values for i in pair_idx]).astype(np.float32)

    cands = displacement_candidates(nx, ny, dmin, timestep_s, v_cap, min_overlap_frac)
    if cands.shape[0] == 0:
        raise InsufficientPairsError("no admissible displacement on this grid")
    n_cells = (nx - np.abs(cands[:, 0])) * (ny - np.abs(cands[:, 1]))
    if _sad_per_displacement is not None:
        sums = _sad_per_displacement(
            a_stack, b_stack, cands[:, 0].astype(np.int64), cands[:, 1].astype(np.int64)
        )
        cmae = sums / n_cells
    else:
        cmae = np.empty(cands.shape[0])
        for i, (dx, dy) in enumerate(cands):
            sa, sb = _overlap_slices(nx, ny, int(dx), int(dy))
            diff = a_stack[(slice(None),) + sa] - b_stack[(slice(None),) + sb]
            cmae[i] = np.abs(diff, out=diff).sum(dtype=np.float64) / n_cells[i]
    return CmaeSurface(displacements=cands, cmae=cmae, pair_count=len(pair_idx))


def estimate_cmv(surface: CmaeSurface, timestep_s: int, dmin: float) -> CmvEstimate:
    """Inverse-error weighting of the three lowest-CMAE displacements.

    Candidate order on ties is (cmae, |d|, dx, dy): prefer slower,
    deterministic.  A zero-CMAE candidate wins outright.  The weighted mean
    displacement converts to speed |v| * dmin / timestep and direction in
    degrees clockwise from north; since every candidate respects the speed
    cap and the weights are convex, so does the estimate.
    """
    m = surface.displacements.shape[0]
    if m == 0:
        raise ValueError("empty CMAE surface")
    dxs = surface.displacements[:, 0].astype(np.float64)
    dys = surface.displacements[:, 1].astype(np.float64)
    order = np.lexsort((dys, dxs, np.hypot(dxs, dys), surface.cmae))
    top = order[: min(3, m)]

    if surface.cmae[top[0]] == 0.0:
        vx, vy = dxs[top[0]], dys[top[0]]
        top = top[:1]
    else:
        w = 1.0 / surface.cmae[top]
        vx = float((w * dxs[top]).sum() / w.sum())
        vy = float((w * dys[top]).sum() / w.sum())

    scale = dmin / timestep_s
    speed = math.hypot(vx, vy) * scale
    direction = math.degrees(math.atan2(vx, vy)) % 360.0
    top3 = tuple(
        (int(surface.displacements[i, 0]), int(surface.displacements[i, 1]), float(surface.cmae[i]))
        for i in top
    )
    return CmvEstimate(
        speed=speed, direction_deg=direction, valid=True, top3=top3, n_candidates=m
    )


def invalid_estimate() -> CmvEstimate:
    """Placeholder for transits where no estimate could be formed."""
    return CmvEstimate(
        speed=float("nan"), direction_deg=float("nan"), valid=False, top3=(), n_candidates=0
    )


def cmae_to_csv(surface: CmaeSurface, path) -> None:
    """Debug dump of the search surface: dx,dy,cmae lines."""
    lines = ["dx,dy,cmae"]
    for (dx, dy), c in zip(surface.displacements, surface.cmae):
        lines.append(f"{dx},{dy},{c:.9f}")
    Path(path).write_text("\n".join(lines) + "\n")
