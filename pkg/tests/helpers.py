"""Shared test constructions: exact-translation grid series and friends."""
import numpy as np

from cloudmotion.gridding import GridSnapshot


def translation_grids(seed, ny, nx, dx, dy, n_snaps, spacing_s=10, low=0.09, high=1.2):
    """Grid snapshots that translate by exactly (dx, dy) cells per spacing.

    Snapshot k is a window into one random base array, with the window
    origin moving by (-dx, -dy) per step so the pattern seen through the
    window moves by (+dx, +dy): G_{k+1}(cell) == G_k(cell - (dx, dy)).
    """
    rng = np.random.default_rng(seed)
    pad_x, pad_y = n_snaps * abs(dx) + 1, n_snaps * abs(dy) + 1
    base = rng.uniform(low, high, (ny + 2 * pad_y, nx + 2 * pad_x))
    grids = []
    for k in range(n_snaps):
        oy = pad_y - k * dy
        ox = pad_x - k * dx
        window = base[oy : oy + ny, ox : ox + nx].copy()
        grids.append(GridSnapshot(t=k * spacing_s, values=window, valid=True))
    return grids
