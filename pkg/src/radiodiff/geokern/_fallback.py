"""Pure-Python/numpy implementations of the geometry kernels.

Same contracts as the compiled module; used when the extension is not
built or when ``RADIODIFF_GEOKERN=python`` forces them. Correct but slow
on large grids.
"""

from __future__ import annotations

import math

import numpy as np


def _traverse(r0, c0, r1, c1, height, width):
    dr = r1 - r0
    dc = c1 - c0
    ri = int(math.floor(r0 + 0.5))
    ci = int(math.floor(c0 + 0.5))
    r_end = int(math.floor(r1 + 0.5))
    c_end = int(math.floor(c1 + 0.5))
    step_r = 1 if dr > 0 else -1
    step_c = 1 if dc > 0 else -1

    if dr != 0:
        t_delta_r = abs(1.0 / dr)
        t_max_r = ((ri + 0.5 * step_r) - r0) / dr
    else:
        t_delta_r = 0.0
        t_max_r = 2.0
    if dc != 0:
        t_delta_c = abs(1.0 / dc)
        t_max_c = ((ci + 0.5 * step_c) - c0) / dc
    else:
        t_delta_c = 0.0
        t_max_c = 2.0

    guard = 2 * (height + width) + 4
    while True:
        yield ri, ci
        if ri == r_end and ci == c_end:
            return
        guard -= 1
        if guard <= 0:
            return
        if t_max_r < t_max_c:
            ri += step_r
            t_max_r += t_delta_r
        elif t_max_c < t_max_r:
            ci += step_c
            t_max_c += t_delta_c
        else:
            ri += step_r
            ci += step_c
            t_max_r += t_delta_r
            t_max_c += t_delta_c


def traverse_cells(r0, c0, r1, c1, height, width):
    cells = list(_traverse(r0, c0, r1, c1, height, width))
    rows = np.array([c[0] for c in cells], dtype=np.int64)
    cols = np.array([c[1] for c in cells], dtype=np.int64)
    return rows, cols


def wall_crossings(occupancy, r0, c0):
    occ = np.asarray(occupancy, dtype=np.uint8)
    H, W = occ.shape
    out = np.zeros((H, W), dtype=np.int32)
    for i in range(H):
        for j in range(W):
            n = 0
            for ri, ci in _traverse(r0, c0, float(i), float(j), H, W):
                if 0 <= ri < H and 0 <= ci < W and occ[ri, ci]:
                    n += 1
            out[i, j] = n
    return out


def ray_volatility(values, occupancy, r0, c0, n_rays, sigma, start):
    vals = np.asarray(values, dtype=np.float64)
    occ = np.asarray(occupancy, dtype=np.uint8)
    H, W = vals.shape
    total = 0
    for ray in range(n_rays):
        theta = 2.0 * math.pi * ray / n_rays
        dr = math.sin(theta)
        dc = math.cos(theta)
        pr = r0 + start * dr
        pc = c0 + start * dc
        prev = None
        for _ in range(H + W):
            ri = int(math.floor(pr + 0.5))
            ci = int(math.floor(pc + 0.5))
            if not (0 <= ri < H and 0 <= ci < W) or occ[ri, ci]:
                break
            v = vals[ri, ci]
            if prev is not None:
                total += int(math.floor(abs(v - prev) / sigma))
            prev = v
            pr += dr
            pc += dc
    return total


def ring_bilinear(values, r0, c0, radius, n_theta):
    vals = np.asarray(values, dtype=np.float64)
    H, W = vals.shape
    out = np.empty(n_theta, dtype=np.float64)
    for j in range(n_theta):
        theta = 2.0 * math.pi * j / n_theta
        pr = r0 + radius * math.sin(theta)
        pc = c0 + radius * math.cos(theta)
        if pr < 0 or pr > H - 1 or pc < 0 or pc > W - 1:
            raise ValueError("ring sample point outside grid")
        i0 = min(int(math.floor(pr)), H - 2)
        j0 = min(int(math.floor(pc)), W - 2)
        wr = pr - i0
        wc = pc - j0
        out[j] = ((1 - wr) * (1 - wc) * vals[i0, j0]
                  + (1 - wr) * wc * vals[i0, j0 + 1]
                  + wr * (1 - wc) * vals[i0 + 1, j0]
                  + wr * wc * vals[i0 + 1, j0 + 1])
    return out
