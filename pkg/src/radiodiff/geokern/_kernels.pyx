# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled grid-geometry kernels.

Hot inner loops shared by the synthetic propagation simulator and the
physics-guided map scoring: per-cell wall-crossing counts along straight
rays, ray-wise volatility counting, and bilinear ring sampling. The cell
``(i, j)`` spans the square ``[i-0.5, i+0.5) x [j-0.5, j+0.5)``.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport atan2, ceil, cos, fabs, floor, log10, sin, sqrt

cnp.import_array()


cdef int _count_occupied(const unsigned char[:, ::1] occ,
                         double r0, double c0, double r1, double c1) noexcept nogil:
    """Occupied cells intersected by the open segment (r0,c0)->(r1,c1).

    Amanatides-Woo traversal over cell boundaries at half-integers; on an
    exact corner crossing both neighbouring cells are stepped through
    (supercover behaviour).
    """
    cdef double dr = r1 - r0
    cdef double dc = c1 - c0
    cdef int H = occ.shape[0]
    cdef int W = occ.shape[1]
    cdef int ri = <int>floor(r0 + 0.5)
    cdef int ci = <int>floor(c0 + 0.5)
    cdef int r_end = <int>floor(r1 + 0.5)
    cdef int c_end = <int>floor(c1 + 0.5)
    cdef int step_r = 1 if dr > 0 else -1
    cdef int step_c = 1 if dc > 0 else -1
    cdef double t_max_r, t_max_c, t_delta_r, t_delta_c
    cdef int count = 0
    cdef int guard = 2 * (H + W) + 4

    if dr != 0:
        t_delta_r = fabs(1.0 / dr)
        t_max_r = ((ri + 0.5 * step_r) - r0) / dr
    else:
        t_delta_r = 0.0
        t_max_r = 2.0
    if dc != 0:
        t_delta_c = fabs(1.0 / dc)
        t_max_c = ((ci + 0.5 * step_c) - c0) / dc
    else:
        t_delta_c = 0.0
        t_max_c = 2.0

    while True:
        if 0 <= ri < H and 0 <= ci < W and occ[ri, ci]:
            count += 1
        if ri == r_end and ci == c_end:
            break
        guard -= 1
        if guard <= 0:
            break
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
    return count


def traverse_cells(double r0, double c0, double r1, double c1, int height, int width):
    """Cells visited by the segment (r0,c0)->(r1,c1), in traversal order.

    Returns (rows, cols) int64 arrays; used for oracle checks and wall
    counting on single segments.
    """
    cdef double dr = r1 - r0
    cdef double dc = c1 - c0
    cdef int ri = <int>floor(r0 + 0.5)
    cdef int ci = <int>floor(c0 + 0.5)
    cdef int r_end = <int>floor(r1 + 0.5)
    cdef int c_end = <int>floor(c1 + 0.5)
    cdef int step_r = 1 if dr > 0 else -1
    cdef int step_c = 1 if dc > 0 else -1
    cdef double t_max_r, t_max_c, t_delta_r, t_delta_c
    cdef int guard = 2 * (height + width) + 4

    if dr != 0:
        t_delta_r = fabs(1.0 / dr)
        t_max_r = ((ri + 0.5 * step_r) - r0) / dr
    else:
        t_delta_r = 0.0
        t_max_r = 2.0
    if dc != 0:
        t_delta_c = fabs(1.0 / dc)
        t_max_c = ((ci + 0.5 * step_c) - c0) / dc
    else:
        t_delta_c = 0.0
        t_max_c = 2.0

    rows, cols = [], []
    while True:
        rows.append(ri)
        cols.append(ci)
        if ri == r_end and ci == c_end:
            break
        guard -= 1
        if guard <= 0:
            break
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
    return np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64)


def wall_crossings(const unsigned char[:, ::1] occupancy, double r0, double c0):
    """Per-cell count of occupied cells crossed by the ray from (r0, c0).

    Returns an int32 H x W array; the destination cell itself is included
    when occupied (callers zero those cells anyway).
    """
    cdef int H = occupancy.shape[0]
    cdef int W = occupancy.shape[1]
    cdef cnp.ndarray[cnp.int32_t, ndim=2] out = np.zeros((H, W), dtype=np.int32)
    cdef int[:, ::1] mv = out
    cdef int i, j
    with nogil:
        for i in range(H):
            for j in range(W):
                mv[i, j] = _count_occupied(occupancy, r0, c0, <double>i, <double>j)
    return out


def ray_volatility(const double[:, ::1] values, const unsigned char[:, ::1] occupancy,
                   double r0, double c0, int n_rays, double sigma, double start):
    """Volatility count over rays cast from (r0, c0) at equal angles.

    Each ray starts ``start`` cells from the origin and advances one cell
    per step until it leaves the grid or hits an occupied cell; every step
    contributes ``floor(|value delta| / sigma)``. Returns the integer total.
    """
    cdef int H = values.shape[0]
    cdef int W = values.shape[1]
    cdef double theta, dr, dc, pr, pc, v, prev
    cdef long total = 0
    cdef int ray, ri, ci, have_prev
    cdef double two_pi = 6.283185307179586
    cdef int max_steps = H + W

    with nogil:
        for ray in range(n_rays):
            theta = two_pi * ray / n_rays
            dr = sin(theta)
            dc = cos(theta)
            pr = r0 + start * dr
            pc = c0 + start * dc
            prev = 0.0
            have_prev = 0
            for _ in range(max_steps):
                ri = <int>floor(pr + 0.5)
                ci = <int>floor(pc + 0.5)
                if ri < 0 or ri >= H or ci < 0 or ci >= W:
                    break
                if occupancy[ri, ci]:
                    break
                v = values[ri, ci]
                if have_prev:
                    total += <long>floor(fabs(v - prev) / sigma)
                prev = v
                have_prev = 1
                pr += dr
                pc += dc
    return int(total)


def ring_bilinear(const double[:, ::1] values, double r0, double c0,
                  double radius, int n_theta):
    """Bilinear samples of the grid on a circle of the given radius.

    Angles are ``2*pi*j/n_theta``. All sample points must satisfy
    ``0 <= r <= H-1`` and ``0 <= c <= W-1``; out-of-range points raise.
    """
    cdef int H = values.shape[0]
    cdef int W = values.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n_theta, dtype=np.float64)
    cdef double[::1] mv = out
    cdef double theta, pr, pc, fr, fc, wr, wc
    cdef int j, i0, j0
    cdef double two_pi = 6.283185307179586

    for j in range(n_theta):
        theta = two_pi * j / n_theta
        pr = r0 + radius * sin(theta)
        pc = c0 + radius * cos(theta)
        if pr < 0 or pr > H - 1 or pc < 0 or pc > W - 1:
            raise ValueError("ring sample point outside grid")
        i0 = <int>floor(pr)
        j0 = <int>floor(pc)
        if i0 > H - 2:
            i0 = H - 2
        if j0 > W - 2:
            j0 = W - 2
        wr = pr - i0
        wc = pc - j0
        mv[j] = ((1 - wr) * (1 - wc) * values[i0, j0]
                 + (1 - wr) * wc * values[i0, j0 + 1]
                 + wr * (1 - wc) * values[i0 + 1, j0]
                 + wr * wc * values[i0 + 1, j0 + 1])
    return out
