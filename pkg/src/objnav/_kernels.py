"""Compiled inner loops: eikonal fast marching, grid ray casting, map ray walks.

All grids are indexed ``[row, col]`` with row = y and col = x, in cell units.
"""

import math

import numba
import numpy as np

FMM_FULL = 0
FMM_ALL_TARGETS = 1
FMM_FIRST_TARGET = 2

_FAR = 0
_TRIAL = 1
_ACCEPTED = 2


@numba.njit(cache=True)
def _sift_up(hv, hi, pos, k):
    v = hv[k]
    idx = hi[k]
    while k > 0:
        parent = (k - 1) >> 1
        pv = hv[parent]
        # ties go to the lower flat index so the accept order is deterministic
        if pv < v or (pv == v and hi[parent] < idx):
            break
        hv[k] = pv
        hi[k] = hi[parent]
        pos[hi[k]] = k
        k = parent
    hv[k] = v
    hi[k] = idx
    pos[idx] = k


@numba.njit(cache=True)
def _sift_down(hv, hi, pos, k, size):
    v = hv[k]
    idx = hi[k]
    while True:
        child = 2 * k + 1
        if child >= size:
            break
        right = child + 1
        if right < size and (hv[right] < hv[child] or (hv[right] == hv[child] and hi[right] < hi[child])):
            child = right
        cv = hv[child]
        if v < cv or (v == cv and idx < hi[child]):
            break
        hv[k] = cv
        hi[k] = hi[child]
        pos[hi[k]] = k
        k = child
    hv[k] = v
    hi[k] = idx
    pos[idx] = k


@numba.njit(cache=True)
def _eikonal_update(values, status, r, c, rows, cols, h):
    a = np.inf
    if c > 0 and status[r, c - 1] == _ACCEPTED:
        a = values[r, c - 1]
    if c + 1 < cols and status[r, c + 1] == _ACCEPTED and values[r, c + 1] < a:
        a = values[r, c + 1]
    b = np.inf
    if r > 0 and status[r - 1, c] == _ACCEPTED:
        b = values[r - 1, c]
    if r + 1 < rows and status[r + 1, c] == _ACCEPTED and values[r + 1, c] < b:
        b = values[r + 1, c]
    if a == np.inf and b == np.inf:
        return np.inf
    if a == np.inf:
        return b + h
    if b == np.inf:
        return a + h
    diff = a - b
    disc = 2.0 * h * h - diff * diff
    if disc < 0.0:
        return min(a, b) + h
    return 0.5 * (a + b + math.sqrt(disc))


@numba.njit(cache=True)
def fast_march(traversable, src_rows, src_cols, h, targets, mode, tie_tol):
    """First-order fast marching from the given sources.

    ``mode`` selects early termination: FMM_FULL runs to exhaustion,
    FMM_ALL_TARGETS stops once every target cell is accepted, FMM_FIRST_TARGET
    stops once the front passes the first accepted target value (plus
    ``tie_tol``). Cells never accepted are returned as +inf.
    """
    rows, cols = traversable.shape
    n = rows * cols
    values = np.full((rows, cols), np.inf)
    status = np.zeros((rows, cols), np.uint8)
    hv = np.empty(n, np.float64)
    hi = np.empty(n, np.int64)
    pos = np.full(n, -1, np.int64)
    size = 0

    remaining = 0
    if mode == FMM_ALL_TARGETS:
        for r in range(rows):
            for c in range(cols):
                if targets[r, c] and traversable[r, c]:
                    remaining += 1
        if remaining == 0:
            mode = FMM_FULL

    for k in range(src_rows.shape[0]):
        r = src_rows[k]
        c = src_cols[k]
        if not traversable[r, c] or status[r, c] != _FAR:
            continue
        values[r, c] = 0.0
        status[r, c] = _TRIAL
        idx = r * cols + c
        hv[size] = 0.0
        hi[size] = idx
        pos[idx] = size
        size += 1
        _sift_up(hv, hi, pos, size - 1)

    first_hit = np.inf
    while size > 0:
        v = hv[0]
        idx = hi[0]
        if mode == FMM_FIRST_TARGET and v > first_hit + tie_tol:
            break
        size -= 1
        pos[idx] = -1
        if size > 0:
            hv[0] = hv[size]
            hi[0] = hi[size]
            pos[hi[0]] = 0
            _sift_down(hv, hi, pos, 0, size)
        r = idx // cols
        c = idx - r * cols
        status[r, c] = _ACCEPTED
        if targets[r, c]:
            if mode == FMM_ALL_TARGETS:
                remaining -= 1
                if remaining == 0:
                    break
            elif mode == FMM_FIRST_TARGET and first_hit == np.inf:
                first_hit = v
        for d in range(4):
            if d == 0:
                rr, cc = r - 1, c
            elif d == 1:
                rr, cc = r + 1, c
            elif d == 2:
                rr, cc = r, c - 1
            else:
                rr, cc = r, c + 1
            if rr < 0 or rr >= rows or cc < 0 or cc >= cols:
                continue
            if not traversable[rr, cc] or status[rr, cc] == _ACCEPTED:
                continue
            t = _eikonal_update(values, status, rr, cc, rows, cols, h)
            if t < values[rr, cc]:
                values[rr, cc] = t
                nidx = rr * cols + cc
                if status[rr, cc] == _FAR:
                    status[rr, cc] = _TRIAL
                    hv[size] = t
                    hi[size] = nidx
                    pos[nidx] = size
                    size += 1
                    _sift_up(hv, hi, pos, size - 1)
                else:
                    k = pos[nidx]
                    hv[k] = t
                    _sift_up(hv, hi, pos, k)

    for r in range(rows):
        for c in range(cols):
            if status[r, c] != _ACCEPTED:
                values[r, c] = np.inf
    return values


@numba.njit(cache=True)
def _march(blocked, cx, cy, px, py, dx, dy, t0, tmax):
    """DDA from point (px, py) inside cell (cx, cy) along unit (dx, dy).

    Returns (t_hit, hit_col, hit_row, axis) where t_hit includes the offset
    ``t0`` and axis is 0 when an x-face was crossed, 1 for a y-face. Leaving
    the grid counts as a hit on the boundary. t_hit is +inf past ``tmax``.
    """
    rows, cols = blocked.shape
    if dx > 0.0:
        step_x = 1
        t_max_x = (cx + 1.0 - px) / dx
        t_delta_x = 1.0 / dx
    elif dx < 0.0:
        step_x = -1
        t_max_x = (cx - px) / dx
        t_delta_x = -1.0 / dx
    else:
        step_x = 0
        t_max_x = np.inf
        t_delta_x = np.inf
    if dy > 0.0:
        step_y = 1
        t_max_y = (cy + 1.0 - py) / dy
        t_delta_y = 1.0 / dy
    elif dy < 0.0:
        step_y = -1
        t_max_y = (cy - py) / dy
        t_delta_y = -1.0 / dy
    else:
        step_y = 0
        t_max_y = np.inf
        t_delta_y = np.inf
    while True:
        if t_max_x <= t_max_y:
            t = t_max_x
            cx += step_x
            t_max_x += t_delta_x
            axis = 0
        else:
            t = t_max_y
            cy += step_y
            t_max_y += t_delta_y
            axis = 1
        if t0 + t > tmax:
            return np.inf, cx, cy, axis
        if cx < 0 or cx >= cols or cy < 0 or cy >= rows:
            return t0 + t, cx, cy, axis
        if blocked[cy, cx]:
            return t0 + t, cx, cy, axis


REFLECT_NONE = 0
REFLECT_MIRROR = 1
REFLECT_BEYOND = 2

HIT_PLAIN = 0
HIT_MIRRORED = 1
HIT_BEYOND = 2


@numba.njit(cache=True)
def cast_rays(blocked, instance, reflect, ox, oy, angles, max_t, reflections):
    """Cast a fan of rays from (ox, oy) in cell units.

    Returns distances (cell units, +inf beyond ``max_t``), the hit instance
    index (-1 for none) and a hit kind per ray.
    """
    rows, cols = blocked.shape
    n = angles.shape[0]
    dist = np.full(n, np.inf)
    inst = np.full(n, -1, np.int32)
    kind = np.zeros(n, np.int8)
    cx0 = int(math.floor(ox))
    cy0 = int(math.floor(oy))
    for i in range(n):
        dx = math.cos(angles[i])
        dy = math.sin(angles[i])
        t, hx, hy, axis = _march(blocked, cx0, cy0, ox, oy, dx, dy, 0.0, max_t)
        if t == np.inf:
            continue
        inside = 0 <= hx < cols and 0 <= hy < rows
        if reflections and inside and reflect[hy, hx] == REFLECT_BEYOND:
            kind[i] = HIT_BEYOND
            continue
        if reflections and inside and reflect[hy, hx] == REFLECT_MIRROR:
            px = ox + t * dx
            py = oy + t * dy
            # back into the free cell the ray came from
            if axis == 0:
                prev_x = hx - (1 if dx > 0.0 else -1)
                prev_y = hy
                dx = -dx
            else:
                prev_x = hx
                prev_y = hy - (1 if dy > 0.0 else -1)
                dy = -dy
            t2, hx2, hy2, axis2 = _march(blocked, prev_x, prev_y, px, py, dx, dy, t, max_t)
            kind[i] = HIT_MIRRORED
            if t2 == np.inf:
                continue
            dist[i] = t2
            if 0 <= hx2 < cols and 0 <= hy2 < rows:
                inst[i] = instance[hy2, hx2]
            continue
        dist[i] = t
        if inside:
            inst[i] = instance[hy, hx]
    return dist, inst, kind


@numba.njit(cache=True)
def walk_rays(explored, x0, y0, x1, y1, finite):
    """Mark every map cell crossed by each segment as explored.

    Segments run from (x0, y0) to (x1[i], y1[i]) in continuous cell units.
    For finite rays the cell holding the endpoint is returned as the hit
    (row, col); (-1, -1) when it falls outside the map or the ray is not finite.
    """
    rows, cols = explored.shape
    n = x1.shape[0]
    hit_r = np.full(n, -1, np.int64)
    hit_c = np.full(n, -1, np.int64)
    cx0 = int(math.floor(x0))
    cy0 = int(math.floor(y0))
    for i in range(n):
        cx = cx0
        cy = cy0
        ex = int(math.floor(x1[i]))
        ey = int(math.floor(y1[i]))
        dx = x1[i] - x0
        dy = y1[i] - y0
        if dx > 0.0:
            step_x = 1
            t_max_x = (cx + 1.0 - x0) / dx
            t_delta_x = 1.0 / dx
        elif dx < 0.0:
            step_x = -1
            t_max_x = (cx - x0) / dx
            t_delta_x = -1.0 / dx
        else:
            step_x = 0
            t_max_x = np.inf
            t_delta_x = np.inf
        if dy > 0.0:
            step_y = 1
            t_max_y = (cy + 1.0 - y0) / dy
            t_delta_y = 1.0 / dy
        elif dy < 0.0:
            step_y = -1
            t_max_y = (cy - y0) / dy
            t_delta_y = -1.0 / dy
        else:
            step_y = 0
            t_max_y = np.inf
            t_delta_y = np.inf
        limit = abs(ex - cx0) + abs(ey - cy0) + 2
        for _ in range(limit):
            if cx == ex and cy == ey:
                break
            if t_max_x < t_max_y or (t_max_x == t_max_y and step_x < 0):
                cx += step_x
                t_max_x += t_delta_x
            else:
                cy += step_y
                t_max_y += t_delta_y
            if cx < 0 or cx >= cols or cy < 0 or cy >= rows:
                break
            if cx == ex and cy == ey:
                break
            explored[cy, cx] = True
        moved = cx != cx0 or cy != cy0
        if moved and cx == ex and cy == ey and 0 <= cx < cols and 0 <= cy < rows:
            explored[cy, cx] = True
            if finite[i]:
                hit_r[i] = cy
                hit_c[i] = cx
    return hit_r, hit_c
