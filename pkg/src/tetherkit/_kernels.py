"""Hot numeric kernels shared by the geometry and map layers.

Every kernel exists twice: a numba ``@njit`` build (default) and a pure
numpy/python path selected with ``ENTK_NUMBA=0``.  Polygon sets are packed
into flat coordinate arrays plus a ring-offset table so the same buffers
feed both paths.
"""

import os

import numpy as np


def _numba_requested():
    flag = os.environ.get("ENTK_NUMBA", "1").strip().lower()
    return flag not in ("0", "false", "off", "no")


NUMBA_ENABLED = False
if _numba_requested():
    try:
        from numba import njit

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        NUMBA_ENABLED = False

if not NUMBA_ENABLED:

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


def pack_rings(polygons):
    """Flatten a list of (n,2) vertex arrays into (vx, vy, ring_start)."""
    if not polygons:
        return (
            np.empty(0, dtype=np.float64),
            np.empty(0, dtype=np.float64),
            np.zeros(1, dtype=np.int64),
        )
    counts = [len(p) for p in polygons]
    ring_start = np.zeros(len(polygons) + 1, dtype=np.int64)
    ring_start[1:] = np.cumsum(counts)
    flat = np.concatenate([np.asarray(p, dtype=np.float64) for p in polygons])
    return np.ascontiguousarray(flat[:, 0]), np.ascontiguousarray(flat[:, 1]), ring_start


@njit(cache=True)
def _point_class_k(px, py, vx, vy, ring_start, tol):
    """0 outside all rings, 1 on a ring boundary (within tol), 2 strictly inside."""
    on_boundary = False
    for r in range(ring_start.shape[0] - 1):
        lo = ring_start[r]
        hi = ring_start[r + 1]
        crossings = 0
        for i in range(lo, hi):
            j = i + 1 if i + 1 < hi else lo
            x1, y1 = vx[i], vy[i]
            x2, y2 = vx[j], vy[j]
            # distance from point to the edge
            dx = x2 - x1
            dy = y2 - y1
            seg2 = dx * dx + dy * dy
            if seg2 > 0.0:
                t = ((px - x1) * dx + (py - y1) * dy) / seg2
                if t < 0.0:
                    t = 0.0
                elif t > 1.0:
                    t = 1.0
                ex = x1 + t * dx - px
                ey = y1 + t * dy - py
            else:
                ex = x1 - px
                ey = y1 - py
            if ex * ex + ey * ey <= tol * tol:
                on_boundary = True
            # even-odd ray cast toward +x with the half-open bracket rule
            if (y1 > py) != (y2 > py):
                xin = x1 + (py - y1) / (y2 - y1) * (x2 - x1)
                if xin > px:
                    crossings += 1
        if not on_boundary and (crossings & 1) == 1:
            return 2
    if on_boundary:
        return 1
    return 0


@njit(cache=True)
def _segment_clear_k(ax, ay, bx, by, vx, vy, ring_start, tol):
    """True iff the open segment (a,b) avoids every ring interior."""
    n_edges = vx.shape[0]
    if n_edges == 0:
        return True
    dx = bx - ax
    dy = by - ay
    ts = np.empty(2 * n_edges + 2, dtype=np.float64)
    nts = 0
    ts[nts] = 0.0
    nts += 1
    ts[nts] = 1.0
    nts += 1
    for r in range(ring_start.shape[0] - 1):
        lo = ring_start[r]
        hi = ring_start[r + 1]
        for i in range(lo, hi):
            j = i + 1 if i + 1 < hi else lo
            ex = vx[j] - vx[i]
            ey = vy[j] - vy[i]
            rx = vx[i] - ax
            ry = vy[i] - ay
            denom = dx * ey - dy * ex
            if abs(denom) > 1e-15:
                t = (rx * ey - ry * ex) / denom
                u = (rx * dy - ry * dx) / denom
                if -1e-12 <= t <= 1.0 + 1e-12 and -1e-9 <= u <= 1.0 + 1e-9:
                    if t < 0.0:
                        t = 0.0
                    elif t > 1.0:
                        t = 1.0
                    ts[nts] = t
                    nts += 1
            else:
                # parallel: if collinear, split at the projected edge endpoints
                if abs(rx * dy - ry * dx) <= tol * max(1.0, abs(dx) + abs(dy)):
                    seg2 = dx * dx + dy * dy
                    if seg2 > 0.0:
                        for k in range(2):
                            qx = vx[i] if k == 0 else vx[j]
                            qy = vy[i] if k == 0 else vy[j]
                            t = ((qx - ax) * dx + (qy - ay) * dy) / seg2
                            if 0.0 < t < 1.0:
                                ts[nts] = t
                                nts += 1
    # insertion sort: nts stays small
    for i in range(1, nts):
        key = ts[i]
        j = i - 1
        while j >= 0 and ts[j] > key:
            ts[j + 1] = ts[j]
            j -= 1
        ts[j + 1] = key
    for i in range(nts - 1):
        t0 = ts[i]
        t1 = ts[i + 1]
        if t1 - t0 <= 1e-12:
            continue
        tm = 0.5 * (t0 + t1)
        mx = ax + tm * dx
        my = ay + tm * dy
        if _point_class_k(mx, my, vx, vy, ring_start, tol) == 2:
            return False
    return True


@njit(cache=True)
def _visibility_from_k(px, py, qx, qy, vx, vy, ring_start, tol):
    out = np.empty(qx.shape[0], dtype=np.bool_)
    for i in range(qx.shape[0]):
        out[i] = _segment_clear_k(px, py, qx[i], qy[i], vx, vy, ring_start, tol)
    return out


@njit(cache=True)
def _pairwise_visibility_k(xs, ys, vx, vy, ring_start, tol):
    n = xs.shape[0]
    out = np.zeros((n, n), dtype=np.bool_)
    for i in range(n):
        out[i, i] = True
        for j in range(i + 1, n):
            ok = _segment_clear_k(xs[i], ys[i], xs[j], ys[j], vx, vy, ring_start, tol)
            out[i, j] = ok
            out[j, i] = ok
    return out


@njit(cache=True)
def _point_classes_k(qx, qy, vx, vy, ring_start, tol):
    out = np.empty(qx.shape[0], dtype=np.int8)
    for i in range(qx.shape[0]):
        out[i] = _point_class_k(qx[i], qy[i], vx, vy, ring_start, tol)
    return out


@njit(cache=True)
def _reach_dilation_k(tx, ty, sx, sy, d_max, vx, vy, ring_start, tol):
    """For each target: is some source within d_max connected by a clear segment?"""
    out = np.zeros(tx.shape[0], dtype=np.bool_)
    d2 = d_max * d_max
    for i in range(tx.shape[0]):
        for j in range(sx.shape[0]):
            ddx = sx[j] - tx[i]
            ddy = sy[j] - ty[i]
            if ddx * ddx + ddy * ddy > d2:
                continue
            if _segment_clear_k(tx[i], ty[i], sx[j], sy[j], vx, vy, ring_start, tol):
                out[i] = True
                break
    return out


@njit(cache=True)
def _stack_reduce(word, length, stack):
    top = 0
    for k in range(length):
        if top > 0 and stack[top - 1] == -word[k]:
            top -= 1
        else:
            stack[top] = word[k]
            top += 1
    return top


@njit(cache=True)
def _word_reduction_check_k(max_len, n_letters):
    """Exhaustively check stack reduction over all words up to max_len.

    Letters are +-1..+-n_letters.  For every word this verifies:
    idempotence of the stack reduction; that reducing the reversed-inverted
    word yields the formal inverse; and that cancelling any single adjacent
    pair first leads to the same normal form (every cancellation order is a
    chain of such single steps, so all orders agree).  Returns the number of
    disagreements.
    """
    alphabet = np.empty(2 * n_letters, dtype=np.int64)
    for i in range(n_letters):
        alphabet[2 * i] = i + 1
        alphabet[2 * i + 1] = -(i + 1)
    n_sym = alphabet.shape[0]
    word = np.empty(max_len, dtype=np.int64)
    sub = np.empty(max_len, dtype=np.int64)
    stack = np.empty(max_len, dtype=np.int64)
    stack2 = np.empty(max_len, dtype=np.int64)
    bad = 0
    for length in range(0, max_len + 1):
        total = 1
        for _ in range(length):
            total *= n_sym
        for code in range(total):
            c = code
            for k in range(length):
                word[k] = alphabet[c % n_sym]
                c //= n_sym
            top = _stack_reduce(word, length, stack)
            # reduce the reversed-inverted word; expect the formal inverse
            top2 = 0
            for k in range(length - 1, -1, -1):
                if top2 > 0 and stack2[top2 - 1] == word[k]:
                    top2 -= 1
                else:
                    stack2[top2] = -word[k]
                    top2 += 1
            ok = top2 == top
            if ok:
                for k in range(top):
                    if stack2[k] != -stack[top - 1 - k]:
                        ok = False
                        break
            # idempotence: reducing the reduced word changes nothing
            for k in range(top):
                sub[k] = stack[k]
            top2 = _stack_reduce(sub, top, stack2)
            if top2 != top:
                ok = False
            else:
                for k in range(top):
                    if stack2[k] != stack[k]:
                        ok = False
                        break
            # any first cancellation leads to the same normal form
            if ok:
                for i in range(length - 1):
                    if word[i] != -word[i + 1]:
                        continue
                    m = 0
                    for k in range(length):
                        if k != i and k != i + 1:
                            sub[m] = word[k]
                            m += 1
                    top2 = _stack_reduce(sub, m, stack2)
                    if top2 != top:
                        ok = False
                        break
                    agree = True
                    for k in range(top):
                        if stack2[k] != stack[k]:
                            agree = False
                            break
                    if not agree:
                        ok = False
                        break
            if not ok:
                bad += 1
    return bad


# ---------------------------------------------------------------------------
# Pure-numpy fallbacks for the grid-scale kernels.  Selected when numba is
# disabled; the loop kernels above then run as plain python, which is fine
# for the small per-call workloads but too slow for full rasters.
# ---------------------------------------------------------------------------


def _np_point_classes(qx, qy, vx, vy, ring_start, tol):
    n = qx.shape[0]
    inside = np.zeros(n, dtype=bool)
    boundary = np.zeros(n, dtype=bool)
    for r in range(len(ring_start) - 1):
        lo, hi = ring_start[r], ring_start[r + 1]
        x1 = vx[lo:hi]
        y1 = vy[lo:hi]
        x2 = np.roll(x1, -1)
        y2 = np.roll(y1, -1)
        dx = x2 - x1
        dy = y2 - y1
        seg2 = np.maximum(dx * dx + dy * dy, 1e-300)
        t = ((qx[:, None] - x1) * dx + (qy[:, None] - y1) * dy) / seg2
        t = np.clip(t, 0.0, 1.0)
        ex = x1 + t * dx - qx[:, None]
        ey = y1 + t * dy - qy[:, None]
        boundary |= np.any(ex * ex + ey * ey <= tol * tol, axis=1)
        brackets = (y1 > qy[:, None]) != (y2 > qy[:, None])
        with np.errstate(divide="ignore", invalid="ignore"):
            xin = x1 + (qy[:, None] - y1) / np.where(dy == 0.0, 1.0, dy) * dx
        hits = brackets & (xin > qx[:, None])
        inside |= (hits.sum(axis=1) & 1).astype(bool)
    out = np.zeros(n, dtype=np.int8)
    out[inside & ~boundary] = 2
    out[boundary] = 1
    return out


def _np_visibility_from(px, py, qx, qy, vx, vy, ring_start, tol):
    out = np.empty(qx.shape[0], dtype=bool)
    for i in range(qx.shape[0]):
        out[i] = _segment_clear_k(px, py, qx[i], qy[i], vx, vy, ring_start, tol)
    return out


def point_classes(qx, qy, rings, tol):
    vx, vy, rs = rings
    if NUMBA_ENABLED:
        return _point_classes_k(qx, qy, vx, vy, rs, tol)
    return _np_point_classes(qx, qy, vx, vy, rs, tol)


def point_class(px, py, rings, tol):
    vx, vy, rs = rings
    return int(_point_class_k(px, py, vx, vy, rs, tol))


def segment_clear_packed(ax, ay, bx, by, rings, tol):
    vx, vy, rs = rings
    return bool(_segment_clear_k(ax, ay, bx, by, vx, vy, rs, tol))


def visibility_from(px, py, qx, qy, rings, tol):
    vx, vy, rs = rings
    if NUMBA_ENABLED:
        return _visibility_from_k(px, py, qx, qy, vx, vy, rs, tol)
    return _np_visibility_from(px, py, qx, qy, vx, vy, rs, tol)


def pairwise_visibility(xs, ys, rings, tol):
    vx, vy, rs = rings
    return _pairwise_visibility_k(xs, ys, vx, vy, rs, tol)


def reach_dilation(tx, ty, sx, sy, d_max, rings, tol):
    vx, vy, rs = rings
    return _reach_dilation_k(tx, ty, sx, sy, d_max, vx, vy, rs, tol)


def word_reduction_check(max_len, n_letters):
    return int(_word_reduction_check_k(max_len, n_letters))
