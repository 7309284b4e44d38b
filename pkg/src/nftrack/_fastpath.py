"""Batched path tracing and objective evaluation (numba kernels).

Same geometry rules as the scalar routines in ``geometry``/``propagation``,
vectorized over candidate positions for the grid search. Candidate rows are
processed independently, so results do not depend on the thread count.
Surface-validity is kept as per-surface bitmasks, which lets one geometry
pass serve many awareness subsets (awareness draws, Monte Carlo trials).
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

from .signal import C0

FOUR_PI = 4.0 * np.pi
TWO_PI = 2.0 * np.pi


@njit(cache=True, inline="always")
def _pt_seg_dist(px, py, ax, ay, bx, by):
    dx = bx - ax
    dy = by - ay
    l2 = dx * dx + dy * dy
    t = ((px - ax) * dx + (py - ay) * dy) / l2
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    ex = px - (ax + t * dx)
    ey = py - (ay + t * dy)
    return np.sqrt(ex * ex + ey * ey)


@njit(cache=True, inline="always")
def _wall_blocks(ax, ay, bx, by, wax, way, wbx, wby, eps, skip_start, skip_end):
    # mirror of propagation._wall_blocks_leg
    # cheap reject: separated bounding boxes cannot come within eps
    if min(ax, bx) > max(wax, wbx) + eps or max(ax, bx) < min(wax, wbx) - eps:
        return False
    if min(ay, by) > max(way, wby) + eps or max(ay, by) < min(way, wby) - eps:
        return False
    dx = bx - ax
    dy = by - ay
    leg_len = np.sqrt(dx * dx + dy * dy)
    sx = wbx - wax
    sy = wby - way
    lo = eps / leg_len if skip_start else 0.0
    hi = 1.0 - eps / leg_len if skip_end else 1.0
    den = dx * sy - dy * sx
    if den != 0.0:
        t = ((wax - ax) * sy - (way - ay) * sx) / den
        u = ((wax - ax) * dy - (way - ay) * dx) / den
        if 0.0 < t < 1.0 and 0.0 < u < 1.0:
            return lo <= t <= hi
    # near-touch / graze / collinear overlap
    tmin = 2.0
    tmax = -1.0
    for t in (0.0, 1.0):
        if _pt_seg_dist(ax + t * dx, ay + t * dy, wax, way, wbx, wby) <= eps:
            if t < tmin:
                tmin = t
            if t > tmax:
                tmax = t
    l2 = dx * dx + dy * dy
    for k in range(2):
        wx = wax if k == 0 else wbx
        wy = way if k == 0 else wby
        t = ((wx - ax) * dx + (wy - ay) * dy) / l2
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
        if _pt_seg_dist(ax + t * dx, ay + t * dy, wax, way, wbx, wby) <= eps:
            if t < tmin:
                tmin = t
            if t > tmax:
                tmax = t
    if tmax < tmin:
        return False
    return tmax >= lo and tmin <= hi


@njit(cache=True, parallel=True)
def path_geometry(cand, elems, segs, eps):
    """Per (candidate, element) path data against every surface.

    Returns LOS distances, LOS blocker bitmasks, and per-surface bounce
    validity / distance / incidence cosine / blocker bitmasks. Masks carry a
    set bit per blocking surface so any awareness subset can be applied
    afterwards without re-tracing.
    """
    G = cand.shape[0]
    N = elems.shape[0]
    S = segs.shape[0]
    los_d = np.zeros((G, N))
    los_block = np.zeros((G, N), dtype=np.int64)
    nl_valid = np.zeros((G, N, S), dtype=np.bool_)
    nl_d = np.zeros((G, N, S))
    nl_cos = np.ones((G, N, S))
    nl_block = np.zeros((G, N, S), dtype=np.int64)
    for g in prange(G):
        px = cand[g, 0]
        py = cand[g, 1]
        for n in range(N):
            ex = elems[n, 0]
            ey = elems[n, 1]
            los_d[g, n] = np.sqrt((ex - px) ** 2 + (ey - py) ** 2)
            mask = np.int64(0)
            for s in range(S):
                if _wall_blocks(ex, ey, px, py, segs[s, 0], segs[s, 1], segs[s, 2], segs[s, 3], eps, True, True):
                    mask |= np.int64(1) << s
            los_block[g, n] = mask
            for s in range(S):
                wax = segs[s, 0]
                way = segs[s, 1]
                wbx = segs[s, 2]
                wby = segs[s, 3]
                wx = wbx - wax
                wy = wby - way
                wl2 = wx * wx + wy * wy
                wlen = np.sqrt(wl2)
                # mirror the candidate across the surface line
                tp = ((px - wax) * wx + (py - way) * wy) / wl2
                fx = wax + tp * wx
                fy = way + tp * wy
                mx = 2.0 * fx - px
                my = 2.0 * fy - py
                rx = mx - ex
                ry = my - ey
                den = rx * wy - ry * wx
                if den == 0.0:
                    continue
                t = ((wax - ex) * wy - (way - ey) * wx) / den
                u = ((wax - ex) * ry - (way - ey) * rx) / den
                if t < 0.0 or t > 1.0:
                    continue
                slack = eps / wlen
                if u < -slack or u > 1.0 + slack:
                    continue
                rpx = ex + t * rx
                rpy = ey + t * ry
                d1x = rpx - ex
                d1y = rpy - ey
                d1 = np.sqrt(d1x * d1x + d1y * d1y)
                d2 = np.sqrt((px - rpx) ** 2 + (py - rpy) ** 2)
                if d1 <= eps or d2 <= eps:
                    continue
                bmask = np.int64(0)
                for s2 in range(S):
                    if s2 == s:
                        continue
                    blocked = _wall_blocks(
                        ex, ey, rpx, rpy,
                        segs[s2, 0], segs[s2, 1], segs[s2, 2], segs[s2, 3],
                        eps, True, False,
                    ) or _wall_blocks(
                        rpx, rpy, px, py,
                        segs[s2, 0], segs[s2, 1], segs[s2, 2], segs[s2, 3],
                        eps, False, True,
                    )
                    if blocked:
                        bmask |= np.int64(1) << s2
                nl_valid[g, n, s] = True
                nl_d[g, n, s] = d1 + d2
                c = abs(-d1x * wy + d1y * wx) / (d1 * wlen)
                nl_cos[g, n, s] = c if c <= 1.0 else 1.0
                nl_block[g, n, s] = bmask
    return los_d, los_block, nl_valid, nl_d, nl_cos, nl_block


@njit(cache=True, parallel=True)
def ff_path_geometry(cand, refx, refy, segs, eps):
    """Array-common path data evaluated at the reference point only.

    Arrival directions point from the reference toward the incoming wave
    (candidate for the direct path, bounce point otherwise).
    """
    G = cand.shape[0]
    S = segs.shape[0]
    los_d = np.zeros(G)
    los_k = np.zeros((G, 2))
    los_block = np.zeros(G, dtype=np.int64)
    nl_valid = np.zeros((G, S), dtype=np.bool_)
    nl_d = np.zeros((G, S))
    nl_cos = np.ones((G, S))
    nl_block = np.zeros((G, S), dtype=np.int64)
    nl_k = np.zeros((G, S, 2))
    for g in prange(G):
        px = cand[g, 0]
        py = cand[g, 1]
        d = np.sqrt((px - refx) ** 2 + (py - refy) ** 2)
        los_d[g] = d
        los_k[g, 0] = (px - refx) / d
        los_k[g, 1] = (py - refy) / d
        mask = np.int64(0)
        for s in range(S):
            if _wall_blocks(refx, refy, px, py, segs[s, 0], segs[s, 1], segs[s, 2], segs[s, 3], eps, True, True):
                mask |= np.int64(1) << s
        los_block[g] = mask
        for s in range(S):
            wax = segs[s, 0]
            way = segs[s, 1]
            wbx = segs[s, 2]
            wby = segs[s, 3]
            wx = wbx - wax
            wy = wby - way
            wl2 = wx * wx + wy * wy
            wlen = np.sqrt(wl2)
            tp = ((px - wax) * wx + (py - way) * wy) / wl2
            fx = wax + tp * wx
            fy = way + tp * wy
            mx = 2.0 * fx - px
            my = 2.0 * fy - py
            rx = mx - refx
            ry = my - refy
            den = rx * wy - ry * wx
            if den == 0.0:
                continue
            t = ((wax - refx) * wy - (way - refy) * wx) / den
            u = ((wax - refx) * ry - (way - refy) * rx) / den
            if t < 0.0 or t > 1.0:
                continue
            slack = eps / wlen
            if u < -slack or u > 1.0 + slack:
                continue
            rpx = refx + t * rx
            rpy = refy + t * ry
            d1x = rpx - refx
            d1y = rpy - refy
            d1 = np.sqrt(d1x * d1x + d1y * d1y)
            d2 = np.sqrt((px - rpx) ** 2 + (py - rpy) ** 2)
            if d1 <= eps or d2 <= eps:
                continue
            bmask = np.int64(0)
            for s2 in range(S):
                if s2 == s:
                    continue
                blocked = _wall_blocks(
                    refx, refy, rpx, rpy,
                    segs[s2, 0], segs[s2, 1], segs[s2, 2], segs[s2, 3],
                    eps, True, False,
                ) or _wall_blocks(
                    rpx, rpy, px, py,
                    segs[s2, 0], segs[s2, 1], segs[s2, 2], segs[s2, 3],
                    eps, False, True,
                )
                if blocked:
                    bmask |= np.int64(1) << s2
            nl_valid[g, s] = True
            nl_d[g, s] = d1 + d2
            c = abs(-d1x * wy + d1y * wx) / (d1 * wlen)
            nl_cos[g, s] = c if c <= 1.0 else 1.0
            nl_block[g, s] = bmask
            nl_k[g, s, 0] = d1x / d1
            nl_k[g, s, 1] = d1y / d1
    return los_d, los_k, los_block, nl_valid, nl_d, nl_cos, nl_block, nl_k


@njit(cache=True, inline="always")
def _path_phasors(d, freqs, lams, uniform, cre, cim, beta, row):
    """Per-subcarrier unit phasors exp(-i 2 pi d f_m / c) and amplitudes."""
    M = freqs.shape[0]
    if uniform and M > 1:
        ph0 = -TWO_PI * d * freqs[0] / C0
        dph = -TWO_PI * d * (freqs[1] - freqs[0]) / C0
        cr = np.cos(ph0)
        ci = np.sin(ph0)
        sr = np.cos(dph)
        si = np.sin(dph)
        for m in range(M):
            a = beta * lams[m] / (FOUR_PI * d)
            cre[row, m] = a * cr
            cim[row, m] = a * ci
            tr = cr * sr - ci * si
            ci = cr * si + ci * sr
            cr = tr
    else:
        for m in range(M):
            ph = -TWO_PI * d * freqs[m] / C0
            a = beta * lams[m] / (FOUR_PI * d)
            cre[row, m] = a * np.cos(ph)
            cim[row, m] = a * np.sin(ph)


@njit(cache=True, parallel=True)
def nf_objective_batch(
    los_d, los_block, nl_valid, nl_d, betas, nl_block,
    umasks, draw_to_u, zre, zim, znorm,
    freqs, lams, uniform,
):
    """Summed per-subcarrier cosine similarity for every (draw, candidate).

    ``umasks`` are the distinct awareness bitmasks; each draw d carries its
    own received block Z[d] and points at one of them. Channel assembly
    order is direct path first, then bounces by ascending surface index,
    matching the scalar construction.
    """
    G, N = los_d.shape
    S = nl_valid.shape[2]
    U = umasks.shape[0]
    D = draw_to_u.shape[0]
    M = freqs.shape[0]
    union = np.int64(0)
    for u in range(U):
        union |= umasks[u]
    scores = np.zeros((D, G))
    for g in prange(G):
        cre = np.empty((S + 1, M))
        cim = np.empty((S + 1, M))
        hre = np.empty((U, M))
        him = np.empty((U, M))
        hn2 = np.zeros((U, M))
        dre = np.zeros((D, M))
        dim = np.zeros((D, M))
        for n in range(N):
            # path contributions for this (candidate, element); bounces that
            # no awareness mask can select are skipped outright
            d0 = los_d[g, n]
            _path_phasors(d0, freqs, lams, uniform, cre, cim, 1.0, 0)
            for s in range(S):
                if nl_valid[g, n, s] and ((union >> s) & 1):
                    _path_phasors(nl_d[g, n, s], freqs, lams, uniform, cre, cim, betas[g, n, s], s + 1)
            # assemble per unique awareness mask
            for u in range(U):
                mask = umasks[u]
                for m in range(M):
                    ar = 0.0
                    ai = 0.0
                    if (los_block[g, n] & mask) == 0:
                        ar += cre[0, m]
                        ai += cim[0, m]
                    for s in range(S):
                        if ((mask >> s) & 1) and nl_valid[g, n, s] and (nl_block[g, n, s] & mask) == 0:
                            ar += cre[s + 1, m]
                            ai += cim[s + 1, m]
                    hre[u, m] = ar
                    him[u, m] = ai
                    hn2[u, m] += ar * ar + ai * ai
            for d in range(D):
                u = draw_to_u[d]
                for m in range(M):
                    # conj(h) . z for this element
                    dre[d, m] += hre[u, m] * zre[d, m, n] + him[u, m] * zim[d, m, n]
                    dim[d, m] += hre[u, m] * zim[d, m, n] - him[u, m] * zre[d, m, n]
        for d in range(D):
            u = draw_to_u[d]
            sc = 0.0
            for m in range(M):
                nh = hn2[u, m]
                nz = znorm[d, m]
                if nh > 0.0 and nz > 0.0:
                    sc += np.sqrt(dre[d, m] ** 2 + dim[d, m] ** 2) / (np.sqrt(nh) * nz)
            scores[d, g] = sc
    return scores


@njit(cache=True, parallel=True)
def ff_objective_batch(
    los_d, los_k, los_block, nl_valid, nl_d, betas, nl_block, nl_k,
    offs, umasks, draw_to_u, zre, zim, znorm,
    freqs, lams, uniform,
):
    """Far-field counterpart of nf_objective_batch.

    One shared path set per candidate; element phases follow the planar
    model d_n = d_ref - u_n . k_hat while amplitudes stay at the reference
    distance.
    """
    G = los_d.shape[0]
    S = nl_valid.shape[1]
    N = offs.shape[0]
    U = umasks.shape[0]
    D = draw_to_u.shape[0]
    M = freqs.shape[0]
    union = np.int64(0)
    for u in range(U):
        union |= umasks[u]
    scores = np.zeros((D, G))
    for g in prange(G):
        cre = np.empty((S + 1, M))
        cim = np.empty((S + 1, M))
        hre = np.empty((U, M))
        him = np.empty((U, M))
        hn2 = np.zeros((U, M))
        dre = np.zeros((D, M))
        dim = np.zeros((D, M))
        for n in range(N):
            ux = offs[n, 0]
            uy = offs[n, 1]
            d0 = los_d[g] - (ux * los_k[g, 0] + uy * los_k[g, 1])
            amp0 = los_d[g]
            _path_phasors_ff(d0, amp0, freqs, lams, uniform, cre, cim, 1.0, 0)
            for s in range(S):
                if nl_valid[g, s] and ((union >> s) & 1):
                    dn = nl_d[g, s] - (ux * nl_k[g, s, 0] + uy * nl_k[g, s, 1])
                    _path_phasors_ff(dn, nl_d[g, s], freqs, lams, uniform, cre, cim, betas[g, s], s + 1)
            for u in range(U):
                mask = umasks[u]
                for m in range(M):
                    ar = 0.0
                    ai = 0.0
                    if (los_block[g] & mask) == 0:
                        ar += cre[0, m]
                        ai += cim[0, m]
                    for s in range(S):
                        if ((mask >> s) & 1) and nl_valid[g, s] and (nl_block[g, s] & mask) == 0:
                            ar += cre[s + 1, m]
                            ai += cim[s + 1, m]
                    hre[u, m] = ar
                    him[u, m] = ai
                    hn2[u, m] += ar * ar + ai * ai
            for d in range(D):
                u = draw_to_u[d]
                for m in range(M):
                    dre[d, m] += hre[u, m] * zre[d, m, n] + him[u, m] * zim[d, m, n]
                    dim[d, m] += hre[u, m] * zim[d, m, n] - him[u, m] * zre[d, m, n]
        for d in range(D):
            u = draw_to_u[d]
            sc = 0.0
            for m in range(M):
                nh = hn2[u, m]
                nz = znorm[d, m]
                if nh > 0.0 and nz > 0.0:
                    sc += np.sqrt(dre[d, m] ** 2 + dim[d, m] ** 2) / (np.sqrt(nh) * nz)
            scores[d, g] = sc
    return scores


@njit(cache=True, inline="always")
def _path_phasors_ff(d_phase, d_amp, freqs, lams, uniform, cre, cim, beta, row):
    """Phasors with phase distance d_phase and amplitude distance d_amp."""
    M = freqs.shape[0]
    if uniform and M > 1:
        ph0 = -TWO_PI * d_phase * freqs[0] / C0
        dph = -TWO_PI * d_phase * (freqs[1] - freqs[0]) / C0
        cr = np.cos(ph0)
        ci = np.sin(ph0)
        sr = np.cos(dph)
        si = np.sin(dph)
        for m in range(M):
            a = beta * lams[m] / (FOUR_PI * d_amp)
            cre[row, m] = a * cr
            cim[row, m] = a * ci
            tr = cr * sr - ci * si
            ci = cr * si + ci * sr
            cr = tr
    else:
        for m in range(M):
            ph = -TWO_PI * d_phase * freqs[m] / C0
            a = beta * lams[m] / (FOUR_PI * d_amp)
            cre[row, m] = a * np.cos(ph)
            cim[row, m] = a * np.sin(ph)


@njit(cache=True, inline="always")
def _beta_of(kind, param, c):
    # kind 0: angle-independent coefficient; kind 1: dielectric TE Fresnel
    if kind == 0:
        return param
    root = np.sqrt(max(param - 1.0 + c * c, 0.0))
    den = c + root
    if den <= 0.0:
        return 1.0
    b = abs((c - root) / den)
    if b > 1.0:
        return 1.0
    return b


@njit(cache=True, parallel=True)
def nf_step_scores(cand, elems, segs, kinds, params, mask, zre, zim, znorm, freqs, lams, uniform):
    """Single-mask, single-observation tracking step (fused, early-exit).

    Equivalent to path_geometry + nf_objective_batch for one awareness mask
    and one received block, but skips work as soon as a path is ruled out.
    """
    G = cand.shape[0]
    N = elems.shape[0]
    S = segs.shape[0]
    M = freqs.shape[0]
    eps = 1e-9
    scores = np.zeros(G)
    for g in prange(G):
        px = cand[g, 0]
        py = cand[g, 1]
        cre = np.empty(M)
        cim = np.empty(M)
        hre = np.empty(M)
        him = np.empty(M)
        dre = np.zeros(M)
        dim = np.zeros(M)
        hn2 = np.zeros(M)
        for n in range(N):
            ex = elems[n, 0]
            ey = elems[n, 1]
            for m in range(M):
                hre[m] = 0.0
                him[m] = 0.0
            # direct path
            blocked = False
            for s in range(S):
                if not ((mask >> s) & 1):
                    continue
                if _wall_blocks(ex, ey, px, py, segs[s, 0], segs[s, 1], segs[s, 2], segs[s, 3], eps, True, True):
                    blocked = True
                    break
            if not blocked:
                d0 = np.sqrt((ex - px) ** 2 + (ey - py) ** 2)
                _phasor_accum(d0, d0, 1.0, freqs, lams, uniform, hre, him)
            # one bounce per selected surface
            for s in range(S):
                if not ((mask >> s) & 1):
                    continue
                wax = segs[s, 0]
                way = segs[s, 1]
                wbx = segs[s, 2]
                wby = segs[s, 3]
                wx = wbx - wax
                wy = wby - way
                wl2 = wx * wx + wy * wy
                wlen = np.sqrt(wl2)
                tp = ((px - wax) * wx + (py - way) * wy) / wl2
                fx = wax + tp * wx
                fy = way + tp * wy
                mx = 2.0 * fx - px
                my = 2.0 * fy - py
                rx = mx - ex
                ry = my - ey
                den = rx * wy - ry * wx
                if den == 0.0:
                    continue
                t = ((wax - ex) * wy - (way - ey) * wx) / den
                u = ((wax - ex) * ry - (way - ey) * rx) / den
                if t < 0.0 or t > 1.0:
                    continue
                slack = eps / wlen
                if u < -slack or u > 1.0 + slack:
                    continue
                rpx = ex + t * rx
                rpy = ey + t * ry
                d1x = rpx - ex
                d1y = rpy - ey
                d1 = np.sqrt(d1x * d1x + d1y * d1y)
                d2 = np.sqrt((px - rpx) ** 2 + (py - rpy) ** 2)
                if d1 <= eps or d2 <= eps:
                    continue
                ok = True
                for s2 in range(S):
                    if s2 == s or not ((mask >> s2) & 1):
                        continue
                    if _wall_blocks(ex, ey, rpx, rpy, segs[s2, 0], segs[s2, 1], segs[s2, 2], segs[s2, 3], eps, True, False):
                        ok = False
                        break
                    if _wall_blocks(rpx, rpy, px, py, segs[s2, 0], segs[s2, 1], segs[s2, 2], segs[s2, 3], eps, False, True):
                        ok = False
                        break
                if not ok:
                    continue
                c = abs(-d1x * wy + d1y * wx) / (d1 * wlen)
                if c > 1.0:
                    c = 1.0
                beta = _beta_of(kinds[s], params[s], c)
                _phasor_accum(d1 + d2, d1 + d2, beta, freqs, lams, uniform, hre, him)
            for m in range(M):
                dre[m] += hre[m] * zre[m, n] + him[m] * zim[m, n]
                dim[m] += hre[m] * zim[m, n] - him[m] * zre[m, n]
                hn2[m] += hre[m] * hre[m] + him[m] * him[m]
        sc = 0.0
        for m in range(M):
            if hn2[m] > 0.0 and znorm[m] > 0.0:
                sc += np.sqrt(dre[m] ** 2 + dim[m] ** 2) / (np.sqrt(hn2[m]) * znorm[m])
        scores[g] = sc
    return scores


@njit(cache=True, inline="always")
def _phasor_accum(d_phase, d_amp, beta, freqs, lams, uniform, hre, him):
    M = freqs.shape[0]
    if uniform and M > 1:
        ph0 = -TWO_PI * d_phase * freqs[0] / C0
        dph = -TWO_PI * d_phase * (freqs[1] - freqs[0]) / C0
        cr = np.cos(ph0)
        ci = np.sin(ph0)
        sr = np.cos(dph)
        si = np.sin(dph)
        for m in range(M):
            a = beta * lams[m] / (FOUR_PI * d_amp)
            hre[m] += a * cr
            him[m] += a * ci
            tr = cr * sr - ci * si
            ci = cr * si + ci * sr
            cr = tr
    else:
        for m in range(M):
            ph = -TWO_PI * d_phase * freqs[m] / C0
            a = beta * lams[m] / (FOUR_PI * d_amp)
            hre[m] += a * np.cos(ph)
            him[m] += a * np.sin(ph)


@njit(cache=True, parallel=True)
def ff_step_scores(cand, offs, refx, refy, segs, kinds, params, mask, zre, zim, znorm, freqs, lams, uniform):
    """Far-field single-mask tracking step (fused)."""
    G = cand.shape[0]
    N = offs.shape[0]
    S = segs.shape[0]
    M = freqs.shape[0]
    eps = 1e-9
    scores = np.zeros(G)
    for g in prange(G):
        px = cand[g, 0]
        py = cand[g, 1]
        # path set at the reference point: distance, beta, arrival direction
        pd = np.empty(S + 1)
        pb = np.empty(S + 1)
        pkx = np.empty(S + 1)
        pky = np.empty(S + 1)
        np_paths = 0
        blocked = False
        for s in range(S):
            if not ((mask >> s) & 1):
                continue
            if _wall_blocks(refx, refy, px, py, segs[s, 0], segs[s, 1], segs[s, 2], segs[s, 3], eps, True, True):
                blocked = True
                break
        if not blocked:
            d = np.sqrt((px - refx) ** 2 + (py - refy) ** 2)
            pd[0] = d
            pb[0] = 1.0
            pkx[0] = (px - refx) / d
            pky[0] = (py - refy) / d
            np_paths = 1
        for s in range(S):
            if not ((mask >> s) & 1):
                continue
            wax = segs[s, 0]
            way = segs[s, 1]
            wbx = segs[s, 2]
            wby = segs[s, 3]
            wx = wbx - wax
            wy = wby - way
            wl2 = wx * wx + wy * wy
            wlen = np.sqrt(wl2)
            tp = ((px - wax) * wx + (py - way) * wy) / wl2
            fx = wax + tp * wx
            fy = way + tp * wy
            mx = 2.0 * fx - px
            my = 2.0 * fy - py
            rx = mx - refx
            ry = my - refy
            den = rx * wy - ry * wx
            if den == 0.0:
                continue
            t = ((wax - refx) * wy - (way - refy) * wx) / den
            u = ((wax - refx) * ry - (way - refy) * rx) / den
            if t < 0.0 or t > 1.0:
                continue
            slack = eps / wlen
            if u < -slack or u > 1.0 + slack:
                continue
            rpx = refx + t * rx
            rpy = refy + t * ry
            d1x = rpx - refx
            d1y = rpy - refy
            d1 = np.sqrt(d1x * d1x + d1y * d1y)
            d2 = np.sqrt((px - rpx) ** 2 + (py - rpy) ** 2)
            if d1 <= eps or d2 <= eps:
                continue
            ok = True
            for s2 in range(S):
                if s2 == s or not ((mask >> s2) & 1):
                    continue
                if _wall_blocks(refx, refy, rpx, rpy, segs[s2, 0], segs[s2, 1], segs[s2, 2], segs[s2, 3], eps, True, False):
                    ok = False
                    break
                if _wall_blocks(rpx, rpy, px, py, segs[s2, 0], segs[s2, 1], segs[s2, 2], segs[s2, 3], eps, False, True):
                    ok = False
                    break
            if not ok:
                continue
            c = abs(-d1x * wy + d1y * wx) / (d1 * wlen)
            if c > 1.0:
                c = 1.0
            pd[np_paths] = d1 + d2
            pb[np_paths] = _beta_of(kinds[s], params[s], c)
            pkx[np_paths] = d1x / d1
            pky[np_paths] = d1y / d1
            np_paths += 1
        hre = np.empty(M)
        him = np.empty(M)
        dre = np.zeros(M)
        dim = np.zeros(M)
        hn2 = np.zeros(M)
        for n in range(N):
            ux = offs[n, 0]
            uy = offs[n, 1]
            for m in range(M):
                hre[m] = 0.0
                him[m] = 0.0
            for l in range(np_paths):
                dn = pd[l] - (ux * pkx[l] + uy * pky[l])
                _phasor_accum(dn, pd[l], pb[l], freqs, lams, uniform, hre, him)
            for m in range(M):
                dre[m] += hre[m] * zre[m, n] + him[m] * zim[m, n]
                dim[m] += hre[m] * zim[m, n] - him[m] * zre[m, n]
                hn2[m] += hre[m] * hre[m] + him[m] * him[m]
        sc = 0.0
        for m in range(M):
            if hn2[m] > 0.0 and znorm[m] > 0.0:
                sc += np.sqrt(dre[m] ** 2 + dim[m] ** 2) / (np.sqrt(hn2[m]) * znorm[m])
        scores[g] = sc
    return scores
