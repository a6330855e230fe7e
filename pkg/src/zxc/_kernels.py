"""Numba kernels: ray casting, orbit generation, crossing counts."""

import math

import numpy as np
from numba import njit

# status codes shared with the python wrappers
OK = 0
ERR_TANGENTIAL = 1
ERR_NO_HIT = 2
ERR_OVERLAP = 3
ERR_CAPACITY = 4

PARALLEL_EPS = 1e-12
POINT_TOL = 1e-9
TANGENT_DISC = 1e-12
MIN_T = 1e-9


@njit(cache=True, nogil=True)
def _ray_disk(qx, qy, vx, vy, cx, cy, r):
    """First positive hit time of the ray with the circle, or (inf, 0)."""
    dx = cx - qx
    dy = cy - qy
    b = dx * vx + dy * vy
    c = dx * dx + dy * dy - r * r
    disc = b * b - c
    if disc <= 0.0:
        return np.inf, disc
    sq = math.sqrt(disc)
    t1 = b - sq
    if t1 > MIN_T:
        return t1, disc
    t2 = b + sq
    if t2 > MIN_T and c < 0.0:
        # starting inside would be a geometry bug; still report the exit
        return t2, disc
    return np.inf, disc


@njit(cache=True, nogil=True)
def free_flight(qx, qy, vx, vy, dcx, dcy, dr, cand_j, cand_dm, cand_dk, cand_lb):
    """First hit over the candidate copy list (sorted by distance lower bound).

    qx must lie in [0,1); copies are placed at (dcx[j]+dm, floor(qy)+dcy[j]+dk).
    Returns (tau, disk_j, dm, dk_abs, disc) with dk_abs the absolute vertical
    copy index, or tau = inf when nothing is hit.
    """
    ybase = math.floor(qy)
    best = np.inf
    best_j = -1
    best_dm = 0
    best_dk = 0
    best_disc = 0.0
    for idx in range(cand_j.shape[0]):
        if cand_lb[idx] >= best:
            break
        j = cand_j[idx]
        cx = dcx[j] + cand_dm[idx]
        cy = dcy[j] + ybase + cand_dk[idx]
        t, disc = _ray_disk(qx, qy, vx, vy, cx, cy, dr[j])
        if t < best:
            best = t
            best_j = j
            best_dm = cand_dm[idx]
            best_dk = cand_dk[idx] + int(ybase)
            best_disc = disc
    return best, best_j, best_dm, best_dk, best_disc


@njit(cache=True, nogil=True)
def orbit(d0, k0, psi0, theta0, n, dcx, dcy, dr,
          cand_j, cand_dm, cand_dk, cand_lb, tau_max):
    """Run n collisions from an outgoing state.

    State: disk index, vertical copy index (cell), boundary angle psi,
    outgoing angle theta from the outward normal. Returns per-step arcs in
    lifted coordinates (start x in [0,1) frame of its disk, true y).
    """
    tau = np.empty(n)
    ax = np.empty(n)
    ay = np.empty(n)
    bx = np.empty(n)
    by = np.empty(n)
    cells = np.empty(n + 1, dtype=np.int64)
    disks = np.empty(n + 1, dtype=np.int64)
    psis = np.empty(n + 1)
    thetas = np.empty(n + 1)

    d = d0
    k = k0
    psi = psi0
    theta = theta0
    drift = 0.0
    cells[0] = k
    disks[0] = d
    psis[0] = psi
    thetas[0] = theta
    for i in range(n):
        nx = math.cos(psi)
        ny = math.sin(psi)
        qx = dcx[d] + dr[d] * nx
        qy = dcy[d] + k + dr[d] * ny
        wrap = math.floor(qx)
        qx -= wrap
        st = math.sin(theta)
        ct = math.cos(theta)
        vx = ct * nx - st * ny
        vy = ct * ny + st * nx
        t, j, dm, dk, disc = free_flight(qx, qy, vx, vy, dcx, dcy, dr,
                                         cand_j, cand_dm, cand_dk, cand_lb)
        if not np.isfinite(t) or t > tau_max:
            return tau, ax, ay, bx, by, cells, disks, psis, thetas, drift, ERR_NO_HIT, i
        if disc < TANGENT_DISC:
            return tau, ax, ay, bx, by, cells, disks, psis, thetas, drift, ERR_TANGENTIAL, i
        hx = qx + t * vx
        hy = qy + t * vy
        tau[i] = t
        ax[i] = qx
        ay[i] = qy
        bx[i] = hx
        by[i] = hy
        ccx = dcx[j] + dm
        ccy = dcy[j] + dk
        nrx = (hx - ccx) / dr[j]
        nry = (hy - ccy) / dr[j]
        dvn = vx * nrx + vy * nry
        wx = vx - 2.0 * dvn * nrx
        wy = vy - 2.0 * dvn * nry
        nrm = wx * wx + wy * wy
        dev = abs(nrm - 1.0)
        if dev > drift:
            drift = dev
        inv = 1.0 / math.sqrt(nrm)
        wx *= inv
        wy *= inv
        d = j
        k = dk
        psi = math.atan2(nry, nrx)
        theta = math.atan2(nrx * wy - nry * wx, nrx * wx + nry * wy)
        cells[i + 1] = k
        disks[i + 1] = d
        psis[i + 1] = psi
        thetas[i + 1] = theta
    return tau, ax, ay, bx, by, cells, disks, psis, thetas, drift, OK, n


@njit(cache=True, nogil=True)
def iterate_states(d_arr, psi_arr, theta_arr, n_iter, dcx, dcy, dr,
                   cand_j, cand_dm, cand_dk, cand_lb, tau_max):
    """Apply the quotient collision map n_iter times to a batch of states."""
    m = d_arr.shape[0]
    out_d = np.empty(m, dtype=np.int64)
    out_psi = np.empty(m)
    out_theta = np.empty(m)
    status = OK
    for s in range(m):
        res = orbit(d_arr[s], 0, psi_arr[s], theta_arr[s], n_iter,
                    dcx, dcy, dr, cand_j, cand_dm, cand_dk, cand_lb, tau_max)
        disks = res[6]
        psis = res[7]
        thetas = res[8]
        st = res[10]
        if st != OK:
            status = st
            out_d[s] = -1
            out_psi[s] = 0.0
            out_theta[s] = 0.0
        else:
            out_d[s] = disks[n_iter]
            out_psi[s] = psis[n_iter]
            out_theta[s] = thetas[n_iter]
    return out_d, out_psi, out_theta, status


@njit(cache=True, nogil=True)
def flights(d_arr, psi_arr, theta_arr, dcx, dcy, dr,
            cand_j, cand_dm, cand_dk, cand_lb, tau_max):
    """One free flight per state: arcs of the sampled section points."""
    m = d_arr.shape[0]
    tau = np.empty(m)
    ax = np.empty(m)
    ay = np.empty(m)
    bx = np.empty(m)
    by = np.empty(m)
    ok = np.ones(m, dtype=np.uint8)
    status = OK
    for s in range(m):
        d = d_arr[s]
        nx = math.cos(psi_arr[s])
        ny = math.sin(psi_arr[s])
        qx = dcx[d] + dr[d] * nx
        qy = dcy[d] + dr[d] * ny
        qx -= math.floor(qx)
        st = math.sin(theta_arr[s])
        ct = math.cos(theta_arr[s])
        vx = ct * nx - st * ny
        vy = ct * ny + st * nx
        t, j, dm, dk, disc = free_flight(qx, qy, vx, vy, dcx, dcy, dr,
                                         cand_j, cand_dm, cand_dk, cand_lb)
        if not np.isfinite(t) or t > tau_max:
            ok[s] = 0
            status = ERR_NO_HIT
            tau[s] = np.nan
            continue
        if disc < TANGENT_DISC:
            ok[s] = 0
            tau[s] = np.nan
            continue
        tau[s] = t
        ax[s] = qx
        ay[s] = qy
        bx[s] = qx + t * vx
        by[s] = qy + t * vy
    return tau, ax, ay, bx, by, ok, status


@njit(cache=True, nogil=True)
def horizon_sweep(dcx, dcy, dr, cand_j, cand_dm, cand_dk, cand_lb,
                  n_boundary, n_angles, t_cap):
    """Max free flight over a dense grid of boundary points and angles."""
    total_len = 0.0
    for j in range(dr.shape[0]):
        total_len += dr[j]
    worst = 0.0
    unbounded = 0
    for j in range(dr.shape[0]):
        npts = max(8, int(n_boundary * dr[j] / total_len))
        for p in range(npts):
            psi = 2.0 * math.pi * (p + 0.5) / npts
            nx = math.cos(psi)
            ny = math.sin(psi)
            qx = dcx[j] + dr[j] * nx
            qy = dcy[j] + dr[j] * ny
            qx -= math.floor(qx)
            for a in range(n_angles):
                theta = -0.5 * math.pi + math.pi * (a + 0.5) / n_angles
                st = math.sin(theta)
                ct = math.cos(theta)
                vx = ct * nx - st * ny
                vy = ct * ny + st * nx
                t, hj, dm, dk, disc = free_flight(qx, qy, vx, vy, dcx, dcy, dr,
                                                  cand_j, cand_dm, cand_dk, cand_lb)
                if not np.isfinite(t) or t > t_cap:
                    unbounded += 1
                elif t > worst:
                    worst = t
    return worst, unbounded


@njit(cache=True, nogil=True)
def _pair_points(pax, pay, pbx, pby, qax, qay, qbx, qby,
                 k_lo, k_hi, wrap_y, skip00, excl, ex, ey, buf):
    """Distinct crossing points of arc p with translates of arc q.

    Translates run over all horizontal wraps and vertical shifts k in
    [k_lo, k_hi]; the identity translate is skipped when skip00 is set
    (p and q are the same arc). Points within POINT_TOL of (ex, ey) are
    excluded when excl is set (shared endpoint of consecutive arcs).
    Returns the count, or -1 on a collinear overlap, or -2 on overflow.
    """
    rx = pbx - pax
    ry = pby - pay
    sx = qbx - qax
    sy = qby - qay
    denom = rx * sy - ry * sx
    scale = math.hypot(rx, ry) * math.hypot(sx, sy)
    parallel = abs(denom) <= PARALLEL_EPS * scale
    px_lo = min(pax, pbx)
    px_hi = max(pax, pbx)
    qx_lo = min(qax, qbx)
    qx_hi = max(qax, qbx)
    m_lo = int(math.floor(px_lo - qx_hi))
    m_hi = int(math.ceil(px_hi - qx_lo))
    cnt = 0
    for m in range(m_lo, m_hi + 1):
        for k in range(k_lo, k_hi + 1):
            if skip00 and m == 0 and k == 0:
                continue
            ox = qax + m
            oy = qay + k
            if parallel:
                # parallel translates can only overlap when collinear
                off = (pbx - pax) * (oy - pay) - (pby - pay) * (ox - pax)
                if abs(off) > PARALLEL_EPS * scale:
                    continue
                rr = rx * rx + ry * ry
                t0 = ((ox - pax) * rx + (oy - pay) * ry) / rr
                t1 = ((ox + sx - pax) * rx + (oy + sy - pay) * ry) / rr
                lo = min(t0, t1)
                hi = max(t0, t1)
                if lo < 0.0:
                    lo = 0.0
                if hi > 1.0:
                    hi = 1.0
                span_tol = POINT_TOL / math.sqrt(rr)
                if hi < lo - span_tol:
                    continue
                if hi - lo <= span_tol:
                    t = 0.5 * (lo + hi)
                    ix = pax + t * rx
                    iy = pay + t * ry
                else:
                    return -1, cnt
            else:
                qpx = ox - pax
                qpy = oy - pay
                t = (qpx * sy - qpy * sx) / denom
                u = (qpx * ry - qpy * rx) / denom
                if t < 0.0 or t > 1.0 or u < 0.0 or u > 1.0:
                    continue
                ix = pax + t * rx
                iy = pay + t * ry
            wx = ix - math.floor(ix)
            wy = iy - math.floor(iy) if wrap_y else iy
            if excl:
                dx = abs(wx - ex) % 1.0
                if dx > 0.5:
                    dx = 1.0 - dx
                dy = abs(iy - ey)
                if wrap_y:
                    dy = dy % 1.0
                    if dy > 0.5:
                        dy = 1.0 - dy
                if dx <= POINT_TOL and dy <= POINT_TOL:
                    continue
            dup = False
            for u_i in range(cnt):
                dx = abs(wx - buf[u_i, 0]) % 1.0
                if dx > 0.5:
                    dx = 1.0 - dx
                dy = abs(wy - buf[u_i, 1])
                if wrap_y:
                    dy = dy % 1.0
                    if dy > 0.5:
                        dy = 1.0 - dy
                if dx <= POINT_TOL and dy <= POINT_TOL:
                    dup = True
                    break
            if dup:
                continue
            if cnt >= buf.shape[0]:
                return -2, cnt
            buf[cnt, 0] = wx
            buf[cnt, 1] = wy
            cnt += 1
    return cnt, cnt


@njit(cache=True, nogil=True)
def count_crossings(ax, ay, bx, by, cells, idx, n, quotient, want_pairs, cap):
    """Self-crossing count of the first n arcs of one trajectory.

    Cylinder mode (quotient False): true trace crossings, horizontal wraps
    only, banded by floor(y) so candidate pairs stay local. Quotient mode:
    both coordinates wrapped, all pairs, vertical translates enumerated.
    Arcs with consecutive idx values exclude their shared collision point,
    taken as the later arc's start. Returns
    (total, n_pair_records, i_idx, j_idx, k_mult, max_cell_gap, status).
    """
    buf = np.empty((64, 2))
    total = np.int64(0)
    nrec = 0
    i_idx = np.empty(cap if want_pairs else 0, dtype=np.int64)
    j_idx = np.empty(cap if want_pairs else 0, dtype=np.int64)
    k_mult = np.empty(cap if want_pairs else 0, dtype=np.int64)
    max_gap = np.int64(0)
    if n <= 0:
        return total, nrec, i_idx, j_idx, k_mult, max_gap, OK

    if quotient:
        # shift each arc rigidly into the base cell so translate windows
        # stay small for orbits that wander far
        wax = np.empty(n)
        way = np.empty(n)
        wbx = np.empty(n)
        wby = np.empty(n)
        for i in range(n):
            fx = math.floor(ax[i])
            fy = math.floor(ay[i])
            wax[i] = ax[i] - fx
            way[i] = ay[i] - fy
            wbx[i] = bx[i] - fx
            wby[i] = by[i] - fy
        ax = wax
        ay = way
        bx = wbx
        by = wby

    ylo = np.empty(n)
    yhi = np.empty(n)
    for i in range(n):
        ylo[i] = min(ay[i], by[i])
        yhi[i] = max(ay[i], by[i])

    # self terms: an arc against its own nonzero translates
    for i in range(n):
        if quotient:
            k_lo = int(math.floor(ylo[i] - yhi[i]))
            k_hi = int(math.ceil(yhi[i] - ylo[i]))
        else:
            k_lo = 0
            k_hi = 0
        c, got = _pair_points(ax[i], ay[i], bx[i], by[i],
                              ax[i], ay[i], bx[i], by[i],
                              k_lo, k_hi, quotient, True, False, 0.0, 0.0, buf)
        if c == -1:
            return total, nrec, i_idx, j_idx, k_mult, max_gap, ERR_OVERLAP
        if c == -2:
            return total, nrec, i_idx, j_idx, k_mult, max_gap, ERR_CAPACITY
        total += c
        if c > 0 and want_pairs:
            if nrec >= cap:
                return total, nrec, i_idx, j_idx, k_mult, max_gap, ERR_CAPACITY
            i_idx[nrec] = i
            j_idx[nrec] = i
            k_mult[nrec] = c
            nrec += 1

    if quotient:
        for i in range(n):
            for j in range(i + 1, n):
                k_lo = int(math.floor(ylo[i] - yhi[j]))
                k_hi = int(math.ceil(yhi[i] - ylo[j]))
                adj = idx[j] == idx[i] + 1
                c, got = _pair_points(ax[i], ay[i], bx[i], by[i],
                                      ax[j], ay[j], bx[j], by[j],
                                      k_lo, k_hi, True, False, adj,
                                      ax[j] - math.floor(ax[j]), ay[j], buf)
                if c == -1:
                    return total, nrec, i_idx, j_idx, k_mult, max_gap, ERR_OVERLAP
                if c == -2:
                    return total, nrec, i_idx, j_idx, k_mult, max_gap, ERR_CAPACITY
                if c > 0:
                    gap = abs(cells[i] - cells[j])
                    if gap > max_gap:
                        max_gap = gap
                    total += c
                    if want_pairs:
                        if nrec >= cap:
                            return total, nrec, i_idx, j_idx, k_mult, max_gap, ERR_CAPACITY
                        i_idx[nrec] = i
                        j_idx[nrec] = j
                        k_mult[nrec] = c
                        nrec += 1
        return total, nrec, i_idx, j_idx, k_mult, max_gap, OK

    # cylinder mode: band arcs by floor(y) ranges via a CSR table
    b_lo = np.empty(n, dtype=np.int64)
    b_hi = np.empty(n, dtype=np.int64)
    bmin = np.int64(2 ** 60)
    bmax = np.int64(-(2 ** 60))
    for i in range(n):
        b_lo[i] = np.int64(math.floor(ylo[i]))
        b_hi[i] = np.int64(math.floor(yhi[i]))
        if b_lo[i] < bmin:
            bmin = b_lo[i]
        if b_hi[i] > bmax:
            bmax = b_hi[i]
    nb = int(bmax - bmin + 1)
    counts = np.zeros(nb + 1, dtype=np.int64)
    for i in range(n):
        for b in range(b_lo[i], b_hi[i] + 1):
            counts[b - bmin + 1] += 1
    for b in range(nb):
        counts[b + 1] += counts[b]
    entries = np.empty(counts[nb], dtype=np.int64)
    fill = counts[:nb].copy()
    for i in range(n):
        for b in range(b_lo[i], b_hi[i] + 1):
            entries[fill[b - bmin]] = i
            fill[b - bmin] += 1

    for b in range(nb):
        start = counts[b]
        stop = counts[b + 1]
        for p in range(start, stop):
            i = entries[p]
            for q in range(p + 1, stop):
                j = entries[q]
                lo = i if i < j else j
                hi = j if i < j else i
                # dedupe: handle the pair in the highest shared band
                shared_hi = min(b_hi[i], b_hi[j])
                if b + bmin != shared_hi:
                    continue
                if ylo[lo] > yhi[hi] or ylo[hi] > yhi[lo]:
                    continue
                gap = abs(cells[lo] - cells[hi])
                if gap > max_gap:
                    max_gap = gap
                adj = idx[hi] == idx[lo] + 1
                c, got = _pair_points(ax[lo], ay[lo], bx[lo], by[lo],
                                      ax[hi], ay[hi], bx[hi], by[hi],
                                      0, 0, False, False, adj,
                                      ax[hi] - math.floor(ax[hi]), ay[hi], buf)
                if c == -1:
                    return total, nrec, i_idx, j_idx, k_mult, max_gap, ERR_OVERLAP
                if c == -2:
                    return total, nrec, i_idx, j_idx, k_mult, max_gap, ERR_CAPACITY
                if c > 0:
                    total += c
                    if want_pairs:
                        if nrec >= cap:
                            return total, nrec, i_idx, j_idx, k_mult, max_gap, ERR_CAPACITY
                        i_idx[nrec] = lo
                        j_idx[nrec] = hi
                        k_mult[nrec] = c
                        nrec += 1
    return total, nrec, i_idx, j_idx, k_mult, max_gap, OK


@njit(cache=True, nogil=True)
def vk_histogram(pax, pay, pbx, pby, yax, yay, ybx, yby, hist_size):
    """Multiplicity histogram of one arc against sampled arcs' translates.

    For each sampled arc and each vertical integer translate that could
    touch the reference arc, counts the crossing points (horizontal wraps
    identified, heights kept) and increments hist[count] for count >= 1.
    Overlapping configurations are skipped and tallied. Returns
    (hist, n_skipped, status).
    """
    m = yax.shape[0]
    hist = np.zeros(hist_size, dtype=np.int64)
    skipped = 0
    buf = np.empty((64, 2))
    ylo_x = min(pay, pby)
    yhi_x = max(pay, pby)
    for i in range(m):
        ylo_y = min(yay[i], yby[i])
        yhi_y = max(yay[i], yby[i])
        k_lo = int(math.floor(ylo_x - yhi_y))
        k_hi = int(math.ceil(yhi_x - ylo_y))
        for k in range(k_lo, k_hi + 1):
            c, got = _pair_points(pax, pay, pbx, pby,
                                  yax[i], yay[i], ybx[i], yby[i],
                                  k, k, False, False, False, 0.0, 0.0, buf)
            if c == -1:
                skipped += 1
                continue
            if c == -2:
                return hist, skipped, ERR_CAPACITY
            if c >= 1:
                idx = c if c < hist_size else hist_size - 1
                hist[idx] += 1
    return hist, skipped, OK


@njit(cache=True, nogil=True)
def pair_quotient_counts(xax, xay, xbx, xby, yax, yay, ybx, yby):
    """Quotient-torus crossing count for each (x_i, y_i) arc pair.

    Also flags pairs whose x-arc meets one of its own nonzero translates
    (transversally or by overlap). Returns (counts, self_flags, status).
    """
    m = xax.shape[0]
    out = np.zeros(m, dtype=np.int64)
    selfbad = np.zeros(m, dtype=np.uint8)
    buf = np.empty((64, 2))
    status = OK
    for i in range(m):
        ylo_x = min(xay[i], xby[i])
        yhi_x = max(xay[i], xby[i])
        ylo_y = min(yay[i], yby[i])
        yhi_y = max(yay[i], yby[i])
        k_lo = int(math.floor(ylo_x - yhi_y))
        k_hi = int(math.ceil(yhi_x - ylo_y))
        c, got = _pair_points(xax[i], xay[i], xbx[i], xby[i],
                              yax[i], yay[i], ybx[i], yby[i],
                              k_lo, k_hi, True, False, False, 0.0, 0.0, buf)
        if c < 0:
            out[i] = -1
            status = ERR_OVERLAP if c == -1 else ERR_CAPACITY
            continue
        out[i] = c
        k_span = int(math.ceil(yhi_x - ylo_x))
        cs, gs = _pair_points(xax[i], xay[i], xbx[i], xby[i],
                              xax[i], xay[i], xbx[i], xby[i],
                              -k_span - 1, k_span + 1, True, True, False,
                              0.0, 0.0, buf)
        if cs != 0:
            selfbad[i] = 1
    return out, selfbad, status
