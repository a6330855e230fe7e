"""Periodic Lorentz gas on the cylinder: tables, collision map, sampling."""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .geometry import Point2, Segment, UnitVec


class OverlappingObstacles(Exception):
    """Two periodic obstacle copies intersect or come too close."""


class HorizonViolation(Exception):
    """A free flight exceeds the declared bound or never lands."""


class TangentialHit(Exception):
    """Grazing collision below the discriminant cutoff; caller resamples."""


CLEARANCE = 1e-9


@dataclass(frozen=True)
class Disk:
    """Circular obstacle with its fundamental-cell center."""

    center: Point2
    radius: float
    id: int

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if self.radius >= 0.5:
            raise ValueError("disk does not fit inside the cylinder")
        if not 0.0 <= self.center.y < 1.0:
            raise ValueError("center must lie in the fundamental cell")


@dataclass
class BilliardTable:
    """Disks repeated over the unit lattice, with a declared flight bound."""

    disks: list
    tau_max: float
    quotient_area: float = field(init=False)
    boundary_length: float = field(init=False)

    def __post_init__(self):
        if not self.disks:
            raise HorizonViolation("no obstacles: every flight is unbounded")
        if not self.tau_max > 0:
            raise ValueError("tau_max must be positive")
        area = 1.0 - sum(math.pi * d.radius ** 2 for d in self.disks)
        if not 0.0 < area < 1.0:
            raise ValueError("obstacles must leave positive free area")
        self.quotient_area = area
        self.boundary_length = sum(2.0 * math.pi * d.radius for d in self.disks)
        self._cand = None

    @property
    def phi_bound(self):
        """Hard bound on the per-step cell increment."""
        return math.ceil(self.tau_max) + 1

    def arrays(self):
        """Kernel-ready center/radius arrays and the sorted candidate list."""
        if self._cand is None:
            dcx = np.array([d.center.x for d in self.disks])
            dcy = np.array([d.center.y for d in self.disks])
            dr = np.array([d.radius for d in self.disks])
            w = math.ceil(self.tau_max + dr.max()) + 1
            js, dms, dks, lbs = [], [], [], []
            for j in range(len(self.disks)):
                for dm in range(-w, w + 1):
                    for dk in range(-w, w + 1):
                        ex = max(0.0, abs(dcx[j] + dm - 0.5) - 0.5)
                        ey = max(0.0, abs(dcy[j] + dk - 0.5) - 0.5)
                        lb = max(0.0, math.hypot(ex, ey) - dr[j])
                        js.append(j)
                        dms.append(dm)
                        dks.append(dk)
                        lbs.append(lb)
            order = np.argsort(np.array(lbs), kind="stable")
            self._cand = (
                dcx, dcy, dr,
                np.array(js, dtype=np.int64)[order],
                np.array(dms, dtype=np.int64)[order],
                np.array(dks, dtype=np.int64)[order],
                np.array(lbs)[order],
            )
        return self._cand


@dataclass(frozen=True)
class CollisionState:
    """Outgoing state on an obstacle boundary: where, which way, which cell."""

    disk_id: int
    s: float
    theta: float
    cell: int

    def __post_init__(self):
        if not -0.5 * math.pi < self.theta < 0.5 * math.pi:
            raise ValueError("theta must point away from the obstacle")


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of the table checks."""

    max_flight: float
    min_clearance: float
    n_rays: int


def _disk_by_id(t, disk_id):
    for d in t.disks:
        if d.id == disk_id:
            return d
    raise ValueError(f"unknown disk id {disk_id}")


def state_position(t, x):
    """Boundary point of a collision state, true cylinder coordinates."""
    d = _disk_by_id(t, x.disk_id)
    psi = x.s / d.radius
    return Point2(d.center.x + d.radius * math.cos(psi),
                  d.center.y + x.cell + d.radius * math.sin(psi))


def state_velocity(t, x):
    """Outgoing unit velocity of a collision state."""
    d = _disk_by_id(t, x.disk_id)
    psi = x.s / d.radius
    nx, ny = math.cos(psi), math.sin(psi)
    st, ct = math.sin(x.theta), math.cos(x.theta)
    return UnitVec(ct * nx - st * ny, ct * ny + st * nx)


def _state_from_hit(t, j, dk, hx, hy, vx, vy):
    d = t.disks[j]
    ccx = d.center.x  # hit coordinates arrive already reduced mod the wrap
    nrx = (hx - ccx) / d.radius
    nry = (hy - (d.center.y + dk)) / d.radius
    psi = math.atan2(nry, nrx) % (2.0 * math.pi)
    theta = math.atan2(nrx * vy - nry * vx, nrx * vx + nry * vy)
    return CollisionState(disk_id=d.id, s=psi * d.radius, theta=theta, cell=dk)


def validate_table(t, angle_grid=10000, boundary_grid=512):
    """Check copy disjointness and empirically confirm the flight bound."""
    if angle_grid < 10000:
        raise ValueError("angle_grid must be at least 10^4")
    ids = [d.id for d in t.disks]
    if len(set(ids)) != len(ids):
        raise ValueError("disk ids must be unique")
    min_clear = math.inf
    nd = len(t.disks)
    for i in range(nd):
        for j in range(nd):
            for dm in (-1, 0, 1):
                for dk in (-1, 0, 1):
                    if i == j and dm == 0 and dk == 0:
                        continue
                    a, b = t.disks[i], t.disks[j]
                    dist = math.hypot(b.center.x + dm - a.center.x,
                                      b.center.y + dk - a.center.y)
                    clear = dist - a.radius - b.radius
                    if clear < min_clear:
                        min_clear = clear
                    if clear < CLEARANCE:
                        raise OverlappingObstacles(
                            f"copies of disks {a.id} and {b.id} at shift "
                            f"({dm},{dk}): clearance {clear:.3e}")
    dcx, dcy, dr, cj, cdm, cdk, clb = t.arrays()
    worst, unbounded = _kernels.horizon_sweep(
        dcx, dcy, dr, cj, cdm, cdk, clb,
        boundary_grid, angle_grid, 4.0 * t.tau_max)
    n_rays = boundary_grid * angle_grid
    if unbounded > 0:
        raise HorizonViolation(math.inf)
    if worst > t.tau_max:
        raise HorizonViolation(worst)
    return ValidationReport(max_flight=worst, min_clearance=min_clear,
                            n_rays=n_rays)


def free_flight(t, q, v):
    """First obstacle hit of the ray from q: (tau, hit point, disk id, cell)."""
    dcx, dcy, dr, cj, cdm, cdk, clb = t.arrays()
    wrap = math.floor(q.x)
    tau, j, dm, dk, disc = _kernels.free_flight(
        q.x - wrap, q.y, v.vx, v.vy, dcx, dcy, dr, cj, cdm, cdk, clb)
    if not math.isfinite(tau) or tau > t.tau_max:
        raise HorizonViolation(tau)
    if disc < _kernels.TANGENT_DISC:
        raise TangentialHit(disc)
    hx = q.x - wrap + tau * v.vx
    hy = q.y + tau * v.vy
    return tau, Point2(hx - dm + wrap, hy), t.disks[j].id, dk


def reflect(v, n):
    """Specular bounce of v off the boundary with unit normal n."""
    dot = v.vx * n.vx + v.vy * n.vy
    wx = v.vx - 2.0 * dot * n.vx
    wy = v.vy - 2.0 * dot * n.vy
    nrm = math.hypot(wx, wy)
    return UnitVec(wx / nrm, wy / nrm)


def billiard_map(t, x):
    """One collision step: fly from x, bounce, return (state, tau, arc)."""
    d = _disk_by_id(t, x.disk_id)
    psi = x.s / d.radius
    nx, ny = math.cos(psi), math.sin(psi)
    qx = d.center.x + d.radius * nx
    qy = d.center.y + x.cell + d.radius * ny
    wrap = math.floor(qx)
    qx -= wrap
    v = state_velocity(t, x)
    dcx, dcy, dr, cj, cdm, cdk, clb = t.arrays()
    tau, j, dm, dk, disc = _kernels.free_flight(
        qx, qy, v.vx, v.vy, dcx, dcy, dr, cj, cdm, cdk, clb)
    if not math.isfinite(tau) or tau > t.tau_max:
        raise HorizonViolation(tau)
    if disc < _kernels.TANGENT_DISC:
        raise TangentialHit(disc)
    hx = qx + tau * v.vx
    hy = qy + tau * v.vy
    arc = Segment(Point2(qx, qy), Point2(hx, hy))
    hd = t.disks[j]
    nrx = (hx - (hd.center.x + dm)) / hd.radius
    nry = (hy - (hd.center.y + dk)) / hd.radius
    w = reflect(v, UnitVec(nrx, nry))
    theta = math.atan2(nrx * w.vy - nry * w.vx, nrx * w.vx + nry * w.vy)
    psi2 = math.atan2(nry, nrx) % (2.0 * math.pi)
    new = CollisionState(disk_id=hd.id, s=psi2 * hd.radius,
                         theta=theta, cell=dk)
    return new, tau, arc


def inverse_map(t, x):
    """Previous collision state: reverse the bounce, fly backward."""
    d = _disk_by_id(t, x.disk_id)
    psi = x.s / d.radius
    n = UnitVec(math.cos(psi), math.sin(psi))
    u = reflect(state_velocity(t, x), n)  # incoming velocity, pre-bounce
    qx = d.center.x + d.radius * n.vx
    qy = d.center.y + x.cell + d.radius * n.vy
    wrap = math.floor(qx)
    dcx, dcy, dr, cj, cdm, cdk, clb = t.arrays()
    tau, j, dm, dk, disc = _kernels.free_flight(
        qx - wrap, qy, -u.vx, -u.vy, dcx, dcy, dr, cj, cdm, cdk, clb)
    if not math.isfinite(tau) or tau > t.tau_max:
        raise HorizonViolation(tau)
    if disc < _kernels.TANGENT_DISC:
        raise TangentialHit(disc)
    hx = qx - wrap + tau * -u.vx
    hy = qy + tau * -u.vy
    arc = Segment(Point2(hx, hy), Point2(qx - wrap, qy))
    prev = _state_from_hit(t, j, dk, hx - dm, hy, u.vx, u.vy)
    if not -0.5 * math.pi < prev.theta < 0.5 * math.pi:
        raise ValueError("reversed state is not outgoing")
    return prev, tau, arc


def step_phi(t, x):
    """Cell increment of one collision step."""
    new, _, _ = billiard_map(t, x)
    phi = new.cell - x.cell
    if abs(phi) > t.phi_bound:
        raise HorizonViolation(f"cell increment {phi} exceeds bound")
    return phi


def sample_mu_bar(t, rng):
    """Draw a collision state from the invariant boundary measure."""
    radii = np.array([d.radius for d in t.disks])
    j = rng.choice(len(radii), p=radii / radii.sum())
    d = t.disks[j]
    s = rng.uniform(0.0, 2.0 * math.pi * d.radius)
    theta = math.asin(2.0 * rng.uniform() - 1.0)
    return CollisionState(disk_id=d.id, s=s, theta=theta, cell=0)


def sample_mu_bar_batch(t, rng, n):
    """Vectorized invariant-measure draws as kernel-ready arrays."""
    radii = np.array([d.radius for d in t.disks])
    idx = rng.choice(len(radii), size=n, p=radii / radii.sum())
    psi = rng.uniform(0.0, 2.0 * math.pi, size=n)
    theta = np.arcsin(2.0 * rng.uniform(size=n) - 1.0)
    return idx.astype(np.int64), psi, theta


def mean_free_path(t, n_samples, rng=None):
    """Monte Carlo mean flight time with its standard error."""
    if n_samples <= 0:
        raise ValueError("n_samples must be positive")
    if rng is None:
        rng = np.random.default_rng(0)
    d_arr, psi, theta = sample_mu_bar_batch(t, rng, n_samples)
    dcx, dcy, dr, cj, cdm, cdk, clb = t.arrays()
    tau, ax, ay, bx, by, ok, status = _kernels.flights(
        d_arr, psi, theta, dcx, dcy, dr, cj, cdm, cdk, clb, t.tau_max)
    if status == _kernels.ERR_NO_HIT:
        raise HorizonViolation("flight exceeded tau_max during sampling")
    good = tau[ok == 1]
    mean = float(good.mean())
    stderr = float(good.std(ddof=1) / math.sqrt(good.size))
    return mean, stderr


class Orbit:
    """Arrays of one trajectory: flights, arcs, cells, boundary states."""

    def __init__(self, tau, ax, ay, bx, by, cells, disks, psis, thetas, drift):
        self.tau = tau
        self.ax = ax
        self.ay = ay
        self.bx = bx
        self.by = by
        self.cells = cells
        self.disks = disks
        self.psis = psis
        self.thetas = thetas
        self.drift = drift

    @property
    def n(self):
        return self.tau.shape[0]

    @property
    def phi(self):
        return np.diff(self.cells)

    def arc(self, i):
        return Segment(Point2(self.ax[i], self.ay[i]),
                       Point2(self.bx[i], self.by[i]))


def run_orbit(t, x0, n):
    """Simulate n collisions from x0; raises on grazing or horizon breach."""
    d = _disk_by_id(t, x0.disk_id)
    j0 = t.disks.index(d)
    dcx, dcy, dr, cj, cdm, cdk, clb = t.arrays()
    res = _kernels.orbit(j0, x0.cell, x0.s / d.radius, x0.theta, n,
                         dcx, dcy, dr, cj, cdm, cdk, clb, t.tau_max)
    tau, ax, ay, bx, by, cells, disks, psis, thetas, drift, status, step = (
        res[0], res[1], res[2], res[3], res[4], res[5], res[6], res[7],
        res[8], res[9], res[10], res[11])
    if status == _kernels.ERR_TANGENTIAL:
        raise TangentialHit(step)
    if status == _kernels.ERR_NO_HIT:
        raise HorizonViolation(f"no hit within tau_max at step {step}")
    if np.abs(np.diff(cells)).max(initial=0) > t.phi_bound:
        raise HorizonViolation("cell increment exceeds bound")
    return Orbit(tau, ax, ay, bx, by, cells, disks, psis, thetas, drift)


def default_table():
    """Two unequal disks per cell: blocks every corridor with margin."""
    return BilliardTable(
        disks=[Disk(Point2(0.25, 0.25), 0.40, 0),
               Disk(Point2(0.75, 0.75), 0.25, 1)],
        tau_max=1.6,
    )


def table_from_triples(triples, tau_max):
    """Build a table from (cx, cy, r) rows, ids by position."""
    disks = [Disk(Point2(cx, cy % 1.0), r, i)
             for i, (cx, cy, r) in enumerate(triples)]
    return BilliardTable(disks=disks, tau_max=tau_max)
