"""Arc-length parametrized 2D reference paths.

A path is a polyline whose interior corners are rounded with circular arcs,
so the unit tangent exists everywhere except at the start/end point of a
closed path. The public parameter ``s`` is normalized: ``s in [0, 1]`` maps
to arc length ``s * length`` (mm).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from r2rlearn.errors import ConfigurationError

log = logging.getLogger(__name__)

_LINE, _ARC = 0, 1


@dataclass(frozen=True)
class ErrorLinearization:
    """eps = Phi @ [y1, y2, phi] + c_aff gives [lag, contour] errors."""

    Phi: np.ndarray
    c_aff: np.ndarray

    def errors(self, y, phi=0.0) -> np.ndarray:
        return self.Phi @ np.array([y[0], y[1], phi], dtype=float) + self.c_aff


class ReferencePath:
    """Polyline reference with filleted corners.

    Parameters
    ----------
    waypoints : sequence of (x, y) points in mm.
    closed : if True the path returns to the first waypoint. The first
        waypoint itself is never rounded, it is where motion starts and ends.
    corner_radius : fillet radius in mm. ``None`` selects 2% of the shortest
        segment; 0 keeps sharp corners (the tangent is then taken from the
        outgoing segment).
    """

    def __init__(self, waypoints, closed: bool = False, corner_radius: float | None = None):
        pts = np.asarray(waypoints, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
            raise ConfigurationError("a path needs at least 2 waypoints of dimension 2")
        if not np.all(np.isfinite(pts)):
            raise ConfigurationError("waypoints must be finite")
        if closed and np.allclose(pts[0], pts[-1]):
            pts = pts[:-1]
        verts = np.vstack([pts, pts[:1]]) if closed else pts
        seg = np.diff(verts, axis=0)
        seg_len = np.hypot(seg[:, 0], seg[:, 1])
        if np.any(seg_len <= 0.0):
            raise ConfigurationError("consecutive waypoints must be distinct")
        if corner_radius is None:
            corner_radius = 0.02 * float(seg_len.min())
        if corner_radius < 0:
            raise ConfigurationError("corner_radius must be >= 0")

        self.waypoints = pts
        self.closed = bool(closed)
        self.corner_radius = float(corner_radius)
        self._build(verts, seg, seg_len)

    # construction ---------------------------------------------------------

    def _build(self, verts, seg, seg_len):
        dirs = seg / seg_len[:, None]
        n_seg = len(seg)
        # fillet at every interior vertex (index 1..n_seg-1 of verts)
        trim = np.zeros(n_seg + 1)
        fillets = {}
        rho = self.corner_radius
        for v in range(1, n_seg):
            d_in, d_out = dirs[v - 1], dirs[v]
            cross = d_in[0] * d_out[1] - d_in[1] * d_out[0]
            turn = math.atan2(cross, float(d_in @ d_out))
            if rho == 0.0 or abs(turn) < 1e-12:
                continue
            tlen = rho * math.tan(abs(turn) / 2.0)
            if tlen > 0.5 * min(seg_len[v - 1], seg_len[v]) + 1e-12:
                raise ConfigurationError(
                    f"corner_radius {rho} too large for the corner at waypoint {v}"
                )
            trim[v] = tlen
            fillets[v] = turn

        kinds, starts, lengths, params = [], [], [], []
        acc = 0.0

        def add(kind, length, p):
            nonlocal acc
            kinds.append(kind)
            starts.append(acc)
            lengths.append(length)
            params.append(p)
            acc += length

        for i in range(n_seg):
            a = verts[i] + dirs[i] * trim[i]
            b = verts[i + 1] - dirs[i] * trim[i + 1]
            L = float(np.hypot(*(b - a)))
            if L > 1e-14:
                add(_LINE, L, (a[0], a[1], dirs[i][0], dirs[i][1], 0.0, 0.0))
            v = i + 1
            if v in fillets:
                turn = fillets[v]
                sgn = 1.0 if turn > 0 else -1.0
                d_in = dirs[i]
                normal = sgn * np.array([-d_in[1], d_in[0]])
                center = b + rho * normal
                ang0 = math.atan2(b[1] - center[1], b[0] - center[0])
                add(_ARC, rho * abs(turn), (center[0], center[1], rho, ang0, sgn, 0.0))

        self._kind = np.array(kinds, dtype=int)
        self._start = np.array(starts)
        self._len = np.array(lengths)
        self._par = np.array(params)
        self.arc_table = np.append(self._start, acc)
        self.length = float(acc)
        if np.any(np.diff(self.arc_table) <= 0):
            raise ConfigurationError("degenerate path: arc table not strictly increasing")

    @property
    def n_pieces(self) -> int:
        return len(self._kind)

    # evaluation -----------------------------------------------------------

    def _locate(self, sigma):
        idx = np.searchsorted(self.arc_table, sigma, side="right") - 1
        return np.clip(idx, 0, self.n_pieces - 1)

    def eval_arclength(self, sigma):
        """Point and unit tangent at arc length ``sigma`` (array ok)."""
        sigma = np.asarray(sigma, dtype=float)
        scalar = sigma.ndim == 0
        sigma = np.atleast_1d(sigma)
        idx = self._locate(sigma)
        local = sigma - self._start[idx]
        p = self._par[idx]
        is_arc = self._kind[idx] == _ARC

        pt = np.empty(sigma.shape + (2,))
        tg = np.empty(sigma.shape + (2,))
        # straight pieces
        pt[..., 0] = p[..., 0] + local * p[..., 2]
        pt[..., 1] = p[..., 1] + local * p[..., 3]
        tg[..., 0] = p[..., 2]
        tg[..., 1] = p[..., 3]
        if np.any(is_arc):
            q = p[is_arc]
            ang = q[:, 3] + q[:, 4] * local[is_arc] / q[:, 2]
            c, s = np.cos(ang), np.sin(ang)
            pt[is_arc, 0] = q[:, 0] + q[:, 2] * c
            pt[is_arc, 1] = q[:, 1] + q[:, 2] * s
            tg[is_arc, 0] = -q[:, 4] * s
            tg[is_arc, 1] = q[:, 4] * c
        if scalar:
            return pt[0], tg[0]
        return pt, tg

    def project_points(self, y):
        """Exact closest point for each row of ``y``.

        Returns (sigma_hat, signed contour error); ties go to the smallest
        arc length.
        """
        y = np.atleast_2d(np.asarray(y, dtype=float))
        P = len(y)
        best_sig = np.empty(P)
        best_d2 = np.full(P, np.inf)
        tol = 1e-12 * max(1.0, self.length) ** 2
        for k in range(self.n_pieces):
            p = self._par[k]
            if self._kind[k] == _LINE:
                rel = y - p[:2]
                loc = np.clip(rel @ p[2:4], 0.0, self._len[k])
            else:
                rel = y - p[:2]
                ang = np.arctan2(rel[:, 1], rel[:, 0])
                # signed angular offset from the arc start along its direction
                off = np.mod(p[4] * (ang - p[3]), 2 * np.pi)
                sweep = self._len[k] / p[2]
                loc_ang = np.where(off <= sweep, off, np.where(off - sweep < 2 * np.pi - off, sweep, 0.0))
                loc = loc_ang * p[2]
            sig = self._start[k] + loc
            pt, _ = self.eval_arclength(sig)
            d2 = np.sum((y - pt) ** 2, axis=1)
            better = d2 < best_d2 - tol
            tie = np.abs(d2 - best_d2) <= tol
            best_sig = np.where(better, sig, np.where(tie, np.minimum(sig, best_sig), best_sig))
            best_d2 = np.where(better, d2, best_d2)
        pt, tg = self.eval_arclength(best_sig)
        err = pt - y
        ec = tg[:, 0] * err[:, 1] - tg[:, 1] * err[:, 0]
        return best_sig, ec

    def __repr__(self):
        return (
            f"ReferencePath({len(self.waypoints)} waypoints, closed={self.closed}, "
            f"corner_radius={self.corner_radius:g}, length={self.length:g})"
        )

    def to_dict(self) -> dict:
        return {
            "waypoints": self.waypoints.tolist(),
            "closed": self.closed,
            "corner_radius": self.corner_radius,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ReferencePath":
        return cls(d["waypoints"], closed=d.get("closed", False), corner_radius=d.get("corner_radius"))


def _clamp_s(s):
    s_arr = np.asarray(s, dtype=float)
    if np.any((s_arr < 0.0) | (s_arr > 1.0)):
        log.warning("path parameter outside [0, 1] clamped")
        s_arr = np.clip(s_arr, 0.0, 1.0)
    return s_arr


def eval(path: ReferencePath, s):  # noqa: A001 - mirrors the operation name
    """Point r(s) and unit tangent r'(s) for normalized ``s`` in [0, 1]."""
    return path.eval_arclength(_clamp_s(s) * path.length)


def project(path: ReferencePath, y):
    """Closest-point parameter and signed contour error for a 2D point.

    Accepts a single point (returns scalars) or an (n, 2) array.
    """
    y = np.asarray(y, dtype=float)
    sig, ec = path.project_points(y)
    s_hat = sig / path.length
    if y.ndim == 1:
        return float(s_hat[0]), float(ec[0])
    return s_hat, ec


def linearize_errors(path: ReferencePath, s: float, T: float, L_r: float | None = None) -> ErrorLinearization:
    """Linear lag/contour error map at path parameter ``s``.

    The lag row carries the path-velocity term with coefficient ``T * L_r``
    because ``s`` is normalized (``phi`` in 1/s).
    """
    if L_r is None:
        L_r = path.length
    r, rp = eval(path, s)
    Phi = np.array([
        [-rp[0], -rp[1], T * L_r],
        [rp[1], -rp[0], 0.0],
    ])
    c_aff = np.array([rp @ r, rp[0] * r[1] - rp[1] * r[0]])
    return ErrorLinearization(Phi=Phi, c_aff=c_aff)


def sample_parameters(path: ReferencePath, n_i: int) -> np.ndarray:
    if n_i < 2:
        raise ConfigurationError("need at least 2 samples")
    t = np.arange(n_i, dtype=float)
    return t / n_i if path.closed else t / (n_i - 1)


def discretize(path: ReferencePath, n_i: int) -> np.ndarray:
    """Constant-speed samples, stacked as [r1(0), r2(0), r1(1), ...]."""
    pts, _ = path.eval_arclength(sample_parameters(path, n_i) * path.length)
    return pts.reshape(-1)


def octagon_waypoints(width: float = 20.0, chamfer: float = 6.0) -> np.ndarray:
    """Octagon with side ``width`` bounding box, starting mid-way along the
    bottom edge so the start point lies on a straight segment.

    Coordinates are shifted so that the start point is the origin.
    """
    w, c = width, chamfer
    pts = np.array([
        [w / 2, 0.0],
        [w - c, 0.0], [w, c], [w, w - c], [w - c, w],
        [c, w], [0.0, w - c], [0.0, c], [c, 0.0],
    ])
    return pts - pts[0]
