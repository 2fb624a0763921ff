"""Log-barrier Newton method for the dualized Voronoi programs.

Every constraint block couples an affine image ``p = M z + f`` of the shared
decision vector ``z`` with private variables ``w`` (multipliers and cone
epigraph variables).  The Newton system has arrow structure, so each block's
private variables are eliminated by a Schur complement and only a dense
system in ``z`` is factored.

Ellipsoid blocks use the center form of the dual.  With ``Q = V diag(q) V^T``,
center ``c``, anchor ``x`` and ``a = V^T (p - c)``, the cell constraint is

    2 p^T (x - c) + ||c||^2 - ||x||^2 - sum_i q_i a_i^2 / (q_i + lam) - lam >= 0,

which is lifted with ``tau_i >= q_i a_i^2 / (q_i + lam)`` into one linear
inequality plus ``d`` rotated second-order cones, each with the standard
self-concordant barrier ``-log((q_i + lam) tau_i - q_i a_i^2)``.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np


STEP_FRACTION = 0.9


class EllipsoidGroup:
    """Vectorized blocks, one per (point map, ellipsoid) pair.

    Private variables per block: ``w = (lam, tau_1, ..., tau_d)``.
    """

    def __init__(self, M, f, anchors, centers, q, V):
        self.M = np.asarray(M, dtype=float)          # (B, d, nz)
        self.f = np.asarray(f, dtype=float)          # (B, d)
        self.c = np.asarray(centers, dtype=float)    # (B, d)
        self.q = np.asarray(q, dtype=float)          # (B, d)
        self.V = np.asarray(V, dtype=float)          # (B, d, d)
        x = np.asarray(anchors, dtype=float)
        self.xc = 2.0 * (x - self.c)
        self.k0 = np.sum(self.c**2, axis=1) - np.sum(x**2, axis=1)
        self.size, self.d = self.c.shape
        self.m = self.size * (2 * self.d + 2)
        self.shift_index = None
        self._refresh()

    def _refresh(self):
        self._cache = None
        self.VM = np.einsum("bji,bjn->bin", self.V, self.M)   # V^T M, (B, d, nz)
        self.lz = np.einsum("bdn,bd->bn", self.M, self.xc)    # gradient of the affine part
        if self.shift_index is not None:
            self.lz[:, self.shift_index] += 1.0

    def padded(self):
        """Copy acting on ``z`` extended by a trailing slack-shift coordinate."""
        new = copy.copy(self)
        new.M = np.concatenate([self.M, np.zeros(self.M.shape[:2] + (1,))], axis=2)
        new.shift_index = self.M.shape[2]
        new._refresh()
        return new

    def _coords(self, z):
        key = z.tobytes()
        if self._cache is not None and self._cache[0] == key:
            return self._cache[1]
        out = self._coords_uncached(z)
        self._cache = (key, out)
        return out

    def _coords_uncached(self, z):
        p = np.einsum("bdn,n->bd", self.M, z) + self.f
        a = np.einsum("bji,bj->bi", self.V, p - self.c)
        lin = np.sum(p * self.xc, axis=1) + self.k0
        if self.shift_index is not None:
            lin = lin + z[self.shift_index]
        return p, a, lin

    def slack(self, z, lam):
        """Dual-restriction slack for given multipliers (tau at its minimum)."""
        _, a, lin = self._coords(z)
        return lin - np.sum(self.q * a * a / (self.q + lam[:, None]), axis=1) - lam

    def best_multipliers(self, z):
        """Maximizer over ``lam >= 0`` of the slack, per block.

        Solves ``sum q a^2 / (q + lam)^2 = 1`` by Newton on the reciprocal
        square root, which converges monotonically from ``lam = 0``.
        """
        _, a, _ = self._coords(z)
        q = self.q
        w2q = a * a * q
        outside = np.sum(a * a / q, axis=1) > 1.0
        lam = np.zeros(self.size)
        for _ in range(100):
            den = q + lam[:, None]
            F = np.sum(w2q / den**2, axis=1)
            dF = -2.0 * np.sum(w2q / den**3, axis=1)
            with np.errstate(divide="ignore", invalid="ignore"):   # F = 0 only at the center
                phi = F**-0.5 - 1.0
                dphi = -0.5 * F**-1.5 * dF
                step = np.where(outside, -phi / dphi, 0.0)
            lam = np.maximum(lam + step, 0.0)
            if np.all(np.abs(step) <= 1e-15 * (1.0 + lam)):
                break
        return lam, self.slack(z, lam)

    def init(self, z):
        lam, s = self.best_multipliers(z)
        _, a, _ = self._coords(z)
        scale = 1.0 + np.abs(self.k0)
        lam = np.maximum(lam, 1e-6 * scale)
        s = self.slack(z, lam)
        delta = np.abs(s) / (2 * self.d) + 1e-9 * scale
        tau = self.q * a * a / (self.q + lam[:, None]) + delta[:, None]
        w = np.column_stack([lam, tau])
        if np.all(s > 0):
            w = self.center_private(z, w)
        return w, s

    def multipliers(self, w):
        return w[:, 0]

    def _terms(self, z, w):
        _, a, lin = self._coords(z)
        lam, tau = w[:, 0], w[:, 1:]
        u = self.q + lam[:, None]
        L = lin - tau.sum(axis=1) - lam
        C = u * tau - self.q * a * a
        return a, lam, tau, u, L, C

    def barrier(self, z, w):
        a, lam, tau, u, L, C = self._terms(z, w)
        if np.any(L <= 0) or np.any(C <= 0) or np.any(lam <= 0):
            return np.inf
        return -float(np.sum(np.log(L)) + np.sum(np.log(C)) + np.sum(np.log(lam)))

    def derivatives(self, z, w):
        """Barrier gradient and Hessian blocks in ``(z, w)``, per block."""
        a, lam, tau, u, L, C = self._terms(z, w)
        q, E, lz = self.q, self.VM, self.lz
        B, d = a.shape
        iL, iC = 1.0 / L, 1.0 / C
        qa = 2.0 * q * a * iC                                     # -dC/da / C

        gz = -lz * iL[:, None] + np.einsum("bi,bin->bn", qa, E)
        gw = np.empty((B, d + 1))
        gw[:, 0] = iL - np.sum(tau * iC, axis=1) - 1.0 / lam
        gw[:, 1:] = iL[:, None] - u * iC

        coef = qa**2 + 2.0 * q * iC
        Hzz = (np.einsum("bn,bm->bnm", lz, lz) * (iL**2)[:, None, None]
               + np.einsum("bin,bi,bim->bnm", E, coef, E))
        Hzw = np.empty((B, E.shape[2], d + 1))
        Hzw[:, :, 0] = -lz * (iL**2)[:, None] - np.einsum("bi,bin->bn", qa * tau * iC, E)
        Hzw[:, :, 1:] = -lz[:, :, None] * (iL**2)[:, None, None] - np.transpose(E * (qa * u * iC)[:, :, None], (0, 2, 1))
        Hww = np.broadcast_to((iL**2)[:, None, None], (B, d + 1, d + 1)).copy()
        Hww[:, 0, 0] += np.sum(tau**2 * iC**2, axis=1) + 1.0 / lam**2
        cross = tau * u * iC**2 - iC
        Hww[:, 0, 1:] += cross
        Hww[:, 1:, 0] += cross
        idx = np.arange(d)
        Hww[:, 1 + idx, 1 + idx] += u**2 * iC**2
        return gz, gw, Hzz, Hzw, Hww

    def newton_terms(self, z, w):
        """Reduced Hessian/gradient in ``z`` and the back-substitution map."""
        gz, gw, Hzz, Hzw, Hww = self.derivatives(z, w)
        rhs = np.concatenate([np.transpose(Hzw, (0, 2, 1)), gw[:, :, None]], axis=2)
        K = np.linalg.solve(Hww, rhs)                             # (B, d+1, nz+1)
        red_H = Hzz.sum(axis=0) - np.einsum("bnk,bkm->nm", Hzw, K[:, :, :-1])
        red_g = gz.sum(axis=0) - np.einsum("bnk,bk->n", Hzw, K[:, :, -1])
        extra = float(np.einsum("bk,bk->", gw, K[:, :, -1]))

        def back(dz):
            return -(K[:, :, -1] + K[:, :, :-1] @ dz)

        return red_H, red_g, extra, back

    def step_bound(self, z, w, dz, dw):
        """Largest ``alpha`` keeping ``(z, w) + alpha (dz, dw)`` in the barrier domain.

        ``L`` and ``lam`` are affine in ``alpha`` and each cone residual ``C_i``
        is quadratic, so the first root is exact.
        """
        a, lam, tau, u, L, C = self._terms(z, w)
        dlam, dtau = dw[:, 0], dw[:, 1:]
        da = np.einsum("bin,n->bi", self.VM, dz)
        dL = self.lz @ dz - dtau.sum(axis=1) - dlam
        c1 = u * dtau + dlam[:, None] * tau - 2.0 * self.q * a * da
        c2 = dlam[:, None] * dtau - self.q * da * da
        alpha = min(_first_root_linear(L, dL), _first_root_linear(lam, dlam))
        return min(alpha, _first_root_quadratic(C, c1, c2))

    def center_private(self, z, w, iterations=30):
        """Damped Newton in ``w`` alone, blockwise, at fixed ``z``."""
        _, a, lin = self._coords(z)
        qa2 = self.q * a * a
        d = self.d
        idx = 1 + np.arange(d)
        for _ in range(iterations):
            lam, tau = w[:, 0], w[:, 1:]
            u = self.q + lam[:, None]
            iL = 1.0 / (lin - tau.sum(axis=1) - lam)
            iC = 1.0 / (u * tau - qa2)
            gw = np.empty_like(w)
            gw[:, 0] = iL - np.sum(tau * iC, axis=1) - 1.0 / lam
            gw[:, 1:] = iL[:, None] - u * iC
            Hww = np.broadcast_to((iL**2)[:, None, None], (self.size, d + 1, d + 1)).copy()
            Hww[:, 0, 0] += np.sum(tau**2 * iC**2, axis=1) + 1.0 / lam**2
            cross = tau * u * iC**2 - iC
            Hww[:, 0, 1:] += cross
            Hww[:, 1:, 0] += cross
            Hww[:, idx, idx] += u**2 * iC**2
            dw = -np.linalg.solve(Hww, gw[:, :, None])[:, :, 0]
            dec = -np.einsum("bk,bk->b", gw, dw)
            if np.all(dec <= 1e-12):
                break
            w = w + dw / (1.0 + np.sqrt(np.maximum(dec, 0.0)))[:, None]
        return w


class MatrixFractionalBlock:
    """Polyhedron intersected with ellipsoids, in quadratic-form coordinates.

    Multipliers are ``(lam0 in R^r, lam_1..lam_s)`` and the slack is
    ``-h(J lam - p, I + sum lam_i Sigma_i) - 2 lam0^T b - sum lam_i kappa_i
    - ||x||^2 + 2 p^T x`` with ``h(q, X) = q^T X^{-1} q``.
    """

    def __init__(self, M, f, anchor, A, b, forms):
        self.M = np.asarray(M, dtype=float)      # (d, nz)
        self.f = np.asarray(f, dtype=float)
        self.x = np.asarray(anchor, dtype=float)
        d = self.x.size
        self.r = 0 if A is None else A.shape[0]
        cols = [] if A is None else [A.T]
        self.sigmas = [fm.sigma for fm in forms]
        cols += [fm.mu[:, None] for fm in forms]
        self.J = np.hstack(cols) if cols else np.zeros((d, 0))
        self.cvec = np.concatenate([2.0 * np.asarray(b) if A is not None else np.zeros(0),
                                    np.array([fm.kappa for fm in forms])])
        self.n_lam = self.J.shape[1]
        self.m = self.n_lam + 1
        self.d = d
        self.shift_index = None

    def padded(self):
        new = copy.copy(self)
        new.M = np.hstack([self.M, np.zeros((self.d, 1))])
        new.shift_index = self.M.shape[1]
        return new

    def _parts(self, z, lam):
        p = self.M @ z + self.f
        X = np.eye(self.d)
        for li, S in zip(lam[self.r:], self.sigmas):
            X = X + li * S
        qv = self.J @ lam - p
        w = np.linalg.solve(X, qv)
        s = -qv @ w - self.cvec @ lam - self.x @ self.x + 2.0 * p @ self.x
        if self.shift_index is not None:
            s += z[self.shift_index]
        return p, X, w, s

    def slack(self, z, lam):
        return self._parts(z, lam)[3]

    def derivatives(self, z, lam):
        """Slack with its gradient and Hessian in ``(z, lam)``."""
        p, X, w, s = self._parts(z, lam)
        Xinv = np.linalg.inv(X)
        C = np.zeros((self.d, self.n_lam))
        quad = np.zeros(self.n_lam)
        for k, S in enumerate(self.sigmas):
            Sw = S @ w
            C[:, self.r + k] = Xinv @ Sw
            quad[self.r + k] = w @ Sw
        J = self.J
        gh_l = 2.0 * J.T @ w - quad
        Hh_pp = 2.0 * Xinv
        Hh_pl = -2.0 * Xinv @ J + 2.0 * C
        JC = J.T @ C
        Hh_ll = 2.0 * J.T @ Xinv @ J - 2.0 * (JC + JC.T) + 2.0 * C.T @ X @ C
        gs_p = 2.0 * w + 2.0 * self.x
        gs_l = -gh_l - self.cvec
        M = self.M
        gs_z = M.T @ gs_p
        if self.shift_index is not None:
            gs_z[self.shift_index] += 1.0
        return s, gs_z, gs_l, -M.T @ Hh_pp @ M, -M.T @ Hh_pl, -Hh_ll

    def best_multipliers(self, z):
        """Maximize the slack over ``lam > 0`` with a shrinking log barrier."""
        lam = np.ones(self.n_lam)
        scale = 1.0 + float(np.sum((self.M @ z + self.f) ** 2))
        best = (lam.copy(), self.slack(z, lam))
        for mu in scale * np.array([1.0, 1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12]):
            for _ in range(50):
                s, _, gl, _, _, Hll = self.derivatives(z, lam)
                g = -gl - mu / lam
                H = -Hll + np.diag(mu / lam**2)
                try:
                    step = np.linalg.solve(H, -g)
                except np.linalg.LinAlgError:
                    break
                dec = -g @ step
                alpha = 1.0
                neg = step < 0
                if np.any(neg):
                    alpha = min(1.0, 0.99 * np.min(-lam[neg] / step[neg]))
                F0 = -s - mu * np.sum(np.log(lam))
                while alpha > 1e-12:
                    new = lam + alpha * step
                    if -self.slack(z, new) - mu * np.sum(np.log(new)) <= F0 - 0.25 * alpha * dec:
                        break
                    alpha *= 0.5
                lam = lam + alpha * step
                if dec < 1e-14 * scale:
                    break
            s = self.slack(z, lam)
            if s > best[1]:
                best = (lam.copy(), s)
        return best[0], np.atleast_1d(best[1])

    def init(self, z):
        lam, s = self.best_multipliers(z)
        if s[0] > 0:
            lam = self.center_private(z, lam)
        return lam, s

    def multipliers(self, w):
        return w

    def center_private(self, z, lam, iterations=30):
        """Damped Newton in the multipliers alone at fixed ``z``."""
        for _ in range(iterations):
            s, _, gs_l, _, _, Hs_ll = self.derivatives(z, lam)
            if s <= 0:
                break
            g = -gs_l / s - 1.0 / lam
            H = -Hs_ll / s + np.outer(gs_l, gs_l) / s**2 + np.diag(1.0 / lam**2)
            try:
                step = -np.linalg.solve(H, g)
            except np.linalg.LinAlgError:
                break
            dec = -g @ step
            if dec <= 1e-12:
                break
            lam = lam + step / (1.0 + np.sqrt(dec))
        return lam

    def step_bound(self, z, lam, dz, dlam):
        # the slack is not polynomial in the step; only positivity of lam is exact
        return _first_root_linear(lam, dlam)

    def barrier(self, z, lam):
        if np.any(lam <= 0):
            return np.inf
        s = self.slack(z, lam)
        if s <= 0:
            return np.inf
        return -float(np.log(s) + np.sum(np.log(lam)))

    def newton_terms(self, z, lam):
        s, gs_z, gs_l, Hs_zz, Hs_zl, Hs_ll = self.derivatives(z, lam)
        inv = 1.0 / s
        gz = -gs_z * inv
        gl = -gs_l * inv - 1.0 / lam
        Hzz = -Hs_zz * inv + np.outer(gs_z, gs_z) * inv**2
        Hzl = -Hs_zl * inv + np.outer(gs_z, gs_l) * inv**2
        Hll = -Hs_ll * inv + np.outer(gs_l, gs_l) * inv**2 + np.diag(1.0 / lam**2)
        K = np.linalg.solve(Hll, np.column_stack([Hzl.T, gl]))
        red_H = Hzz - Hzl @ K[:, :-1]
        red_g = gz - Hzl @ K[:, -1]
        extra = float(gl @ K[:, -1])

        def back(dz):
            return -(K[:, -1] + K[:, :-1] @ dz)

        return red_H, red_g, extra, back


@dataclass
class BarrierOutcome:
    status: str
    z: np.ndarray
    w: list = field(default_factory=list)
    iterations: int = 0
    gap: float = np.inf


def _phi(groups, z, ws, t, obj):
    val = t * obj(z)
    for g, w in zip(groups, ws):
        val += g.barrier(z, w)
        if not np.isfinite(val):
            return np.inf
    return val


def _first_root_linear(v, dv):
    """Smallest ``alpha > 0`` with ``v + alpha dv = 0`` (inf if none)."""
    neg = dv < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(-v[neg] / dv[neg]))


def _first_root_quadratic(c0, c1, c2):
    """Smallest ``alpha > 0`` with ``c0 + c1 alpha + c2 alpha^2 = 0``, given ``c0 > 0``."""
    c0, c1, c2 = (np.ravel(c) for c in (c0, c1, c2))
    roots = np.full(c0.shape, np.inf)
    lin = np.abs(c2) <= 1e-14 * (np.abs(c1) + np.abs(c0))
    mask = lin & (c1 < 0)
    roots[mask] = -c0[mask] / c1[mask]
    quad = ~lin
    disc = c1 * c1 - 4.0 * c0 * c2
    ok = quad & (disc >= 0)
    sq = np.sqrt(np.where(ok, disc, 0.0))
    # numerically stable pair of roots
    qq = -0.5 * (c1 + np.copysign(sq, c1))
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = np.where(ok, qq / c2, np.inf)
        r2 = np.where(ok & (qq != 0), c0 / qq, np.inf)
    for r in (r1, r2):
        r = np.where(r > 0, r, np.inf)
        roots = np.minimum(roots, r)
    return float(roots.min(initial=np.inf))


def _center(groups, z, ws, t, obj, obj_grad_hess, budget, stop=None, tol=1e-8):
    """Damped Newton on the barrier function at fixed ``t``."""
    used = 0
    phi0 = None
    while used < budget:
        gobj, Hobj = obj_grad_hess(z)
        H = t * Hobj
        g = t * gobj
        backs = []
        extra = 0.0
        for grp, w in zip(groups, ws):
            rH, rg, ex, back = grp.newton_terms(z, w)
            H = H + rH
            g = g + rg
            extra += ex
            backs.append(back)
        try:
            dz = np.linalg.solve(H, -g)
        except np.linalg.LinAlgError:
            dz = np.linalg.lstsq(H, -g, rcond=None)[0]
        dws = [b(dz) for b in backs]
        dec = extra - g @ dz
        used += 1
        if not np.isfinite(dec) or dec / 2.0 <= tol:
            break
        # a damped step of length 1/(1+sqrt(dec)) stays inside the domain of a
        # self-concordant barrier; start from the full step and backtrack
        bound = min(grp.step_bound(z, w, dz, dw) for grp, w, dw in zip(groups, ws, dws))
        # start a little inside the exact domain boundary where it is known
        alpha = min(1.0, STEP_FRACTION * bound)
        if phi0 is None:
            phi0 = _phi(groups, z, ws, t, obj)
        while alpha > 1e-14:
            z1 = z + alpha * dz
            w1 = [w + alpha * dw for w, dw in zip(ws, dws)]
            if _phi(groups, z1, w1, t, obj) <= phi0 - 0.25 * alpha * dec:
                break
            alpha *= 0.5
        else:
            break
        w1 = [grp.center_private(z1, w, 1) for grp, w in zip(groups, w1)]
        phi1 = _phi(groups, z1, w1, t, obj)
        z, ws = z1, w1
        if phi0 - phi1 <= 64 * np.finfo(float).eps * abs(phi0):
            break
        phi0 = phi1
        if stop is not None and stop(z):
            break
    return z, ws, used


class BarrierProgram:
    """minimize ``0.5 z^T P z + q^T z`` subject to positive block slacks."""

    def __init__(self, P, q, groups, lower_bound=None):
        self.P = np.asarray(P, dtype=float)
        self.q = np.asarray(q, dtype=float)
        self.groups = list(groups)
        self.m = sum(g.m for g in self.groups)
        self.lower_bound = lower_bound

    def objective(self, z):
        return 0.5 * z @ self.P @ z + self.q @ z

    def init(self, z):
        """Starting private variables at ``z`` and the smallest dual slack."""
        ws, worst = [], np.inf
        for g in self.groups:
            w, s = g.init(z)
            ws.append(w)
            worst = min(worst, float(np.min(s)))
        return ws, worst

    def best_slack(self, z):
        """Smallest over blocks of the slack maximized over multipliers."""
        worst = np.inf
        lams = []
        for g in self.groups:
            lam, s = g.best_multipliers(z)
            lams.append(lam)
            worst = min(worst, float(np.min(s)))
        return lams, worst

    def initial_t(self, z, ws):
        """Barrier weight that best centers the starting point.

        Least-squares fit of ``t grad f + grad phi = 0`` in the metric of the
        barrier Hessian, so the first centering has little work to do.
        """
        H = np.zeros((z.size, z.size))
        g = np.zeros(z.size)
        for grp, w in zip(self.groups, ws):
            rH, rg, _, _ = grp.newton_terms(z, w)
            H += rH
            g += rg
        gf = self.P @ z + self.q
        try:
            Hinv_gf = np.linalg.solve(H, gf)
        except np.linalg.LinAlgError:
            Hinv_gf = np.linalg.lstsq(H, gf, rcond=None)[0]
        den = gf @ Hinv_gf
        t_fit = -(g @ Hinv_gf) / den if den > 0 else 0.0
        # a known lower bound caps the suboptimality, so m / t need not exceed it
        t_gap = 0.0
        if self.lower_bound is not None:
            t_gap = max(self.m, 1) / max(self.objective(z) - self.lower_bound, 1e-12)
        return float(max(t_fit, t_gap, 1e-6))

    def solve(self, z0, ws0, gap_tol=1e-8, max_iterations=100, mu=10.0, t0=None):
        """Path-following from a strictly feasible start."""
        z = np.array(z0, dtype=float)
        ws = [np.array(w, dtype=float) for w in ws0]

        def grad_hess(zz):
            return self.P @ zz + self.q, self.P

        m = max(self.m, 1)
        t = self.initial_t(z, ws) if t0 is None else t0
        used = 0
        while True:
            z, ws, k = _center(self.groups, z, ws, t, self.objective, grad_hess,
                               max_iterations - used)
            used += k
            if m / t <= gap_tol:
                return BarrierOutcome("Optimal", z, ws, used, m / t)
            if used >= max_iterations:
                return BarrierOutcome("IterationLimit", z, ws, used, m / t)
            # land exactly on the final weight instead of overshooting it
            t = min(t * mu, m / gap_tol)

    def multipliers(self, ws):
        return [g.multipliers(w) for g, w in zip(self.groups, ws)]

    def phase1(self, z0, ws0, feas_tol=1e-8, max_iterations=100, mu=10.0):
        """Drive a shared slack shift ``sigma`` negative to find a strictly feasible point.

        Every shiftable slack ``s`` is replaced by ``s + sigma`` and ``sigma`` is
        minimized.  Returns ``(status, z, ws, iterations)`` with status
        ``"Feasible"``, ``"Infeasible"`` (the optimal shift is not below
        ``-feas_tol``) or ``"IterationLimit"``.  Private variables of a feasible
        result remain valid once the shift is dropped, since ``sigma < 0``.
        """
        groups = [g.padded() for g in self.groups]
        ws = [np.array(w, dtype=float) for w in ws0]
        z = np.append(np.asarray(z0, dtype=float), 1.0)
        while not np.isfinite(_phi(groups, z, ws, 0.0, lambda _: 0.0)):
            z[-1] = 2.0 * z[-1] + 1.0
        n = z.size
        unit = np.zeros(n)
        unit[-1] = 1.0

        def obj(zz):
            return zz[-1]

        def grad_hess(zz):
            return unit, np.zeros((n, n))

        def done(zz):
            return zz[-1] < -feas_tol

        m = max(self.m, 1)
        t = 1.0
        used = 0
        while used < max_iterations:
            z, ws, k = _center(groups, z, ws, t, obj, grad_hess, max_iterations - used, stop=done)
            used += k
            if done(z):
                return "Feasible", z[:-1], ws, used
            if m / t <= feas_tol:
                return "Infeasible", z[:-1], ws, used
            t *= mu
        return "IterationLimit", z[:-1], ws, used
