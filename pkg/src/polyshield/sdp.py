"""Semidefinite feasibility and optimization via a primal-dual interior point method.

Problems are block-diagonal: a list of dense PSD blocks plus one nonnegative
vector (the LP part), tied together by linear equality constraints.  The
solver runs a Mehrotra-style predictor-corrector with the Nesterov-Todd
search direction and dense Schur-complement linear algebra, which is plenty
for the Gram-matrix problems produced by the certificate module (block sizes
up to a few hundred).  The NT scaling keeps the Schur complement symmetric
positive definite even on the rank-deficient optimal faces that sum-of-squares
programs routinely produce (forced-zero Gram entries leave the primal without
a strict interior, which defeats simpler search directions).

Reported infeasibility means the solver found strong numerical evidence of an
empty feasible set (an unbounded dual improving ray); it is not a proof of
non-existence.  Hitting the iteration cap yields UNDECIDED, which callers
must treat as "no certificate found", never as "infeasible".
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla


class SdpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNDECIDED = "undecided"


@dataclass
class SdpConfig:
    max_iter: int = 120
    tol_gap: float = 1e-9         # relative duality gap
    tol_primal: float = 1e-9      # absolute inf-norm of A(X) - b
    tol_dual: float = 1e-9        # relative dual residual
    # degenerate problems stall before the tight tolerances; the best iterate
    # is still returned as OPTIMAL if it clears this looser tier
    accept_gap: float = 1e-6
    accept_primal: float = 1e-7
    accept_dual: float = 1e-5
    step_frac: float = 0.98
    infeas_threshold: float = 1e9
    verbose: bool = False


@dataclass
class SdpSolution:
    status: SdpStatus
    blocks: list[np.ndarray]
    lp: np.ndarray
    y: np.ndarray
    objective: float
    gap: float
    primal_residual: float
    dual_residual: float
    iterations: int
    reason: str = ""

    def min_eigenvalue(self) -> float:
        vals = [float(np.linalg.eigvalsh(B)[0]) for B in self.blocks if B.size]
        if self.lp.size:
            vals.append(float(self.lp.min()))
        return min(vals) if vals else 0.0


class SdpProblem:
    """min <C, X> + c_lp . x  s.t.  per-row linear equalities, X blocks PSD, x >= 0.

    Entries added as (block, i, j, coef) mean coef * X[i,j] for i == j and
    coef * (X[i,j] + X[j,i]) for i != j.
    """

    def __init__(self):
        self.psd_dims: list[int] = []
        self.lp_dim: int = 0
        self._rows: list[tuple[dict[int, list[tuple[int, int, float]]],
                               list[tuple[int, float]], float]] = []
        self._obj_blocks: dict[int, list[tuple[int, int, float]]] = {}
        self._obj_lp: list[tuple[int, float]] = []

    # -- construction --------------------------------------------------

    def add_psd_block(self, dim: int) -> int:
        if dim < 1:
            raise ValueError("block dimension must be >= 1")
        self.psd_dims.append(dim)
        return len(self.psd_dims) - 1

    def add_lp_vars(self, count: int) -> list[int]:
        idx = list(range(self.lp_dim, self.lp_dim + count))
        self.lp_dim += count
        return idx

    def add_constraint(self, psd_entries=(), lp_entries=(), rhs: float = 0.0):
        """psd_entries: iterable of (block, i, j, coef); lp_entries: (index, coef)."""
        blocks: dict[int, list[tuple[int, int, float]]] = {}
        for blk, i, j, coef in psd_entries:
            blocks.setdefault(blk, []).append((i, j, float(coef)))
        self._rows.append((blocks, [(i, float(c)) for i, c in lp_entries],
                           float(rhs)))

    def add_objective(self, psd_entries=(), lp_entries=()):
        for blk, i, j, coef in psd_entries:
            self._obj_blocks.setdefault(blk, []).append((i, j, float(coef)))
        self._obj_lp.extend((i, float(c)) for i, c in lp_entries)

    @property
    def num_constraints(self) -> int:
        return len(self._rows)

    # -- compiled form -------------------------------------------------

    def compile(self) -> "_Compiled":
        m = len(self._rows)
        b = np.array([rhs for _, _, rhs in self._rows])
        per_block = []
        for k, d in enumerate(self.psd_dims):
            rows = [r for r, (blocks, _, _) in enumerate(self._rows)
                    if k in blocks]
            A = np.zeros((len(rows), d, d))
            for local, r in enumerate(rows):
                for i, j, coef in self._rows[r][0][k]:
                    A[local, i, j] += coef
                    if i != j:
                        A[local, j, i] += coef
            C = np.zeros((d, d))
            for i, j, coef in self._obj_blocks.get(k, []):
                C[i, j] += coef
                if i != j:
                    C[j, i] += coef
            per_block.append(_BlockData(np.array(rows, dtype=np.intp), A, C))
        A_lp = np.zeros((m, self.lp_dim))
        for r, (_, lps, _) in enumerate(self._rows):
            for i, coef in lps:
                A_lp[r, i] += coef
        c_lp = np.zeros(self.lp_dim)
        for i, coef in self._obj_lp:
            c_lp[i] += coef
        return _Compiled(self.psd_dims, per_block, A_lp, c_lp, b)


@dataclass
class _BlockData:
    rows: np.ndarray          # constraint indices touching this block
    A: np.ndarray             # (len(rows), d, d) symmetric
    C: np.ndarray             # (d, d) objective part


@dataclass
class _Compiled:
    psd_dims: list[int]
    blocks: list[_BlockData]
    A_lp: np.ndarray
    c_lp: np.ndarray
    b: np.ndarray

    def op_forward(self, X: list[np.ndarray], x_lp: np.ndarray) -> np.ndarray:
        """A(X): the value of every constraint row."""
        out = self.A_lp @ x_lp if self.A_lp.size else np.zeros(len(self.b))
        for bd, Xk in zip(self.blocks, X):
            if len(bd.rows):
                out[bd.rows] += np.einsum("nab,ab->n", bd.A, Xk)
        return out

    def op_adjoint(self, y: np.ndarray):
        """A^T(y): per-block matrices and LP vector."""
        mats = []
        for bd in self.blocks:
            if len(bd.rows):
                mats.append(np.einsum("n,nab->ab", y[bd.rows], bd.A))
            else:
                mats.append(np.zeros_like(bd.C))
        lp = self.A_lp.T @ y if self.A_lp.size else np.zeros(0)
        return mats, lp


def _sym(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def _max_step(X: np.ndarray, dX: np.ndarray) -> float:
    """Largest alpha with X + alpha*dX still PSD (X assumed PD)."""
    try:
        L = np.linalg.cholesky(X)
    except np.linalg.LinAlgError:
        return 0.0
    W = sla.solve_triangular(L, dX, lower=True)
    W = sla.solve_triangular(L, W.T, lower=True)
    lam = float(np.linalg.eigvalsh(_sym(W))[0])
    if lam >= 0:
        return np.inf
    return -1.0 / lam


def _max_step_lp(x: np.ndarray, dx: np.ndarray) -> float:
    neg = dx < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(-x[neg] / dx[neg]))


def solve(problem: SdpProblem, cfg: SdpConfig | None = None) -> SdpSolution:
    cfg = cfg or SdpConfig()
    data = problem.compile()
    m = len(data.b)
    dims = data.psd_dims
    n_tot = sum(dims) + problem.lp_dim
    if m == 0 or n_tot == 0:
        return SdpSolution(SdpStatus.OPTIMAL, [np.zeros((d, d)) for d in dims],
                           np.zeros(problem.lp_dim), np.zeros(m),
                           0.0, 0.0, 0.0, 0.0, 0, "trivial")

    b_scale = 1.0 + float(np.linalg.norm(data.b))
    c_scale = 1.0 + max([float(np.abs(bd.C).max(initial=0.0)) for bd in data.blocks]
                        + [float(np.abs(data.c_lp).max(initial=0.0))])
    rho = max(10.0, float(np.abs(data.b).max(initial=0.0)))
    X = [rho * np.eye(d) for d in dims]
    Z = [max(10.0, c_scale) * np.eye(d) for d in dims]
    x_lp = rho * np.ones(problem.lp_dim)
    z_lp = max(10.0, c_scale) * np.ones(problem.lp_dim)
    y = np.zeros(m)

    def residuals():
        rp = data.b - data.op_forward(X, x_lp)
        AtY, aty_lp = data.op_adjoint(y)
        Rd = [bd.C - At - Zk for bd, At, Zk in zip(data.blocks, AtY, Z)]
        rd_lp = data.c_lp - aty_lp - z_lp
        return rp, Rd, rd_lp

    best = None           # (score, SdpSolution without status)

    def record(it, pobj, gap_rel, rp_inf, rd_rel):
        nonlocal best
        score = max(rp_inf / cfg.accept_primal, rd_rel / cfg.accept_dual,
                    gap_rel / cfg.accept_gap)
        if best is None or score < best[0]:
            best = (score, SdpSolution(
                SdpStatus.UNDECIDED, [Xk.copy() for Xk in X], x_lp.copy(),
                y.copy(), pobj, gap_rel, rp_inf, rd_rel, it))

    def finish(it, pobj, gap_rel, rp_inf, rd_rel, reason):
        if best is not None and best[0] <= 1.0:
            sol = best[1]
            sol.status = SdpStatus.OPTIMAL
            sol.reason = f"reduced accuracy ({reason})"
            return sol
        return SdpSolution(SdpStatus.UNDECIDED, X, x_lp, y, pobj, gap_rel,
                           rp_inf, rd_rel, it, reason)

    last_gap = np.inf
    stall = 0
    it = 0
    for it in range(1, cfg.max_iter + 1):
        rp, Rd, rd_lp = residuals()
        gap = sum(float(np.tensordot(Xk, Zk)) for Xk, Zk in zip(X, Z))
        gap += float(x_lp @ z_lp)
        mu = gap / n_tot
        pobj = sum(float(np.tensordot(bd.C, Xk))
                   for bd, Xk in zip(data.blocks, X)) + float(data.c_lp @ x_lp)
        dobj = float(data.b @ y)
        rp_inf = float(np.abs(rp).max(initial=0.0))
        rd_rel = (np.sqrt(sum(float(np.linalg.norm(R) ** 2) for R in Rd)
                          + float(np.linalg.norm(rd_lp) ** 2)) / c_scale)
        gap_rel = gap / (1.0 + abs(pobj) + abs(dobj))
        record(it, pobj, gap_rel, rp_inf, rd_rel)
        if cfg.verbose:
            print(f"  it={it:3d} mu={mu:9.2e} rp={rp_inf:9.2e} "
                  f"rd={rd_rel:9.2e} pobj={pobj:11.4e} dobj={dobj:11.4e}")
        if rp_inf < cfg.tol_primal and rd_rel < cfg.tol_dual \
                and gap_rel < cfg.tol_gap:
            return SdpSolution(SdpStatus.OPTIMAL, X, x_lp, y, pobj, gap_rel,
                               rp_inf, rd_rel, it)
        # primal infeasibility: dual objective diverges while staying dual feasible
        if dobj > cfg.infeas_threshold * b_scale and rd_rel < 1e-6:
            return SdpSolution(SdpStatus.INFEASIBLE, X, x_lp, y, pobj, gap_rel,
                               rp_inf, rd_rel, it,
                               "dual objective diverged (primal infeasible)")
        if pobj < -cfg.infeas_threshold * c_scale:
            return SdpSolution(SdpStatus.UNDECIDED, X, x_lp, y, pobj, gap_rel,
                               rp_inf, rd_rel, it, "primal objective diverged")
        if gap_rel > 0.999 * last_gap:
            stall += 1
            if stall > 15:
                return finish(it, pobj, gap_rel, rp_inf, rd_rel,
                              "progress stalled")
        else:
            stall = 0
        last_gap = gap_rel

        # Nesterov-Todd scaling per block: R^T Z R = R^-1 X R^-T = diag(lam)
        def chol_jitter(Mat):
            jit = 0.0
            base = max(float(np.trace(Mat)) / Mat.shape[0], 1e-300)
            for _ in range(8):
                try:
                    return np.linalg.cholesky(
                        Mat + jit * base * np.eye(Mat.shape[0]) if jit else Mat)
                except np.linalg.LinAlgError:
                    jit = max(jit * 100, 1e-14)
            return None

        Rs, lams = [], []
        ok = True
        for Xk, Zk in zip(X, Z):
            L1 = chol_jitter(Xk)
            L2 = chol_jitter(Zk)
            if L1 is None or L2 is None:
                ok = False
                break
            _, sv, Vt = np.linalg.svd(L2.T @ L1)
            if sv[-1] <= 0:
                ok = False
                break
            Rs.append((L1 @ Vt.T) / np.sqrt(sv))
            lams.append(sv)
        if not ok:
            return finish(it, pobj, gap_rel, rp_inf, rd_rel,
                          "iterate lost positive definiteness")

        # everything below lives in scaled coordinates: B_i = R^T A_i R
        Bs, Rd_hats = [], []
        M = np.zeros((m, m))
        for bd, R, Rk in zip(data.blocks, Rs, Rd):
            Rd_hats.append(R.T @ Rk @ R)
            if not len(bd.rows):
                Bs.append(None)
                continue
            B = np.einsum("ba,nbc,cd->nad", R, bd.A, R, optimize=True)
            nloc, d, _ = B.shape
            Bf = B.reshape(nloc, d * d)
            Bs.append(Bf)
            M[np.ix_(bd.rows, bd.rows)] += Bf @ Bf.T
        if problem.lp_dim:
            M += (data.A_lp * (x_lp / z_lp)) @ data.A_lp.T
        M = _sym(M)

        def schur_solve(rhs):
            ridge = 0.0
            trace = float(np.trace(M)) / m
            for _ in range(6):
                try:
                    cho = sla.cho_factor(M + ridge * np.eye(m), lower=True)
                    return sla.cho_solve(cho, rhs)
                except np.linalg.LinAlgError:
                    ridge = max(ridge * 100, 1e-14 * max(trace, 1.0))
            return np.linalg.lstsq(M, rhs, rcond=None)[0]

        def direction(sigma_mu, corr=None):
            # scaled complementarity: He(D(dXh + dZh)) = sigma*mu I - D^2 - corr
            Ys = []
            rhs = rp.copy()
            for bd, Bf, lam, Rdh, idx in zip(data.blocks, Bs, lams, Rd_hats,
                                             range(len(lams))):
                F = -np.diag(lam * lam)
                if sigma_mu:
                    F = F + sigma_mu * np.eye(len(lam))
                if corr is not None:
                    F = F - corr[0][idx]
                Y = 2.0 * F / (lam[:, None] + lam[None, :])
                Ys.append(Y)
                if Bf is not None:
                    rhs[bd.rows] += Bf @ (Rdh - Y).ravel()
            if problem.lp_dim:
                g = sigma_mu / z_lp - x_lp
                if corr is not None:
                    g = g - corr[1] / z_lp
                rhs += data.A_lp @ (((x_lp / z_lp) * rd_lp) - g)
            dy = schur_solve(rhs)
            AtDy, atdy_lp = data.op_adjoint(dy)
            dZ = [Rk - At for Rk, At in zip(Rd, AtDy)]
            dz = rd_lp - atdy_lp
            dXh, dZh, dX = [], [], []
            for R, Y, dZk in zip(Rs, Ys, dZ):
                z_hat = _sym(R.T @ dZk @ R)
                x_hat = Y - z_hat
                dZh.append(z_hat)
                dXh.append(x_hat)
                dX.append(_sym(R @ x_hat @ R.T))
            dx = g - (x_lp / z_lp) * dz if problem.lp_dim else np.zeros(0)
            return dX, dx, dy, dZ, dz, dXh, dZh

        def max_steps(dXh, dx, dZh, dz):
            ap = [1.0, cfg.step_frac * _max_step_lp(x_lp, dx)]
            ad = [1.0, cfg.step_frac * _max_step_lp(z_lp, dz)]
            for lam, xh, zh in zip(lams, dXh, dZh):
                # X + a dX PSD  <=>  I + a D^-1/2 dXh D^-1/2 PSD
                scale = np.sqrt(np.outer(lam, lam))
                for out, h in ((ap, xh), (ad, zh)):
                    lmin = float(np.linalg.eigvalsh(h / scale)[0])
                    if lmin < 0:
                        out.append(-cfg.step_frac / lmin)
            return min(ap), min(ad)

        # predictor
        dX_a, dx_a, dy_a, dZ_a, dz_a, dXh_a, dZh_a = direction(0.0)
        ap, ad = max_steps(dXh_a, dx_a, dZh_a, dz_a)
        gap_aff = sum(float(np.tensordot(Xk + ap * dk, Zk + ad * gk))
                      for Xk, dk, Zk, gk in zip(X, dX_a, Z, dZ_a))
        gap_aff += float((x_lp + ap * dx_a) @ (z_lp + ad * dz_a))
        sigma = min(1.0, max((max(gap_aff, 0.0) / gap) ** 3, 1e-6)) \
            if gap > 0 else 0.1

        # corrector
        corr_blocks = [_sym(xh @ zh) for xh, zh in zip(dXh_a, dZh_a)]
        corr_lp = dx_a * dz_a
        dX, dx, dy, dZ, dz, dXh, dZh = direction(sigma * mu,
                                                 (corr_blocks, corr_lp))
        ap, ad = max_steps(dXh, dx, dZh, dz)
        if ap <= 1e-12 or ad <= 1e-12:
            # fall back to a pure centering step before giving up
            dX, dx, dy, dZ, dz, dXh, dZh = direction(mu)
            ap, ad = max_steps(dXh, dx, dZh, dz)
            ap, ad = 0.5 * ap, 0.5 * ad
            if ap <= 1e-13 or ad <= 1e-13:
                return finish(it, pobj, gap_rel, rp_inf, rd_rel,
                              "step length collapsed")
        X = [_sym(Xk + ap * dk) for Xk, dk in zip(X, dX)]
        x_lp = x_lp + ap * dx
        Z = [_sym(Zk + ad * dk) for Zk, dk in zip(Z, dZ)]
        z_lp = z_lp + ad * dz
        y = y + ad * dy

    rp, Rd, rd_lp = residuals()
    pobj = sum(float(np.tensordot(bd.C, Xk))
               for bd, Xk in zip(data.blocks, X)) + float(data.c_lp @ x_lp)
    return finish(cfg.max_iter, pobj, last_gap,
                  float(np.abs(rp).max(initial=0.0)), 0.0, "iteration cap")
