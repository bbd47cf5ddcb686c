"""Barrier-certificate synthesis and numerical falsification.

A certificate is a polynomial E over the state variables with three
properties: E is strictly positive on every unsafe half-space, nonpositive
on the (restricted) initial box, and non-increasing along the closed-loop
Euler transition inside the verification domain.  The sublevel set E <= 0 is
then an inductive invariant separating reachable states from the unsafe set.

Each property is relaxed to "polynomial is a sum of squares" with S-procedure
multipliers over the box/half-space constraints, assembled into one
semidefinite program and handed to the in-repo interior-point solver.  The
program maximizes a shared slack margin on the positivity and containment
conditions (under an l1 normalization of the certificate coefficients), which
keeps the returned certificate comfortably inside the feasible region instead
of grazing its boundary.

Floating-point caveat: SDP feasibility alone is not trusted.  A candidate is
accepted only after the sampling falsifier fails to find any violation of the
three conditions; solver infeasibility is likewise only evidence, never proof
of non-existence.

When the environment declares disturbance bounds, the transition condition is
built over (state, disturbance) variables and uses a contraction factor
lambda slightly below one: E(next) <= lambda * E(s).  This keeps the
condition satisfiable near the interior minimum of E under persistent
disturbance while still making E <= 0 inductive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from . import sdp
from .envs import BoxSet, EnvironmentSpec, UnsafeSet
from .poly import (GramStructureError, Monomial, Polynomial, gram_reconstruct,
                   monomials_up_to_degree)
from .synthesis import LinearProgramPolicy


@dataclass(frozen=True)
class InvariantSketch:
    """Template E[c] = sum c_i b_i over all state monomials up to degree_bound."""

    nvars: int
    degree_bound: int
    basis: tuple[Monomial, ...]

    @staticmethod
    def make(nvars: int, degree_bound: int) -> "InvariantSketch":
        if degree_bound < 2 or degree_bound % 2 != 0:
            raise ValueError("degree bound must be even and >= 2")
        return InvariantSketch(
            nvars, degree_bound,
            tuple(monomials_up_to_degree(nvars, degree_bound)))

    @property
    def unknowns(self) -> int:
        return len(self.basis)

    def build(self, c: np.ndarray) -> Polynomial:
        if len(c) != len(self.basis):
            raise ValueError("coefficient count does not match basis")
        return Polynomial(self.nvars,
                          {m: float(v) for m, v in zip(self.basis, c)})


@dataclass
class BarrierCertificate:
    E: Polynomial                 # over the original state variables
    degree: int
    epsilon: float
    region: BoxSet                # restricted initial box it was proven for
    contraction: float = 1.0
    mult_degree: int = 0
    scale_hint: float = 1.0       # typical |E| magnitude over the domain
    solver_stats: dict = field(default_factory=dict)

    def holds(self, s) -> bool:
        return self.E.eval(np.asarray(s, dtype=float)) <= 0.0

    def holds_many(self, S: np.ndarray) -> np.ndarray:
        return self.E.eval_many(S) <= 0.0


@dataclass
class NotFound:
    reason: str


@dataclass
class Counterexample:
    condition: str       # "unsafe-positivity" | "initial-containment" | "induction"
    point: np.ndarray    # state, or (state, disturbance) for induction
    value: float


# ---------------------------------------------------------------------
# closed-loop composition


def closed_loop(env: EnvironmentSpec, policy: LinearProgramPolicy
                ) -> list[Polynomial]:
    """Next-state polynomials of the Euler transition under the affine program.

    Without disturbance the result is over the n state variables.  With q
    nonzero disturbance bounds it is over n + q variables, the disturbance
    variables appended after the state in declared-dimension order.
    """
    n, m = env.n, env.m
    active = env.active_disturbance_dims()
    q = len(active)
    nvars = n + q
    action_polys = [p.with_nvars(nvars)
                    for p in policy.action_polynomials(n)]
    subs = [Polynomial.variable(i, nvars) for i in range(n)] + action_polys
    out = []
    for i in range(n):
        fi = env.f[i].compose(subs)
        nxt = Polynomial.variable(i, nvars) + fi.scale(env.dt)
        if i in active:
            dvar = Polynomial.variable(n + active.index(i), nvars)
            nxt = nxt + dvar.scale(env.dt)
        out.append(nxt)
    return out


def _compose_basis(basis, next_polys, nvars_out) -> list[Polynomial]:
    """b_i(next(s, d)) for every sketch monomial, sharing a power table."""
    max_exp = [0] * len(next_polys)
    for mono in basis:
        for var, exp in mono.exps:
            max_exp[var] = max(max_exp[var], exp)
    powers = []
    for i, p in enumerate(next_polys):
        ps = [Polynomial.constant(nvars_out, 1.0)]
        for _ in range(max_exp[i]):
            ps.append(ps[-1] * p)
        powers.append(ps)
    out = []
    for mono in basis:
        term = Polynomial.constant(nvars_out, 1.0)
        for var, exp in mono.exps:
            term = term * powers[var][exp]
        out.append(term)
    return out


# ---------------------------------------------------------------------
# SOS program assembly


@dataclass
class SosConstraintMeta:
    """One 'expression is SOS' requirement, recorded for audit/reconstruction."""

    name: str
    nvars: int
    fixed: Polynomial                     # constant part of the target
    c_polys: list[Polynomial]             # multiplier of each certificate coeff
    uses_margin: bool
    gram_block: int
    gram_basis: list[Monomial]
    mult_blocks: list[tuple[int, list[Monomial], Polynomial]]

    def target(self, c: np.ndarray, margin: float) -> Polynomial:
        out = Polynomial(self.nvars, dict(self.fixed.terms), prune=False)
        for ci, p in zip(c, self.c_polys):
            out = out + p.scale(float(ci))
        if self.uses_margin:
            out = out - margin
        return out

    def reconstruct(self, solution: sdp.SdpSolution) -> Polynomial:
        out = gram_reconstruct(solution.blocks[self.gram_block],
                               self.gram_basis, self.nvars)
        for blk, basis, g in self.mult_blocks:
            out = out + gram_reconstruct(solution.blocks[blk], basis,
                                         self.nvars) * g
        return out


@dataclass
class SosProgram:
    problem: sdp.SdpProblem
    sketch: InvariantSketch
    epsilon: float
    contraction: float
    c_plus: list[int]
    c_minus: list[int]
    margin_var: int
    constraints: list[SosConstraintMeta]

    def extract_coeffs(self, solution: sdp.SdpSolution) -> np.ndarray:
        return (solution.lp[self.c_plus] - solution.lp[self.c_minus])

    def margin(self, solution: sdp.SdpSolution) -> float:
        return float(solution.lp[self.margin_var])


def _var_degrees(polys, nvars) -> np.ndarray:
    """Per-variable maximum degree over a set of polynomials."""
    caps = np.zeros(nvars, dtype=int)
    for p in polys:
        for mono in p.terms:
            for var, exp in mono.exps:
                caps[var] = max(caps[var], exp)
    return caps


def _capped_basis(nvars, degree, var_caps):
    basis = monomials_up_to_degree(nvars, degree)
    if var_caps is None:
        return basis
    def ok(m):
        return all(exp <= var_caps.get(var, degree) for var, exp in m.exps)
    return [m for m in basis if ok(m)]


def _add_sos_constraint(prog: sdp.SdpProblem, meta_list, name, nvars, fixed,
                        c_polys, uses_margin, mult_gs, mult_degree,
                        c_plus, c_minus, margin_var, var_caps=None):
    """Emit equality rows for: fixed + sum c_i p_i - [t] == Q-form + sum g_k * P_k-form.

    Each multiplier degree is at least large enough for sigma*g to reach the
    target degree; otherwise high-degree negative parts of the target (e.g.
    E composed with cubic dynamics) could never be matched.  mult_degree only
    adds headroom beyond that baseline.  var_caps (variable -> half of its
    maximum useful degree) trims basis monomials in variables that only enter
    the target at low degree, such as disturbances.
    """
    target_deg = max([fixed.degree] + [p.degree for p in c_polys])
    mult_blocks = []
    sigma_degs = []
    for g in mult_gs:
        base = 2 * max(0, -(-(target_deg - g.degree) // 2))
        sigma_degs.append(max(mult_degree, base))
    deg = max([target_deg]
              + [sd + g.degree for sd, g in zip(sigma_degs, mult_gs)])
    gram_basis = _capped_basis(nvars, (deg + 1) // 2, var_caps)
    gram_block = prog.add_psd_block(len(gram_basis))
    for g, sd in zip(mult_gs, sigma_degs):
        mult_basis = _capped_basis(nvars, sd // 2, var_caps)
        mult_blocks.append((prog.add_psd_block(len(mult_basis)),
                            list(mult_basis), g))

    # index all monomials reachable on either side
    products: dict[Monomial, list[tuple[int, int]]] = {}
    for i in range(len(gram_basis)):
        for j in range(i, len(gram_basis)):
            products.setdefault(gram_basis[i] * gram_basis[j], []).append((i, j))
    mult_products: list[dict[Monomial, list[tuple[int, int, float]]]] = []
    for blk, basis, g in mult_blocks:
        table: dict[Monomial, list[tuple[int, int, float]]] = {}
        for i in range(len(basis)):
            for j in range(i, len(basis)):
                bb = basis[i] * basis[j]
                for mg, cg in g.terms.items():
                    table.setdefault(bb * mg, []).append((i, j, cg))
        mult_products.append(table)

    span: set[Monomial] = set(products)
    for table in mult_products:
        span.update(table)
    lhs_monos: set[Monomial] = set(fixed.terms)
    for p in c_polys:
        lhs_monos.update(p.terms)
    if uses_margin:
        lhs_monos.add(Monomial.one())
    missing = lhs_monos - set(products)
    if missing:
        mono = sorted(missing, key=lambda m: m.sort_key(nvars))[0]
        raise GramStructureError(
            f"{name}: monomial {mono} not representable over the Gram basis")
    span.update(lhs_monos)

    for mono in sorted(span, key=lambda m: m.sort_key(nvars)):
        lp_entries = []
        for idx, p in enumerate(c_polys):
            coeff = p.coeff(mono)
            if coeff:
                lp_entries.append((c_plus[idx], coeff))
                lp_entries.append((c_minus[idx], -coeff))
        if uses_margin and mono == Monomial.one():
            lp_entries.append((margin_var, -1.0))
        psd_entries = [(gram_block, i, j, -1.0)
                       for i, j in products.get(mono, [])]
        for (blk, _, _), table in zip(mult_blocks, mult_products):
            for i, j, cg in table.get(mono, []):
                psd_entries.append((blk, i, j, -cg))
        prog.add_constraint(psd_entries, lp_entries, rhs=-fixed.coeff(mono))

    meta_list.append(SosConstraintMeta(
        name=name, nvars=nvars, fixed=fixed, c_polys=list(c_polys),
        uses_margin=uses_margin, gram_block=gram_block,
        gram_basis=list(gram_basis), mult_blocks=mult_blocks))


def _box_constraint_polys(box: BoxSet, nvars: int) -> list[Polynomial]:
    """g(s) >= 0 on the box: (s_i - lo_i) and (hi_i - s_i) per dimension."""
    out = []
    for i in range(box.dim):
        v = Polynomial.variable(i, nvars)
        out.append(v - box.lower[i])
        out.append(box.upper[i] - v)
    return out


def build_vcs(region: BoxSet, unsafe: UnsafeSet, next_polys: list[Polynomial],
              sketch: InvariantSketch, mult_degree: int, epsilon: float,
              domain: BoxSet, dist_box: BoxSet | None = None,
              contraction: float = 1.0,
              normalization: float = 100.0,
              reg_weight: float = 1e-6) -> SosProgram:
    """Assemble the three verification conditions as one SOS feasibility program.

    (a) per unsafe half-space {g_u >= 0}:   E - eps - t - sigma*g_u is SOS
    (b) on the initial region box:         -E - t - sum sigma_j*g_j is SOS
    (c) on the verification domain box:     contraction*E - E(next) - sum sigma*g is SOS

    t >= 0 is a shared slack margin, maximized under an l1 normalization of
    the certificate coefficients; (c) carries no margin since the transition
    condition is tight at equilibria.
    """
    if mult_degree < 0 or mult_degree % 2 != 0:
        raise ValueError("multiplier degree must be even and >= 0")
    if epsilon <= 0:
        raise ValueError("strictness margin must be > 0")
    n = sketch.nvars
    prog = sdp.SdpProblem()
    p = sketch.unknowns
    c_plus = prog.add_lp_vars(p)
    c_minus = prog.add_lp_vars(p)
    margin_var = prog.add_lp_vars(1)[0]
    norm_slack = prog.add_lp_vars(1)[0]
    meta: list[SosConstraintMeta] = []

    basis_polys = [Polynomial(n, {m: 1.0}, prune=False) for m in sketch.basis]

    # (a) strict positivity on each unsafe half-space
    for k, g in enumerate(unsafe.halfspace_polys(n)):
        _add_sos_constraint(prog, meta, f"unsafe-positivity[{k}]", n,
                            Polynomial.constant(n, -epsilon), basis_polys,
                            True, [g], mult_degree, c_plus, c_minus, margin_var)

    # (b) containment of the restricted initial box
    _add_sos_constraint(prog, meta, "initial-containment", n,
                        Polynomial.zero(n),
                        [-bp for bp in basis_polys], True,
                        _box_constraint_polys(region, n), mult_degree,
                        c_plus, c_minus, margin_var)

    # (c) decrease along the closed-loop transition over the domain box
    nvars_c = next_polys[0].nvars
    q = nvars_c - n
    if (dist_box is None) != (q == 0):
        raise ValueError("disturbance box must match the transition variables")
    composed = _compose_basis(sketch.basis, next_polys, nvars_c)
    c_polys_c = [Polynomial(nvars_c, {m: contraction}, prune=False) - comp
                 for m, comp in zip(sketch.basis, composed)]
    gs = _box_constraint_polys(domain, nvars_c)
    caps = None
    if q:
        for j in range(q):
            v = Polynomial.variable(n + j, nvars_c)
            gs.append(v - dist_box.lower[j])
            gs.append(dist_box.upper[j] - v)
        # disturbances enter the transition linearly, so basis monomials never
        # need more than half the target's disturbance degree
        degs = _var_degrees(c_polys_c, nvars_c)
        caps = {n + j: (int(degs[n + j]) + 1) // 2 for j in range(q)}
    _add_sos_constraint(prog, meta, "induction", nvars_c,
                        Polynomial.zero(nvars_c), c_polys_c, False, gs,
                        mult_degree, c_plus, c_minus, margin_var,
                        var_caps=caps)

    # l1 normalization keeps the margin maximization bounded
    prog.add_constraint(lp_entries=[(i, 1.0) for i in c_plus + c_minus]
                        + [(norm_slack, 1.0)], rhs=normalization)

    # objective: maximize the margin, lightly regularized for strictness
    obj_lp = [(margin_var, -1.0)]
    obj_lp += [(i, reg_weight) for i in c_plus + c_minus]
    obj_psd = []
    for k, d in enumerate(prog.psd_dims):
        obj_psd += [(k, i, i, reg_weight) for i in range(d)]
    prog.add_objective(obj_psd, obj_lp)

    return SosProgram(prog, sketch, epsilon, contraction, c_plus, c_minus,
                      margin_var, meta)


def sdp_solve(problem: sdp.SdpProblem,
              cfg: sdp.SdpConfig | None = None) -> sdp.SdpSolution:
    return sdp.solve(problem, cfg)


# ---------------------------------------------------------------------
# numerical falsification


def _sobol(dim: int, count: int, seed: int) -> np.ndarray:
    eng = qmc.Sobol(d=dim, scramble=True, seed=seed)
    # Sobol balance wants powers of two; round up and trim
    return eng.random_base2(max(1, math.ceil(math.log2(count))))[:count]


def _refine(f, x0, lo, hi, steps: int = 200, accept=None):
    """Coordinate descent maximizing f inside the box [lo, hi]."""
    x = np.array(x0, dtype=float)
    best = f(x)
    span = (hi - lo)
    step = 0.1 * span
    for it in range(steps):
        i = it % len(x)
        improved = False
        for delta in (step[i], -step[i]):
            cand = x.copy()
            cand[i] = np.clip(cand[i] + delta, lo[i], hi[i])
            if accept is not None and not accept(cand):
                continue
            val = f(cand)
            if val > best:
                best, x = val, cand
                improved = True
                break
        if not improved and it % len(x) == len(x) - 1:
            step *= 0.5
    return x, best


def falsify(E: Polynomial, region: BoxSet, unsafe: UnsafeSet,
            next_polys: list[Polynomial], samples: int, eps_num: float,
            domain: BoxSet, dist_box: BoxSet | None = None,
            contraction: float = 1.0, seed: int = 0
            ) -> Counterexample | None:
    """Quasi-random sampling plus local refinement against the three conditions.

    Returns the first violation found, or None if all sampled and refined
    points satisfy the conditions within eps_num.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    n = E.nvars
    nvars_c = next_polys[0].nvars
    q = nvars_c - n

    # VC: E > 0 on every unsafe half-space (restricted to the domain box)
    for k, (dim, sign, bound) in enumerate(unsafe.halfspaces()):
        lo, hi = domain.lo.copy(), domain.hi.copy()
        if sign > 0:
            lo[dim] = bound
        else:
            hi[dim] = bound
        if lo[dim] > hi[dim]:
            continue
        U = _sobol(n, samples, seed + k)
        S = lo + U * (hi - lo)
        vals = E.eval_many(S)
        worst = int(np.argmin(vals))
        x, neg_best = _refine(lambda s: -E.eval(s), S[worst], lo, hi)
        if min(float(vals[worst]), -neg_best) <= 0.0:
            point = x if -neg_best <= float(vals[worst]) else S[worst]
            return Counterexample("unsafe-positivity", np.asarray(point),
                                  float(E.eval(point)))

    # VC: E <= 0 on the restricted initial box
    U = _sobol(n, samples, seed + 100)
    S = region.lo + U * (region.hi - region.lo)
    vals = E.eval_many(S)
    worst = int(np.argmax(vals))
    x, best = _refine(E.eval, S[worst], region.lo, region.hi)
    if max(float(vals[worst]), best) > eps_num:
        point = x if best >= float(vals[worst]) else S[worst]
        return Counterexample("initial-containment", np.asarray(point),
                              float(E.eval(point)))

    # VC: E(next) <= contraction * E inside the domain where E <= 0
    lo = domain.lo
    hi = domain.hi
    if q:
        lo = np.concatenate([lo, dist_box.lo])
        hi = np.concatenate([hi, dist_box.hi])
    U = _sobol(nvars_c, samples, seed + 200)
    P = lo + U * (hi - lo)
    ev = E.eval_many(P[:, :n])
    mask = ev <= 0.0
    if np.any(mask):
        Pm = P[mask]
        nxt = np.stack([pol.eval_many(Pm) for pol in next_polys], axis=1)
        viol = E.eval_many(nxt) - contraction * ev[mask]

        def gain(z):
            e = E.eval(z[:n])
            if e > 0:
                return -np.inf
            nx = np.array([pol.eval(z) for pol in next_polys])
            return E.eval(nx) - contraction * e

        worst = int(np.argmax(viol))
        x, best = _refine(gain, Pm[worst], lo, hi,
                          accept=lambda z: E.eval(z[:n]) <= 0.0)
        if max(float(viol[worst]), best) > eps_num:
            point = x if best >= float(viol[worst]) else Pm[worst]
            return Counterexample("induction", np.asarray(point), float(
                best if best >= float(viol[worst]) else viol[worst]))
    return None


# ---------------------------------------------------------------------
# end-to-end certificate synthesis


@dataclass
class CertConfig:
    epsilon: float = 1e-3
    mult_degrees: tuple[int, ...] | None = None   # default: 0, 2, ..., degree
    contraction: float | None = None              # default: 1 - contraction_rate*dt
    contraction_rate: float = 0.1                 # kappa; keeps a strict interior
    falsify_samples: int = 20000
    eps_num: float = 1e-7
    normalization: float = 100.0
    reg_weight: float = 1e-6
    sdp: sdp.SdpConfig = field(default_factory=sdp.SdpConfig)
    max_gram_entries: int = 60_000_000            # guard on A-tensor footprint
    seed: int = 0


def _affine_substitutions(n: int, q: int, center: np.ndarray,
                          half: np.ndarray, dist_scale: np.ndarray):
    """x_i := center_i + half_i * u_i and d_j := scale_j * w_j."""
    nvars = n + q
    subs = []
    for i in range(n):
        subs.append(Polynomial.variable(i, nvars).scale(float(half[i]))
                    + float(center[i]))
    for j in range(q):
        subs.append(Polynomial.variable(n + j, nvars)
                    .scale(float(dist_scale[j])))
    return subs


def _scale_box(box: BoxSet, center: np.ndarray, half: np.ndarray) -> BoxSet:
    return BoxSet.make((box.lo - center) / half, (box.hi - center) / half)


def synthesize_certificate(region: BoxSet, env: EnvironmentSpec,
                           policy: LinearProgramPolicy, degree_bound: int,
                           cfg: CertConfig | None = None
                           ) -> BarrierCertificate | NotFound:
    """Escalate multiplier degrees until the SOS program is feasible and the
    resulting candidate survives falsification."""
    cfg = cfg or CertConfig()
    if degree_bound < 2 or degree_bound % 2 != 0:
        raise ValueError("degree bound must be even and >= 2")
    n = env.n
    sketch = InvariantSketch.make(n, degree_bound)
    next_orig = closed_loop(env, policy)
    active = env.active_disturbance_dims()
    q = len(active)
    bounds = env.disturbance_bounds[active] if q else np.zeros(0)
    # the transition condition is tight at equilibria, so a plain "E never
    # increases" requirement leaves the SOS program without a strict interior;
    # a contraction slightly below one restores it (and absorbs persistent
    # disturbance) while keeping E <= 0 inductive
    contraction = cfg.contraction if cfg.contraction is not None \
        else 1.0 - cfg.contraction_rate * env.dt

    domain = env.unsafe.safe_box.inflate(0.10)
    center, half = domain.center, domain.half_width
    subs = _affine_substitutions(n, q, center, half, bounds)
    inv_subs = [
        (Polynomial.variable(i, n) - float(center[i])).scale(1.0 / float(half[i]))
        for i in range(n)]

    # everything in unit-box coordinates for SDP conditioning
    next_scaled = [(next_orig[i].compose(subs) - float(center[i]))
                   .scale(1.0 / float(half[i])) for i in range(n)]
    region_s = _scale_box(region, center, half)
    safe_s = _scale_box(env.unsafe.safe_box, center, half)
    domain_s = _scale_box(domain, center, half)
    dist_s = BoxSet.make(-np.ones(q), np.ones(q)) if q else None
    dist_orig = BoxSet.make(-bounds, bounds) if q else None

    mults = cfg.mult_degrees if cfg.mult_degrees is not None \
        else tuple(range(0, degree_bound + 1, 2))
    reasons = []
    for mult_degree in mults:
        # reject assemblies whose Schur linear algebra would not fit
        deg_c = max(degree_bound * max(p.degree for p in next_scaled),
                    degree_bound, mult_degree) + 2
        gram_dim = math.comb(n + q + (deg_c + 1) // 2, n + q)
        rows = math.comb(n + q + deg_c, n + q)
        if rows * gram_dim * gram_dim > cfg.max_gram_entries:
            return NotFound(f"SOS assembly too large at degree {degree_bound}")
        try:
            prog = build_vcs(region_s, UnsafeSet(safe_s), next_scaled, sketch,
                             mult_degree, cfg.epsilon, domain_s, dist_s,
                             contraction, cfg.normalization, cfg.reg_weight)
        except GramStructureError as exc:
            reasons.append(f"mult {mult_degree}: {exc}")
            continue
        sol = sdp.solve(prog.problem, cfg.sdp)
        if sol.status is not sdp.SdpStatus.OPTIMAL:
            reasons.append(f"mult {mult_degree}: {sol.status.value}"
                           + (f" ({sol.reason})" if sol.reason else ""))
            continue
        c = prog.extract_coeffs(sol)
        c = np.array([float(f"{v:.12g}") for v in c])
        E_scaled = sketch.build(c)
        E = E_scaled.compose(inv_subs)
        cex = falsify(E, region, env.unsafe, next_orig, cfg.falsify_samples,
                      cfg.eps_num, domain, dist_orig, contraction,
                      seed=cfg.seed)
        if cex is not None:
            reasons.append(f"mult {mult_degree}: falsified {cex.condition} "
                           f"at {cex.point} (value {cex.value:.3e})")
            continue
        rng = np.random.default_rng(cfg.seed + 7)
        scale_hint = float(np.median(np.abs(
            E.eval_many(domain.sample(rng, 512)))))
        return BarrierCertificate(
            E=E, degree=degree_bound, epsilon=cfg.epsilon, region=region,
            contraction=contraction, mult_degree=mult_degree,
            scale_hint=max(scale_hint, 1e-12),
            solver_stats={"iterations": sol.iterations,
                          "primal_residual": sol.primal_residual,
                          "dual_residual": sol.dual_residual,
                          "gap": sol.gap,
                          "margin": prog.margin(sol)})
    return NotFound("; ".join(reasons) if reasons else "no multiplier degree tried")
