"""Continuation of label configurations away from the uncoupled limit.

At zero coupling every site sits at a critical point of the background;
an assignment of critical points to sites is a label configuration. For
small coupling the implicit function theorem survives in sup norm as a
quasi-Newton iteration whose diagonal is frozen at the labels:

    X <- X - (V'(X) + eps * force(X)) / V''(labels)

run on the interior of a window, with a collar of frozen values around
it. Inside the certified coupling range the iteration contracts and stays
in a trust ball of radius delta0 around the labels, so distinct label
fields continue to distinct solutions.

The same iteration with the start and the frozen collar taken from an
arbitrary nearby configuration computes constrained minimizers, whose
energy gain is the defect used to glue local solutions into laminations:
sampling a step hull along an irrational rotation vector produces ordered
label fields, and their continuations form the lamination leaves.
"""

from dataclasses import dataclass, field

import numpy as np

from .birkhoff import check_birkhoff
from .errors import (ContinuationRefused, ContractionEscape, LaminationBroken,
                     NoConvergence, NotBirkhoff)
from .hull import (HullFunction, GENERICITY_OFFSET, check_irrational,
                   generic_parameter, sample_config, step_hull_from_simplex)
from .lattice import Box, Configuration

MAX_ITER = 200
LABEL_TOL = 1e-9


def action(model, eps, B, x):
    """Finite-window energy: background over B plus eps times the local
    interaction energies anchored in B. Reads x on the collar around B."""
    pad = B.padded(model.stencil.range)
    if not x.domain.contains_box(pad):
        raise ValueError("configuration must cover the collar around the window")
    v = float(np.sum(model.potential.value(x.values[B.slice_in(x.domain)])))
    s = model.stencil.energy_sum(x.values, x.domain, B)
    return v + eps * s


def residual_field(model, eps, x, B):
    """Gradient of the window energy at the free (interior) sites."""
    r = model.stencil.range
    interior = B.interior(r)
    if not x.domain.contains_box(B.padded(r)):
        raise ValueError("configuration must cover the collar around the window")
    force = model.stencil.force(x.values, x.domain, interior)
    return model.potential.d1(x.values[interior.slice_in(x.domain)]) + eps * force


def _check_labels(potential, values, require_minima=False):
    dist, idx = potential.nearest_critical(values)
    if float(np.max(dist)) > LABEL_TOL:
        raise ContinuationRefused(
            f"labels must sit at critical points; worst offset {float(np.max(dist)):.3g}"
        )
    if require_minima:
        kinds = np.asarray([potential.kinds[i] for i in idx.ravel()])
        if np.any(kinds != "minimum"):
            raise ContinuationRefused("this calculus requires labels at local minima")


@dataclass
class ContinuationResult:
    solution: Configuration
    iterations: int
    final_residual: float
    contraction_rate: float
    displacement: float
    trust_radius_ok: bool
    labels: Configuration | None = None
    s: float | None = None


def quasi_newton_continue(model, eps, x0, B, tol=1e-12, max_iter=MAX_ITER):
    """Continue a label configuration over the window B.

    ``x0`` must cover the collar around B and hold critical-point values;
    the collar stays frozen at the labels. Refuses couplings beyond eps0.
    Escaping the trust ball of radius delta0 around the labels aborts the
    run, and so does failing to reach ``tol`` within ``max_iter`` sweeps.
    """
    cst = model.constants
    if eps < 0:
        raise ValueError("coupling must be nonnegative")
    if eps > cst.eps0 * (1.0 + 1e-12):
        raise ContinuationRefused(
            f"eps {eps:.3g} is beyond the certified range eps0 = {cst.eps0:.3g}"
        )
    r = model.stencil.range
    Bp = B.padded(r)
    if not x0.domain.contains_box(Bp):
        raise ValueError("labels must cover the collar around the window")
    labels = x0.restrict(Bp)
    _check_labels(model.potential, labels.values)

    interior = B.interior(r)
    sl = interior.slice_in(Bp)
    X = labels.values.copy()
    anchor = labels.values[sl].copy()
    diag = model.potential.d2(anchor)

    rate = 0.0
    prev = None
    disp = 0.0
    it = 0
    while True:
        resid = (model.potential.d1(X[sl])
                 + eps * model.stencil.force(X, Bp, interior))
        sup = float(np.max(np.abs(resid)))
        if sup <= tol:
            break
        if it >= max_iter:
            raise NoConvergence(
                f"residual {sup:.3e} after {max_iter} sweeps (tol {tol:.1e})"
            )
        step = resid / diag
        X[sl] -= step
        it += 1
        snorm = float(np.max(np.abs(step)))
        if prev is not None and prev > 1e-13:
            rate = max(rate, snorm / prev)
        prev = snorm
        disp = float(np.max(np.abs(X[sl] - anchor)))
        if disp >= cst.delta0:
            raise ContractionEscape(
                f"iterate left the trust ball: displacement {disp:.3e} "
                f">= delta0 {cst.delta0:.3e}"
            )
    return ContinuationResult(Configuration(Bp, X), it, sup, rate, disp, True,
                              labels=labels)


def truncation_consistency(model, eps, x0, tol, M1, M2):
    """How far label changes outside a ball reach into its interior.

    Continues two label fields over the same window: ``x0`` itself, and
    ``x0`` shifted up by a full period at every site outside the ball of
    radius M2. Returns the sup difference of the two solutions on the
    ball of radius M1. Each quasi-Newton sweep propagates the
    disagreement inward by one interaction range while the contraction
    halves the remaining error, so the certified bound is
    2 * delta0 * 2**(-m) with m = floor((M2 - M1) / r); this is what
    makes finite windows stand in for the infinite lattice.
    """
    r = model.stencil.range
    M1, M2 = int(M1), int(M2)
    if M2 < M1 + r:
        raise ValueError("need M2 >= M1 + r to separate the balls")
    d = x0.domain.d
    # window large enough that the disagreeing sites include a full
    # stencil range of free sites beyond the agreement ball
    window = Box.centered(M2 + 2 * r, d)
    Bp = window.padded(r)
    if not x0.domain.contains_box(Bp):
        raise ValueError(
            f"labels must cover the ball of radius {M2 + 3 * r} "
            "(window plus collar around the disagreement region)"
        )
    x0 = x0.restrict(Bp)
    outside = np.max(np.abs(Bp.sites()), axis=1) > M2
    shifted = x0.values.copy()
    shifted.ravel()[outside] += 1.0
    y0 = Configuration(Bp, shifted)

    B1 = Box.centered(M1, d)
    a = quasi_newton_continue(model, eps, x0, window, tol=tol)
    b = quasi_newton_continue(model, eps, y0, window, tol=tol)
    measured = float(np.max(np.abs(a.solution.box_values(B1)
                                   - b.solution.box_values(B1))))
    m = (M2 - M1) // r
    bound = 2.0 * model.constants.delta0 * 2.0 ** (-m)
    return {
        "measured": measured,
        "bound": bound,
        "m": m,
        "M1": int(M1),
        "M2": int(M2),
        "holds": measured <= bound + 1e-15,
    }


@dataclass
class DefectResult:
    value: float
    minimizer: Configuration
    displacement: float
    iterations: int
    base_distance: float


def defect(model, eps, base, z, B, tol=1e-12, max_iter=MAX_ITER):
    """Energy gained by relaxing z on the interior of B, boundary frozen.

    ``base`` holds minimum labels anchoring the frozen Newton diagonal and
    the trust ball; ``z`` must start inside that ball. The window energy
    is convex there for couplings up to eps1, so the relaxed configuration
    is the unique constrained minimizer and the returned value is
    nonpositive, vanishing exactly when z was already stationary on the
    interior.
    """
    cst = model.constants
    if eps < 0:
        raise ValueError("coupling must be nonnegative")
    if eps > cst.eps1 * (1.0 + 1e-12):
        raise ContinuationRefused(
            f"eps {eps:.3g} is beyond the convexity range eps1 = {cst.eps1:.3g}"
        )
    r = model.stencil.range
    Bp = B.padded(r)
    if not (base.domain.contains_box(Bp) and z.domain.contains_box(Bp)):
        raise ValueError("base and start must cover the collar around the window")
    base = base.restrict(Bp)
    z = z.restrict(Bp)
    _check_labels(model.potential, base.values, require_minima=True)
    start_off = float(np.max(np.abs(z.values - base.values)))
    if start_off >= cst.delta0:
        raise ContinuationRefused(
            f"start lies {start_off:.3g} from the base labels, outside the "
            f"trust radius {cst.delta0:.3g}"
        )

    interior = B.interior(r)
    sl = interior.slice_in(Bp)
    anchor = base.values[sl]
    diag = model.potential.d2(anchor)
    X = z.values.copy()
    it = 0
    while True:
        resid = (model.potential.d1(X[sl])
                 + eps * model.stencil.force(X, Bp, interior))
        sup = float(np.max(np.abs(resid)))
        if sup <= tol:
            break
        if it >= max_iter:
            raise NoConvergence(
                f"residual {sup:.3e} after {max_iter} sweeps (tol {tol:.1e})"
            )
        X[sl] -= resid / diag
        it += 1
        off = float(np.max(np.abs(X[sl] - anchor)))
        if off >= cst.delta0:
            raise ContractionEscape(
                f"relaxation left the trust ball: offset {off:.3e} "
                f">= delta0 {cst.delta0:.3e}"
            )
    relaxed = Configuration(Bp, X)
    value = action(model, eps, B, relaxed) - action(model, eps, B, z)
    disp = float(np.max(np.abs(X[sl] - z.values[sl])))
    base_dist = float(np.max(np.abs(X - base.values)))
    return DefectResult(value, relaxed, disp, it, base_dist)


def defect_subadditivity_check(model, eps, base, z, B, parts, tol=1e-9):
    """Whole-window defect against the sum over a partition of the window.

    The parts must be disjoint boxes tiling B exactly. Local relaxations
    freeze more sites than the joint one, so the joint defect is at most
    the sum of the local ones.
    """
    total = 0
    for i, part in enumerate(parts):
        if not B.contains_box(part):
            raise ValueError(f"part {i} is not contained in the window")
        total += part.size
        for other in parts[i + 1:]:
            if part.intersect(other) is not None:
                raise ValueError("parts overlap")
    if total != B.size:
        raise ValueError("parts do not tile the window")
    whole = defect(model, eps, base, z, B)
    locals_ = [defect(model, eps, base, z, part) for part in parts]
    lhs = whole.value
    rhs = float(sum(d.value for d in locals_))
    return {
        "lhs": lhs,
        "rhs": rhs,
        "holds": lhs <= rhs + tol,
        "whole": whole,
        "parts": locals_,
    }


@dataclass
class LaminationResult:
    hull: HullFunction
    members: list
    p: np.ndarray
    omega: np.ndarray
    window: Box
    eps: float
    s_values: list = field(default_factory=list)

    @property
    def configurations(self):
        return [m.solution for m in self.members]


def continue_lamination(model, eps, p, omega, window, n_samples,
                        tol=1e-12, k_max=2, order_tol=LABEL_TOL, workers=1):
    """Continue a family of hull samples into an ordered lamination window.

    The hull is the step function whose plateau lengths are the simplex
    weights p over the wells of the background. Sample parameters start at
    the midpoints (2j+1)/(2n) and are nudged off plateau boundaries.
    Every member is continued over ``window``, checked for the Birkhoff
    property, and the family is checked for pairwise order; a crossing
    raises LaminationBroken. Members are independent, so ``workers``
    threads may continue them concurrently; results are collected in
    member order either way.
    """
    omega = check_irrational(omega)
    phi = step_hull_from_simplex(p, model.potential.minima)
    Bp = window.padded(model.stencil.range)
    s_values = [
        generic_parameter(phi, omega, Bp, (2 * j + 1) / (2.0 * n_samples))
        for j in range(int(n_samples))
    ]
    starts = [sample_config(phi, omega, s, Bp) for s in s_values]
    if workers and workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=int(workers)) as pool:
            members = list(pool.map(
                lambda x0: quasi_newton_continue(model, eps, x0, window, tol=tol),
                starts))
    else:
        members = [quasi_newton_continue(model, eps, x0, window, tol=tol)
                   for x0 in starts]
    # translate comparisons must not read values within 2r of the frozen
    # collar: the collar suppresses their relaxation at eps^2 scale with a
    # pattern-dependent sign, which fakes crossings at tie translates
    scan = window.interior(3 * model.stencil.range)
    for j, (res, s) in enumerate(zip(members, s_values)):
        res.s = s
        verdict = check_birkhoff(res.solution.restrict(scan), k_max)
        if not verdict.ordered:
            raise NotBirkhoff(
                f"lamination member {j} crosses its translate",
                witness=(j, verdict.violation),
            )

    order = np.argsort(s_values)
    for a, b in zip(order[:-1], order[1:]):
        diff = members[b].solution.values - members[a].solution.values
        if float(np.min(diff)) < -order_tol:
            site = window.padded(model.stencil.range).sites()[int(np.argmin(diff))]
            raise LaminationBroken(
                f"members {a} and {b} cross",
                witness=(int(a), int(b), tuple(site.tolist())),
            )
    return LaminationResult(phi, members, np.asarray(p, dtype=float),
                            omega, window, eps, s_values)


def _phase_candidates(omega, k_scan, n_candidates, d):
    """Lattice translates sorted by how little they shift the hull phase."""
    cands = []
    for k in Box.centered(int(k_scan), d).sites():
        nz = np.nonzero(k)[0]
        if nz.size == 0 or k[nz[0]] < 0:
            continue
        dot = float(k @ omega)
        l = -int(np.round(dot))
        for ll in (l, l - 1, l + 1):
            phase = dot + ll
            if abs(phase) > 0.45 or abs(phase) < 1e-9:
                continue
            cands.append((abs(phase), tuple(k.tolist()), ll, phase))
    cands.sort()
    out = []
    seen = set()
    for _, k, ll, phase in cands:
        if (k, ll) in seen:
            continue
        seen.add((k, ll))
        out.append((k, ll, phase))
        if len(out) >= n_candidates:
            break
    return out


def maximum_breaks_order(model, eps, omega, window, critical_kind="maximum",
                         k_scan=34, n_candidates=12, s0=0.25, tol=1e-10):
    """Search for an order-breaking translate of a single-well family.

    All labels sit at one critical point of the given kind. The family is
    compared with its own lattice translates, smallest hull-phase shifts
    first. For minimum labels the frozen-diagonal iteration is monotone
    and order survives continuation (returns None); for maximum labels it
    is not, and a crossing witness (k, l, phase, sites) is expected.
    """
    omega = check_irrational(omega)
    pot = model.potential
    crits = pot.maxima if critical_kind == "maximum" else pot.minima
    if crits.size == 0:
        raise ValueError(f"background has no {critical_kind} critical point")
    lift = float(crits[0]) if crits[0] > 0.0 else 1.0
    phi = HullFunction([1.0], [lift])

    r = model.stencil.range
    Bp = window.padded(r)
    cands = _phase_candidates(omega, k_scan, n_candidates, window.d)
    phases = [c[2] for c in cands]

    # one genericity loop for the base parameter and all phase shifts
    args = Bp.sites() @ omega
    s = float(s0)
    for _ in range(10000):
        pos = np.mod(s + np.add.outer(np.asarray([0.0] + phases), args), 1.0)
        d = np.minimum(pos, 1.0 - pos)
        if float(np.min(d)) > 1e-9:
            break
        s += GENERICITY_OFFSET
    else:
        raise ValueError("no generic parameter found")

    base = quasi_newton_continue(
        model, eps, sample_config(phi, omega, s, Bp), window, tol=1e-12)
    interior = window.interior(r)
    sl = interior.slice_in(Bp)
    sites = interior.sites()

    for k, l, phase in cands:
        shifted = quasi_newton_continue(
            model, eps, sample_config(phi, omega, s + phase, Bp), window,
            tol=1e-12)
        diff = (shifted.solution.values[sl] - base.solution.values[sl]).ravel()
        lo_at, hi_at = int(np.argmin(diff)), int(np.argmax(diff))
        lo, hi = float(diff[lo_at]), float(diff[hi_at])
        broken = (phase > 0 and lo < -tol and hi > tol) or \
                 (phase < 0 and hi > tol and lo < -tol)
        if broken:
            return {
                "k": k,
                "l": l,
                "phase": phase,
                "min": lo,
                "max": hi,
                "site_below": tuple(sites[lo_at].tolist()),
                "site_above": tuple(sites[hi_at].tolist()),
            }
    return None
