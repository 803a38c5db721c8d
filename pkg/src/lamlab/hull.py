"""Step hull functions and the simplex parametrization of laminations.

A hull function is a nondecreasing, left-continuous step function phi with
phi(s + 1) = phi(s) + 1, stored by its breakpoints t_1 < ... < t_M in
(0, 1] and plateau values v_1 < ... < v_M with v_M - v_1 < 1. The plateau
on (t_{m-1}, t_m] carries v_m; below t_1 the top plateau wraps around with
its value lowered by one. Normalized hulls take values in (0, 1] so the
left limit at 0 is nonpositive and the right limit is positive.

Configurations are read off a hull along an irrational rotation vector:
x_i = phi(s + omega . i). Weights on the wells of the background potential
(a point of the standard simplex) determine plateau lengths, which is the
coordinate system the lamination experiments run in.
"""

from fractions import Fraction

import numpy as np

from .errors import NotBirkhoff
from .lattice import Box, Configuration

GOLDEN_MEAN = (np.sqrt(5.0) - 1.0) / 2.0
BREAKPOINT_SNAP = 1e-12
GENERICITY_OFFSET = 1e-7 * GOLDEN_MEAN
RESONANCE_DENOMINATOR = 10**6
RESONANCE_TOL = 1e-9


def check_irrational(omega, max_denominator=RESONANCE_DENOMINATOR, tol=RESONANCE_TOL):
    """Reject rotation vectors with a near-rational component.

    A component w is resonant when its best rational approximation p/q
    with q <= max_denominator satisfies |q w - p| <= tol; sampling a hull
    along such a vector revisits plateau boundaries and the genericity
    machinery cannot help.
    """
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    for w in omega:
        fr = Fraction(float(w)).limit_denominator(max_denominator)
        if abs(fr.denominator * float(w) - fr.numerator) <= tol:
            raise ValueError(
                f"rotation component {w!r} is within {tol} of {fr.numerator}/{fr.denominator}"
            )
    return omega


class HullFunction:
    """Left-continuous periodic step function; see the module docstring.

    ``plateau_lengths``, when given, pins the exact masses of the plateaus
    (they must be consistent with the breakpoints); without it the lengths
    are recovered from breakpoint differences, which can lose an ulp.
    """

    def __init__(self, breakpoints, values, plateau_lengths=None):
        breakpoints = np.asarray(breakpoints, dtype=float)
        values = np.asarray(values, dtype=float)
        if breakpoints.ndim != 1 or breakpoints.shape != values.shape or breakpoints.size == 0:
            raise ValueError("breakpoints and values must be matching nonempty 1d arrays")
        if not (breakpoints[0] > 0.0 and breakpoints[-1] <= 1.0):
            raise ValueError("breakpoints must lie in (0, 1]")
        if breakpoints.size > 1:
            if np.min(np.diff(breakpoints)) <= BREAKPOINT_SNAP:
                raise ValueError("breakpoints must be strictly increasing, gaps above snap width")
            if np.min(np.diff(values)) <= 0.0:
                raise ValueError("plateau values must be strictly increasing")
        if values[-1] - values[0] >= 1.0:
            raise ValueError("plateau values must span less than one period")
        if plateau_lengths is not None:
            plateau_lengths = np.asarray(plateau_lengths, dtype=float)
            if plateau_lengths.shape != breakpoints.shape or np.min(plateau_lengths) <= 0.0:
                raise ValueError("plateau lengths must be positive, one per plateau")
            if abs(float(np.sum(plateau_lengths)) - 1.0) > 1e-12:
                raise ValueError("plateau lengths must sum to one")
            implied = np.diff(np.concatenate([[breakpoints[-1] - 1.0], breakpoints]))
            if np.max(np.abs(implied - plateau_lengths)) > 1e-9:
                raise ValueError("plateau lengths contradict the breakpoints")
        self.breakpoints = breakpoints
        self.values = values
        self.plateau_lengths = plateau_lengths

    @property
    def plateau_count(self):
        return self.breakpoints.size

    @property
    def is_normalized(self):
        return self.values[0] > 0.0 and self.values[-1] <= 1.0

    def value(self, s):
        """Evaluate phi(s), left-continuous, with a snap guard.

        Arguments within BREAKPOINT_SNAP above a breakpoint (mod 1) are
        pulled back onto it, so a parameter that should hit a plateau end
        exactly but drifted by float error still reads the plateau value.
        """
        s = np.asarray(s, dtype=float)
        scalar = s.ndim == 0
        s = np.atleast_1d(s)
        bp, vals = self.breakpoints, self.values
        tM = bp[-1]
        k = np.ceil(s - tM)
        u = s - k
        # u lies in (tM - 1, tM]; just above the lower end means s sits a
        # hair above the top breakpoint of the previous period
        wrap = (u - (tM - 1.0)) <= BREAKPOINT_SNAP
        idx = np.searchsorted(bp, u - BREAKPOINT_SNAP, side="left")
        out = np.where(wrap, vals[-1] + k - 1.0, vals[np.minimum(idx, bp.size - 1)] + k)
        return float(out[0]) if scalar else out

    def value_upper(self, s):
        """The right-continuous companion phi+(s) = lim_{t -> s+} phi(t)."""
        s = np.asarray(s, dtype=float)
        scalar = s.ndim == 0
        s = np.atleast_1d(s)
        bp, vals = self.breakpoints, self.values
        tM = bp[-1]
        k = np.ceil(s - tM)
        u = s - k
        idx = np.searchsorted(bp, u + BREAKPOINT_SNAP, side="right")
        k = k + (idx == bp.size)
        idx = np.where(idx == bp.size, 0, idx)
        out = vals[idx] + k
        return float(out[0]) if scalar else out

    def plateau_measures(self):
        """Pairs (value, length); the first plateau wraps below t_1."""
        bp, vals = self.breakpoints, self.values
        if self.plateau_lengths is not None:
            lengths = self.plateau_lengths
        else:
            lengths = np.diff(np.concatenate([[bp[-1] - 1.0], bp]))
        return list(zip(vals.tolist(), lengths.tolist()))

    def __repr__(self):
        pairs = ", ".join(
            f"({t:.6g}]->{v:.6g}" for t, v in zip(self.breakpoints, self.values)
        )
        return f"HullFunction({pairs})"


def normalize_simplex(p, n=None, tol=1e-9):
    """Clean a simplex point: clip tiny negatives, renormalize the total."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or (n is not None and p.size != n):
        raise ValueError("simplex point has the wrong shape")
    if np.min(p) < -1e-12:
        raise ValueError(f"simplex entries must be nonnegative, got {np.min(p)!r}")
    p = np.clip(p, 0.0, None)
    total = p.sum()
    if abs(total - 1.0) > tol:
        raise ValueError(f"simplex entries sum to {total!r}, expected 1")
    # rescaling perturbs every entry by an ulp, so keep near-exact inputs
    # untouched and masses round-trip bit for bit
    if abs(total - 1.0) > 1e-12:
        p = p / total
    return p


def step_hull_from_simplex(p, sigma):
    """Hull whose plateau at well sigma_j has length p_j.

    Wells are lifted into (0, 1] (a well at 0 becomes 1) and sorted; the
    breakpoints are the cumulative masses in that order, the last pinned
    to exactly 1. Zero-mass wells disappear. The result is normalized by
    construction.
    """
    sigma = np.mod(np.asarray(sigma, dtype=float), 1.0)
    p = normalize_simplex(p, n=sigma.size)
    lifted = np.where(sigma == 0.0, 1.0, sigma)
    keep = p > 0.0
    if not np.any(keep):
        raise ValueError("simplex point has no mass")
    lifted, masses = lifted[keep], p[keep]
    order = np.argsort(lifted)
    lifted, masses = lifted[order], masses[order]
    if lifted.size > 1 and np.min(np.diff(lifted)) <= BREAKPOINT_SNAP:
        raise ValueError("wells coincide after lifting; cannot build plateaus")
    breakpoints = np.cumsum(masses)
    breakpoints[-1] = 1.0
    return HullFunction(breakpoints, lifted, plateau_lengths=masses)


def sample_config(phi, omega, s, window):
    """Configuration x_i = phi(s + omega . i) over a window box."""
    omega = check_irrational(omega)
    if not isinstance(window, Box):
        raise ValueError("window must be a Box")
    if omega.size != window.d:
        raise ValueError("rotation vector dimension must match the window")
    args = s + window.sites() @ omega
    return Configuration(window, phi.value(args))


def generic_parameter(phi, omega, window, s0, clearance=RESONANCE_TOL):
    """Nudge s0 until no sampled argument sits near a plateau boundary.

    Keeps adding an irrational offset while any s0 + omega . i lands
    within ``clearance`` of a breakpoint mod 1; termination is guaranteed
    because the offsets equidistribute while the bad set has small measure.
    """
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    args = window.sites() @ omega
    bp = phi.breakpoints
    s = float(s0)
    for _ in range(10000):
        pos = np.mod(s + args, 1.0)
        d = np.abs(pos[:, None] - np.mod(bp, 1.0)[None, :])
        d = np.minimum(d, 1.0 - d)
        if np.min(d) > clearance:
            return s
        s += GENERICITY_OFFSET
    raise ValueError("could not find a generic parameter near s0")


def empirical_hull(config, omega):
    """Recover a hull from a configuration sampled along omega.

    Each site i contributes the point (u_i, x_i - k_i) with
    k_i = ceil(omega . i) - 1, so u_i lies in (0, 1]. For a genuine hull
    sample the points are nondecreasing in u up to the translation of the
    unknown parameter, so sorting and collapsing equal levels rebuilds the
    step function. Order violations raise NotBirkhoff with the witnessing
    pair of sites.
    """
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    sites = config.domain.sites()
    t = sites @ omega
    k = np.ceil(t) - 1.0
    u = t - k
    y = config.values.ravel() - k

    order = np.argsort(u, kind="stable")
    u, y, sites = u[order], y[order], sites[order]

    # collapse coincident arguments; they must agree in value
    keep_u, keep_y, keep_site = [u[0]], [y[0]], [sites[0]]
    for i in range(1, u.size):
        if u[i] - keep_u[-1] <= BREAKPOINT_SNAP:
            if abs(y[i] - keep_y[-1]) > 1e-9:
                raise NotBirkhoff(
                    "two sites sample the same argument with different values",
                    witness=(tuple(keep_site[-1]), tuple(sites[i])),
                )
            continue
        keep_u.append(u[i])
        keep_y.append(y[i])
        keep_site.append(sites[i])
    u = np.asarray(keep_u)
    y = np.asarray(keep_y)

    for i in range(1, u.size):
        if y[i] < y[i - 1] - 1e-9:
            raise NotBirkhoff(
                "values decrease along the circle order",
                witness=(tuple(keep_site[i - 1]), tuple(keep_site[i])),
            )

    if y[-1] - y[0] > 1.0 + 1e-9:
        raise NotBirkhoff(
            "values span more than one period across the window",
            witness=(tuple(keep_site[0]), tuple(keep_site[-1])),
        )

    # collapse near-equal values into plateaus; each plateau keeps its
    # largest argument as the breakpoint (left continuity)
    breakpoints, values = [], []
    start = 0
    for i in range(1, u.size + 1):
        if i == u.size or y[i] - y[start] > 1e-9:
            breakpoints.append(u[i - 1])
            values.append(y[start])
            start = i
    breakpoints = np.asarray(breakpoints)
    values = np.asarray(values)

    # the site at the origin contributes u = 1 exactly, so when the bottom
    # level is one below the top one the two are the same plateau seen
    # across the period; drop the duplicated top entry
    if values.size > 1 and values[-1] - values[0] >= 1.0 - 1e-9:
        breakpoints = breakpoints[:-1]
        values = values[:-1]
    return HullFunction(breakpoints, values)


def _l1_shift_integral(a, b, t):
    """Exact integral over one period of |a(s + t) - b(s)|.

    Both functions are constant between consecutive cut points, so the
    integral is a finite sum of cell midpoint evaluations.
    """
    cuts = {0.0, 1.0}
    for tb in b.breakpoints:
        cuts.add(float(np.mod(tb, 1.0)))
    for ta in a.breakpoints:
        cuts.add(float(np.mod(ta - t, 1.0)))
    cuts = sorted(cuts)
    total = 0.0
    for c0, c1 in zip(cuts[:-1], cuts[1:]):
        if c1 - c0 <= 1e-15:
            continue
        mid = 0.5 * (c0 + c1)
        total += abs(a.value(mid + t) - b.value(mid)) * (c1 - c0)
    return total


def hull_distance_mod_translation(a, b):
    """L1 distance between hulls modulo the translation family a(. + t).

    The integral is piecewise linear in the shift with kinks exactly where
    breakpoints of the two hulls align, so the minimum over all real
    shifts is attained on the finite kink set (taken in two consecutive
    periods to cover the integer offsets that matter for normalized
    hulls).
    """
    candidates = {0.0, -1.0}
    for ta in a.breakpoints:
        for tb in b.breakpoints:
            t0 = float(np.mod(ta - tb, 1.0))
            candidates.add(t0)
            candidates.add(t0 - 1.0)
    return min(_l1_shift_integral(a, b, t) for t in sorted(candidates))
