"""Probability measures on the circle attached to laminations.

A step hull pushes Lebesgue measure on the parameter circle forward to an
atomic measure on the value circle: one atom per plateau, weighted by the
plateau length. The same measure is recovered from any single sampled
configuration by counting, over growing balls of lattice sites, how often
the site value falls into the trust interval of each well. Since
continuation never moves a site across its trust interval, the counting
measure of a continued solution equals that of its label configuration
exactly, which is what makes the simplex-to-measure map injective at
finite coupling.

Vague convergence is metrized here by total variation on the atom set;
in the operating regime every measure is supported on the finitely many
wells, where the two notions agree.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ContinuationRefused, UnclassifiableSite
from .hull import generic_parameter, sample_config, step_hull_from_simplex
from .lattice import Box, l1_norms

ATOM_MERGE_TOL = 1e-12
DEFAULT_DENSITY_RADIUS = {1: 377, 2: 60}


@dataclass
class CircleMeasure:
    """Atomic probability measure on R/Z, optionally with a density table.

    ``density_table`` holds (ball radius, per-well fractions) rows when
    the measure came from counting; ``continuous_part`` may hold a hull
    whose Lebesgue pushforward is added on top of the atoms.
    """

    atoms: np.ndarray
    masses: np.ndarray
    continuous_part: object = None
    density_table: list = field(default_factory=list)

    def __post_init__(self):
        atoms = np.mod(np.asarray(self.atoms, dtype=float), 1.0)
        masses = np.asarray(self.masses, dtype=float)
        if atoms.shape != masses.shape or atoms.ndim != 1:
            raise ValueError("atoms and masses must be matching 1d arrays")
        if masses.size and float(np.min(masses)) < -ATOM_MERGE_TOL:
            raise ValueError("masses must be nonnegative")
        order = np.argsort(atoms, kind="stable")
        atoms, masses = atoms[order], np.clip(masses[order], 0.0, None)
        # merge coincident locations (mod 1) so atoms stay distinct
        keep_a, keep_m = [], []
        for a, m in zip(atoms, masses):
            if keep_a and (a - keep_a[-1] <= ATOM_MERGE_TOL
                           or (1.0 - a) + keep_a[0] <= ATOM_MERGE_TOL):
                if a - keep_a[-1] <= ATOM_MERGE_TOL:
                    keep_m[-1] += m
                else:
                    keep_m[0] += m
                continue
            keep_a.append(float(a))
            keep_m.append(float(m))
        self.atoms = np.asarray(keep_a)
        self.masses = np.asarray(keep_m)
        total = float(np.sum(self.masses)) + (1.0 if self.continuous_part else 0.0)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"total mass {total!r} is not 1")

    def mass_at(self, location, tol=1e-9):
        """Mass of the atom at a location (0 when absent)."""
        loc = float(np.mod(location, 1.0))
        d = np.abs(self.atoms - loc)
        d = np.minimum(d, 1.0 - d)
        hits = np.nonzero(d <= tol)[0]
        return float(self.masses[hits[0]]) if hits.size else 0.0

    def as_pairs(self):
        return [[float(a), float(m)] for a, m in zip(self.atoms, self.masses)]


def measure_from_hull(phi):
    """Pushforward of Lebesgue measure: one atom per plateau."""
    pairs = phi.plateau_measures()
    atoms = np.mod(np.asarray([v for v, _ in pairs]), 1.0)
    masses = np.asarray([m for _, m in pairs])
    return CircleMeasure(atoms, masses)


def measure_from_density(config, sigma, delta0, n):
    """Counting measure of a configuration over growing L1 balls.

    Every site value mod 1 must fall within delta0 of exactly one well in
    ``sigma``; the fractions over the balls of radius n/4, n/2 and n form
    the convergence table and the largest ball defines the returned atoms.
    """
    sigma = np.mod(np.asarray(sigma, dtype=float), 1.0)
    if sigma.ndim != 1 or sigma.size == 0:
        raise ValueError("need a nonempty list of wells")
    n = int(n)
    if n < 1:
        raise ValueError("ball radius must be positive")
    d = config.domain.d
    if not config.domain.contains_box(Box.centered(n, d)):
        raise ValueError("configuration does not cover the ball of radius n")

    sites = config.domain.sites()
    norms = l1_norms(sites)
    vals = np.mod(config.values.ravel(), 1.0)
    dist = np.abs(vals[:, None] - sigma[None, :])
    dist = np.minimum(dist, 1.0 - dist)
    nearest = np.argmin(dist, axis=1)
    best = dist[np.arange(dist.shape[0]), nearest]
    inside = norms <= n
    bad = inside & (best > delta0)
    if np.any(bad):
        worst = int(np.argmax(np.where(bad, best, -np.inf)))
        raise UnclassifiableSite(
            f"site value {vals[worst]!r} is {best[worst]:.3g} from the nearest "
            f"well, beyond the classification radius {delta0:.3g}",
            site=tuple(sites[worst].tolist()),
            value=float(config.values.ravel()[worst]),
        )

    radii = sorted({max(n // 4, 1), max(n // 2, 1), n})
    table = []
    for rad in radii:
        mask = norms <= rad
        counts = np.bincount(nearest[mask], minlength=sigma.size).astype(float)
        table.append((rad, counts / float(np.sum(mask))))
    fractions = table[-1][1]
    return CircleMeasure(sigma, fractions, density_table=table)


def integrate(mu, f):
    """Integral of a one-periodic test function against the measure."""
    total = float(sum(m * f(a) for a, m in zip(mu.atoms, mu.masses)))
    if mu.continuous_part is not None:
        for v, length in mu.continuous_part.plateau_measures():
            total += length * f(np.mod(v, 1.0))
    return total


def vague_distance(a, b):
    """Total variation on the union of the atom sets.

    Metrizes vague convergence while all measures are supported on the
    same finite well set; differing supports are handled by zero-filling.
    """
    if a.continuous_part is not None or b.continuous_part is not None:
        raise ValueError("vague distance is defined for atomic measures")
    locs = np.concatenate([a.atoms, b.atoms])
    signed = np.concatenate([a.masses, -b.masses])
    order = np.argsort(locs, kind="stable")
    locs, signed = locs[order], signed[order]
    total = 0.0
    acc = signed[0]
    for i in range(1, locs.size):
        if locs[i] - locs[i - 1] <= ATOM_MERGE_TOL:
            acc += signed[i]
        else:
            total += abs(acc)
            acc = signed[i]
    total += abs(acc)
    return float(total)


def psi_epsilon(model, eps, p, omega, window, n=None, tol=1e-12):
    """The simplex-to-measure map at finite coupling.

    Builds the step hull of p, samples it along omega over the window,
    continues the sample, and returns its counting measure over the ball
    of radius n. Certified only up to eps1, where continuation keeps every
    site inside its classification interval.
    """
    from .continuation import quasi_newton_continue

    cst = model.constants
    if eps > cst.eps1 * (1.0 + 1e-12):
        raise ContinuationRefused(
            f"eps {eps:.3g} is beyond the convexity range eps1 = {cst.eps1:.3g}"
        )
    if n is None:
        n = DEFAULT_DENSITY_RADIUS.get(window.d)
        if n is None:
            raise ValueError("no default ball radius in this dimension; pass n")
    phi = step_hull_from_simplex(p, model.potential.minima)
    Bp = window.padded(model.stencil.range)
    s = generic_parameter(phi, omega, Bp, 0.5)
    x0 = sample_config(phi, omega, s, Bp)
    res = quasi_newton_continue(model, eps, x0, window, tol=tol)
    return measure_from_density(res.solution, model.potential.minima,
                                cst.delta0, n)
