"""Infinite-volume limits: exhaustions, boundary matrices, limit
expectations, projectivity checks and the generator-driven model
constructor.

The boundary matrix of a finite region collects, per index pair, the
limit of the product of single-site overlaps over all sites outside the
region.  Products are always formed directly from the overlaps, site by
site in exhaustion order; entrywise logarithms exist only as a
diagnostic (overlaps may be zero or have argument near +-pi, where a
principal-branch log sum misrepresents the product).  A product whose
limit is zero is a converged result, not a failure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from . import lattice
from .errors import (
    ConvergenceError,
    DimensionError,
    DomainError,
    GeometryError,
    PreconditionError,
    ValidationError,
)
from .kernel import ConstantTail, FiberFamily, IdentityTail, OnesTail, kernel_matrix
from .linalg import (
    LOG_EIG_FLOOR,
    as_cmatrix,
    hermitian_function,
    matrix_exp,
    require_hermitian,
)
from .state import LocalObservable

#: Treat a constant tail factor as exactly 1 when within this of 1.
CONSTANT_ONE_TOL = 1e-12

#: Hard cap on the number of sites a tail product may consume.
SITE_CAP = 10**6


# ---------------------------------------------------------------------------
# Exhaustions
# ---------------------------------------------------------------------------


class Exhaustion:
    """A deterministic enumeration of the site set.

    On the integer lattice the canonical order walks 1-norm shells of
    increasing radius, lexicographically within each shell, so every
    finite set is absorbed after finitely many shells.  Enumerated
    site lists are walked in their declared order.
    """

    def __init__(self, shell_factory, finite: bool, nu: int | None = None):
        self._shell_factory = shell_factory
        self.finite = finite
        self.nu = nu

    @classmethod
    def lattice(cls, nu: int) -> "Exhaustion":
        if nu < 1:
            raise ValidationError(f"lattice dimension must be >= 1, got {nu}")

        def gen() -> Iterator[tuple[int, tuple]]:
            r = 0
            while True:
                yield r, tuple(lattice.shell(nu, r))
                r += 1

        return cls(gen, finite=False, nu=nu)

    @classmethod
    def from_sites(cls, sites) -> "Exhaustion":
        sites = tuple(sites)
        if len(set(sites)) != len(sites):
            raise ValidationError("exhaustion site list contains duplicates")
        blocks = [(k, (s,)) for k, s in enumerate(sites)]
        return cls(lambda: iter(blocks), finite=True)

    def shells(self) -> Iterator[tuple[int, tuple]]:
        """Yield (label, sites) blocks; stopping rules run between blocks."""
        return self._shell_factory()

    def prefix(self, n: int) -> list:
        """The first n sites of the enumeration."""
        out: list = []
        for _, block in self.shells():
            for s in block:
                out.append(s)
                if len(out) == n:
                    return out
        raise ValidationError(f"exhaustion has only {len(out)} sites, {n} requested")


def default_exhaustion(family: FiberFamily) -> Exhaustion:
    if family.is_lattice:
        return Exhaustion.lattice(family.lattice_dim)
    return Exhaustion.from_sites(family.sites)


# ---------------------------------------------------------------------------
# Interaction matrices (diagnostic)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InteractionMatrix:
    """Entrywise principal logs of one site's overlaps.

    ``defined`` masks entries whose overlap is exactly zero; those carry
    no value.  Diagnostic only — tail products never go through logs.
    """

    site: object
    values: np.ndarray
    defined: np.ndarray

    def entry(self, i: int, j: int):
        return complex(self.values[i, j]) if self.defined[i, j] else None


def interaction_matrix(family: FiberFamily, site) -> InteractionMatrix:
    g = family.gram(site)
    defined = g != 0
    values = np.zeros_like(g)
    values[defined] = np.log(g[defined])
    values.setflags(write=False)
    defined.setflags(write=False)
    return InteractionMatrix(site=site, values=values, defined=defined)


# ---------------------------------------------------------------------------
# Boundary and transfer matrices
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundaryMatrix:
    """Converged tail products over the complement of a region."""

    region: tuple
    matrix: np.ndarray
    tail_bound: float
    sites_consumed: int
    rigorous: bool


def transfer_matrix(family: FiberFamily, region, subregion) -> np.ndarray:
    """Entrywise product of overlaps over region minus subregion.

    Equal regions give the all-ones matrix (empty product).
    """
    region = tuple(region)
    subregion = tuple(subregion)
    extra = [s for s in subregion if s not in set(region)]
    if extra:
        raise GeometryError(f"subregion sites {extra!r} are not inside the region")
    out = np.ones((family.d_I, family.d_I), dtype=np.complex128)
    sub = set(subregion)
    for x in region:
        if x not in sub:
            out = out * family.gram(x)
    return out


def _ones_tail_bound(p: np.ndarray, remaining: float) -> float:
    growth = math.expm1(min(remaining, 700.0))
    return float(np.max(np.abs(p)) * growth)


def _identity_tail_bound(p: np.ndarray, remaining: float) -> float:
    growth = math.expm1(min(remaining, 700.0))
    diag = float(np.max(np.abs(np.diag(p)))) * growth
    off = p - np.diag(np.diag(p))
    if off.size and np.any(np.abs(off) > 0):
        # off-diagonal factors collapse toward 0; the entry itself must
        # shrink below tolerance before the product can be frozen
        off_bound = float(np.max(np.abs(off))) * (1.0 + min(remaining, 1.0) + growth)
    else:
        off_bound = 0.0
    return max(diag, off_bound)


def boundary_matrix(
    family: FiberFamily,
    region,
    exhaustion: Exhaustion | None = None,
    tail_tol: float = 1e-12,
    site_cap: int = SITE_CAP,
) -> BoundaryMatrix:
    """Tail products of overlaps over all sites outside ``region``.

    Walks the exhaustion, multiplying per-entry partial products in
    order, and stops once the family's tail certificate bounds every
    entry's remaining change below ``tail_tol``.  Families without a
    certificate fall back to an empirical stopping rule (three
    consecutive shells moving every entry by less than ``tail_tol``),
    reported as non-rigorous.
    """
    region = tuple(region)
    if exhaustion is not None:
        return _boundary_walk(family, region, exhaustion, tail_tol, site_cap)
    # canonical-exhaustion results are cached on the family; repeated
    # limit evaluations over the same region dominate scan runtimes
    cache = getattr(family, "_boundary_cache", None)
    if cache is None:
        cache = {}
        family._boundary_cache = cache
    key = (frozenset(region), tail_tol, site_cap)
    hit = cache.get(key)
    if hit is None:
        result = _boundary_walk(
            family, region, default_exhaustion(family), tail_tol, site_cap
        )
        hit = (result.matrix, result.tail_bound, result.sites_consumed, result.rigorous)
        cache[key] = hit
    return BoundaryMatrix(region, *hit)


def _boundary_walk(
    family: FiberFamily,
    region: tuple,
    exhaustion: Exhaustion,
    tail_tol: float,
    site_cap: int,
) -> BoundaryMatrix:
    d_I = family.d_I
    skip = set(region)
    p = np.ones((d_I, d_I), dtype=np.complex128)
    tail = family.tail

    # Homogeneous infinite tails resolve analytically: every factor is
    # the same matrix, so each entry ends at 1 (factor 1), 0 (|factor|<1)
    # or fails to converge.
    if isinstance(tail, ConstantTail):
        g = as_cmatrix(tail.gram)
        out = np.zeros((d_I, d_I), dtype=np.complex128)
        for i in range(d_I):
            for j in range(d_I):
                gij = g[i, j]
                if abs(gij - 1.0) <= CONSTANT_ONE_TOL:
                    out[i, j] = 1.0
                elif abs(gij) < 1.0 - CONSTANT_ONE_TOL:
                    out[i, j] = 0.0
                else:
                    raise ConvergenceError(
                        f"constant tail factor {gij} at entry ({i}, {j}) has "
                        "modulus >= 1 and is not 1: the tail product does not converge",
                        last_partial=g.copy(),
                        tail_estimate=float(abs(abs(gij) - 1.0)),
                    )
        return BoundaryMatrix(region, out, 0.0, 0, True)

    consumed = 0
    window: list[float] = []
    for label, block in exhaustion.shells():
        before = p.copy()
        for x in block:
            if x in skip:
                continue
            p = p * family.gram(x)
            consumed += 1
            if consumed > site_cap:
                raise ConvergenceError(
                    f"boundary product did not settle within {site_cap} sites",
                    last_partial=p,
                    tail_estimate=float(np.max(np.abs(p - before))),
                )

        if exhaustion.finite:
            continue

        if isinstance(tail, IdentityTail):
            if tail.exact_beyond is not None and label >= tail.exact_beyond:
                # every remaining factor is exactly the identity pattern:
                # diagonals freeze, off-diagonals are annihilated
                out = np.zeros_like(p)
                np.fill_diagonal(out, np.diag(p))
                return BoundaryMatrix(region, out, 0.0, consumed, True)
            bound = _identity_tail_bound(p, tail.remaining(label))
            if bound <= tail_tol:
                return BoundaryMatrix(region, p.copy(), bound, consumed, True)
        elif isinstance(tail, OnesTail):
            bound = _ones_tail_bound(p, tail.remaining(label))
            if bound <= tail_tol:
                return BoundaryMatrix(region, p.copy(), bound, consumed, True)
        else:
            drift = float(np.max(np.abs(p - before)))
            window.append(drift)
            if len(window) >= 3 and max(window[-3:]) <= tail_tol:
                return BoundaryMatrix(region, p.copy(), max(window[-3:]), consumed, False)

    # complement exhausted: the product is complete and exact
    return BoundaryMatrix(region, p.copy(), 0.0, consumed, True)


def limit_state_eval(
    family: FiberFamily,
    obs: LocalObservable,
    exhaustion: Exhaustion | None = None,
    tail_tol: float = 1e-12,
) -> complex:
    """Infinite-volume expectation of a tensor-product observable.

    sum_{i,j} [prod_{x in region} Tr(h_i h_j* b_x)] * boundary[i, j].
    """
    beta = boundary_matrix(family, obs.region, exhaustion, tail_tol)
    m = np.ones((family.d_I, family.d_I), dtype=np.complex128)
    for x, b in zip(obs.region, obs.factors):
        m = m * kernel_matrix(family, x, b)
    return complex((m * beta.matrix).sum())


@dataclass(frozen=True)
class ProjectivityReport:
    region: tuple
    subregion: tuple
    value_large: complex
    value_small: complex
    gap: float
    tol: float
    passed: bool


def check_projectivity(
    family: FiberFamily,
    region,
    obs: LocalObservable,
    exhaustion: Exhaustion | None = None,
    tol: float = 1e-9,
    tail_tol: float = 1e-12,
) -> ProjectivityReport:
    """Compare the limit expectation on a region against its extension.

    Evaluates the observable once on its own region and once extended by
    identity factors to the larger region; a projective family makes the
    two agree.
    """
    region = tuple(region)
    missing = [s for s in obs.region if s not in set(region)]
    if missing:
        raise GeometryError(f"observable sites {missing!r} outside region")
    extended_factors = []
    eye = np.eye(family.d, dtype=np.complex128)
    obs_sites = {s: f for s, f in zip(obs.region, obs.factors)}
    for s in region:
        extended_factors.append(obs_sites.get(s, eye))
    extended = LocalObservable(region, tuple(extended_factors))
    large = limit_state_eval(family, extended, exhaustion, tail_tol)
    small = limit_state_eval(family, obs, exhaustion, tail_tol)
    gap = abs(large - small)
    scale = max(1.0, abs(small), abs(large))
    return ProjectivityReport(
        region=region,
        subregion=tuple(obs.region),
        value_large=large,
        value_small=small,
        gap=gap,
        tol=tol,
        passed=gap <= tol * scale,
    )


# ---------------------------------------------------------------------------
# Right square roots and generator-built models
# ---------------------------------------------------------------------------


def right_square_root(t, w, tol: float = 1e-12) -> np.ndarray:
    """A matrix h with h h* = t, parametrized by an isometry.

    Returns exp(log(t)/2) w*.  Row i of the result, read as a fiber
    vector, satisfies <h_j, h_i> = t[i, j].
    """
    tm = require_hermitian(t, tol, "right_square_root input")
    eigs = np.linalg.eigvalsh(tm)
    lam_max = float(np.max(np.abs(eigs))) if eigs.size else 0.0
    if eigs.size and float(eigs[0]) <= 1e-12 * lam_max:
        raise DomainError(
            f"right_square_root: matrix is not positive definite "
            f"(min eigenvalue {eigs[0]:.3e})"
        )
    wm = as_cmatrix(w, "isometry")
    if wm.shape != tm.shape:
        raise DimensionError(
            f"isometry shape {wm.shape} does not match matrix shape {tm.shape}"
        )
    defect = float(np.max(np.abs(wm.conj().T @ wm - np.eye(wm.shape[1]))))
    if defect > tol:
        raise PreconditionError(
            f"right_square_root: W*W deviates from identity by {defect:.3e}"
        )
    half = hermitian_function(tm, lambda x: np.sqrt(x), eig_floor=LOG_EIG_FLOOR)
    return half @ wm.conj().T


@dataclass(frozen=True)
class GeneratorSite:
    """One site's generator data: diagonal, basis rotation, root freedom."""

    site: object
    diag: np.ndarray  # real entries of the diagonal generator
    u: np.ndarray     # unitary
    w: np.ndarray     # isometry fixing which right root is taken

    def trace_abs(self) -> float:
        return float(np.sum(np.abs(self.diag)))


@dataclass(frozen=True)
class GeneratorSpec:
    """Per-site generator records plus a zero-beyond-radius tail rule.

    Requires the fiber dimension to equal the index count; the built
    family has Gram matrix exp(u* diag u) at each declared site and is
    exactly orthonormal beyond the tail radius.
    """

    records: tuple
    tail_radius: int
    nu: int

    def __post_init__(self):
        if not self.records:
            raise ValidationError("generator model declares no sites")
        sites = [rec.site for rec in self.records]
        if len(set(sites)) != len(sites):
            raise ValidationError("generator model declares a site twice")
        d = self.records[0].diag.shape[0]
        for rec in self.records:
            if rec.diag.ndim != 1 or rec.diag.shape[0] != d:
                raise ValidationError(
                    f"site {rec.site!r}: diagonal has shape {rec.diag.shape}"
                )
            if np.max(np.abs(np.imag(rec.diag))) > 0:
                raise ValidationError(f"site {rec.site!r}: diagonal is not real")
            for name, m in (("U", rec.u), ("W", rec.w)):
                if m.shape != (d, d):
                    raise ValidationError(
                        f"site {rec.site!r}: {name} has shape {m.shape}, expected {(d, d)}"
                    )
                defect = float(np.max(np.abs(m.conj().T @ m - np.eye(d))))
                if defect > 1e-12:
                    raise ValidationError(
                        f"site {rec.site!r}: {name} deviates from isometry by {defect:.3e}"
                    )
            if not (isinstance(rec.site, tuple) and len(rec.site) == self.nu):
                raise ValidationError(
                    f"site {rec.site!r} is not a {self.nu}-tuple"
                )
            if lattice.norm1(rec.site) > self.tail_radius:
                raise ValidationError(
                    f"site {rec.site!r} lies beyond the declared tail radius "
                    f"{self.tail_radius}"
                )

    @property
    def d(self) -> int:
        return int(self.records[0].diag.shape[0])

    def summability_certificate(self) -> float:
        """Total absolute diagonal mass over all declared sites."""
        return float(sum(rec.trace_abs() for rec in self.records))


def build_from_generators(spec: GeneratorSpec) -> FiberFamily:
    """Construct the fiber family a generator model describes.

    Per declared site the Gram matrix is exp(u* diag u) and the fiber
    vectors are the rows of its right square root with freedom w;
    undeclared sites carry the standard orthonormal basis.
    """
    d = spec.d
    by_site = {}
    deviations = {}  # site -> e^{trace_abs} - 1, for the tail certificate
    for rec in spec.records:
        h = rec.u.conj().T @ np.diag(rec.diag.astype(np.float64)) @ rec.u
        t = matrix_exp(h)
        by_site[rec.site] = right_square_root(t, rec.w)
        deviations[rec.site] = math.expm1(rec.trace_abs())
    eye = np.eye(d, dtype=np.complex128)

    def provider(site):
        vecs = by_site.get(site)
        return vecs if vecs is not None else eye

    # remaining deviation mass strictly beyond radius r: declared sites
    # only, since undeclared sites contribute exactly nothing
    radii = sorted({lattice.norm1(s) for s in deviations})
    cumulative = {}
    total = sum(deviations.values())
    running = 0.0
    for r in radii:
        running += sum(v for s, v in deviations.items() if lattice.norm1(s) == r)
        cumulative[r] = total - running

    def remaining(r: int) -> float:
        out = total
        for rr in radii:
            if rr <= r:
                out = cumulative[rr]
        return max(out, 0.0)

    family = FiberFamily(
        d,
        d,
        provider,
        lattice_dim=spec.nu,
        tail=IdentityTail(remaining=remaining, exact_beyond=spec.tail_radius),
        label="generator model",
    )
    family.summability = spec.summability_certificate()
    return family
