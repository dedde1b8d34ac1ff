"""Mixing diagnostics for limit states on the integer lattice.

A state mixes when observables on a fixed region decorrelate from
observables carried far away: transporting the second observable to an
embedded copy of its region outside a large ball, the joint expectation
approaches the product of the individual ones.  The alpha variant
replaces the transported factor by its limiting tail value, which must
be independent of the fiber index pair for the comparison to be
meaningful.

Embeddings come in two strategies: a deterministic translation along
the first axis, and a seeded random injection into shells just outside
the excluded ball.  Both guarantee the image clears the ball.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import lattice
from .errors import (
    ConvergenceError,
    GeometryError,
    PreconditionError,
    ValidationError,
)
from .kernel import FiberFamily, OnesTail, kernel_matrix
from .limit import Exhaustion, boundary_matrix, limit_state_eval
from .state import LocalObservable

#: Default clearance sequence for tail-limit detection.
DEFAULT_T_SEQUENCE = (5, 10, 20, 40)

#: Default Cauchy / independence tolerance for tail limits.
DEFAULT_ALPHA_TOL = 1e-8

ball = lattice.ball


@dataclass(frozen=True)
class Embedding:
    """An injective placement of a region outside the ball of radius t."""

    source: tuple
    image: tuple
    clearance: int

    def __post_init__(self):
        if len(self.source) != len(self.image):
            raise GeometryError("embedding must preserve the number of sites")
        if len(set(self.image)) != len(self.image):
            raise GeometryError("embedding image has repeated sites")
        inside = [z for z in self.image if lattice.norm1(z) <= self.clearance]
        if inside:
            raise GeometryError(
                f"embedded sites {inside!r} lie inside the excluded ball "
                f"of radius {self.clearance}"
            )

    def __getitem__(self, site):
        return self.image[self.source.index(site)]

    def transport(self, obs: LocalObservable) -> LocalObservable:
        """The observable carried to the embedded region."""
        if tuple(obs.region) != self.source:
            raise GeometryError("observable region does not match the embedding source")
        return LocalObservable(self.image, obs.factors)


def embed(
    region,
    t: int,
    strategy: str = "translate",
    nu: int | None = None,
    seed: int = 0,
) -> Embedding:
    """Embed a finite lattice region into the complement of the t-ball.

    ``translate`` shifts by (t + 1 + R) along the first axis, R being the
    largest 1-norm in the region, which always clears the ball.
    ``random`` draws distinct sites from the shells just outside the
    ball with a seeded generator.
    """
    region = tuple(tuple(int(c) for c in z) for z in region)
    if not region:
        raise ValidationError("cannot embed an empty region")
    if nu is None:
        nu = len(region[0])
    if any(len(z) != nu for z in region):
        raise ValidationError("region sites have inconsistent dimension")
    if t < 0:
        raise ValidationError(f"clearance must be nonnegative, got {t}")

    if strategy == "translate":
        radius = max(lattice.norm1(z) for z in region)
        shift = t + 1 + radius
        image = tuple((z[0] + shift,) + z[1:] for z in region)
        return Embedding(source=region, image=image, clearance=t)

    if strategy == "random":
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, t])))
        candidates: list[tuple[int, ...]] = []
        r = t + 1
        while len(candidates) < len(region):
            candidates.extend(lattice.shell(nu, r))
            r += 1
        order = rng.permutation(len(candidates))
        image = tuple(candidates[int(k)] for k in order[: len(region)])
        return Embedding(source=region, image=image, clearance=t)

    raise ValidationError(f"unknown embedding strategy {strategy!r}")


@dataclass(frozen=True)
class AlphaLimitReport:
    """Tail limits of transported local products, per fiber index pair."""

    limits: np.ndarray        # (d_I, d_I) limit values
    independent: bool         # all pairs agree within tol
    value: complex | None     # the common limit when independent
    spread: float             # max pairwise deviation among limits
    last_step: float          # final Cauchy increment
    t_sequence: tuple

    def require_value(self) -> complex:
        if not self.independent:
            raise PreconditionError(
                "tail limits depend on the fiber index pair (spread "
                f"{self.spread:.3e}); the alpha comparison is undefined for "
                "this model"
            )
        return self.value


def _transported_products(family: FiberFamily, obs: LocalObservable, t: int) -> np.ndarray:
    emb = embed(obs.region, t, strategy="translate", nu=family.lattice_dim)
    far = emb.transport(obs)
    out = np.ones((family.d_I, family.d_I), dtype=np.complex128)
    for z, f in zip(far.region, far.factors):
        out = out * kernel_matrix(family, z, f)
    return out


def alpha_limit(
    family: FiberFamily,
    obs: LocalObservable,
    t_sequence=DEFAULT_T_SEQUENCE,
    tol: float = DEFAULT_ALPHA_TOL,
) -> AlphaLimitReport:
    """Detect the limit of far-transported local products.

    Evaluates prod_y Tr(h(z,i) h(z,j)* b_y) over translated embeddings at
    each clearance in ``t_sequence`` and requires the final increment to
    fall below ``tol`` (Cauchy detection).  The independence verdict is
    true when all index pairs share the limit within ``tol``; the common
    value is then a state value: positive on positive observables and 1
    at identity factors for unit-norm tails.
    """
    if family.lattice_dim is None:
        raise PreconditionError("tail limits require a lattice model")
    ts = tuple(int(t) for t in t_sequence)
    if len(ts) < 2:
        raise ValidationError("need at least two clearances to detect a limit")
    history = [_transported_products(family, obs, t) for t in ts]
    steps = [float(np.max(np.abs(b - a))) for a, b in zip(history, history[1:])]
    if steps[-1] > tol:
        raise ConvergenceError(
            f"transported products are not Cauchy along t={ts}: "
            f"final increment {steps[-1]:.3e} exceeds {tol}",
            last_partial=history[-1],
            tail_estimate=steps[-1],
        )
    limits = history[-1]
    spread = float(np.max(np.abs(limits - limits.ravel()[0])))
    independent = spread <= tol
    value = complex(limits.mean()) if independent else None
    return AlphaLimitReport(
        limits=limits,
        independent=independent,
        value=value,
        spread=spread,
        last_step=steps[-1],
        t_sequence=ts,
    )


def _joint_observable(obs_a: LocalObservable, far: LocalObservable) -> LocalObservable:
    overlap = set(obs_a.region) & set(far.region)
    if overlap:
        raise GeometryError(
            f"embedded region collides with the near region at {sorted(overlap)!r}"
        )
    return LocalObservable(
        tuple(obs_a.region) + tuple(far.region),
        tuple(obs_a.factors) + tuple(far.factors),
    )


def _check_near_region(obs_a: LocalObservable, t: int):
    outside = [z for z in obs_a.region if lattice.norm1(z) > t - 1]
    if outside:
        raise GeometryError(
            f"near-region sites {outside!r} are not inside the ball of radius {t - 1}"
        )


def mixing_gap(
    family: FiberFamily,
    obs_a: LocalObservable,
    obs_b: LocalObservable,
    t: int,
    strategy: str = "translate",
    seed: int = 0,
    exhaustion: Exhaustion | None = None,
    tail_tol: float = 1e-14,
) -> float:
    """|psi(a . transported b) - psi(a) psi(transported b)|.

    All three expectations are infinite-volume values.  The near region
    must sit inside the ball of radius t-1 and the embedded region
    always clears the t-ball, so the two regions cannot collide.  The
    default tail tolerance is tighter than elsewhere because gaps at
    large clearance sit below 1e-12 and must not drown in boundary
    truncation error.
    """
    _check_near_region(obs_a, t)
    emb = embed(obs_b.region, t, strategy=strategy, nu=family.lattice_dim, seed=seed)
    far = emb.transport(obs_b)
    joint = _joint_observable(obs_a, far)
    v_joint = limit_state_eval(family, joint, exhaustion, tail_tol)
    v_a = limit_state_eval(family, obs_a, exhaustion, tail_tol)
    v_b = limit_state_eval(family, far, exhaustion, tail_tol)
    return abs(v_joint - v_a * v_b)


def alpha_mixing_gap(
    family: FiberFamily,
    obs_a: LocalObservable,
    obs_b: LocalObservable,
    t: int,
    strategy: str = "translate",
    seed: int = 0,
    exhaustion: Exhaustion | None = None,
    tail_tol: float = 1e-14,
    t_sequence=DEFAULT_T_SEQUENCE,
    alpha_tol: float = DEFAULT_ALPHA_TOL,
    alpha_report: AlphaLimitReport | None = None,
) -> float:
    """|psi(a . transported b) - psi(a) alpha(b)| with the tail value alpha.

    Raises a precondition error when the tail limits depend on the index
    pair, in which case no single alpha value exists.
    """
    if alpha_report is None:
        alpha_report = alpha_limit(family, obs_b, t_sequence, alpha_tol)
    alpha_value = alpha_report.require_value()
    _check_near_region(obs_a, t)
    emb = embed(obs_b.region, t, strategy=strategy, nu=family.lattice_dim, seed=seed)
    far = emb.transport(obs_b)
    joint = _joint_observable(obs_a, far)
    v_joint = limit_state_eval(family, joint, exhaustion, tail_tol)
    v_a = limit_state_eval(family, obs_a, exhaustion, tail_tol)
    return abs(v_joint - v_a * alpha_value)


@dataclass(frozen=True)
class ScanRow:
    t: int
    strategy: str
    mixing_gap: float
    alpha_mixing_gap: float  # nan when no alpha value exists


@dataclass(frozen=True)
class ScanResult:
    rows: tuple
    alpha_independent: bool
    decrease_fraction: dict  # strategy -> fraction of consecutive decreases

    def final_over_first(self, strategy: str) -> float:
        gaps = [r.mixing_gap for r in self.rows if r.strategy == strategy]
        return gaps[-1] / gaps[0] if gaps and gaps[0] else float("nan")


def mixing_scan(
    family: FiberFamily,
    obs_a: LocalObservable,
    obs_b: LocalObservable,
    t_list=DEFAULT_T_SEQUENCE,
    strategies=("translate",),
    seed: int = 0,
    tail_tol: float = 1e-14,
    alpha_tol: float = DEFAULT_ALPHA_TOL,
) -> ScanResult:
    """Gap table over clearances and strategies, with a trend statistic.

    The alpha column is NaN for models whose tail limits depend on the
    index pair.  Row order follows ``t_list`` within each strategy
    regardless of evaluation order.
    """
    ts = tuple(int(t) for t in t_list)
    try:
        report = alpha_limit(family, obs_b, tol=alpha_tol)
    except ConvergenceError:
        report = None
    rows = []
    for strategy in strategies:
        for t in ts:
            gap = mixing_gap(family, obs_a, obs_b, t, strategy, seed, tail_tol=tail_tol)
            if report is not None and report.independent:
                agap = alpha_mixing_gap(
                    family, obs_a, obs_b, t, strategy, seed,
                    tail_tol=tail_tol, alpha_report=report,
                )
            else:
                agap = float("nan")
            rows.append(ScanRow(t=t, strategy=strategy, mixing_gap=gap, alpha_mixing_gap=agap))
    fractions = {}
    for strategy in strategies:
        gaps = [r.mixing_gap for r in rows if r.strategy == strategy]
        pairs = list(zip(gaps, gaps[1:]))
        fractions[strategy] = (
            sum(1 for a, b in pairs if b < a) / len(pairs) if pairs else float("nan")
        )
    return ScanResult(
        rows=tuple(rows),
        alpha_independent=bool(report is not None and report.independent),
        decrease_fraction=fractions,
    )


# ---------------------------------------------------------------------------
# Canonical inhomogeneous test family
# ---------------------------------------------------------------------------


def decaying_perturbation_family(
    nu: int = 2,
    epsilon0: float = 6e-7,
    decay: float = 0.78,
    near_amplitude: float | None = 0.3,
    near_radius: int = 3,
    base=None,
    directions=None,
    normalize: bool = True,
    tail_tol: float = 1e-14,
) -> FiberFamily:
    """Unit-vector family h(x, i) = (h + eps_x v_i) / norm, eps_x summable.

    The perturbation amplitude is ``near_amplitude`` inside the ball of
    radius ``near_radius`` and ``epsilon0 * decay^|x|`` outside (pass
    ``near_amplitude=None`` for a purely geometric profile).  The strong
    near-zone couples observables there to the fiber index pair, while
    the weak geometric tail makes every overlap tend to 1, so all tail
    products converge and far-transported local products share a limit
    independent of the index pair.  Correlations between the near zone
    and a region embedded at clearance t then decay like decay^t, which
    keeps the mixing gap visible above roundoff through t ~ 40 while the
    far products settle fast enough for tail-limit detection.  With
    ``normalize`` the origin vectors are rescaled so the total boundary
    weight is exactly 1.

    Default directions perturb the base along a complex phase and an
    orthogonal coordinate, giving overlap deviations first order in
    eps_x (second-order-only deviations would decay too fast to observe
    against roundoff at large clearances).
    """
    if not (0.0 < decay < 1.0):
        raise ValidationError(f"decay must lie in (0, 1), got {decay}")
    if epsilon0 <= 0:
        raise ValidationError(f"epsilon0 must be positive, got {epsilon0}")
    if base is None:
        base = np.array([1.0, 0.0], dtype=np.complex128)
    h = np.asarray(base, dtype=np.complex128)
    if directions is None:
        d = h.shape[0]
        v1 = np.zeros(d, dtype=np.complex128)
        v1[0] = 1j
        v1[1 % d] += 1.0
        v2 = np.zeros(d, dtype=np.complex128)
        v2[0] = -0.6j
        v2[1 % d] += 0.25
        directions = [v1, v2]
    dirs = np.asarray(directions, dtype=np.complex128)
    d_I, d = dirs.shape
    if h.shape != (d,):
        raise ValidationError(
            f"base vector has shape {h.shape}, directions expect dim {d}"
        )

    def amplitude(r: int) -> float:
        if near_amplitude is not None and r <= near_radius:
            return float(near_amplitude)
        return epsilon0 * decay**r

    def raw_vectors(site):
        eps = amplitude(lattice.norm1(site))
        vecs = h[None, :] + eps * dirs
        norms = np.linalg.norm(vecs, axis=1)
        return vecs / norms[:, None]

    def gram_of(vecs):
        return vecs @ vecs.conj().T

    def site_deviation(r: int) -> float:
        probe = raw_vectors((r,) + (0,) * (nu - 1))
        return float(np.max(np.abs(gram_of(probe) - 1.0)))

    def remaining(r: int) -> float:
        # sum of per-site deviations over all shells beyond radius r; the
        # per-site value depends on the site only through its 1-norm
        total = 0.0
        rr = r + 1
        while True:
            term = lattice.shell_size(nu, rr) * site_deviation(rr)
            total += term
            if term < 1e-30 and rr > r + 4:
                return total + 1e-28
            rr += 1
            if rr > r + 4000:
                return total + 1e-28

    scale = 1.0
    if normalize:
        probe = FiberFamily(
            d, d_I, raw_vectors, lattice_dim=nu, tail=OnesTail(remaining=remaining)
        )
        beta_total = boundary_matrix(probe, (), tail_tol=tail_tol).matrix
        total = complex(beta_total.sum())
        if not (total.real > 1e-12 and abs(total.imag) <= 1e-9 * abs(total)):
            raise ValidationError(
                f"total boundary weight {total} cannot be normalized away"
            )
        scale = 1.0 / np.sqrt(total.real)

    origin = (0,) * nu

    def provider(site):
        vecs = raw_vectors(site)
        return scale * vecs if site == origin else vecs

    return FiberFamily(
        d,
        d_I,
        provider,
        lattice_dim=nu,
        tail=OnesTail(remaining=remaining),
        label="decaying perturbation",
    )
