"""Finite-volume superposition vectors and their expectation values.

The state vector on a finite region is the sum over fiber indices of
elementary tensor products of the per-site vectors.  Expectations of
tensor-product observables are computed two ways:

* a dense tensor contraction, exponential in the region size — the
  oracle every fast path is measured against;
* the entrywise-product form, linear in the region size: the sum of all
  entries of the multi-site kernel matrix.

Tensor index ordering is site-major: amplitudes are indexed by one
fiber index per site, in region order, flattened C-style (the fiber
index of the last site varies fastest).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionError,
    GeometryError,
    PreconditionError,
    ResourceLimitError,
    ValidationError,
)
from .kernel import FiberFamily, product_kernel_matrix

#: Regions larger than this are refused by the dense path.
DEFAULT_DENSE_CAP = 8


@dataclass(frozen=True)
class LocalObservable:
    """A finite region together with one d x d factor per site."""

    region: tuple
    factors: tuple

    def __post_init__(self):
        region = tuple(self.region)
        factors = tuple(np.asarray(f, dtype=np.complex128) for f in self.factors)
        if len(region) != len(factors):
            raise DimensionError(
                f"{len(region)} sites vs {len(factors)} factors"
            )
        if len(set(region)) != len(region):
            raise ValidationError("observable region has duplicate sites")
        if factors:
            d = factors[0].shape[0]
            for s, f in zip(region, factors):
                if f.ndim != 2 or f.shape != (d, d):
                    raise DimensionError(
                        f"factor at site {s!r} has shape {f.shape}, expected {(d, d)}"
                    )
                if not np.all(np.isfinite(f)):
                    raise ValidationError(f"factor at site {s!r} has non-finite entries")
        object.__setattr__(self, "region", region)
        object.__setattr__(self, "factors", factors)

    @classmethod
    def identity(cls, region, d: int) -> "LocalObservable":
        eye = np.eye(d, dtype=np.complex128)
        return cls(tuple(region), tuple(eye for _ in region))

    def factor_at(self, site) -> np.ndarray:
        return self.factors[self.region.index(site)]

    def restricted(self, region) -> "LocalObservable":
        return LocalObservable(tuple(region), tuple(self.factor_at(s) for s in region))


@dataclass(frozen=True)
class DenseState:
    """Explicit amplitudes of a superposition vector on a finite region."""

    region: tuple
    d: int
    amplitudes: np.ndarray  # flat, length d**len(region), site-major

    def norm_squared(self) -> float:
        return float(np.real(np.vdot(self.amplitudes, self.amplitudes)))

    def as_tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((self.d,) * len(self.region))


def _check_cap(region, d: int, dense_cap: int):
    k = len(region)
    if k > dense_cap:
        raise ResourceLimitError(
            f"dense path refused: region of {k} sites needs {d}^{k} = {d**k} "
            f"amplitudes (cap is {dense_cap} sites)"
        )


def superposition_vector(
    family: FiberFamily, region, dense_cap: int = DEFAULT_DENSE_CAP
) -> DenseState:
    """Dense amplitudes of sum_i  h(x1,i) (x) ... (x) h(xk,i)."""
    region = tuple(region)
    if not region:
        raise ValidationError("empty region")
    if len(set(region)) != len(region):
        raise ValidationError("region has duplicate sites")
    _check_cap(region, family.d, dense_cap)
    amp = np.zeros((family.d,) * len(region), dtype=np.complex128)
    for i in range(family.d_I):
        term = np.ones((), dtype=np.complex128)
        for x in region:
            term = np.multiply.outer(term, family.vectors(x)[i])
        amp = amp + term
    return DenseState(region=region, d=family.d, amplitudes=amp.reshape(-1))


def expectation_dense(
    family: FiberFamily,
    full_region,
    obs: LocalObservable,
    dense_cap: int = DEFAULT_DENSE_CAP,
) -> complex:
    """<Psi, (b (x) 1) Psi> by explicit tensor contraction.

    The observable acts on a subset of ``full_region``; the remaining
    sites carry the identity.  This is the exponential-cost oracle.
    """
    full_region = tuple(full_region)
    missing = [s for s in obs.region if s not in full_region]
    if missing:
        raise GeometryError(
            f"observable sites {missing!r} are outside the evaluation region"
        )
    state = superposition_vector(family, full_region, dense_cap)
    psi = state.as_tensor()
    acted = psi
    for s, f in zip(obs.region, obs.factors):
        axis = full_region.index(s)
        acted = np.tensordot(f, acted, axes=([1], [axis]))
        acted = np.moveaxis(acted, 0, axis)
    return complex(np.vdot(psi, acted))


def expectation_schur(family: FiberFamily, obs: LocalObservable) -> complex:
    """Fast path: sum of all entries of the multi-site kernel matrix.

    Equals sum_{i,j} prod_x Tr(h_{x,i} h_{x,j}* b_x); cost linear in the
    region size.  Matches ``expectation_dense`` on the same region.
    """
    if not obs.region:
        raise ValidationError("empty observable region")
    m = product_kernel_matrix(family, obs.region, obs.factors)
    return complex(m.sum())


def expectation_extended(
    family: FiberFamily, full_region, obs: LocalObservable
) -> complex:
    """Expectation on a larger region, identity outside the observable.

    sum_{i,j} [prod_{x in obs} Tr(h_i h_j* b_x)] [prod_{y outside} <h_j, h_i>],
    linear in the size of ``full_region``.
    """
    full_region = tuple(full_region)
    if len(set(full_region)) != len(full_region):
        raise ValidationError("region has duplicate sites")
    missing = [s for s in obs.region if s not in full_region]
    if missing:
        raise GeometryError(
            f"observable sites {missing!r} are outside the evaluation region"
        )
    m = product_kernel_matrix(family, obs.region, obs.factors) if obs.region else None
    if m is None:
        m = np.ones((family.d_I, family.d_I), dtype=np.complex128)
    obs_sites = set(obs.region)
    for y in full_region:
        if y not in obs_sites:
            m = m * family.gram(y)
    return complex(m.sum())


def expectation_normalized(family: FiberFamily, obs: LocalObservable) -> complex:
    """Expectation divided by the value at identity factors on the region."""
    weight = expectation_schur(family, LocalObservable.identity(obs.region, family.d))
    if abs(weight) <= 1e-14:
        raise PreconditionError(
            f"normalization weight {weight} is numerically zero on this region"
        )
    return expectation_schur(family, obs) / weight
