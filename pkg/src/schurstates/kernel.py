"""Per-site fiber vectors and the kernels they induce.

A model attaches to every site x a tuple of d_I non-zero vectors
h(x, 1), ..., h(x, d_I) in the d-dimensional fiber.  Each pair of
indices gives a linear functional on d x d matrices,

    b  ->  Tr(h(x,i) h(x,j)* b)  =  <h(x,j), b h(x,i)>,

and collecting all pairs gives a d_I x d_I matrix-valued map per site.
This module certifies the positivity structure of those maps (Choi
matrix, Gram matrices over observable tuples) and forms their
multi-site entrywise products.

Index layout, fixed once for the whole package:

* ``family.vectors(x)`` has shape (d_I, d); row i is h(x, i).
* ``kernel_matrix(family, x, b)[i, j] == kernel_entry(family, x, i, j, b)
  == Tr(h_i h_j* b)``; at b = identity this is the Gram matrix
  ``G[i, j] = <h_j, h_i>``.
* ``kernel_gram_matrix`` rows/cols are composite indices (i, k) -> i*n + k
  for fiber index i and observable index k.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DimensionError, ValidationError
from .linalg import as_cmatrix

#: Vectors with norm at or below this are rejected as zero.
ZERO_VECTOR_TOL = 1e-14


# ---------------------------------------------------------------------------
# Tail certificates
#
# Families defined on an infinite lattice may declare how their per-site
# Gram matrices behave far from the origin.  The limit machinery uses
# these declarations to stop tail products with a rigorous bound.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OnesTail:
    """Far Gram matrices approach the all-ones pattern.

    ``remaining(r)`` bounds the sum over all sites with 1-norm > r of
    ``max_ij |G_x[i,j] - 1|``.
    """

    remaining: Callable[[int], float]


@dataclass(frozen=True)
class IdentityTail:
    """Far Gram matrices approach the identity pattern.

    ``remaining(r)`` bounds the sum over sites with 1-norm > r of
    ``max_ij |G_x[i,j] - delta_ij|``; ``exact_beyond`` marks a radius past
    which every Gram matrix is exactly the identity.
    """

    remaining: Callable[[int], float]
    exact_beyond: int | None = None


@dataclass(frozen=True)
class ConstantTail:
    """Every site shares one Gram matrix (homogeneous families)."""

    gram: np.ndarray


# ---------------------------------------------------------------------------
# Fiber families
# ---------------------------------------------------------------------------


class FiberFamily:
    """Sites with per-site fiber vector tuples.

    Vectors are produced lazily by ``provider(site)`` and cached, so the
    same object serves finite enumerated models and infinite lattice
    models.  All vectors must be non-zero and share one (d, d_I).
    """

    def __init__(
        self,
        d: int,
        d_I: int,
        provider: Callable[[object], np.ndarray],
        sites: tuple | None = None,
        lattice_dim: int | None = None,
        tail=None,
        label: str = "",
    ):
        if d < 1 or d_I < 1:
            raise ValidationError(f"fiber dims must be positive, got d={d}, d_I={d_I}")
        if (sites is None) == (lattice_dim is None):
            raise ValidationError(
                "exactly one of an explicit site list or a lattice dimension is required"
            )
        self.d = int(d)
        self.d_I = int(d_I)
        self._provider = provider
        self.sites = tuple(sites) if sites is not None else None
        if self.sites is not None and len(set(self.sites)) != len(self.sites):
            raise ValidationError("site list contains duplicates")
        self.lattice_dim = lattice_dim
        self.tail = tail
        self.label = label
        self._vcache: dict = {}
        self._gcache: dict = {}

    @property
    def is_lattice(self) -> bool:
        return self.lattice_dim is not None

    def _check_site(self, site):
        if self.sites is not None and site not in set(self.sites):
            raise ValidationError(f"unknown site {site!r}")
        if self.is_lattice:
            if not (isinstance(site, tuple) and len(site) == self.lattice_dim):
                raise ValidationError(
                    f"site {site!r} is not a {self.lattice_dim}-tuple of ints"
                )

    def vectors(self, site) -> np.ndarray:
        """The (d_I, d) array whose row i is h(site, i)."""
        cached = self._vcache.get(site)
        if cached is not None:
            return cached
        self._check_site(site)
        v = np.asarray(self._provider(site), dtype=np.complex128)
        if v.shape != (self.d_I, self.d):
            raise DimensionError(
                f"site {site!r}: vectors have shape {v.shape}, "
                f"expected {(self.d_I, self.d)}"
            )
        if not np.all(np.isfinite(v)):
            raise ValidationError(f"site {site!r}: non-finite vector entries")
        norms = np.linalg.norm(v, axis=1)
        small = np.nonzero(norms <= ZERO_VECTOR_TOL)[0]
        if small.size:
            raise ValidationError(
                f"site {site!r}: zero fiber vector at index {int(small[0])}"
            )
        v.setflags(write=False)
        self._vcache[site] = v
        return v

    def gram(self, site) -> np.ndarray:
        """Overlap matrix G[i, j] = Tr(h_i h_j*) = <h_j, h_i> at one site."""
        cached = self._gcache.get(site)
        if cached is not None:
            return cached
        v = self.vectors(site)
        g = v @ v.conj().T
        g.setflags(write=False)
        self._gcache[site] = g
        return g

    # -- constructors -------------------------------------------------

    @classmethod
    def explicit(cls, vectors_by_site: dict, label: str = "") -> "FiberFamily":
        """Finite family from a site -> (d_I, d) array mapping."""
        if not vectors_by_site:
            raise ValidationError("explicit family needs at least one site")
        sites = tuple(vectors_by_site)
        arrays = {s: np.asarray(a, dtype=np.complex128) for s, a in vectors_by_site.items()}
        first = arrays[sites[0]]
        if first.ndim != 2:
            raise DimensionError("per-site vectors must form a 2-D array")
        d_I, d = first.shape
        for s, a in arrays.items():
            if a.shape != (d_I, d):
                raise DimensionError(
                    f"site {s!r}: vector block shape {a.shape} != {(d_I, d)}"
                )
        return cls(d, d_I, lambda s: arrays[s], sites=sites, label=label)

    @classmethod
    def homogeneous(
        cls,
        vectors,
        sites: tuple | None = None,
        lattice_dim: int | None = None,
        label: str = "",
    ) -> "FiberFamily":
        """Same vector tuple at every site (finite list or full lattice)."""
        v = np.asarray(vectors, dtype=np.complex128)
        if v.ndim != 2:
            raise DimensionError("homogeneous reference vectors must be a 2-D array")
        d_I, d = v.shape
        tail = None
        if lattice_dim is not None:
            tail = ConstantTail(gram=v @ v.conj().T)
        return cls(
            d,
            d_I,
            lambda s: v,
            sites=sites,
            lattice_dim=lattice_dim,
            tail=tail,
            label=label,
        )


# ---------------------------------------------------------------------------
# Kernel evaluation
# ---------------------------------------------------------------------------


def _check_local_operator(family: FiberFamily, b, name: str = "observable") -> np.ndarray:
    m = as_cmatrix(b, name)
    if m.shape != (family.d, family.d):
        raise DimensionError(
            f"{name}: shape {m.shape}, expected {(family.d, family.d)}"
        )
    return m


def kernel_entry(family: FiberFamily, site, i: int, j: int, b) -> complex:
    """Tr(h(x,i) h(x,j)* b) = <h(x,j), b h(x,i)> for one index pair."""
    if not (0 <= i < family.d_I and 0 <= j < family.d_I):
        raise DimensionError(
            f"index pair ({i}, {j}) out of range for d_I={family.d_I}"
        )
    m = _check_local_operator(family, b)
    v = family.vectors(site)
    return complex(np.vdot(v[j], m @ v[i]))


def kernel_matrix(family: FiberFamily, site, b) -> np.ndarray:
    """The d_I x d_I matrix with (i, j) entry Tr(h_i h_j* b).

    Linear in b; at b = identity it reduces to ``family.gram(site)``.
    """
    m = _check_local_operator(family, b)
    v = family.vectors(site)
    # rows are h_i:  (v* b v^T)[j, i] = <h_j, b h_i>  ->  transpose
    return (v.conj() @ m @ v.T).T


@dataclass(frozen=True)
class SchurKernelMap:
    """Explicit rank-one operator table h_i h_j* for one site.

    ``operators[i, j]`` is the d x d matrix h(x,i) h(x,j)*; the entry at
    (j, i) is always the adjoint of the entry at (i, j).  This is the
    slow, literal form of the per-site kernel; ``kernel_matrix`` is the
    fast path, and the two are cross-checked in tests.
    """

    site: object
    operators: np.ndarray  # shape (d_I, d_I, d, d)

    @classmethod
    def from_family(cls, family: FiberFamily, site) -> "SchurKernelMap":
        v = family.vectors(site)
        ops = np.einsum("ip,jq->ijpq", v, v.conj())
        ops.setflags(write=False)
        return cls(site=site, operators=ops)

    def apply(self, b) -> np.ndarray:
        """Evaluate every index-pair functional on b via explicit traces."""
        m = as_cmatrix(b)
        return np.einsum("ijpq,qp->ij", self.operators, m)


def choi_matrix(family: FiberFamily, site) -> np.ndarray:
    """Choi matrix of the per-site kernel map on the standard fiber basis.

    The output is (d*d_I) x (d*d_I) with row index (p, i) and column
    index (q, j), entry Tr(h_j h_i* e_p e_q*) — the index pairing under
    which positivity of this matrix is equivalent to complete positivity
    of the kernel map.  Built by evaluating the map on matrix units, not
    from a closed form, so it genuinely exercises the kernel.
    """
    d, d_I = family.d, family.d_I
    choi = np.zeros((d * d_I, d * d_I), dtype=np.complex128)
    unit = np.zeros((d, d), dtype=np.complex128)
    for p in range(d):
        for q in range(d):
            unit[p, q] = 1.0
            block = kernel_matrix(family, site, unit).T
            choi[p * d_I:(p + 1) * d_I, q * d_I:(q + 1) * d_I] = block
            unit[p, q] = 0.0
    return choi


@dataclass(frozen=True)
class CpReport:
    """Complete-positivity certificate for a per-site kernel map."""

    is_cp: bool
    min_eigenvalue: float
    max_abs_eigenvalue: float


def certify_cp(family: FiberFamily, site, tol: float = 1e-10) -> CpReport:
    """PSD-certify the Choi matrix of the site's kernel map."""
    c = choi_matrix(family, site)
    eigs = np.linalg.eigvalsh(0.5 * (c + c.conj().T))
    min_eig = float(eigs[0])
    max_abs = float(np.max(np.abs(eigs)))
    return CpReport(min_eig >= -tol * max(1.0, max_abs), min_eig, max_abs)


def kernel_gram_matrix(family: FiberFamily, site, bs) -> np.ndarray:
    """Positivity matrix of the kernel over a tuple of observables.

    For observables b_1, ..., b_n returns the (d_I*n) x (d_I*n) matrix
    with entry at row (j, h), column (i, k) equal to
    Tr(h_i h_j* b_h* b_k), composite index (i, k) -> i*n + k.  It equals
    the Gram matrix of the vectors {b_k h_i} and is therefore PSD.
    """
    mats = [
        _check_local_operator(family, b, f"observable {k}") for k, b in enumerate(bs)
    ]
    if not mats:
        raise ValidationError("kernel_gram_matrix: empty observable list")
    n = len(mats)
    d_I = family.d_I
    out = np.zeros((d_I * n, d_I * n), dtype=np.complex128)
    for h, bh in enumerate(mats):
        for k, bk in enumerate(mats):
            block = kernel_matrix(family, site, bh.conj().T @ bk)
            # block[i, j] = Tr(h_i h_j* bh* bk); row (j, h), col (i, k)
            out[h::n, k::n] = block.T
    return out


def product_kernel_matrix(family: FiberFamily, sites, bs) -> np.ndarray:
    """Entrywise product of per-site kernel matrices over distinct sites.

    This is the matrix form of the multi-site kernel on elementary
    tensor observables; a single site reduces to ``kernel_matrix``.
    """
    sites = list(sites)
    bs = list(bs)
    if not sites:
        raise ValidationError("product_kernel_matrix: empty site list")
    if len(sites) != len(bs):
        raise DimensionError(
            f"product_kernel_matrix: {len(sites)} sites vs {len(bs)} observables"
        )
    if len(set(sites)) != len(sites):
        raise ValidationError("product_kernel_matrix: duplicate sites")
    out = np.ones((family.d_I, family.d_I), dtype=np.complex128)
    for x, b in zip(sites, bs):
        out = out * kernel_matrix(family, x, b)
    return out


def product_kernel_gram_matrix(family: FiberFamily, sites, obs_tuples) -> np.ndarray:
    """Positivity matrix of a multi-site kernel over observable tuples.

    ``obs_tuples[h]`` holds one d x d factor per site in ``sites``; the
    entry at row (j, h), column (i, k) is the product over sites of
    Tr(h_i h_j* b_{x,h}* b_{x,k}).  Positivity of this matrix for every
    choice of tuples is what makes the multi-site map a kernel of the
    same class as its single-site factors.
    """
    sites = list(sites)
    tuples = [list(t) for t in obs_tuples]
    if not tuples:
        raise ValidationError("product_kernel_gram_matrix: empty tuple list")
    for t in tuples:
        if len(t) != len(sites):
            raise DimensionError(
                f"observable tuple has {len(t)} factors for {len(sites)} sites"
            )
    n = len(tuples)
    d_I = family.d_I
    out = np.zeros((d_I * n, d_I * n), dtype=np.complex128)
    for h, th in enumerate(tuples):
        for k, tk in enumerate(tuples):
            bs = [
                np.asarray(bh, dtype=np.complex128).conj().T @ np.asarray(bk, dtype=np.complex128)
                for bh, bk in zip(th, tk)
            ]
            block = product_kernel_matrix(family, sites, bs)
            out[h::n, k::n] = block.T
    return out


def independence_profile(family: FiberFamily, site) -> tuple[bool, bool]:
    """(linearly independent, spans the fiber) diagnostic for one site.

    Families whose vectors are independent but do not span their fiber
    are the regime where existence of the tail limit is also necessary,
    not only sufficient; the flag is informational.
    """
    v = family.vectors(site)
    rank = int(np.linalg.matrix_rank(v, tol=1e-12 * max(1.0, float(np.max(np.abs(v))))))
    return rank == family.d_I, rank == family.d
