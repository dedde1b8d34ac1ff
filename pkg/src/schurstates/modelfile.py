"""Model and observable files.

One JSON format describes every model the engine accepts.  Complex
numbers serialize as two-element arrays [re, im] of doubles; matrices
are nested arrays of those pairs.  A model file declares its geometry
(an integer lattice of some dimension, or an enumerated site list), the
fiber dimension ``d`` and index count ``d_I``, and exactly one vector
source:

* ``explicit``     — per-site vector blocks on the enumerated sites;
* ``homogeneous``  — one reference block copied to every site;
* ``generators``   — per-site diagonal/unitary/isometry records with a
                     zero-beyond-radius tail rule;
* ``perturbed``    — the decaying-perturbation lattice family, given by
                     a base vector, direction vectors and decay profile.

Validation collects every violation it can find (with site and field
coordinates) instead of stopping at the first.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .kernel import FiberFamily, ZERO_VECTOR_TOL
from .limit import GeneratorSite, GeneratorSpec, boundary_matrix, build_from_generators
from .mixing import decaying_perturbation_family
from .state import LocalObservable

#: Tolerance for the declared-normalization check at load time.
NORMALIZATION_TOL = 1e-8


# ---------------------------------------------------------------------------
# Complex codecs
# ---------------------------------------------------------------------------


def encode_complex(z: complex) -> list:
    return [float(np.real(z)), float(np.imag(z))]


def decode_complex(pair, where: str, errors: list) -> complex:
    if (
        not isinstance(pair, (list, tuple))
        or len(pair) != 2
        or not all(isinstance(v, (int, float)) for v in pair)
    ):
        errors.append(f"{where}: expected [re, im], got {pair!r}")
        return 0j
    return complex(float(pair[0]), float(pair[1]))


def encode_matrix(m) -> list:
    m = np.asarray(m, dtype=np.complex128)
    return [[encode_complex(z) for z in row] for row in m]


def decode_matrix(rows, where: str, errors: list) -> np.ndarray:
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        errors.append(f"{where}: expected a non-empty nested array")
        return np.zeros((1, 1), dtype=np.complex128)
    width = len(rows[0])
    out = np.zeros((len(rows), width), dtype=np.complex128)
    for i, row in enumerate(rows):
        if len(row) != width:
            errors.append(f"{where}: row {i} has length {len(row)}, expected {width}")
            continue
        for j, pair in enumerate(row):
            out[i, j] = decode_complex(pair, f"{where}[{i}][{j}]", errors)
    return out


def encode_vector(v) -> list:
    return [encode_complex(z) for z in np.asarray(v, dtype=np.complex128)]


def decode_vector(entries, where: str, errors: list) -> np.ndarray:
    if not isinstance(entries, list) or not entries:
        errors.append(f"{where}: expected a non-empty array")
        return np.zeros(1, dtype=np.complex128)
    return np.array(
        [decode_complex(p, f"{where}[{k}]", errors) for k, p in enumerate(entries)],
        dtype=np.complex128,
    )


def _decode_site(raw, nu: int | None, where: str, errors: list):
    """Lattice sites are int arrays; enumerated sites are strings or ints."""
    if nu is not None:
        if (
            not isinstance(raw, list)
            or len(raw) != nu
            or not all(isinstance(c, int) for c in raw)
        ):
            errors.append(f"{where}: expected {nu} integer coordinates, got {raw!r}")
            return (0,) * nu
        return tuple(raw)
    if isinstance(raw, (str, int)):
        return raw
    errors.append(f"{where}: site must be a string or int, got {raw!r}")
    return str(raw)


# ---------------------------------------------------------------------------
# Model specification
# ---------------------------------------------------------------------------


@dataclass
class ModelSpec:
    """Parsed, validated model file."""

    d: int
    d_I: int
    mode: str                      # explicit | homogeneous | generators | perturbed
    lattice_dim: int | None = None
    sites: tuple | None = None
    payload: dict = field(default_factory=dict)
    normalized: bool = False
    path: str = ""

    def family(self) -> FiberFamily:
        """Instantiate the fiber family this specification describes."""
        if self.mode == "explicit":
            return FiberFamily.explicit(self.payload["vectors_by_site"])
        if self.mode == "homogeneous":
            return FiberFamily.homogeneous(
                self.payload["reference"],
                sites=self.sites,
                lattice_dim=self.lattice_dim,
            )
        if self.mode == "generators":
            return build_from_generators(self.payload["generator_spec"])
        if self.mode == "perturbed":
            p = self.payload
            return decaying_perturbation_family(
                nu=self.lattice_dim,
                epsilon0=p["epsilon0"],
                decay=p["decay"],
                near_amplitude=p["near_amplitude"],
                near_radius=p["near_radius"],
                base=p["base"],
                directions=p["directions"],
                normalize=p["normalize"],
            )
        raise ValidationError(f"unknown model mode {self.mode!r}")

    def summability_certificate(self) -> float | None:
        spec = self.payload.get("generator_spec")
        return spec.summability_certificate() if spec is not None else None


def _require(data: dict, key: str, types, where: str, errors: list, default=None):
    if key not in data:
        errors.append(f"{where}: missing required field {key!r}")
        return default
    if types is not None and not isinstance(data[key], types):
        errors.append(
            f"{where}.{key}: expected {getattr(types, '__name__', types)}, "
            f"got {type(data[key]).__name__}"
        )
        return default
    return data[key]


def parse_model(data: dict, path: str = "") -> ModelSpec:
    """Validate raw JSON data into a ModelSpec, collecting all violations."""
    errors: list[str] = []
    if not isinstance(data, dict):
        raise ValidationError("model: top level must be a JSON object")

    lat = _require(data, "lattice", dict, "model", errors, {})
    nu = None
    sites = None
    kind = _require(lat, "kind", str, "model.lattice", errors, "")
    if kind == "zd":
        nu = _require(lat, "nu", int, "model.lattice", errors, 1)
        if nu is not None and nu < 1:
            errors.append(f"model.lattice.nu: must be >= 1, got {nu}")
    elif kind == "sites":
        raw_sites = _require(lat, "sites", list, "model.lattice", errors, [])
        sites = tuple(
            _decode_site(s, None, f"model.lattice.sites[{k}]", errors)
            for k, s in enumerate(raw_sites)
        )
        if len(set(sites)) != len(sites):
            errors.append("model.lattice.sites: duplicate site names")
        if not sites:
            errors.append("model.lattice.sites: empty site list")
    else:
        errors.append(f"model.lattice.kind: expected 'zd' or 'sites', got {kind!r}")

    d = _require(data, "fiber_dim", int, "model", errors, 1)
    d_I = _require(data, "index_size", int, "model", errors, 1)
    if isinstance(d, int) and d < 1:
        errors.append(f"model.fiber_dim: must be >= 1, got {d}")
    if isinstance(d_I, int) and d_I < 1:
        errors.append(f"model.index_size: must be >= 1, got {d_I}")

    vectors = _require(data, "vectors", dict, "model", errors, {})
    mode = _require(vectors, "mode", str, "model.vectors", errors, "")
    payload: dict = {}

    if mode == "explicit":
        if sites is None:
            errors.append("model: explicit vectors require an enumerated site list")
        by_site_raw = _require(vectors, "by_site", list, "model.vectors", errors, [])
        by_site = {}
        for k, rec in enumerate(by_site_raw):
            where = f"model.vectors.by_site[{k}]"
            if not isinstance(rec, dict):
                errors.append(f"{where}: expected an object")
                continue
            site = _decode_site(rec.get("site"), None, f"{where}.site", errors)
            block = decode_matrix(rec.get("vectors"), f"{where}.vectors", errors)
            if block.shape != (d_I, d):
                errors.append(
                    f"{where}.vectors: shape {block.shape} != ({d_I}, {d}) at site {site!r}"
                )
                continue
            norms = np.linalg.norm(block, axis=1)
            for i in np.nonzero(norms <= ZERO_VECTOR_TOL)[0]:
                errors.append(f"{where}: zero vector at site {site!r}, index {int(i)}")
            by_site[site] = block
        if sites is not None and not errors:
            missing = [s for s in sites if s not in by_site]
            if missing:
                errors.append(f"model.vectors.by_site: no vectors for sites {missing!r}")
        payload["vectors_by_site"] = by_site

    elif mode == "homogeneous":
        ref = decode_matrix(
            _require(vectors, "reference", list, "model.vectors", errors, []),
            "model.vectors.reference",
            errors,
        )
        if ref.shape != (d_I, d):
            errors.append(
                f"model.vectors.reference: shape {ref.shape} != ({d_I}, {d})"
            )
        else:
            norms = np.linalg.norm(ref, axis=1)
            for i in np.nonzero(norms <= ZERO_VECTOR_TOL)[0]:
                errors.append(f"model.vectors.reference: zero vector at index {int(i)}")
        payload["reference"] = ref

    elif mode == "generators":
        if nu is None:
            errors.append("model: generator vectors require a zd lattice")
        if d != d_I:
            errors.append(
                f"model: generator models need fiber_dim == index_size, "
                f"got {d} != {d_I}"
            )
        site_raw = _require(vectors, "sites", list, "model.vectors", errors, [])
        tail = _require(vectors, "tail", dict, "model.vectors", errors, {})
        radius = _require(tail, "beyond_radius", int, "model.vectors.tail", errors, 0)
        if _require(tail, "D_H", str, "model.vectors.tail", errors, "zero") != "zero":
            errors.append("model.vectors.tail.D_H: only 'zero' tails are supported")
        records = []
        for k, rec in enumerate(site_raw):
            where = f"model.vectors.sites[{k}]"
            if not isinstance(rec, dict):
                errors.append(f"{where}: expected an object")
                continue
            site = _decode_site(rec.get("site"), nu or 1, f"{where}.site", errors)
            diag_raw = rec.get("D_H")
            if not isinstance(diag_raw, list) or not all(
                isinstance(v, (int, float)) for v in diag_raw
            ):
                errors.append(f"{where}.D_H: expected an array of reals")
                continue
            u = decode_matrix(rec.get("U"), f"{where}.U", errors)
            w = decode_matrix(rec.get("W"), f"{where}.W", errors)
            records.append(
                GeneratorSite(site=site, diag=np.asarray(diag_raw, float), u=u, w=w)
            )
        if not errors:
            try:
                payload["generator_spec"] = GeneratorSpec(
                    records=tuple(records), tail_radius=radius, nu=nu
                )
            except ValidationError as exc:
                errors.append(f"model.vectors: {exc}")

    elif mode == "perturbed":
        if nu is None:
            errors.append("model: perturbed vectors require a zd lattice")
        base = decode_vector(
            _require(vectors, "base", list, "model.vectors", errors, []),
            "model.vectors.base",
            errors,
        )
        dirs_raw = _require(vectors, "directions", list, "model.vectors", errors, [])
        dirs = decode_matrix(dirs_raw, "model.vectors.directions", errors)
        if dirs.shape != (d_I, d):
            errors.append(
                f"model.vectors.directions: shape {dirs.shape} != ({d_I}, {d})"
            )
        if base.shape != (d,):
            errors.append(f"model.vectors.base: length {base.shape[0]} != {d}")
        eps = vectors.get("epsilon0", 6e-7)
        decay = vectors.get("decay", 0.78)
        near_amp = vectors.get("near_amplitude")
        near_radius = vectors.get("near_radius", 3)
        if not isinstance(eps, (int, float)) or eps <= 0:
            errors.append(f"model.vectors.epsilon0: must be positive, got {eps!r}")
        if not isinstance(decay, (int, float)) or not 0 < decay < 1:
            errors.append(f"model.vectors.decay: must lie in (0, 1), got {decay!r}")
        payload.update(
            base=base,
            directions=dirs,
            epsilon0=float(eps) if isinstance(eps, (int, float)) else 6e-7,
            decay=float(decay) if isinstance(decay, (int, float)) else 0.78,
            near_amplitude=near_amp,
            near_radius=near_radius,
            normalize=bool(vectors.get("normalize", True)),
        )

    else:
        errors.append(
            "model.vectors.mode: expected one of 'explicit', 'homogeneous', "
            f"'generators', 'perturbed', got {mode!r}"
        )

    normalized = data.get("normalized", False)
    if not isinstance(normalized, bool):
        errors.append("model.normalized: expected a boolean")
        normalized = False

    if errors:
        raise ValidationError(
            "model validation failed:\n  " + "\n  ".join(errors)
        )

    spec = ModelSpec(
        d=int(d),
        d_I=int(d_I),
        mode=mode,
        lattice_dim=nu,
        sites=sites,
        payload=payload,
        normalized=normalized,
        path=path,
    )

    if normalized:
        family = spec.family()
        total = complex(boundary_matrix(family, (), tail_tol=1e-10).matrix.sum())
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise ValidationError(
                f"model declares normalization but the total boundary weight is "
                f"{total!r} (|deviation| = {abs(total - 1.0):.3e} > {NORMALIZATION_TOL})"
            )
    return spec


def load_model(path) -> ModelSpec:
    """Read and validate a model file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read model file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(
            f"model file {path} is not valid JSON: line {exc.lineno}, "
            f"column {exc.colno}: {exc.msg}"
        ) from exc
    return parse_model(data, path=str(path))


# ---------------------------------------------------------------------------
# Observable files
# ---------------------------------------------------------------------------


def parse_observable(data: dict, nu: int | None) -> LocalObservable:
    errors: list[str] = []
    if not isinstance(data, dict):
        raise ValidationError("observable: top level must be a JSON object")
    region_raw = _require(data, "region", list, "observable", errors, [])
    region = tuple(
        _decode_site(s, nu, f"observable.region[{k}]", errors)
        for k, s in enumerate(region_raw)
    )
    factors_raw = _require(data, "factors", list, "observable", errors, [])
    factors = tuple(
        decode_matrix(m, f"observable.factors[{k}]", errors)
        for k, m in enumerate(factors_raw)
    )
    if len(region) != len(factors):
        errors.append(
            f"observable: {len(region)} region sites vs {len(factors)} factors"
        )
    if errors:
        raise ValidationError(
            "observable validation failed:\n  " + "\n  ".join(errors)
        )
    return LocalObservable(region, factors)


def load_observable(path, nu: int | None) -> LocalObservable:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read observable file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(
            f"observable file {path} is not valid JSON: line {exc.lineno}, "
            f"column {exc.colno}: {exc.msg}"
        ) from exc
    return parse_observable(data, nu)


def save_observable(path, obs: LocalObservable, nu: int | None):
    data = {
        "region": [list(s) if nu is not None else s for s in obs.region],
        "factors": [encode_matrix(f) for f in obs.factors],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=1)
        fh.write("\n")


def parse_region(text: str, nu: int | None) -> tuple:
    """Parse the --region flag: sites separated by ';', coords by ','."""
    sites = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        if nu is not None:
            coords = [c.strip() for c in part.split(",")]
            if len(coords) != nu or not all(
                c.lstrip("+-").isdigit() for c in coords
            ):
                raise ValidationError(
                    f"region site {part!r}: expected {nu} integer coordinates"
                )
            sites.append(tuple(int(c) for c in coords))
        else:
            sites.append(part)
    if not sites:
        raise ValidationError(f"region {text!r} contains no sites")
    return tuple(sites)
