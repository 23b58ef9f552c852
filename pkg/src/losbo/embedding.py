"""Isometric linear dimension reduction.

Identity and orthonormal-linear (PCA-style) maps, a plain-text import/export
format for externally fitted linear encoders, and distance-preservation
diagnostics comparing GP estimates between the original and latent spaces.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

import numpy as np

from .errors import DegenerateDataWarning, InvalidInput, InvalidMap, ParseError
from .geometry import Box
from .gp import GpDataset, KernelSpec, fit_posterior, posterior_query

_ORTHO_TOL = 1e-6

MAP_FORMAT_VERSION = "isomap v1"


@dataclass(frozen=True)
class EmbeddingMap:
    """Identity or orthonormal linear map z = W (x - offset).

    Rows of W are orthonormal, so the decoder is the transpose:
    x = W^T z + offset.
    """

    kind: str
    source_dim: int
    latent_dim: int
    weights: np.ndarray | None = None
    offset: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("identity", "linear_orthonormal"):
            raise InvalidInput(f"unknown embedding kind {self.kind!r}")
        if self.kind == "identity":
            if self.latent_dim != self.source_dim:
                raise InvalidInput("identity map must preserve the dimension")
            return
        W = np.asarray(self.weights, dtype=float)
        m = np.zeros(self.source_dim) if self.offset is None else np.asarray(
            self.offset, dtype=float
        )
        if W.shape != (self.latent_dim, self.source_dim):
            raise InvalidInput("weight matrix shape mismatch")
        if m.shape != (self.source_dim,):
            raise InvalidInput("offset shape mismatch")
        gram = W @ W.T
        if np.max(np.abs(gram - np.eye(self.latent_dim))) > _ORTHO_TOL:
            raise InvalidMap("embedding rows are not orthonormal")
        object.__setattr__(self, "weights", W)
        object.__setattr__(self, "offset", m)


def identity_map(dim: int) -> EmbeddingMap:
    return EmbeddingMap("identity", dim, dim)


def fit_pca(data, latent_dim: int) -> EmbeddingMap:
    """Top principal directions of the data as an orthonormal linear map.

    Deterministic sign convention: the first nonzero component of every row is
    positive. Rank-deficient data (rank < latent_dim) emits a
    DegenerateDataWarning; missing directions are padded from the orthonormal
    complement returned by the SVD.
    """
    X = np.atleast_2d(np.asarray(data, dtype=float))
    n, dim = X.shape
    if latent_dim > dim:
        raise InvalidInput("latent dimension exceeds the source dimension")
    if n <= latent_dim:
        raise InvalidInput("need more samples than latent dimensions")
    offset = X.mean(axis=0)
    centered = X - offset
    _, s, vt = np.linalg.svd(centered, full_matrices=True)
    rank = int(np.sum(s > s[0] * max(n, dim) * np.finfo(float).eps)) if s.size else 0
    if rank < latent_dim:
        warnings.warn(
            f"data rank {rank} below latent dimension {latent_dim}; "
            "padding with an arbitrary orthonormal complement",
            DegenerateDataWarning,
        )
    W = vt[:latent_dim].copy()
    for row in W:
        nz = np.flatnonzero(np.abs(row) > 1e-12)
        if nz.size and row[nz[0]] < 0:
            row *= -1.0
    return EmbeddingMap("linear_orthonormal", dim, latent_dim, W, offset)


def encode(emb: EmbeddingMap, x):
    """Map points from the original space into the latent space."""
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    X = np.atleast_2d(arr)
    if X.shape[1] != emb.source_dim:
        raise InvalidInput("point dimension does not match the map")
    if emb.kind == "identity":
        Z = X.copy()
    else:
        Z = (X - emb.offset) @ emb.weights.T
    return Z[0] if single else Z


def decode(emb: EmbeddingMap, z):
    """Map latent points back to the original space."""
    arr = np.asarray(z, dtype=float)
    single = arr.ndim == 1
    Z = np.atleast_2d(arr)
    if Z.shape[1] != emb.latent_dim:
        raise InvalidInput("point dimension does not match the map")
    if emb.kind == "identity":
        X = Z.copy()
    else:
        X = Z @ emb.weights + emb.offset
    return X[0] if single else X


def latent_bounds(emb: EmbeddingMap, points) -> Box:
    """Axis-aligned bounding box of the encoded points."""
    return Box.bounding(encode(emb, np.atleast_2d(np.asarray(points, dtype=float))))


@dataclass(frozen=True)
class IsometryReport:
    """Distance-preservation diagnostics over a point sample."""

    distance_correlation: float
    mean_gp_mean_gap: float
    mean_gp_var_gap: float
    sample_count: int


def isometry_diagnostics(
    emb: EmbeddingMap,
    points,
    kernel: KernelSpec,
    probe_data: GpDataset,
) -> IsometryReport:
    """Grade how well the map preserves distances and GP estimates.

    Pearson correlation between original- and latent-space pairwise distances
    of `points`, plus the mean absolute gap between posterior mean/variance
    computed from `probe_data` in the original space versus from its encoded
    image in the latent space.
    """
    P = np.atleast_2d(np.asarray(points, dtype=float))
    if P.shape[0] < 2:
        raise InvalidInput("need at least two points for diagnostics")
    Z = encode(emb, P)
    pairs = list(combinations(range(P.shape[0]), 2))
    dx = np.array([np.linalg.norm(P[i] - P[j]) for i, j in pairs])
    dz = np.array([np.linalg.norm(Z[i] - Z[j]) for i, j in pairs])
    if np.std(dx) == 0 or np.std(dz) == 0:
        corr = 1.0 if np.allclose(dx, dz) else 0.0
    else:
        corr = float(np.corrcoef(dx, dz)[0, 1])

    post_x = fit_posterior(probe_data, kernel)
    encoded_data = GpDataset(
        encode(emb, probe_data.inputs), probe_data.targets,
        probe_data.noise_variance,
    )
    post_z = fit_posterior(encoded_data, kernel)
    mean_x, var_x = posterior_query(post_x, P)
    mean_z, var_z = posterior_query(post_z, Z)
    return IsometryReport(
        distance_correlation=corr,
        mean_gp_mean_gap=float(np.mean(np.abs(mean_x - mean_z))),
        mean_gp_var_gap=float(np.mean(np.abs(var_x - var_z))),
        sample_count=P.shape[0],
    )


def save_map(emb: EmbeddingMap, path) -> None:
    """Write the map in the plain-text format documented in the README."""
    lines = [
        MAP_FORMAT_VERSION,
        f"kind {emb.kind}",
        f"source_dim {emb.source_dim}",
        f"latent_dim {emb.latent_dim}",
    ]
    if emb.kind == "linear_orthonormal":
        for row in emb.weights:
            lines.append("W " + " ".join(repr(float(v)) for v in row))
        lines.append("offset " + " ".join(repr(float(v)) for v in emb.offset))
    Path(path).write_text("\n".join(lines) + "\n")


def load_map(path) -> EmbeddingMap:
    """Parse a map file; validates orthonormality of the weight rows."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read map file: {exc}") from exc
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != MAP_FORMAT_VERSION:
        raise ParseError("missing or unsupported map format header")
    fields: dict[str, str] = {}
    rows: list[list[float]] = []
    offset = None
    for ln in lines[1:]:
        key, _, rest = ln.partition(" ")
        try:
            if key == "W":
                rows.append([float(v) for v in rest.split()])
            elif key == "offset":
                offset = np.array([float(v) for v in rest.split()])
            elif key in ("kind", "source_dim", "latent_dim"):
                fields[key] = rest.strip()
            else:
                raise ParseError(f"unknown map file key {key!r}")
        except ValueError as exc:
            raise ParseError(f"bad numeric value in map file: {ln!r}") from exc
    try:
        kind = fields["kind"]
        source_dim = int(fields["source_dim"])
        latent_dim = int(fields["latent_dim"])
    except KeyError as exc:
        raise ParseError(f"map file missing field {exc.args[0]}") from exc
    if kind == "identity":
        return EmbeddingMap("identity", source_dim, latent_dim)
    W = np.array(rows, dtype=float)
    if W.shape != (latent_dim, source_dim):
        raise ParseError("weight rows disagree with the declared dimensions")
    if offset is None or offset.shape != (source_dim,):
        raise ParseError("offset vector missing or of wrong length")
    return EmbeddingMap(kind, source_dim, latent_dim, W, offset)
