"""Dataset ingestion (manifest + images / matrix files) and synthetic sets.

Manifest schema (JSON, paths relative to the manifest file)::

    {
      "name": "tiny",
      "preprocessing": {"resize": [20, 20], "grayscale": true},
      "classes": [
        {"class_id": 0, "sets": [
            {"set_id": "a", "images": "class0/a"},            # directory of .png/.pgm
            {"set_id": "b", "images": ["b/001.png", "b/002.pgm"]},
            {"set_id": "c", "matrix": "feats/c.txt"}           # one sample per line
        ]}
      ]
    }

Synthetic random streams use Philox keyed by ``SeedSequence(seed, spawn_key)``:

    (0, c)          class-mean direction for class c
    (1, c, j)       log-space perturbations and mean offset of set j in class c
    (2, c, j, i)    standard-normal draw for sample i of that set
"""
import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np
from PIL import Image, UnidentifiedImageError

from .descriptors import SampleSet, preprocess_image
from .errors import DimensionMismatch, IoError, ManifestError, UnsupportedImage
from .spd import matrix_exp, matrix_sqrt

IMAGE_SUFFIXES = (".png", ".pgm")

MANIFEST_SCHEMA = {
    "type": "object",
    "required": ["classes"],
    "properties": {
        "name": {"type": "string"},
        "preprocessing": {
            "type": "object",
            "properties": {
                "resize": {
                    "type": "array",
                    "items": {"type": "integer", "minimum": 1},
                    "minItems": 2,
                    "maxItems": 2,
                },
                "grayscale": {"const": True},
            },
        },
        "classes": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["class_id", "sets"],
                "properties": {
                    "class_id": {"type": "integer", "minimum": 0},
                    "sets": {
                        "type": "array",
                        "minItems": 1,
                        "items": {
                            "type": "object",
                            "required": ["set_id"],
                            "properties": {
                                "set_id": {"type": "string", "minLength": 1},
                                "images": {
                                    "oneOf": [
                                        {"type": "string"},
                                        {"type": "array", "items": {"type": "string"}, "minItems": 1},
                                    ]
                                },
                                "matrix": {"type": "string"},
                            },
                            "oneOf": [{"required": ["images"]}, {"required": ["matrix"]}],
                        },
                    },
                },
            },
        },
    },
}


def read_matrix_file(path):
    """Read one sample vector per line, whitespace-separated decimals."""
    path = Path(path)
    try:
        data = np.loadtxt(path, dtype=np.float64, ndmin=2)
    except OSError as exc:
        raise IoError(f"cannot read matrix file {path}: {exc}") from exc
    except ValueError as exc:
        raise DimensionMismatch(f"ragged or malformed matrix file {path}: {exc}") from exc
    return data


def write_matrix_file(path, matrix):
    try:
        np.savetxt(path, np.atleast_2d(matrix), fmt="%.17g", delimiter=" ")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_image(path):
    path = Path(path)
    if path.suffix.lower() not in IMAGE_SUFFIXES:
        raise UnsupportedImage(f"{path}: only PNG and PGM are supported")
    try:
        with Image.open(path) as im:
            if im.mode == "P":
                im = im.convert("RGB")
            if im.mode not in ("L", "RGB"):
                raise UnsupportedImage(f"{path}: unsupported pixel mode {im.mode}")
            return np.asarray(im, dtype=np.uint8)
    except FileNotFoundError as exc:
        raise IoError(f"missing image {path}") from exc
    except (OSError, UnidentifiedImageError) as exc:
        raise IoError(f"cannot decode image {path}: {exc}") from exc


def _image_paths(base, source):
    if isinstance(source, str):
        folder = base / source
        if not folder.is_dir():
            raise IoError(f"missing image directory {folder}")
        paths = [p for p in folder.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES]
        if not paths:
            raise IoError(f"no PNG/PGM images in {folder}")
    else:
        paths = [base / s for s in source]
        for p in paths:
            if not p.is_file():
                raise IoError(f"missing image {p}")
    return sorted(paths, key=lambda p: p.name)


def load_manifest(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise IoError(f"cannot read manifest {path}: {exc}") from exc
    try:
        manifest = json.loads(text)
        jsonschema.validate(manifest, MANIFEST_SCHEMA)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: invalid JSON: {exc}") from exc
    except jsonschema.ValidationError as exc:
        raise ManifestError(f"{path}: {exc.message}") from exc
    ids = [c["class_id"] for c in manifest["classes"]]
    if len(set(ids)) != len(ids):
        raise ManifestError(f"{path}: duplicate class_id")
    return manifest


def load_dataset(path):
    """Load every set named in a manifest as :class:`SampleSet` objects.

    Output is sorted by ``(class_id, set_id)``; images inside a set by filename.
    """
    path = Path(path)
    manifest = load_manifest(path)
    base = path.parent
    size = tuple(manifest.get("preprocessing", {}).get("resize", (20, 20)))
    sets = []
    for cls in sorted(manifest["classes"], key=lambda c: c["class_id"]):
        for entry in sorted(cls["sets"], key=lambda s: s["set_id"]):
            if "matrix" in entry:
                samples = read_matrix_file(base / entry["matrix"])
            else:
                paths = _image_paths(base, entry["images"])
                samples = np.stack([preprocess_image(read_image(p), size) for p in paths])
            sets.append(SampleSet(cls["class_id"], samples, entry["set_id"]))
    dims = {s.dim for s in sets}
    if len(dims) != 1:
        raise DimensionMismatch(f"{path}: sets have different vector dimensions {sorted(dims)}")
    return sets


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of the log-space Gaussian set generator.

    Class means in log space are ``base + (class_separation / sqrt 2) * E_c`` with
    orthonormal symmetric ``E_c``, so any two class means sit exactly
    ``class_separation`` apart. Each set moves ``within_spread`` away from its
    class mean in a random direction.

    The last four fields shape harder variants: ``mean_spread`` draws a
    class-independent mean offset per set, ``eigen_range`` spreads the base
    log-eigenvalues over ``[-r, r]`` (largest first), ``signal_dims`` confines
    class directions to the trailing (small-eigenvalue) coordinates, and
    ``nuisance_spread`` adds a random log-space move on the leading coordinates.
    """

    num_classes: int = 4
    sets_per_class: int = 6
    samples_per_set: int = 100
    ambient_dim: int = 10
    class_separation: float = 5.0
    within_spread: float = 0.5
    seed: int = 7
    mean_spread: float = 1.0
    eigen_range: float = 0.0
    signal_dims: Optional[int] = None
    nuisance_spread: float = 0.0
    exact_covariance: bool = True

    def __post_init__(self):
        if min(self.num_classes, self.sets_per_class, self.ambient_dim) < 1:
            raise ValueError("counts must be >= 1")
        if self.samples_per_set < 2:
            raise ValueError("samples_per_set must be >= 2")
        if min(self.class_separation, self.within_spread, self.mean_spread,
               self.eigen_range, self.nuisance_spread) < 0:
            raise ValueError("separation and spreads must be non-negative")
        m = self.ambient_dim if self.signal_dims is None else self.signal_dims
        if not 1 <= m <= self.ambient_dim:
            raise ValueError("signal_dims must lie in [1, ambient_dim]")
        if self.num_classes > m * (m + 1) // 2:
            raise ValueError("too many classes for the signal subspace")

    def to_dict(self):
        return asdict(self)


SYNTHETIC_PRESETS = {
    # well separated in log space; set means carry no class information
    "default": SyntheticSpec(),
    # classes differ only in small-eigenvalue directions, hidden in raw space
    # behind large-eigenvalue nuisance variation
    "ablation": SyntheticSpec(
        eigen_range=2.5, signal_dims=4, nuisance_spread=0.3, within_spread=0.3,
        class_separation=3.0,
    ),
    # every class drawn from the same distribution
    "chance": SyntheticSpec(class_separation=0.0, sets_per_class=10, within_spread=1.0),
}


def synthetic_spec(name="default", **overrides):
    try:
        spec = SYNTHETIC_PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown synthetic preset {name!r}; choose from {sorted(SYNTHETIC_PRESETS)}")
    return replace(spec, **overrides)


def stream(seed, *key):
    """Philox generator for the documented ``spawn_key`` stream."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


def _random_symmetric(rng, d, block=None):
    g = rng.standard_normal((d, d))
    g = (g + g.T) / 2.0
    if block is not None:
        mask = np.zeros((d, d), dtype=bool)
        mask[block, block] = True
        g = np.where(mask, g, 0.0)
    return g


def _unit(m):
    n = np.linalg.norm(m)
    return m / n if n > 0 else m


def class_directions(spec):
    """Orthonormal (Frobenius) symmetric directions, one per class."""
    d = spec.ambient_dim
    m = d if spec.signal_dims is None else spec.signal_dims
    block = slice(d - m, d)
    raw = np.stack([_random_symmetric(stream(spec.seed, 0, c), d, block).ravel()
                    for c in range(spec.num_classes)])
    q, r = np.linalg.qr(raw.T)
    q = q * np.where(np.diag(r) < 0, -1.0, 1.0)
    dirs = q.T.reshape(spec.num_classes, d, d)
    return (dirs + dirs.transpose(0, 2, 1)) / 2.0


def class_log_means(spec):
    d = spec.ambient_dim
    base = np.diag(np.linspace(spec.eigen_range, -spec.eigen_range, d))
    return base + (spec.class_separation / np.sqrt(2.0)) * class_directions(spec)


def _gaussian_samples(spec, c, j, target, mean):
    n, d = spec.samples_per_set, spec.ambient_dim
    z = np.stack([stream(spec.seed, 2, c, j, i).standard_normal(d) for i in range(n)])
    z = z - z.mean(axis=0)
    if spec.exact_covariance and n - 1 >= d:
        s = (z.T @ z) / (n - 1)
        w, u = np.linalg.eigh((s + s.T) / 2.0)
        if w[0] > 1e-10 * w[-1]:
            z = z @ ((u / np.sqrt(w)) @ u.T)
    return mean + z @ matrix_sqrt(target)


def generate_synthetic(spec):
    """Deterministic labeled sets drawn around per-class log-space means.

    With ``exact_covariance`` (default) the standard-normal draws are whitened so
    each set's sample covariance equals its SPD target exactly; otherwise the
    target is only the population covariance.
    """
    d = spec.ambient_dim
    m = d if spec.signal_dims is None else spec.signal_dims
    nuisance_block = slice(0, d - m) if m < d else slice(0, d)
    means = class_log_means(spec)
    sets = []
    for c in range(spec.num_classes):
        for j in range(spec.sets_per_class):
            rng = stream(spec.seed, 1, c, j)
            log_target = means[c] + spec.within_spread * _unit(_random_symmetric(rng, d))
            log_target = log_target + spec.nuisance_spread * _unit(_random_symmetric(rng, d, nuisance_block))
            offset = spec.mean_spread * rng.standard_normal(d)
            samples = _gaussian_samples(spec, c, j, matrix_exp(log_target), offset)
            sets.append(SampleSet(c, samples, f"c{c}_s{j:02d}"))
    return sets
