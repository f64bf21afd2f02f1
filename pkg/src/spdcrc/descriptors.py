"""Covariance descriptors for sample sets and image preprocessing."""
from dataclasses import dataclass

import numpy as np

from .errors import InvalidSample, TooFewSamples, UnsupportedImage
from .spd import make_spd

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass
class SampleSet:
    """One labeled set of ``n`` vectors of dimension ``d`` (``samples`` is ``(n, d)``)."""

    label: int
    samples: np.ndarray
    set_id: str = ""

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 2:
            raise InvalidSample(f"samples must be 2-D (n, d), got shape {self.samples.shape}")
        if int(self.label) < 0:
            raise InvalidSample("label must be a non-negative integer")
        self.label = int(self.label)

    @property
    def dim(self):
        return self.samples.shape[1]

    def mean_vector(self):
        return self.samples.mean(axis=0)


@dataclass(frozen=True)
class DescriptorConfig:
    perturbation_scale: float = 1e-3
    perturbation_floor: float = 1e-6

    def __post_init__(self):
        if not (self.perturbation_scale > 0 and self.perturbation_floor > 0):
            raise ValueError("perturbation_scale and perturbation_floor must be positive")


def sample_covariance(samples):
    """Unbiased covariance of the rows of ``samples`` (two-pass)."""
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 2:
        raise InvalidSample(f"samples must be 2-D (n, d), got shape {x.shape}")
    n = x.shape[0]
    if n < 2:
        raise TooFewSamples(f"covariance needs at least 2 samples, got {n}")
    if not np.all(np.isfinite(x)):
        raise InvalidSample("samples contain non-finite values")
    xc = x - x.mean(axis=0)
    c = (xc.T @ xc) / (n - 1)
    return (c + c.T) / 2.0


def perturbation(cov, cfg=DescriptorConfig()):
    return max(cfg.perturbation_scale * float(np.trace(cov)), cfg.perturbation_floor)


def covariance_descriptor(samples, cfg=DescriptorConfig()):
    """SPD descriptor ``C + lam * I`` of a sample set.

    ``C`` is the sample covariance and ``lam = max(scale * trace(C), floor)``,
    so a degenerate set (all samples equal) still yields a strictly positive
    definite matrix.

    Parameters
    ----------
    samples : SampleSet or ndarray, shape (n, d)
    cfg : DescriptorConfig
    """
    if isinstance(samples, SampleSet):
        samples = samples.samples
    c = sample_covariance(samples)
    lam = perturbation(c, cfg)
    return make_spd(c + lam * np.eye(c.shape[0]))


def to_grayscale(raw):
    """Return a float64 gray image in the 0..255 range.

    Accepts 8-bit gray ``(H, W)``, 8-bit RGB ``(H, W, 3)``, or real-valued arrays
    of the same shapes. RGB is reduced with Rec. 601 luma weights.
    """
    img = np.asarray(raw)
    if img.dtype == np.uint8 or img.dtype.kind == "f":
        img = img.astype(np.float64)
    else:
        raise UnsupportedImage(f"unsupported pixel dtype {img.dtype}")
    if img.ndim == 3 and img.shape[2] == 1:
        img = img[:, :, 0]
    if img.ndim == 3:
        if img.shape[2] != 3:
            raise UnsupportedImage(f"expected 1 or 3 channels, got {img.shape[2]}")
        r, g, b = LUMA_WEIGHTS
        img = r * img[:, :, 0] + g * img[:, :, 1] + b * img[:, :, 2]
    elif img.ndim != 2:
        raise UnsupportedImage(f"unsupported image shape {img.shape}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise UnsupportedImage("image has zero width or height")
    if not np.all(np.isfinite(img)):
        raise UnsupportedImage("image has non-finite pixels")
    return img


def _linear_weights(n_in, n_out):
    # half-pixel centers, edge clamped, no antialiasing
    src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    i0 = np.floor(src).astype(int)
    i1 = np.minimum(i0 + 1, n_in - 1)
    frac = src - i0
    return i0, i1, frac


def resize_bilinear(img, shape):
    """Bilinear resize of a 2-D array to ``shape = (rows, cols)``."""
    rows, cols = shape
    r0, r1, fr = _linear_weights(img.shape[0], rows)
    c0, c1, fc = _linear_weights(img.shape[1], cols)
    tmp = img[r0, :] * (1.0 - fr)[:, None] + img[r1, :] * fr[:, None]
    return tmp[:, c0] * (1.0 - fc)[None, :] + tmp[:, c1] * fc[None, :]


def preprocess_image(raw, size=(20, 20)):
    """Gray, resize to ``size``, flatten row-major, scale to [0, 1]."""
    gray = to_grayscale(raw)
    return (resize_bilinear(gray, size) / 255.0).ravel()
