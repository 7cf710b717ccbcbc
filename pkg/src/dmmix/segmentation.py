"""Grayscale PGM ingestion and mixture-based intensity segmentation.

Every pixel is one count observation; a mixture fit on the empirical pmf of
intensities gives per-class responsibilities, and each pixel takes the class
with the largest responsibility.  Components are ordered by mean so class 1
is always the darkest.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import FitConfig, fit, matched_pi_update, _resp_lenient
from .mixtures import MixtureSpec
from .robustness import ContaminationSpec, contaminate

_MAX_INTENSITY = 255


@dataclass(frozen=True)
class LabelImage:
    width: int
    height: int
    labels: np.ndarray  # row-major class ids, 1..K

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("width and height must be positive")
        labels = np.asarray(self.labels, dtype=int).ravel()
        object.__setattr__(self, "labels", labels)
        if labels.size != self.width * self.height:
            raise ValueError("label count must equal width * height")
        if labels.size and labels.min() < 1:
            raise ValueError("labels are 1-based class ids")

    def as_grid(self) -> np.ndarray:
        return self.labels.reshape(self.height, self.width)


class PgmParseError(ValueError):
    """Malformed PGM content; the message names the failing byte offset."""


def _tokens_with_offsets(blob: bytes):
    """Yield whitespace-separated header tokens, skipping # comments."""
    i, n = 0, len(blob)
    while i < n:
        c = blob[i : i + 1]
        if c.isspace():
            i += 1
        elif c == b"#":
            while i < n and blob[i : i + 1] != b"\n":
                i += 1
        else:
            start = i
            while i < n and not blob[i : i + 1].isspace() and blob[i : i + 1] != b"#":
                i += 1
            yield blob[start:i], start, i
        # i already advanced


def read_pgm(path) -> np.ndarray:
    """Read a P2 (ASCII) or P5 (binary) PGM with maxval <= 255."""
    with open(path, "rb") as fh:
        blob = fh.read()
    toks = _tokens_with_offsets(blob)

    def next_tok(what):
        try:
            return next(toks)
        except StopIteration:
            raise PgmParseError(
                f"truncated file: expected {what} at byte {len(blob)}"
            ) from None

    magic, off, _ = next_tok("magic number")
    if magic not in (b"P2", b"P5"):
        raise PgmParseError(f"unknown magic {magic!r} at byte {off}")

    header = []
    for what in ("width", "height", "maxval"):
        tok, off, end = next_tok(what)
        try:
            val = int(tok)
        except ValueError:
            raise PgmParseError(f"non-integer {what} {tok!r} at byte {off}") from None
        if val <= 0:
            raise PgmParseError(f"{what} must be positive, got {val} at byte {off}")
        header.append((val, off, end))
    (width, _, _), (height, _, _), (maxval, moff, mend) = header
    if maxval > _MAX_INTENSITY:
        raise PgmParseError(
            f"maxval {maxval} at byte {moff} unsupported (must be <= {_MAX_INTENSITY})"
        )

    count = width * height
    if magic == b"P2":
        vals = np.empty(count, dtype=int)
        for j in range(count):
            tok, off, _ = next_tok(f"pixel {j}")
            try:
                vals[j] = int(tok)
            except ValueError:
                raise PgmParseError(f"non-integer pixel {tok!r} at byte {off}") from None
            if not 0 <= vals[j] <= maxval:
                raise PgmParseError(f"pixel {vals[j]} out of range at byte {off}")
        return vals.reshape(height, width)

    # P5: payload starts exactly one whitespace byte after the maxval token
    start = mend + 1
    if start + count > len(blob):
        raise PgmParseError(
            f"binary payload needs {count} bytes from byte {start}, file has {len(blob)}"
        )
    vals = np.frombuffer(blob[start : start + count], dtype=np.uint8).astype(int)
    bad = np.nonzero(vals > maxval)[0]
    if bad.size:
        raise PgmParseError(f"pixel {vals[bad[0]]} out of range at byte {start + bad[0]}")
    return vals.reshape(height, width)


def write_pgm(path, image, binary: bool = True) -> None:
    img = np.asarray(image)
    if img.ndim != 2 or img.size == 0:
        raise ValueError("image must be a nonempty 2-D array")
    vals = np.rint(img).astype(int)
    if vals.min() < 0 or vals.max() > _MAX_INTENSITY:
        raise ValueError("intensities must lie in [0, 255]")
    h, w = vals.shape
    with open(path, "wb") as fh:
        if binary:
            fh.write(f"P5\n{w} {h}\n{_MAX_INTENSITY}\n".encode())
            fh.write(vals.astype(np.uint8).tobytes())
        else:
            fh.write(f"P2\n{w} {h}\n{_MAX_INTENSITY}\n".encode())
            body = "\n".join(" ".join(str(v) for v in row) for row in vals)
            fh.write(body.encode() + b"\n")


def default_display_values(n_classes: int) -> np.ndarray:
    """Evenly spaced display intensities, darkest class first."""
    return np.rint(np.linspace(0.0, float(_MAX_INTENSITY), n_classes)).astype(int)


def render_labels(label_image: LabelImage, display_values=None) -> np.ndarray:
    k = int(label_image.labels.max()) if label_image.labels.size else 1
    disp = (default_display_values(k) if display_values is None
            else np.asarray(display_values, dtype=int))
    if disp.size < k:
        raise ValueError("need one display value per class")
    return disp[label_image.labels - 1].reshape(label_image.height, label_image.width)


def contaminate_image(image, spec: ContaminationSpec) -> np.ndarray:
    """Apply a contamination mechanism pixel-wise, clipping back to [0, 255]."""
    img = np.asarray(image)
    noisy = contaminate(img.ravel().astype(float), spec)
    return np.clip(np.rint(noisy), 0, _MAX_INTENSITY).astype(int).reshape(img.shape)


def segment(
    image,
    n_components: int,
    div: str = "hd",
    fit_config: FitConfig | None = None,
    contamination: ContaminationSpec | None = None,
) -> tuple[LabelImage, MixtureSpec]:
    """Label each pixel by its most responsible mixture component."""
    img = np.asarray(image)
    if img.size == 0:
        raise ValueError("image is empty")
    if n_components < 2:
        raise ValueError("need at least two classes")
    if contamination is not None:
        img = contaminate_image(img, contamination)
    pixels = img.ravel().astype(float)
    if pixels.min() < 0 or pixels.max() > _MAX_INTENSITY:
        raise ValueError("intensities must lie in [0, 255]")

    if fit_config is None:
        fit_config = FitConfig(divergence=div, pi_update=matched_pi_update(div))
    else:
        import dataclasses

        fit_config = dataclasses.replace(fit_config, divergence=div)
    theta = fit(pixels, "poisson", n_components, fit_config).theta_hat

    order = np.argsort(theta.component_means())
    theta = MixtureSpec(theta.family, theta.weights[order], theta.params[order])
    resp = _resp_lenient(theta, pixels)
    labels = np.argmax(resp, axis=1) + 1
    h, w = img.shape if img.ndim == 2 else (1, img.size)
    return LabelImage(width=w, height=h, labels=labels), theta


def phantom(
    rates=(30.0, 120.0, 220.0), shape=(200, 200), seed: int = 0
) -> tuple[np.ndarray, LabelImage]:
    """Synthetic test image: horizontal bands of Poisson intensities.

    Pixels split into len(rates) equal contiguous blocks (row-major), block j
    drawn from Poisson(rates[j]) and clipped to [0, 255].
    """
    h, w = shape
    n = h * w
    k = len(rates)
    rng = np.random.default_rng(seed)
    labels = np.minimum(np.arange(n) * k // n, k - 1) + 1
    vals = np.empty(n, dtype=int)
    for j, lam in enumerate(rates):
        idx = labels == j + 1
        vals[idx] = np.clip(rng.poisson(float(lam), idx.sum()), 0, _MAX_INTENSITY)
    return vals.reshape(h, w), LabelImage(width=w, height=h, labels=labels)


def label_accuracy(predicted: LabelImage, truth: LabelImage) -> float:
    if predicted.labels.size != truth.labels.size:
        raise ValueError("label images differ in size")
    return float(np.mean(predicted.labels == truth.labels))
