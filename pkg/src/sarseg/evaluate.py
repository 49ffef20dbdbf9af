"""Confusion-matrix accumulation, accuracy metrics and report generation.

Matrix orientation: rows index the reference class, columns the predicted
class. Producer's accuracy (PA) for class c is the diagonal over the
reference-row total; user's accuracy (UA) is the diagonal over the
predicted-column total. Note this follows the row=PA / column=UA layout of
the benchmark tables this engine reproduces, which is the reverse of some
remote-sensing texts; overall accuracy is the trace over the grand total
and kappa is the chance-corrected agreement (P_o - P_e) / (1 - P_e).

Counts are kept as int64 and marginal products are computed in exact
integer arithmetic before the final float division, so country-scale totals
(~1e9 pixels, marginal products ~1e17) lose no precision.
"""

import csv
import logging
import platform
import time
from dataclasses import dataclass

import numpy as np

from .errors import InputError, UndefinedMetric
from .raster import NODATA_CODE, default_codebook

log = logging.getLogger("sarseg.evaluate")

AGREEMENT_BANDS = ((0.2, "poor"), (0.4, "fair"), (0.6, "moderate"),
                   (0.8, "good"), (1.0 + 1e-12, "very good"))


class ConfusionMatrix:
    """k x k count matrix: f[i, j] = pixels with reference i predicted j."""

    def __init__(self, k=5, counts=None):
        if counts is not None:
            counts = np.asarray(counts, dtype=np.int64)
            if counts.shape != (k, k):
                raise InputError(f"counts must be {k}x{k}, got {counts.shape}")
            if (counts < 0).any():
                raise InputError("confusion counts must be non-negative")
            self.f = counts.copy()
        else:
            self.f = np.zeros((k, k), dtype=np.int64)
        self.k = k

    def accumulate(self, reference, predicted):
        """Add per-pixel counts; pixels that are nodata in either mask are skipped."""
        ref = reference.codes if hasattr(reference, "codes") else np.asarray(reference)
        pred = predicted.codes if hasattr(predicted, "codes") else np.asarray(predicted)
        if ref.shape != pred.shape:
            raise InputError(f"geometry mismatch: {ref.shape} vs {pred.shape}")
        valid = (ref != NODATA_CODE) & (pred != NODATA_CODE)
        r = ref[valid].astype(np.int64)
        p = pred[valid].astype(np.int64)
        if r.size:
            if int(r.max(initial=0)) >= self.k or int(p.max(initial=0)) >= self.k:
                raise InputError("class code outside confusion matrix range")
            binned = np.bincount(r * self.k + p, minlength=self.k * self.k)
            self.f += binned.reshape(self.k, self.k)
        return self

    def merge(self, other):
        if other.k != self.k:
            raise InputError("cannot merge confusion matrices of different sizes")
        out = ConfusionMatrix(self.k, self.f)
        out.f += other.f
        return out

    __add__ = merge

    @property
    def n(self):
        return int(self.f.sum())

    def row_totals(self):
        return [int(v) for v in self.f.sum(axis=1)]

    def col_totals(self):
        return [int(v) for v in self.f.sum(axis=0)]

    def copy(self):
        return ConfusionMatrix(self.k, self.f)

    def __eq__(self, other):
        return isinstance(other, ConfusionMatrix) and np.array_equal(self.f, other.f)


def producer_accuracy(cm, c):
    """Diagonal over the reference-row total, in percent."""
    row = int(cm.f[c].sum())
    if row == 0:
        raise UndefinedMetric(f"class {c} has no reference pixels")
    return 100.0 * int(cm.f[c, c]) / row


def user_accuracy(cm, c):
    """Diagonal over the predicted-column total, in percent."""
    col = int(cm.f[:, c].sum())
    if col == 0:
        raise UndefinedMetric(f"class {c} has no predicted pixels")
    return 100.0 * int(cm.f[c, c]) / col


def overall_accuracy(cm):
    n = cm.n
    if n == 0:
        raise UndefinedMetric("empty confusion matrix")
    return 100.0 * int(np.trace(cm.f)) / n


def kappa(cm):
    """Chance-corrected agreement from exact integer marginals."""
    n = cm.n
    if n == 0:
        raise UndefinedMetric("empty confusion matrix")
    rows = cm.row_totals()
    cols = cm.col_totals()
    p_o = int(np.trace(cm.f)) / n
    p_e = sum(r * c for r, c in zip(rows, cols)) / (n * n)
    if p_e >= 1.0:
        raise UndefinedMetric("degenerate single-class matrix: chance agreement is 1")
    return (p_o - p_e) / (1.0 - p_e)


def agreement_label(kappa_value):
    """Verbal agreement band for a kappa value (values below 0 count as poor)."""
    for upper, label in AGREEMENT_BANDS:
        if kappa_value < upper:
            return label
    return AGREEMENT_BANDS[-1][1]


@dataclass
class ClassMetrics:
    class_id: int
    name: str
    producer_accuracy: float | None
    user_accuracy: float | None
    reference_px: int
    predicted_px: int
    area_km2: float


@dataclass
class MetricsReport:
    classes: list
    overall_accuracy: float | None
    kappa: float | None
    agreement: str | None
    total_px: int

    def to_text(self):
        lines = ["class        ref_px        pred_px       area_km2      UA%     PA%"]
        for c in self.classes:
            ua = f"{c.user_accuracy:7.2f}" if c.user_accuracy is not None else "     NA"
            pa = f"{c.producer_accuracy:7.2f}" if c.producer_accuracy is not None else "     NA"
            lines.append(f"{c.name:<12} {c.reference_px:>13} {c.predicted_px:>13} "
                         f"{c.area_km2:>14.3f} {ua} {pa}")
        oa = f"{self.overall_accuracy:.2f}" if self.overall_accuracy is not None else "NA"
        kp = f"{self.kappa:.3f}" if self.kappa is not None else "NA"
        lines.append(f"overall accuracy: {oa} %")
        lines.append(f"kappa: {kp} ({self.agreement or 'NA'})")
        lines.append(f"total pixels: {self.total_px}")
        return "\n".join(lines) + "\n"

    def write_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["class_id", "name", "reference_px", "predicted_px",
                        "area_km2", "user_accuracy_pct", "producer_accuracy_pct"])
            for c in self.classes:
                w.writerow([c.class_id, c.name, c.reference_px, c.predicted_px,
                            f"{c.area_km2:.6f}",
                            "" if c.user_accuracy is None else f"{c.user_accuracy:.6f}",
                            "" if c.producer_accuracy is None else f"{c.producer_accuracy:.6f}"])
            w.writerow([])
            w.writerow(["overall_accuracy_pct",
                        "" if self.overall_accuracy is None else f"{self.overall_accuracy:.6f}"])
            w.writerow(["kappa", "" if self.kappa is None else f"{self.kappa:.6f}"])
            w.writerow(["agreement", self.agreement or ""])
            w.writerow(["total_px", self.total_px])


def report(cm, codebook=None, pixel_size_m=20.0):
    """Full metrics report; undefined per-class metrics come back as None."""
    codebook = codebook or default_codebook()
    rows = cm.row_totals()
    cols = cm.col_totals()
    km2_per_px = (pixel_size_m * pixel_size_m) / 1e6
    classes = []
    for entry in codebook.entries:
        c = entry.id
        try:
            pa = producer_accuracy(cm, c)
        except UndefinedMetric:
            pa = None
        try:
            ua = user_accuracy(cm, c)
        except UndefinedMetric:
            ua = None
        classes.append(ClassMetrics(c, entry.name, pa, ua, rows[c], cols[c],
                                    rows[c] * km2_per_px))
    try:
        oa = overall_accuracy(cm)
    except UndefinedMetric:
        oa = None
    try:
        kp = kappa(cm)
        agree = agreement_label(kp)
    except UndefinedMetric:
        kp = None
        agree = None
    return MetricsReport(classes=classes, overall_accuracy=oa, kappa=kp,
                         agreement=agree, total_px=cm.n)


def write_confusion_csv(cm, path, codebook=None):
    """Dump the count matrix (reference rows, predicted columns) as CSV."""
    codebook = codebook or default_codebook()
    names = codebook.names()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["reference\\predicted"] + names + ["row_total"])
        for i, name in enumerate(names):
            w.writerow([name] + [int(v) for v in cm.f[i]] + [int(cm.f[i].sum())])
        w.writerow(["col_total"] + cm.col_totals() + [cm.n])


def read_confusion_csv(path, k=5):
    with open(path, "r", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    counts = [[int(v) for v in row[1:k + 1]] for row in rows[1:k + 1]]
    return ConfusionMatrix(k, np.array(counts, dtype=np.int64))


@dataclass
class BenchmarkResult:
    seconds_per_image: float
    repetitions: int
    images: int
    hardware: str
    high_variance: bool

    def __str__(self):
        flag = " (single repetition; high variance)" if self.high_variance else ""
        return (f"{self.seconds_per_image:.4f} s/image over {self.repetitions} reps "
                f"x {self.images} images on {self.hardware}{flag}")


def benchmark_inference(net, imagelets, repetitions=3, warmup=1):
    """Mean wall-clock seconds per imagelet forward pass (warmup excluded)."""
    batch = np.stack(imagelets)
    for _ in range(max(1, warmup)):
        net.forward(batch)
    t0 = time.perf_counter()
    for _ in range(repetitions):
        net.forward(batch)
    elapsed = time.perf_counter() - t0
    hardware = f"{platform.machine()} {platform.processor() or 'cpu'} ({platform.system()})"
    return BenchmarkResult(
        seconds_per_image=elapsed / (repetitions * len(imagelets)),
        repetitions=repetitions,
        images=len(imagelets),
        hardware=hardware,
        high_variance=repetitions <= 1,
    )
