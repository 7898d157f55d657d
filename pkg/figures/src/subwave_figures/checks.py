"""Qualitative feature checks over spectrum/sweep tables.

Each check returns a CheckResult; the renderer collects them into the
figure's report file.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def check(name, passed, detail="") -> CheckResult:
    return CheckResult(name, bool(passed), detail)


def has_deep_dip(x, y, floor=0.05, name="deep_dip") -> CheckResult:
    ymin = float(np.min(y))
    return check(name, ymin < floor, f"min={ymin:.3g} (floor {floor})")


def has_unit_peak(x, y, level=0.99, name="unit_peak") -> CheckResult:
    ymax = float(np.max(y))
    return check(name, ymax > level, f"max={ymax:.4g} (level {level})")


def sharp_feature(x, y, high=0.9, low=0.1, within=0.1, name="sharp_feature") -> CheckResult:
    """A high point and a low point separated by less than `within` in x."""
    xs_high = x[y > high]
    xs_low = x[y < low]
    if xs_high.size == 0 or xs_low.size == 0:
        return check(name, False, "no high or no low points")
    gap = float(np.min(np.abs(xs_high[:, None] - xs_low[None, :])))
    return check(name, gap < within, f"closest high/low gap {gap:.4g} (within {within})")


def peak_location(x, y):
    return float(x[int(np.argmax(y))])


def peak_shifted_by(x1, y1, x2, y2, shift, tol, name="peak_shift") -> CheckResult:
    p1, p2 = peak_location(x1, y1), peak_location(x2, y2)
    got = p2 - p1
    return check(name, abs(got - shift) <= tol,
                 f"peak moved by {got:+.4g}, expected {shift:+.4g} +- {tol}")


def monotone(values, direction="increasing", name="monotone") -> CheckResult:
    d = np.diff(np.asarray(values, dtype=float))
    ok = np.all(d > 0) if direction == "increasing" else np.all(d < 0)
    return check(f"{name}_{direction}", ok,
                 f"extreme violation {float(d.min() if direction == 'increasing' else d.max()):.3g}")


def non_monotone(values, name="non_monotone") -> CheckResult:
    d = np.diff(np.asarray(values, dtype=float))
    return check(name, bool(np.any(d < 0) and np.any(d > 0)),
                 "strictly monotone" if (np.all(d >= 0) or np.all(d <= 0)) else "has a local extremum")


def non_increasing_within_error(values, errors, name="non_increasing_1se") -> CheckResult:
    v = np.asarray(values, dtype=float)
    e = np.asarray(errors, dtype=float)
    worst = 0.0
    ok = True
    for i in range(len(v) - 1):
        margin = np.hypot(e[i], e[i + 1])
        excess = v[i + 1] - v[i] - margin
        worst = max(worst, excess)
        ok = ok and excess <= 0
    return check(name, ok, f"worst increase beyond 1 s.e. {worst:.3g}")


def all_above(values, reference, name="above_reference") -> CheckResult:
    v = np.asarray(values, dtype=float)
    return check(name, bool(np.all(v > reference)),
                 f"min={v.min():.4g} vs reference {reference:.4g}")


def all_below(values, reference, name="below_reference") -> CheckResult:
    v = np.asarray(values, dtype=float)
    return check(name, bool(np.all(v < reference)),
                 f"max={v.max():.4g} vs reference {reference:.4g}")


def interior_maximum(x, values, name="interior_maximum") -> CheckResult:
    v = np.asarray(values, dtype=float)
    i = int(np.argmax(v))
    ok = 0 < i < len(v) - 1
    return check(name, ok, f"argmax at x={float(np.asarray(x)[i]):.4g}")


def ordered_curves(list_of_values, name="ordered_curves", frac=0.9) -> CheckResult:
    """Curves supplied weakest-first must dominate pairwise on >= frac of points."""
    ok_frac = 1.0
    for lo, hi in zip(list_of_values, list_of_values[1:]):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        ok_frac = min(ok_frac, float(np.mean(hi > lo)))
    return check(name, ok_frac >= frac, f"pairwise dominance on {ok_frac:.0%} of points")


def sign_change_inside(x, values, lo, hi, name="sign_change_window") -> CheckResult:
    x = np.asarray(x, dtype=float)
    v = np.asarray(values, dtype=float)
    flips = np.nonzero(np.diff(np.sign(v)) != 0)[0]
    if flips.size != 1:
        return check(name, False, f"{flips.size} sign changes")
    i = int(flips[0])
    crossing = x[i] - v[i] * (x[i + 1] - x[i]) / (v[i + 1] - v[i])
    return check(name, lo <= crossing <= hi,
                 f"crossing at {crossing:.4f} (window [{lo}, {hi}])")


def folded_kink_at_crossing(x, signed, name="kink_at_crossing", ratio=5.0) -> CheckResult:
    """|signed| must have a slope discontinuity where `signed` changes sign.

    Away from the crossing the curvature of |signed| equals that of the
    signed data; a stencil straddling the crossing sees the folded branch.
    """
    signed = np.asarray(signed, dtype=float)
    flips = np.nonzero(np.diff(np.sign(signed)) != 0)[0]
    if flips.size != 1:
        return check(name, False, f"{flips.size} sign changes")
    i = int(flips[0])
    second_abs = np.abs(np.diff(np.abs(signed), 2))
    second_signed = np.abs(np.diff(signed, 2))
    straddle = [j for j in range(len(second_abs)) if j <= i <= j + 1]
    if not straddle:
        return check(name, False, "crossing outside stencil range")
    got = max(second_abs[j] / max(second_signed[j], 1e-300) for j in straddle)
    return check(name, got > ratio, f"folded/smooth curvature ratio {got:.2f} (need > {ratio})")


def asymmetric_about_peak(x, y, min_asymmetry=0.05, name="asymmetric_profile") -> CheckResult:
    """Compare the curve against its mirror image about the peak position."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x0 = peak_location(x, y)
    mirrored = np.interp(2 * x0 - x, x, y, left=np.nan, right=np.nan)
    valid = np.isfinite(mirrored)
    if np.count_nonzero(valid) < 10:
        return check(name, False, "mirror overlap too small")
    dev = float(np.nanmax(np.abs(y[valid] - mirrored[valid])))
    return check(name, dev > min_asymmetry, f"max mirror deviation {dev:.3g}")
