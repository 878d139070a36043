"""Zero location for the characteristic determinants and canonical pairing.

``zeros_delta0`` produces the unperturbed sequence by the fastest exact
route available (explicit progressions when the bc-product vanishes,
polynomial roots for rational weight ratios, an argument-principle box
sweep otherwise).  ``zeros_deltaQ`` Newton-polishes each perturbed zero
from its unperturbed partner and certifies the pairing by winding counts
over a shrinking ladder of disk radii -- a finite surrogate for the
component-tracking construction that defines the canonical ordering.
"""

from __future__ import annotations

import cmath
import csv
import math
from dataclasses import dataclass

import numpy as np

from .boundary import BoundaryConditions, canonicalize, classify
from .ode import DiracSystem, char_det_direct
from .transformop import build_kernels, combos, determinant_evaluator

__all__ = [
    "ContourTooCloseError",
    "NonIntegerWindingError",
    "NonRegularError",
    "SpectrumEntry",
    "SpectrumWindow",
    "count_zeros_disk",
    "export_csv",
    "incompressible_density",
    "zeros_delta0",
    "zeros_deltaQ",
]

EPS_LADDER_DEFAULT = (0.4, 0.2, 0.1, 0.05)


class NonRegularError(ValueError):
    """Zero asymptotics are undefined for non-regular boundary conditions."""


class ContourTooCloseError(RuntimeError):
    """A zero sits (numerically) on the counting contour."""


class NonIntegerWindingError(RuntimeError):
    """The contour integral did not land near an integer."""


@dataclass(frozen=True)
class SpectrumEntry:
    n: int
    lam0: complex
    lam: complex
    multiplicity: int
    ladder_eps: float
    verified: bool


@dataclass(frozen=True)
class SpectrumWindow:
    """Canonically indexed eigenvalues lam_n paired with lam_n^0,
    |n| <= n_max, counting multiplicity."""

    entries: tuple
    strip_height: float
    n_max: int
    head_estimate: int = 0

    def lam0_array(self) -> np.ndarray:
        return np.array([e.lam0 for e in self.entries])

    def lam_array(self) -> np.ndarray:
        return np.array([e.lam for e in self.entries])

    def indices(self) -> np.ndarray:
        return np.array([e.n for e in self.entries])

    def entry(self, n: int) -> SpectrumEntry:
        for e in self.entries:
            if e.n == n:
                return e
        raise KeyError(f"index {n} not in window")


def _cluster(points: list[complex], radius: float) -> list[tuple[complex, int]]:
    """Greedy clustering; returns (representative, count) sorted by
    (Re, Im)."""
    pts = sorted(points, key=lambda z: (z.real, z.imag))
    clusters: list[list[complex]] = []
    for z in pts:
        if clusters and abs(z - clusters[-1][0]) < radius:
            clusters[-1].append(z)
        else:
            clusters.append([z])
    out = []
    for group in clusters:
        rep = sum(group) / len(group)
        out.append((rep, len(group)))
    return out


def _index_symmetrically(values: list[tuple[complex, int]], n_max: int):
    """Expand clusters (counting multiplicity), sort by real part and index
    so that n = 0 lands on the entry closest to the origin."""
    seq: list[tuple[complex, int]] = []
    for rep, count in values:
        seq.extend([(rep, count)] * count)
    seq.sort(key=lambda zc: (zc[0].real, zc[0].imag))
    if not seq:
        raise ValueError("no zeros found in the requested window")
    # n = 0 goes to the entry nearest the origin; ties (symmetric windows)
    # are broken towards smaller real part, robustly against float noise
    best = min(abs(z) for z, _ in seq)
    candidates = [i for i, (z, _) in enumerate(seq) if abs(z) <= best + 1e-9 * (1.0 + best)]
    center = min(candidates, key=lambda i: (round(seq[i][0].real, 9), round(seq[i][0].imag, 9)))
    out = []
    for pos, (rep, count) in enumerate(seq):
        n = pos - center
        if -n_max <= n <= n_max:
            out.append((n, rep, count))
    return out


def zeros_delta0(bc: BoundaryConditions, b1: float, b2: float, n_max: int, ratio_hint=None, method: str = "auto"):
    """Zeros of Delta_0 for |n| <= n_max, canonically ordered by real part
    and counting multiplicity.  Returns a list of (n, lam0, multiplicity).

    ``method='auto'`` picks the fastest exact route (explicit progressions,
    polynomial roots, box sweep); ``method='sweep'`` forces the
    argument-principle sweep, which is useful as an independent oracle.
    """
    verdict = classify(bc, b1, b2, ratio_hint=ratio_hint)
    if not verdict.is_regular:
        raise NonRegularError("boundary conditions are not regular")
    a, b, c, d = canonicalize(bc)
    margin = n_max + 4

    if method == "sweep":
        clusters = _sweep_zeros(lambda lam: _delta0_value(a, b, c, d, b1, b2, lam), a, b, c, d, b1, b2, margin)
    elif method != "auto":
        raise ValueError("method must be 'auto' or 'sweep'")
    elif abs(b * c) < 1e-14:
        # Delta_0 = e^{i b2 lam} (1 + d e^{-i b2 lam}) (1 + a e^{i b1 lam}):
        # two explicit arithmetic progressions
        pts: list[complex] = []
        span = int(margin * max(1.0, (b2 - b1) / (2 * math.pi) * 4)) + 4
        for m in range(-span, span + 1):
            pts.append((cmath.phase(-d) + 2 * math.pi * m) / b2 - 1j * math.log(abs(d)) / b2)
            pts.append((cmath.phase(-1.0 / a) + 2 * math.pi * m) / b1 + 1j * math.log(abs(a)) / b1)
        clusters = _cluster(pts, 1e-9)
    elif verdict.ratio is not None:
        n1, n2 = verdict.ratio
        beta = b2 / n2
        deg = n1 + n2
        coeffs = np.zeros(deg + 1, dtype=complex)
        coeffs[0] = 1.0
        coeffs[deg - n2] += a
        coeffs[deg - n1] += d
        coeffs[deg] += a * d - b * c
        roots = np.roots(coeffs)
        pts = []
        span = margin // deg + 2
        for z in roots:
            lam_base = (cmath.phase(z) - 1j * math.log(abs(z))) / beta
            for m in range(-span, span + 1):
                pts.append(lam_base + 2 * math.pi * m / beta)
        clusters = _cluster(pts, 1e-6)
    else:
        clusters = _sweep_zeros(lambda lam: _delta0_value(a, b, c, d, b1, b2, lam), a, b, c, d, b1, b2, margin)

    # keep a symmetric window around the origin
    window = _index_symmetrically(clusters, n_max)
    if len(window) < 2 * n_max + 1:
        raise ValueError("zero search window too small; increase margins")
    return window


def _delta0_value(a, b, c, d, b1, b2, lam):
    return (
        d
        + a * cmath.exp(1j * (b1 + b2) * lam)
        + (a * d - b * c) * cmath.exp(1j * b1 * lam)
        + cmath.exp(1j * b2 * lam)
    )


def _winding_rect(f, x0, x1, y0, y1, base_pts=32, max_refine=12) -> int:
    """Winding number of f over a rectangle by summing argument increments,
    refining the sampling until each increment is below pi/2."""
    corners = [complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1), complex(x0, y0)]
    pts: list[complex] = []
    for za, zb in zip(corners[:-1], corners[1:]):
        seg = max(base_pts, int(base_pts * abs(zb - za)))
        pts.extend(za + (zb - za) * k / seg for k in range(seg))
    pts.append(corners[0])
    vals = [f(z) for z in pts]
    for _ in range(max_refine):
        refined = False
        new_pts = [pts[0]]
        new_vals = [vals[0]]
        for z0, z1v, f0, f1 in zip(pts[:-1], pts[1:], vals[:-1], vals[1:]):
            if abs(f0) == 0 or abs(f1) == 0:
                raise ContourTooCloseError("zero on rectangle contour")
            if abs(cmath.phase(f1 / f0)) > math.pi / 2:
                zm = 0.5 * (z0 + z1v)
                new_pts.extend([zm, z1v])
                new_vals.extend([f(zm), f1])
                refined = True
            else:
                new_pts.append(z1v)
                new_vals.append(f1)
        pts, vals = new_pts, new_vals
        if not refined:
            break
    total = sum(cmath.phase(f1 / f0) for f0, f1 in zip(vals[:-1], vals[1:]))
    w = total / (2 * math.pi)
    if abs(w - round(w)) > 0.2:
        raise NonIntegerWindingError(f"rectangle winding {w:.3f} not close to an integer")
    return int(round(w))


def _newton(f, z0: complex, tol: float = 1e-13, max_iter: int = 60) -> complex | None:
    z = z0
    for _ in range(max_iter):
        step_h = 1e-6 * (1.0 + abs(z))
        d = (f(z + step_h) - f(z - step_h)) / (2 * step_h)
        if d == 0:
            return None
        dz = f(z) / d
        z = z - dz
        if abs(dz) < tol * (1.0 + abs(z)):
            return z
    return None


def _sweep_zeros(f, a, b, c, d, b1, b2, margin: int):
    """Argument-principle box sweep over the strip; fallback route when no
    exact structure is available.  Zeros are located per box, deduplicated,
    and each survivor gets its multiplicity from a local winding count."""
    coeff_scale = max(1.0, abs(a), abs(d), abs(a * d - b * c))
    h = math.log(4.0 * coeff_scale) / min(b2, -b1) + 1.0
    density = (b2 - b1) / (2 * math.pi)
    width = (margin * 2 + 8) / density / 2 + 2
    nboxes = int(2 * width) + 1
    # pick a global box-grid offset whose vertical lines stay away from zeros
    ys = np.linspace(-h, h, 65)
    offset = 0.0137
    for candidate in (0.0137, 0.231, 0.367, 0.483, 0.059):
        edges = -width + candidate + np.arange(nboxes + 1)
        line_min = min(min(abs(f(complex(e, y))) for y in ys) for e in edges)
        if line_min > 1e-5 * coeff_scale:
            offset = candidate
            break
    edges = -width + offset + np.arange(nboxes + 1)
    found: list[complex] = []
    for t0, t1 in zip(edges[:-1], edges[1:]):
        count = _winding_rect(f, t0, t1, -h, h)
        if count > 0:
            found.extend(_locate_in_box(f, t0, t1, -h, h, count))
    # deduplicate across boxes, then let a local winding decide multiplicity
    reps = [rep for rep, _ in _cluster(found, 1e-6)]
    out: list[tuple[complex, int]] = []
    for i, rep in enumerate(reps):
        sep = min((abs(rep - other) for j, other in enumerate(reps) if j != i), default=1.0)
        r = max(min(0.05, sep / 3.0), 1e-5)
        mult = _winding_rect(f, rep.real - r, rep.real + r, rep.imag - r, rep.imag + r)
        if mult > 0:
            out.append((rep, mult))
    return out


def _in_box(z: complex, x0, x1, y0, y1, pad: float) -> bool:
    return (x0 - pad) <= z.real <= (x1 + pad) and (y0 - pad) <= z.imag <= (y1 + pad)


def _argmin_scan(f, x0, x1, y0, y1) -> complex:
    xs = np.linspace(x0, x1, 25)
    ysc = np.linspace(y0, y1, 25)
    zz = xs[None, :] + 1j * ysc[:, None]
    vals = np.abs(np.vectorize(f)(zz))
    k = np.unravel_index(np.argmin(vals), vals.shape)
    return complex(zz[k])


def _locate_in_box(f, x0, x1, y0, y1, count, depth=0) -> list[complex]:
    """Zeros inside a rectangle known to contain ``count`` of them.
    Newton results that escape the rectangle are rejected and the box is
    subdivided instead, so every zero is reported by exactly one box."""
    if count == 0:
        return []
    pad = max(1e-9, 0.02 * (x1 - x0))
    if count == 1:
        z = _newton(f, complex(0.5 * (x0 + x1), 0.5 * (y0 + y1)))
        if z is not None and _in_box(z, x0, x1, y0, y1, pad):
            return [z]
        z = _newton(f, _argmin_scan(f, x0, x1, y0, y1))
        if z is not None and _in_box(z, x0, x1, y0, y1, pad):
            return [z]
    if depth >= 30 or (x1 - x0) < 1e-8:
        # coincident zeros (or a stubborn cluster): report the best point
        z = _argmin_scan(f, x0, x1, y0, y1)
        z = _newton(f, z) or z
        return [z] * count
    xm = 0.5 * (x0 + x1)
    shift = 0.0
    for _ in range(8):
        try:
            left = _winding_rect(f, x0, xm + shift, y0, y1)
            break
        except (ContourTooCloseError, NonIntegerWindingError):
            shift += (x1 - x0) * 0.013
    else:
        z = _argmin_scan(f, x0, x1, y0, y1)
        return [z] * count
    right = count - left
    return _locate_in_box(f, x0, xm + shift, y0, y1, left, depth + 1) + _locate_in_box(
        f, xm + shift, x1, y0, y1, right, depth + 1
    )


def _eval_many(f, z: np.ndarray) -> np.ndarray:
    """Evaluate f on an array of points, using vectorized evaluation when
    the callable supports it."""
    try:
        out = np.asarray(f(z), dtype=complex)
        if out.shape == z.shape:
            return out
    except (TypeError, ValueError):
        pass
    return np.array([f(zk) for zk in z], dtype=complex)


def count_zeros_disk(delta, center: complex, radius: float, quad_nodes: int = 256) -> int:
    """Zero count inside a disk by the argument principle:
    (1/2 pi i) contour-integral of Delta'/Delta, trapezoid on quad_nodes
    contour points, derivative by central differences."""
    theta = np.linspace(0.0, 2 * math.pi, quad_nodes, endpoint=False)
    z = center + radius * np.exp(1j * theta)
    f = _eval_many(delta, z)
    fmax = float(np.abs(f).max())
    if fmax == 0.0 or float(np.abs(f).min()) < 1e-12 * max(fmax, 1.0):
        raise ContourTooCloseError("determinant vanishes on the counting contour")
    step_h = 1e-6 * (1.0 + np.abs(z))
    d = (_eval_many(delta, z + step_h) - _eval_many(delta, z - step_h)) / (2 * step_h)
    w = (radius / quad_nodes) * np.sum(d / f * np.exp(1j * theta))
    w = complex(w).real  # imaginary part is quadrature noise
    if abs(w - round(w)) > 0.2:
        raise NonIntegerWindingError(f"winding {w:.3f} not close to an integer")
    return int(round(w))


def _separation_to_others(reps: list[complex], k: int) -> float:
    best = math.inf
    for i, z in enumerate(reps):
        if i != k:
            best = min(best, abs(z - reps[k]))
    return best


def zeros_deltaQ(
    sys: DiracSystem,
    bc: BoundaryConditions,
    n_max: int,
    eps_ladder=EPS_LADDER_DEFAULT,
    n_grid: int = 256,
    determinant: str = "kernels",
    allow_nonstrict: bool = False,
    ratio_hint=None,
    tol: float = 1e-10,
) -> SpectrumWindow:
    """Perturbed zeros paired with the unperturbed ones.

    Each lam_n^0 seeds a Newton iteration on Delta_Q; the pairing is
    accepted at the smallest ladder radius eps at which the disk around
    lam_n^0 separates from the other unperturbed zeros and the winding
    count inside it matches the sought multiplicity.  Unresolved clusters
    are reported with their winding multiplicity rather than split.
    """
    verdict = classify(bc, sys.b1, sys.b2, ratio_hint=ratio_hint)
    if not verdict.is_strictly_regular and not allow_nonstrict:
        raise NonRegularError(
            f"boundary conditions are {verdict.kind} ({verdict.reason}); "
            "pass allow_nonstrict=True to pair against a non-strict Delta_0"
        )
    window0 = zeros_delta0(bc, sys.b1, sys.b2, n_max, ratio_hint=ratio_hint)

    if determinant == "kernels":
        ks = build_kernels(sys, n_grid, tol=tol)
        delta = determinant_evaluator(bc, combos(ks.kplus, ks.kminus), sys.b1, sys.b2)
    elif determinant == "direct":
        delta = lambda lam: char_det_direct(sys, bc, lam, n_grid)  # noqa: E731
    else:
        raise ValueError("determinant must be 'kernels' or 'direct'")

    # one representative per cluster
    reps: list[complex] = []
    cluster_of: list[int] = []
    for _, lam0, _mult in window0:
        if reps and abs(lam0 - reps[-1]) < 1e-9:
            cluster_of.append(len(reps) - 1)
        else:
            reps.append(lam0)
            cluster_of.append(len(reps) - 1)

    ladder = sorted(eps_ladder, reverse=True)
    cluster_result: dict[int, tuple[complex, int, float, bool]] = {}
    for k, rep in enumerate(reps):
        mult_sought = cluster_of.count(k)
        sep = _separation_to_others(reps, k)
        lam = _newton(delta, rep)
        usable = [eps for eps in ladder if 2 * eps < sep]
        eps_used = math.nan
        verified = False
        count = mult_sought
        for eps in sorted(usable):
            if lam is not None and abs(lam - rep) >= eps:
                continue
            try:
                count = count_zeros_disk(delta, rep, eps)
            except (ContourTooCloseError, NonIntegerWindingError):
                continue
            if count == mult_sought and (lam is None or abs(lam - rep) < eps):
                eps_used = eps
                verified = lam is not None
                break
            if count > 0:
                # cluster or shifted zero: report what the winding shows
                eps_used = eps
                verified = False
                break
        if lam is None:
            # fallback: subdivision search in the separating box
            eps0 = usable[-1] if usable else (min(ladder)) / 2
            try:
                located = _locate_in_box(delta, rep.real - eps0, rep.real + eps0, rep.imag - eps0, rep.imag + eps0, max(count, 1))
                lam = located[0]
            except (ContourTooCloseError, NonIntegerWindingError):
                lam = rep
        cluster_result[k] = (lam, count, eps_used, verified)

    entries = []
    for (n, lam0, mult0), k in zip(window0, cluster_of):
        lam, count, eps_used, verified = cluster_result[k]
        entries.append(SpectrumEntry(n, lam0, lam, max(count, mult0), eps_used, verified))

    strip = max(abs(e.lam.imag) for e in entries) + max(abs(e.lam0.imag) for e in entries) + 0.5
    unverified = [abs(e.n) for e in entries if not e.verified]
    head = (max(unverified) + 1) if unverified else 0
    return SpectrumWindow(tuple(entries), strip, n_max, head)


def incompressible_density(seq, step: float = 0.25) -> int:
    """Max count of entries with |Re lam - t| <= 1 over a sliding t-grid."""
    re = np.array([complex(z).real for z in seq])
    if re.size == 0:
        return 0
    ts = np.arange(re.min() - 1.0, re.max() + 1.0 + step, step)
    counts = [(np.abs(re - t) <= 1.0).sum() for t in ts]
    return int(max(counts))


def export_csv(window: SpectrumWindow, path) -> None:
    """CSV rows (n, Re lam0, Im lam0, Re lam, Im lam, multiplicity, eps)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "re_lam0", "im_lam0", "re_lam", "im_lam", "multiplicity", "ladder_eps"])
        for e in window.entries:
            writer.writerow(
                [
                    e.n,
                    repr(float(e.lam0.real)),
                    repr(float(e.lam0.imag)),
                    repr(float(e.lam.real)),
                    repr(float(e.lam.imag)),
                    e.multiplicity,
                    repr(float(e.ladder_eps)),
                ]
            )
