"""Dyadic-valued vectors and the randomized quadratic-form certificate chain.

The centered operator's extreme Rayleigh quotient survives three lossy
compressions, each implemented here:

1. ``dyadic_round``: randomized rounding of an arbitrary vector to signed
   power-of-two entries, unbiased entrywise.
2. ``polarize``: combining two rounded copies into a small set of
   nonnegative candidates, one of which keeps a constant fraction of the
   original bilinear form.
3. ``band_select``: truncating a nonnegative dyadic vector to a single
   multiplicative band of width d and rescaling to unit scale, keeping a
   1/(8nh) fraction of the form restricted to comparable value pairs.

"Comparable" pairs are ordered value pairs with both entries strictly
positive and ratio strictly inside (1/sqrt(d), sqrt(d)). Comparisons on
the band boundary are resolved in exact rational arithmetic, so a ratio
of exactly sqrt(d) (possible when d is a power of four) is excluded
deterministically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import (
    EmptyVectorError,
    LiftlabError,
    NormTooLargeError,
    NotBandVectorError,
    NotSignCompatibleError,
    TooLargeError,
)
from .graphs import Lift, LiftVector, apply_operator, check_shape
from .sampling import SeededRng
from .spectra import SpectralReport, lambda_star

GRID_GUARD = 4_000_000


@dataclass(frozen=True)
class DyadicScale:
    """Lift dimensions with the derived scales used by dyadic vectors."""

    n: int
    h: int
    d: int

    def __post_init__(self):
        if self.n < 1 or self.h < 1 or self.d < 1:
            raise LiftlabError("scale parameters must be positive")

    @classmethod
    def of(cls, lift: Lift) -> "DyadicScale":
        return cls(lift.n, lift.h, lift.base.d)

    @property
    def size(self) -> int:
        return self.n * self.h

    @property
    def root_size(self) -> float:
        return math.sqrt(self.n * self.h)

    @property
    def band_ratio(self) -> float:
        return math.sqrt(self.d)


# ---------------------------------------------------------------------------
# quadratic forms


def quad_form(lift: Lift, kind: str, x: LiftVector, y: LiftVector) -> float:
    """Bilinear form <x, A y> of the chosen operator, matrix-free."""
    check_shape(lift, x)
    check_shape(lift, y)
    return float(np.vdot(x.values, apply_operator(lift, kind, y).values))


def _codes(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    uniq, inv = np.unique(values, return_inverse=True)
    return uniq, inv.reshape(values.shape)


def _weight_grids(lift: Lift, cx: np.ndarray, cy: np.ndarray,
                  kx: int, ky: int) -> tuple[np.ndarray, np.ndarray]:
    """Total operator weight between each (x-value, y-value) class, for the
    adjacency and expected operators."""
    wa = np.zeros((kx, ky))
    for (a, b), p in lift.perms.items():
        np.add.at(wa, (cx[a], cy[b][p]), 1.0)
        np.add.at(wa, (cx[b][p], cy[a]), 1.0)
    hx = np.zeros((lift.h, kx))
    hy = np.zeros((lift.h, ky))
    for i in range(lift.h):
        np.add.at(hx[i], cx[i], 1.0)
        np.add.at(hy[i], cy[i], 1.0)
    nb = lift.base.adjacency()
    we = (hx.T @ (nb @ hy)) / lift.n
    return wa, we


def _comparable_mask(ux: np.ndarray, uy: np.ndarray, d: int) -> np.ndarray:
    """Strict membership of each value pair in the comparable region, with
    exact rational resolution of near-boundary comparisons."""
    a2 = ux * ux
    b2 = uy * uy
    lhs1, rhs1 = a2[:, None], d * b2[None, :]
    lhs2, rhs2 = b2[None, :], d * a2[:, None]
    less1 = lhs1 < rhs1
    less2 = lhs2 < rhs2
    pos = (ux > 0)[:, None] & (uy > 0)[None, :]

    def resolve(less, lo, hi, swap):
        near = pos & (np.abs(lo - hi) <= 1e-9 * np.maximum(np.abs(lo), np.abs(hi)))
        for i, j in np.argwhere(near):
            a, b = Fraction(float(ux[i])), Fraction(float(uy[j]))
            if swap:
                less[i, j] = b * b < d * a * a
            else:
                less[i, j] = a * a < d * b * b
        return less

    less1 = resolve(less1, lhs1, rhs1, swap=False)
    less2 = resolve(less2, lhs2, rhs2, swap=True)
    return pos & less1 & less2


REGIONS = ("comparable", "complement")


def quad_form_restricted(lift: Lift, kind: str, x: LiftVector, y: LiftVector,
                         region: str = "comparable") -> float:
    """Bilinear form summed only over ordered vertex pairs whose value pair
    lies in the chosen region; comparable + complement = unrestricted."""
    check_shape(lift, x)
    check_shape(lift, y)
    if region not in REGIONS:
        raise LiftlabError(f"region must be one of {REGIONS}")
    ux, cx = _codes(x.values)
    uy, cy = _codes(y.values)
    if ux.size * uy.size > GRID_GUARD:
        raise TooLargeError("too many distinct value pairs for the grid evaluation")
    wa, we = _weight_grids(lift, cx, cy, ux.size, uy.size)
    if kind == "adjacency":
        w = wa
    elif kind == "expected":
        w = we
    elif kind == "centered":
        w = wa - we
    else:
        raise LiftlabError(f"unknown operator kind {kind!r}")
    mask = _comparable_mask(ux, uy, lift.d)
    if region == "complement":
        mask = ~mask
    contrib = np.outer(ux, uy) * w
    return float(contrib[mask].sum())


# ---------------------------------------------------------------------------
# dyadic value classes


def signed_exponents(x: LiftVector) -> tuple[np.ndarray, np.ndarray]:
    """(exponents, nonzero mask) for a vector with entries 0 or +-2^i, i >= 0.

    Raises NotBandVector if any entry is not of that form.
    """
    vals = np.abs(x.values)
    mant, expo = np.frexp(vals)
    nonzero = vals != 0.0
    bad = nonzero & ((mant != 0.5) | (expo < 1))
    if bad.any():
        raise NotBandVectorError("entries must be zero or have modulus 2^i with i >= 0")
    return (expo - 1) * nonzero, nonzero


def int_norm_sq(exponents: np.ndarray, nonzero: np.ndarray) -> int:
    """Exact squared norm (an integer) of a vector with entries +-2^e."""
    total = 0
    if nonzero.any():
        exps, counts = np.unique(exponents[nonzero], return_counts=True)
        for e, c in zip(exps, counts):
            total += int(c) * (4 ** int(e))
    return total


def is_rounded_vector(x: LiftVector) -> bool:
    """Entries are signed unit-or-larger dyadic and squared norm <= 5nh."""
    try:
        exps, mask = signed_exponents(x)
    except NotBandVectorError:
        return False
    return int_norm_sq(exps, mask) <= 5 * x.h * x.n


def is_candidate_vector(x: LiftVector) -> bool:
    """Entries are nonnegative unit-or-larger dyadic and squared norm <= 10nh."""
    if (x.values < 0).any():
        return False
    try:
        exps, mask = signed_exponents(x)
    except NotBandVectorError:
        return False
    return int_norm_sq(exps, mask) <= 10 * x.h * x.n


# ---------------------------------------------------------------------------
# randomized rounding


def dyadic_round(x: LiftVector, rng) -> LiftVector:
    """Round each entry to a signed power of two (or zero), unbiased entrywise.

    An entry of modulus below one becomes sign*1 with probability equal to
    the modulus, else zero. An entry with 2^j <= |x_v| < 2^(j+1) becomes
    sign*2^(j+1) with probability (|x_v| - 2^j)/2^j, else sign*2^j, making
    the expectation exactly x_v. Requires squared norm <= nh, which forces
    the output squared norm below 5nh deterministically.
    """
    nh = x.h * x.n
    if x.norm_sq > nh * (1.0 + 1e-9):
        raise NormTooLargeError(f"squared norm {x.norm_sq:.6g} exceeds {nh}")
    gen = rng.generator() if isinstance(rng, SeededRng) else rng
    a = np.abs(x.values)
    s = np.sign(x.values)
    u = gen.random(size=a.shape)
    mant, expo = np.frexp(a)
    lo = np.ldexp(1.0, expo - 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        up = (a - lo) / lo
    big = np.where(u < up, np.ldexp(1.0, expo), lo)
    small = np.where(u < a, 1.0, 0.0)
    out = np.where(a >= 1.0, big, small) * s
    return LiftVector(out)


# ---------------------------------------------------------------------------
# polarization


def _check_compatible(y: LiftVector, z: LiftVector) -> None:
    for v, name in ((y, "first"), (z, "second")):
        exps, mask = signed_exponents(v)
        if int_norm_sq(exps, mask) > 5 * v.h * v.n:
            raise NotBandVectorError(f"{name} vector exceeds the rounded-class norm cap")
    yv, zv = y.values, z.values
    if ((yv > 0) & (zv < 0)).any() or ((yv < 0) & (zv > 0)).any():
        raise NotSignCompatibleError("entries with opposite signs")
    both = (yv != 0) & (zv != 0)
    if both.any():
        _, ey = np.frexp(np.abs(yv[both]))
        _, ez = np.frexp(np.abs(zv[both]))
        if (np.abs(ey - ez) > 1).any():
            raise NotSignCompatibleError("entries from different rounding brackets")
    lone_y = (yv == 0) & (np.abs(zv) > 1.0)
    lone_z = (zv == 0) & (np.abs(yv) > 1.0)
    if lone_y.any() or lone_z.any():
        raise NotSignCompatibleError("zero paired with an entry above one")


def polarize(y: LiftVector, z: LiftVector) -> list[LiftVector]:
    """Nonnegative dyadic candidates combining two compatible rounded vectors.

    The returned list always contains a candidate c with |<c, A c>| at
    least one tenth of |<y, A z>| for any symmetric operator A vanishing
    on the diagonal (a sign-splitting argument over positive/negative
    parts and their differences).
    """
    if y.values.shape != z.values.shape:
        raise NotSignCompatibleError("shape mismatch")
    _check_compatible(y, z)
    yp = np.maximum(y.values, 0.0)
    ym = np.maximum(-y.values, 0.0)
    zp = np.maximum(z.values, 0.0)
    zm = np.maximum(-z.values, 0.0)
    w1p = np.maximum(yp - zp, 0.0)
    w1m = np.maximum(zp - yp, 0.0)
    w2p = np.maximum(ym - zm, 0.0)
    w2m = np.maximum(zm - ym, 0.0)
    raw = [yp, ym, zp, zm, yp + zm, ym + zp,
           w1p, w1m, w1p + w1m, w2p, w2m, w2p + w2m]
    out = []
    for arr in raw:
        cand = LiftVector(arr)
        if not is_candidate_vector(cand):
            raise LiftlabError("internal: polarization produced an invalid candidate")
        out.append(cand)
    return out


# ---------------------------------------------------------------------------
# certificate search


@dataclass(frozen=True)
class CertificateReport:
    """Best nonnegative dyadic candidate found for a given input vector."""

    vector: LiftVector
    value: float
    target: float
    met: bool
    trials: int
    best_trial: int


def dyadic_certificate(lift: Lift, x: LiftVector, trials: int = 40,
                       rng: SeededRng = SeededRng(0)) -> CertificateReport:
    """Search rounded/polarized candidates maximizing |<c, c>| under the
    centered operator; the target is one twelfth of the input's form.

    Failure to reach the target is reported, not raised. Ties between
    trials resolve to the earliest trial.
    """
    check_shape(lift, x)
    nh = lift.n * lift.h
    if x.norm_sq > nh * (1.0 + 1e-9):
        raise NormTooLargeError(f"squared norm {x.norm_sq:.6g} exceeds {nh}")
    target = abs(quad_form(lift, "centered", x, x)) / 12.0
    best_vec = LiftVector(np.zeros((lift.h, lift.n)))
    best_val = 0.0
    best_trial = -1
    for t in range(trials):
        y = dyadic_round(x, rng.generator(6101, t, 0))
        z = dyadic_round(x, rng.generator(6101, t, 1))
        for cand in polarize(y, z):
            val = abs(quad_form(lift, "centered", cand, cand))
            if val > best_val:
                best_vec, best_val, best_trial = cand, val, t
    met = best_val >= target * (1.0 - 1e-12)
    return CertificateReport(best_vec, best_val, target, met, trials, best_trial)


# ---------------------------------------------------------------------------
# band vectors and band selection


@dataclass(frozen=True)
class DyadicBandVector:
    """Vector with entries 2^e/sqrt(nh) confined to one multiplicative band.

    Invariants (checked exactly on the integer exponents): squared norm at
    most 10, all exponents nonnegative, and the largest nonzero entry at
    most d times the smallest.
    """

    scale: DyadicScale
    exponents: np.ndarray
    nonzero: np.ndarray

    def __post_init__(self):
        shape = (self.scale.h, self.scale.n)
        exps = np.array(self.exponents, dtype=np.int64)
        mask = np.array(self.nonzero, dtype=bool)
        if exps.shape != shape or mask.shape != shape:
            raise NotBandVectorError(f"arrays must have shape {shape}")
        exps = exps * mask
        if mask.any():
            live = exps[mask]
            if (live < 0).any():
                raise NotBandVectorError("exponents must be nonnegative")
            if int_norm_sq(exps, mask) > 10 * self.scale.size:
                raise NotBandVectorError("squared norm exceeds 10")
            spread = int(live.max()) - int(live.min())
            if 2 ** spread > self.scale.d:
                raise NotBandVectorError("entries spread beyond one band of width d")
        exps.setflags(write=False)
        mask.setflags(write=False)
        object.__setattr__(self, "exponents", exps)
        object.__setattr__(self, "nonzero", mask)

    @property
    def norm_sq(self) -> float:
        return int_norm_sq(self.exponents, self.nonzero) / self.scale.size

    @property
    def vector(self) -> LiftVector:
        vals = np.ldexp(1.0, self.exponents) * self.nonzero / self.scale.root_size
        return LiftVector(vals)

    def weight(self, exponent: int) -> float:
        return math.ldexp(1.0, exponent) / self.scale.root_size

    def histogram(self) -> dict[tuple[int, int], int]:
        """Count of entries per (fibre, exponent)."""
        out: dict[tuple[int, int], int] = {}
        for i in range(self.scale.h):
            row_mask = self.nonzero[i]
            if row_mask.any():
                exps, counts = np.unique(self.exponents[i][row_mask], return_counts=True)
                for e, c in zip(exps, counts):
                    out[(i, int(e))] = int(c)
        return out

    @classmethod
    def zero(cls, scale: DyadicScale) -> "DyadicBandVector":
        shape = (scale.h, scale.n)
        return cls(scale, np.zeros(shape, dtype=np.int64), np.zeros(shape, dtype=bool))


def _window_exponents(exps: list[int], d: int) -> list[int]:
    """Candidate window indices m with d^m <= 4^e < d^(m+2) for some e."""
    out = set()
    for e in exps:
        val = 4 ** int(e)
        m = 0
        while d ** (m + 1) <= val:
            m += 1
        out.add(m)
        if m - 1 >= 0:
            out.add(m - 1)
    return sorted(out)


def band_select(y: LiftVector, lift: Lift) -> DyadicBandVector:
    """Truncate a nonnegative dyadic vector to its best band and rescale.

    Windows [d^(m/2), d^((m+2)/2)) are scored by the comparable-region form
    per unit of squared norm; the winner keeps at least half the form per
    mass, and the output (rescaled by the largest power of two fitting the
    norm cap, then divided by sqrt(nh)) retains at least 1/(8nh) of the
    input's comparable-region form.
    """
    check_shape(lift, y)
    if (y.values < 0).any():
        raise NotBandVectorError("entries must be nonnegative")
    exps, mask = signed_exponents(y)
    if not mask.any():
        raise EmptyVectorError("cannot select a band of an all-zero vector")
    n, h, d = lift.n, lift.h, lift.d
    if int_norm_sq(exps, mask) > 10 * n * h:
        raise NotBandVectorError("squared norm exceeds 10nh")
    uniq = [int(e) for e in np.unique(exps[mask])]
    windows = _window_exponents(uniq, d)
    best = None
    for m in windows:
        in_window = [e for e in uniq if d ** m <= 4 ** e < d ** (m + 2)]
        wmask = mask & np.isin(exps, in_window)
        mass = int_norm_sq(exps, wmask)
        trunc = LiftVector(y.values * wmask)
        form = abs(quad_form_restricted(lift, "centered", trunc, trunc, "comparable"))
        score = form / mass
        if best is None or score > best[0]:
            best = (score, m, wmask, mass)
    _, m_star, wmask, mass = best
    k = 0
    while (4 ** (k + 1)) * mass <= 10 * n * h:
        k += 1
    out_exps = (exps + k) * wmask
    return DyadicBandVector(DyadicScale(n, h, d), out_exps, wmask)


# ---------------------------------------------------------------------------
# end-to-end certificate


@dataclass(frozen=True)
class BandCertificateReport:
    """Output of the full witness -> rounding -> band pipeline."""

    vector: DyadicBandVector
    achieved: float
    target: float
    met: bool
    spectral: SpectralReport
    certificate: CertificateReport | None


def band_certificate(lift: Lift, trials: int = 40, tol: float = 1e-8,
                     rng: SeededRng = SeededRng(0),
                     spectral: SpectralReport | None = None) -> BandCertificateReport:
    """Run the whole chain and report the comparable-region form achieved by
    the resulting band vector against the target lambda*/96 - 5*sqrt(d)."""
    rep = spectral if spectral is not None else lambda_star(lift, tol=tol, rng=rng)
    scale = DyadicScale.of(lift)
    target = rep.lambda_star / 96.0 - 5.0 * math.sqrt(lift.d)
    nh = lift.n * lift.h
    if rep.witness.norm_sq == 0.0:
        zero = DyadicBandVector.zero(scale)
        return BandCertificateReport(zero, 0.0, target, 0.0 >= target, rep, None)
    x = rep.witness.scaled(math.sqrt(nh / rep.witness.norm_sq) * (1.0 - 1e-12))
    cert = dyadic_certificate(lift, x, trials=trials, rng=rng)
    if not cert.vector.values.any():
        zero = DyadicBandVector.zero(scale)
        return BandCertificateReport(zero, 0.0, target, 0.0 >= target, rep, cert)
    band = band_select(cert.vector, lift)
    achieved = abs(quad_form_restricted(lift, "centered", band.vector, band.vector,
                                        "comparable"))
    met = achieved >= target - 1e-9 * max(1.0, abs(target))
    return BandCertificateReport(band, achieved, target, met, rep, cert)
