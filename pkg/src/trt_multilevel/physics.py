"""Physical constants, Planck integrals, group opacities and the material EOS.

Units: temperature and photon energy in keV, length in cm, time in shakes
(1 sh = 1e-8 s), energy in jerks (1 Jk = 1e9 J).
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

C_LIGHT = 299.792458  # cm/sh
A_RAD = 0.01372  # Jk cm^-3 keV^-4

PLANCK_NORM = 15.0 / np.pi**4

# band splitting for the incomplete Planck integral
_SERIES_MIN_X = 2.0
_GAUSS_MAX_WIDTH = 1.0
_SERIES_RTOL = 1e-14
_DEGENERATE_WEIGHT = 1e-30
_FD_STEP = 1e-5

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)
_GL32_NODES, _GL32_WEIGHTS = np.polynomial.legendre.leggauss(32)


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


@dataclass(frozen=True)
class UnitSystem:
    c: float = C_LIGHT
    a_r: float = A_RAD

    def __post_init__(self):
        if not (self.c > 0 and self.a_r > 0):
            raise DomainError("c and a_R must be positive")


DEFAULT_UNITS = UnitSystem()


def _planck_density(x, shift=0.0):
    """Normalized Planck density (15/pi^4) x^3 / (e^x - 1), times e^shift.

    Zero at x = 0 and at infinity; the shift keeps far-Wien values finite.
    """
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        p = PLANCK_NORM * x**3 * np.exp(shift - x) / -np.expm1(-x)
    return np.where((x > 0) & np.isfinite(x), p, 0.0)


def _gauss_band(lo, hi, shift):
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    t = mid[..., None] + half[..., None] * _GL_NODES
    return half * np.sum(_planck_density(t, shift[..., None]) * _GL_WEIGHTS, axis=-1)


def _upper_tail(x, shift):
    """e^shift times the fraction of blackbody emission above x.

    Exponential series; fast for x >= 2.  Infinite x gives zero.
    """
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    live = np.isfinite(x)
    xs, sh = x[live], shift[live]
    total = np.zeros_like(xs)
    x2, x3 = xs * xs, xs**3
    n = 1
    while xs.size:
        e = np.exp(sh - n * xs)
        term = e * (x3 / n + 3.0 * x2 / n**2 + 6.0 * xs / n**3 + 6.0 / n**4)
        total += term
        if np.all(term <= _SERIES_RTOL * total):
            break
        n += 1
    out[live] = PLANCK_NORM * total
    return out


def _band_fraction(lo, hi, shift):
    """Band fraction times e^shift for 1-D arrays (no validation)."""
    out = np.zeros(lo.shape)
    direct = (hi <= _SERIES_MIN_X) | (hi - lo <= _GAUSS_MAX_WIDTH)
    if np.any(direct):
        out[direct] = _gauss_band(lo[direct], hi[direct], shift[direct])
    wide = ~direct
    if np.any(wide):
        lw, hw, sw = lo[wide], hi[wide], shift[wide]
        split = np.maximum(lw, _SERIES_MIN_X)
        head = np.where(lw < split, _gauss_band(lw, split, sw), 0.0)
        out[wide] = head + (_upper_tail(split, sw) - _upper_tail(hw, sw))
    return np.maximum(out, 0.0)


def planck_band_fraction(x_lo, x_hi):
    """Fraction of the total blackbody emission between reduced energies.

    ``x = h nu / kT``.  Narrow or low-x bands are integrated directly with
    Gauss-Legendre, wide bands use the exponential tail series so the
    result keeps full relative accuracy in both regimes.
    """
    lo, hi = np.broadcast_arrays(np.asarray(x_lo, float), np.asarray(x_hi, float))
    if np.any(lo < 0) or np.any(hi < lo) or np.any(np.isnan(lo) | np.isnan(hi)):
        raise DomainError("band bounds must satisfy 0 <= x_lo <= x_hi")
    shape = lo.shape
    lo, hi = lo.ravel(), hi.ravel()
    out = np.minimum(_band_fraction(lo, hi, np.zeros(lo.shape)), 1.0)
    if shape == ():
        return float(out[0])
    return out.reshape(shape)


def _scaled_band_fraction(xl, xh):
    """Band fraction times e^{x_lo}, finite even where the fraction underflows."""
    shape = xl.shape
    lo, hi = xl.ravel(), xh.ravel()
    shift = np.where(np.isfinite(lo), lo, 0.0)
    return _band_fraction(lo, hi, shift).reshape(shape)


def _check_temperature(T):
    T = np.asarray(T, dtype=float)
    if np.any(~(T > 0)):
        raise DomainError("temperature must be positive")
    return T


def _check_edges(edges):
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0) or edges[0] < 0:
        raise DomainError("group edges must be nonnegative and strictly increasing")
    return edges


def _reduced_edges(T, edges):
    T = _check_temperature(T)
    edges = _check_edges(edges)
    x = edges / T[..., None]
    return T, x[..., :-1], x[..., 1:]


def group_planckian(T, edges, units=DEFAULT_UNITS):
    """Group Planckian B_g(T) with sum_g int_{-1}^{1} B_g dmu = c a_R T^4.

    ``T`` may be a scalar or an array; the group axis is appended last.
    """
    T, xl, xh = _reduced_edges(T, edges)
    frac = planck_band_fraction(xl, xh)
    return 0.5 * units.c * units.a_r * T[..., None] ** 4 * frac


def _band_fraction_dT(T, xl, xh, shift=0.0):
    # d/dT of the band fraction (times e^shift); dx/dT = -x/T at fixed energy
    with np.errstate(invalid="ignore"):
        pl = np.where(np.isfinite(xl), _planck_density(xl, shift) * xl, 0.0)
        ph = np.where(np.isfinite(xh), _planck_density(xh, shift) * xh, 0.0)
    return (pl - ph) / T[..., None]


def group_planckian_dT(T, edges, units=DEFAULT_UNITS):
    T, xl, xh = _reduced_edges(T, edges)
    frac = planck_band_fraction(xl, xh)
    dfrac = _band_fraction_dT(T, xl, xh)
    Tg = T[..., None]
    return 0.5 * units.c * units.a_r * (4.0 * Tg**3 * frac + Tg**4 * dfrac)


class FleckCummingsOpacity:
    """sigma_nu = 27 / (h nu)^3 * (1 - exp(-h nu / kT)).

    The product sigma_nu * B_nu is proportional to exp(-x), so group
    averages have a closed form.
    """

    analytic = True

    def __init__(self, coefficient=27.0):
        self.coefficient = coefficient

    def sigma_nu(self, hnu, T):
        hnu = np.asarray(hnu, float)
        return self.coefficient / hnu**3 * -np.expm1(-hnu / T)

    def dsigma_nu_dT(self, hnu, T):
        hnu = np.asarray(hnu, float)
        x = hnu / T
        return -self.coefficient / hnu**3 * np.exp(-x) * x / T


class GenericOpacity:
    """Opacity given by an arbitrary evaluator ``sigma_nu(hnu, T)``.

    Group averages use 32-point Gauss quadrature per band in log-frequency
    (linear for a band starting at zero); derivatives use central
    differences.
    """

    analytic = False

    def __init__(self, evaluator: Callable):
        self.evaluator = evaluator

    def sigma_nu(self, hnu, T):
        return np.asarray(self.evaluator(hnu, T), dtype=float)


class ConstantOpacity(GenericOpacity):
    def __init__(self, value):
        if not value > 0:
            raise DomainError("opacity must be positive")
        self.value = float(value)
        super().__init__(lambda hnu, T: np.full(np.broadcast(hnu, T).shape, self.value))


def _degenerate_frequency(edges):
    lo, hi = edges[:-1], edges[1:]
    with np.errstate(invalid="ignore"):
        g = np.where(lo > 0, np.sqrt(lo * hi), 0.5 * hi)
    return np.where(np.isfinite(g), g, lo)


def _fc_group_opacity(model, T, edges):
    # numerator and Planck weight both scaled by e^{x_lo}
    T, xl, xh = _reduced_edges(T, edges)
    wscaled = _scaled_band_fraction(xl, xh)
    with np.errstate(invalid="ignore"):
        numer = -np.expm1(-(xh - xl))
    numer = np.where(np.isfinite(xl), numer, 0.0)
    degenerate = ~(wscaled > 0)
    Tg = T[..., None]
    with np.errstate(divide="ignore", invalid="ignore"):
        sig = model.coefficient * PLANCK_NORM * Tg**-3 * numer / wscaled
    if np.any(degenerate):
        hnu = np.broadcast_to(_degenerate_frequency(np.asarray(edges, float)), sig.shape)
        fallback = model.sigma_nu(hnu, np.broadcast_to(Tg, sig.shape))
        sig = np.where(degenerate, fallback, sig)
    return sig, (T, xl, xh, wscaled, numer, degenerate)


def _generic_group_opacity(model, T, edges):
    T = _check_temperature(T)
    edges = _check_edges(edges)
    if not np.all(np.isfinite(edges)):
        raise DomainError("generic opacity quadrature needs finite group edges")
    lo, hi = edges[:-1], edges[1:]
    # nodes per band, log-spaced except for a band starting at zero
    with np.errstate(divide="ignore"):
        llo, lhi = np.log(np.where(lo > 0, lo, 1.0)), np.log(hi)
    u = 0.5 * (lhi + llo)[:, None] + 0.5 * (lhi - llo)[:, None] * _GL32_NODES
    log_nodes = np.exp(u)
    log_jac = 0.5 * (lhi - llo)[:, None] * _GL32_WEIGHTS * log_nodes
    lin_nodes = 0.5 * (hi + lo)[:, None] + 0.5 * (hi - lo)[:, None] * _GL32_NODES
    lin_jac = 0.5 * (hi - lo)[:, None] * _GL32_WEIGHTS * np.ones_like(lin_nodes)
    use_log = (lo > 0)[:, None]
    nodes = np.where(use_log, log_nodes, lin_nodes)
    jac = np.where(use_log, log_jac, lin_jac)

    Tn = T[..., None, None]
    bnu = _planck_density(nodes / Tn)
    sig_nu = model.sigma_nu(nodes, Tn)
    den = np.sum(bnu * jac, axis=-1)
    num = np.sum(sig_nu * bnu * jac, axis=-1)
    degenerate = den <= _DEGENERATE_WEIGHT * np.sum(den, axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        sig = num / den
    if np.any(degenerate):
        hnu = np.broadcast_to(_degenerate_frequency(edges), sig.shape)
        fallback = model.sigma_nu(hnu, np.broadcast_to(T[..., None], sig.shape))
        sig = np.where(degenerate, fallback, sig)
    return sig


def group_opacity(T, edges, model=None):
    """Planck-weighted group absorption coefficient sigma_g(T).

    Returns an array with the group axis last.  Bands carrying no Planck
    weight fall back to sigma_nu at the band's geometric-mean energy.
    """
    model = model or FleckCummingsOpacity()
    if model.analytic:
        return _fc_group_opacity(model, T, edges)[0]
    return _generic_group_opacity(model, T, edges)


def group_opacity_dT(T, edges, model=None):
    """Temperature derivative of :func:`group_opacity`."""
    model = model or FleckCummingsOpacity()
    if not model.analytic:
        T = _check_temperature(T)
        dT = _FD_STEP * T
        up = group_opacity(T + dT, edges, model)
        dn = group_opacity(T - dT, edges, model)
        return (up - dn) / (2.0 * dT[..., None])

    sig, (T, xl, xh, wscaled, numer, degenerate) = _fc_group_opacity(model, T, edges)
    Tg = T[..., None]
    shift = np.where(np.isfinite(xl), xl, 0.0)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        # log-derivatives of numerator and Planck weight, both scaled by e^{x_lo}
        eh = np.exp(-(xh - xl))
        xeh = np.where(np.isfinite(xh), xh * eh, 0.0)
        dlog_num = (xl - xeh) / (Tg * numer)
        dlog_den = _band_fraction_dT(T, xl, xh, shift) / wscaled
        d = sig * (-3.0 / Tg + dlog_num - dlog_den)
    if np.any(degenerate):
        hnu = np.broadcast_to(_degenerate_frequency(np.asarray(edges, float)), d.shape)
        fallback = model.dsigma_nu_dT(hnu, np.broadcast_to(Tg, d.shape))
        d = np.where(degenerate, fallback, d)
    return d


@dataclass(frozen=True)
class MaterialEOS:
    """Linear equation of state eps = c_v T."""

    cv: float

    def __post_init__(self):
        if not self.cv > 0:
            raise DomainError("specific heat must be positive")

    def energy(self, T):
        T = np.asarray(T, float)
        if np.any(T < 0):
            raise DomainError("negative temperature")
        return self.cv * T

    def temperature(self, eps):
        eps = np.asarray(eps, float)
        if np.any(eps < 0):
            raise DomainError("negative material energy")
        return eps / self.cv


def fleck_cummings_eos(T_drive=1.0, coefficient=0.5917, units=DEFAULT_UNITS):
    return MaterialEOS(coefficient * units.a_r * T_drive**3)


def eos_energy(T, eos):
    return eos.energy(T)


def eos_temperature(eps, eos):
    return eos.temperature(eps)
