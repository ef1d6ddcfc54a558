"""Spectrum and Schur certificate of the aggregate admission map.

Stacking the per-node recursions gives the affine map
``U(k+1) = Phi U(k) + 2 * alpha_bar * lambda`` with
``Phi = diag(beta) - 2 alpha_bar beta^T``.  ``Phi`` is similar to the
symmetric diagonal-plus-rank-one matrix ``diag(beta) - 2 z z^T`` with
``z_i = sqrt(alpha_bar_i beta_i)``, so its eigenvalues are real, interlace the
backoff factors, and are the roots of a scalar secular equation.  That is how
they are computed here: no dense eigensolver is involved.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import AnyConfig, validate_config

ZERO_Z_TOL = 1e-14
EQUAL_D_TOL = 1e-14
SECULAR_TOL = 1e-13
INTERLACE_SLACK = 1e-10
DET_REL_TOL = 1e-8


class SpectralError(ArithmeticError):
    """The computed spectrum contradicts a structural fact; a solver bug."""


class InterlacingViolation(SpectralError):
    pass


class DetIdentityViolation(SpectralError):
    pass


@dataclass(frozen=True)
class AggregateMatrix:
    phi: np.ndarray
    B: np.ndarray
    alpha_bar: np.ndarray
    beta_vec: np.ndarray

    @property
    def n(self) -> int:
        return len(self.beta_vec)


@dataclass(frozen=True)
class RankOneSpectrum:
    eigenvalues: np.ndarray  # ascending
    brackets: np.ndarray  # (n, 2) interlacing interval per eigenvalue
    deflated: int = 0  # eigenvalues obtained exactly by deflation


@dataclass(frozen=True)
class SpectralReport:
    eigenvalues: tuple[float, ...]
    brackets: tuple[tuple[float, float], ...]
    schur: bool
    spectral_radius: float
    det_residual: float
    z: tuple[float, ...]
    deflated: int = 0
    interlacing_slack: float = 0.0

    def to_dict(self) -> dict:
        return {
            "eigenvalues": list(self.eigenvalues),
            "brackets": [list(b) for b in self.brackets],
            "schur": self.schur,
            "spectral_radius": self.spectral_radius,
            "det_residual": self.det_residual,
            "z": list(self.z),
            "deflated": self.deflated,
            "interlacing_slack": self.interlacing_slack,
        }


def build_phi(cfg: AnyConfig) -> AggregateMatrix:
    vc = validate_config(cfg)
    alpha_bar = np.array(vc.alpha_bar)
    beta = vc.beta
    B = np.diag(beta)
    phi = B - 2.0 * np.outer(alpha_bar, beta)
    return AggregateMatrix(phi, B, alpha_bar, beta)


def symmetrize(m: AggregateMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal ``D`` and vector ``z`` with ``D - 2 z z^T`` similar to ``Phi``.

    A zero ``alpha_bar_i`` gives ``z_i = 0``; that index is left for
    :func:`rank_one_eigs` to deflate to the exact eigenvalue ``beta_i``.
    """
    if np.any(m.alpha_bar < 0) or np.any(m.beta_vec <= 0):
        raise ValueError("symmetrization needs alpha_bar >= 0 and beta > 0")
    return m.beta_vec.copy(), np.sqrt(m.alpha_bar * m.beta_vec)


def _secular(mu, delta, zz, rho):
    # f(mu) = 1 + rho * sum_j zz_j / (delta_j - mu), rows are independent roots
    diff = delta - mu[:, None]
    return 1.0 + rho * np.sum(zz / diff, axis=1), rho * np.sum(zz / diff**2, axis=1)


def _solve_negative(d: np.ndarray, z: np.ndarray, rho: float) -> np.ndarray:
    """Roots of the secular equation for distinct ascending ``d``, nonzero ``z``, ``rho < 0``."""
    m = len(d)
    zz = z * z
    # one root below d_0, one in each gap (d_{i-1}, d_i)
    lo = np.empty(m)
    hi = np.empty(m)
    lo[0] = d[0] + rho * zz.sum()
    hi[0] = d[0]
    lo[1:] = d[:-1]
    hi[1:] = d[1:]
    mid = 0.5 * (lo + hi)
    f_mid, _ = _secular(np.zeros(m), d[None, :] - mid[:, None], zz[None, :], rho)
    # shift to the pole nearest the root so the gaps d_j - lambda keep relative accuracy
    use_hi = (f_mid > 0) | (np.arange(m) == 0)
    origin = np.where(use_hi, hi, lo)
    mu_lo = np.where(use_hi, mid - hi, 0.0)
    mu_hi = np.where(use_hi, 0.0, mid - lo)
    mu_lo[0] = lo[0] - hi[0]
    delta = d[None, :] - origin[:, None]
    zz2 = zz[None, :]

    for _ in range(200):
        mu = 0.5 * (mu_lo + mu_hi)
        stuck = (mu <= mu_lo) | (mu >= mu_hi)
        if np.all(stuck):
            break
        f, _ = _secular(mu, delta, zz2, rho)
        pos = f > 0
        mu_lo = np.where(pos & ~stuck, mu, mu_lo)
        mu_hi = np.where(~pos & ~stuck, mu, mu_hi)

    mu = 0.5 * (mu_lo + mu_hi)
    # Newton polish, kept inside the bracket and only when it lowers the residual
    for _ in range(4):
        f, df = _secular(mu, delta, zz2, rho)
        if np.all(np.abs(f) <= SECULAR_TOL):
            break
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(df != 0, f / df, 0.0)
        cand = mu - step
        inside = (cand > mu_lo) & (cand < mu_hi)
        f_c, _ = _secular(np.where(inside, cand, mu), delta, zz2, rho)
        better = inside & (np.abs(f_c) < np.abs(f))
        mu = np.where(better, cand, mu)
    return origin + mu


def rank_one_eigs(d, rho: float, z) -> RankOneSpectrum:
    """Eigenvalues of ``diag(d) + rho z z^T``, ascending, with interlacing brackets."""
    d = np.asarray(d, dtype=float)
    z = np.asarray(z, dtype=float)
    n = len(d)
    if rho > 0:
        neg = rank_one_eigs(-d, -rho, z)
        return RankOneSpectrum(-neg.eigenvalues[::-1], -neg.brackets[::-1, ::-1], neg.deflated)

    order = np.argsort(d, kind="stable")
    ds = d[order]
    zs = z[order].copy()
    znorm2 = float(np.dot(z, z))
    brackets = np.empty((n, 2))
    if n:
        brackets[0] = (ds[0] + rho * znorm2, ds[0])
        brackets[1:, 0] = ds[:-1]
        brackets[1:, 1] = ds[1:]
    if rho == 0 or n == 0:
        return RankOneSpectrum(ds.copy(), brackets, n)

    exact: list[float] = []
    keep_d: list[float] = []
    keep_z: list[float] = []
    scale = max(float(np.max(np.abs(ds))), 1e-300)
    i = 0
    while i < n:
        j = i + 1
        while j < n and abs(ds[j] - ds[i]) < EQUAL_D_TOL * scale:
            j += 1
        group = zs[i:j]
        # a Givens rotation collapses equal diagonal entries onto one z component
        zg = math.sqrt(float(np.dot(group, group)))
        exact.extend([float(ds[i])] * (j - i - 1))
        if zg < ZERO_Z_TOL:
            exact.append(float(ds[i]))
        else:
            keep_d.append(float(ds[i]))
            keep_z.append(zg)
        i = j

    roots = _solve_negative(np.array(keep_d), np.array(keep_z), rho) if keep_d else np.empty(0)
    eigs = np.sort(np.concatenate([roots, np.array(exact)]))
    return RankOneSpectrum(eigs, brackets, len(exact))


def interlacing_slack(spec: RankOneSpectrum) -> float:
    """Smallest signed margin by which each eigenvalue sits inside its bracket."""
    if len(spec.eigenvalues) == 0:
        return 0.0
    below = spec.eigenvalues - spec.brackets[:, 0]
    above = spec.brackets[:, 1] - spec.eigenvalues
    return float(min(below.min(), above.min()))


def schur_check(spec: RankOneSpectrum, beta) -> SpectralReport:
    beta = np.asarray(beta, dtype=float)
    eigs = spec.eigenvalues
    slack = interlacing_slack(spec)
    if slack < -INTERLACE_SLACK:
        raise InterlacingViolation(f"eigenvalue leaves its interlacing bracket by {-slack:.3e}")
    prod_beta = float(np.prod(beta))
    det_residual = abs(float(np.prod(eigs)) + prod_beta)
    if det_residual > DET_REL_TOL * prod_beta:
        raise DetIdentityViolation(
            f"prod(phi) + prod(beta) = {det_residual:.3e} (relative {det_residual / prod_beta:.3e})"
        )
    if not (eigs[0] < 0 and abs(eigs[0]) <= beta.max() + INTERLACE_SLACK):
        raise SpectralError(f"lowest eigenvalue {eigs[0]!r} outside [-max(beta), 0)")
    if len(eigs) > 1 and not (eigs[1] > 0 and eigs[-1] < 1):
        raise SpectralError("non-leading eigenvalues must lie in (0, 1)")
    radius = float(np.max(np.abs(eigs)))
    return SpectralReport(
        eigenvalues=tuple(eigs.tolist()),
        brackets=tuple((float(a), float(b)) for a, b in spec.brackets),
        schur=radius < 1.0,
        spectral_radius=radius,
        det_residual=det_residual,
        z=(),
        deflated=spec.deflated,
        interlacing_slack=slack,
    )


def spectral_report(cfg: AnyConfig) -> SpectralReport:
    m = build_phi(cfg)
    d, z = symmetrize(m)
    rep = schur_check(rank_one_eigs(d, -2.0, z), m.beta_vec)
    return SpectralReport(**{**rep.__dict__, "z": tuple(z.tolist())})


def iterate_aggregate(U, m: AggregateMatrix, lam: float) -> np.ndarray:
    return m.phi @ np.asarray(U, dtype=float) + 2.0 * m.alpha_bar * lam
