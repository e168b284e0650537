"""Pointwise constitutive relations: strains, the no-tension split, degradation
functions, fatigue accumulation and the history variable.

Every function accepts scalars or NumPy arrays and broadcasts.
"""

from __future__ import annotations

import logging

import numpy as np

from ..mesh import Plane
from .material import MaterialParams

logger = logging.getLogger(__name__)


class DegenerateElementError(ArithmeticError):
    pass


def shape_gradients(xy: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of the linear shape functions on triangles.

    ``xy`` has shape (..., 3, 2).  Returns ``(grads, area)`` with ``grads``
    of shape (..., 3, 2).
    """
    xy = np.asarray(xy, dtype=float)
    x, y = xy[..., 0], xy[..., 1]
    b = np.stack([y[..., 1] - y[..., 2], y[..., 2] - y[..., 0], y[..., 0] - y[..., 1]], axis=-1)
    c = np.stack([x[..., 2] - x[..., 1], x[..., 0] - x[..., 2], x[..., 1] - x[..., 0]], axis=-1)
    two_a = (x[..., 1] - x[..., 0]) * (y[..., 2] - y[..., 0]) - \
        (x[..., 2] - x[..., 0]) * (y[..., 1] - y[..., 0])
    if np.any(two_a <= 0):
        raise DegenerateElementError("element with non-positive area")
    grads = np.stack([b, c], axis=-1) / two_a[..., None, None]
    return grads, 0.5 * two_a


def strain(xy: np.ndarray, u_element: np.ndarray) -> np.ndarray:
    """Small strain ``(exx, eyy, exy)`` of linear triangles (tensor shear).

    ``u_element`` has shape (..., 3, 2): the nodal displacements.
    """
    grads, _ = shape_gradients(xy)
    du = np.einsum("...ai,...aj->...ij", np.asarray(u_element, dtype=float), grads)
    return np.stack([du[..., 0, 0], du[..., 1, 1], 0.5 * (du[..., 0, 1] + du[..., 1, 0])],
                    axis=-1)


def out_of_plane_strain(eps: np.ndarray, plane: Plane, nu: float) -> np.ndarray:
    eps = np.asarray(eps, dtype=float)
    if Plane(plane) is Plane.PLANE_STRAIN:
        return np.zeros(eps.shape[:-1])
    return -nu / (1.0 - nu) * (eps[..., 0] + eps[..., 1])


def principal_strains(eps, plane: Plane, nu: float) -> np.ndarray:
    """Sorted principal strains ``(e1 >= e2 >= e3)`` including ``ezz``."""
    eps = np.asarray(eps, dtype=float)
    exx, eyy, exy = eps[..., 0], eps[..., 1], eps[..., 2]
    mean = 0.5 * (exx + eyy)
    rad = np.sqrt((0.5 * (exx - eyy)) ** 2 + exy**2)
    p = np.stack([mean + rad, mean - rad, out_of_plane_strain(eps, plane, nu)], axis=-1)
    return -np.sort(-p, axis=-1)


def isotropic_energy(p: np.ndarray, lam: float, mu: float) -> np.ndarray:
    tr = p[..., 0] + p[..., 1] + p[..., 2]
    return 0.5 * lam * tr**2 + mu * np.sum(p * p, axis=-1)


def energy_split(p, mat: MaterialParams) -> tuple[np.ndarray, np.ndarray]:
    """No-tension split of the undamaged elastic energy.

    ``p`` holds sorted principal strains.  Branches are selected by
    ``e3 > 0``, then ``e2 + nu e3 > 0``, then ``(1-nu) e1 + nu (e2+e3) > 0``.
    In the third branch the tensile energy is
    ``lam / (2 nu (1-nu)) * ((1-nu) e1 + nu (e2+e3))**2``, written with
    ``lam / nu = E / ((1+nu)(1-2nu))`` so that ``nu = 0`` is admissible.
    """
    p = np.asarray(p, dtype=float)
    e1, e2, e3 = p[..., 0], p[..., 1], p[..., 2]
    E, nu, lam, mu = mat.E, mat.nu, mat.lame_lambda, mat.lame_mu
    full = isotropic_energy(p, lam, mu)

    b1 = e3 > 0
    b2 = ~b1 & (e2 + nu * e3 > 0)
    q3 = (1.0 - nu) * e1 + nu * (e2 + e3)
    b3 = ~b1 & ~b2 & (q3 > 0)

    s1, s2 = e1 + nu * e3, e2 + nu * e3
    plus2 = 0.5 * lam * (e1 + e2 + 2 * nu * e3) ** 2 + mu * (s1**2 + s2**2)
    minus2 = 0.5 * E * e3**2
    lam_over_nu = E / ((1.0 + nu) * (1.0 - 2.0 * nu))
    plus3 = lam_over_nu / (2.0 * (1.0 - nu)) * q3**2
    minus3 = E / (2.0 * (1.0 - nu**2)) * (e2**2 + e3**2 + 2 * nu * e2 * e3)

    psi_plus = np.where(b1, full, np.where(b2, plus2, np.where(b3, plus3, 0.0)))
    psi_minus = np.where(b1, 0.0, np.where(b2, minus2, np.where(b3, minus3, full)))
    return psi_plus, psi_minus


def tensile_energy(eps, mat: MaterialParams) -> np.ndarray:
    return energy_split(principal_strains(eps, mat.plane, mat.nu), mat)[0]


def _check_phi(phi):
    phi = np.asarray(phi, dtype=float)
    if np.any((phi < 0) | (phi > 1)):
        logger.warning("phase field outside [0, 1]; clamping %d values",
                       int(np.count_nonzero((phi < 0) | (phi > 1))))
        phi = np.clip(phi, 0.0, 1.0)
    return phi


def degradation_g(phi):
    phi = _check_phi(phi)
    return (1.0 - phi) ** 2


def degradation_g_prime(phi):
    return -2.0 * (1.0 - _check_phi(phi))


def at1_w(phi):
    return _check_phi(phi)


def fatigue_degradation_f2(alpha_bar, alpha_T: float):
    """``(1 - abar/aT)^2`` below the threshold, zero at and beyond it."""
    r = np.asarray(alpha_bar, dtype=float) / alpha_T
    return np.where(r < 1.0, (1.0 - np.minimum(r, 1.0)) ** 2, 0.0)


def fatigue_increment(alpha_max, R: float, alpha_n: float, alpha_e: float, n: float,
                      delta_N: float = 1, hist_max=None):
    """Increment of the cumulated fatigue history over ``delta_N`` cycles.

    ``hist_max`` is the running maximum of ``alpha_max (1-R)/2`` before this
    call; the updated maximum is returned alongside the increment.  The
    endurance gate is inclusive (Heaviside(0) = 1).
    """
    amp = np.asarray(alpha_max, dtype=float) * (1.0 - R) / 2.0
    hist = amp if hist_max is None else np.maximum(np.asarray(hist_max, dtype=float), amp)
    gate = hist >= alpha_e
    rate = np.where(gate, (np.maximum(amp, 0.0) / alpha_n) ** n, 0.0)
    return delta_N * rate, hist


def update_history(psi_plus_now, H_prev, mat: MaterialParams):
    return np.maximum(np.maximum(psi_plus_now, H_prev), mat.H_min)
