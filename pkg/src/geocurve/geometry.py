"""Exact primitives on the unit sphere S^d embedded in R^(d+1).

Points are arrays whose last axis holds ambient coordinates; every function
broadcasts over leading axes, so a curve of N points is simply an
``(N, d0)`` array and a stack of curves an ``(n, N, d0)`` array.

Tangent vectors are ambient vectors orthogonal to their base point.  There is
no separate tangent type: the base point is always passed alongside.
"""

import numpy as np

from .errors import AntipodalPointError, DimensionError, NotOnSphereError, NotTangentError

#: Points closer than this (radians) to the antipode have no usable log map.
ANTIPODAL_TOL = 1e-8
#: Below this tangent norm ``exp_map`` returns the base point unchanged.
EXP_ZERO_TOL = 1e-14
UNIT_NORM_TOL = 1e-12
TANGENT_TOL = 1e-8


def _as_array(x):
    return np.asarray(x, dtype=float)


def _check_same_dim(a, b):
    if a.shape[-1] != b.shape[-1]:
        raise DimensionError(f"ambient dimensions differ: {a.shape[-1]} vs {b.shape[-1]}")


def check_points(p, tol=UNIT_NORM_TOL):
    """Validate that ``p`` holds unit vectors of dimension at least 2.

    Returns ``p`` as a float array.
    """
    p = _as_array(p)
    if p.ndim == 0 or p.shape[-1] < 2:
        raise DimensionError("sphere points need an ambient dimension d0 >= 2")
    norms = np.linalg.norm(p, axis=-1)
    if not np.all(np.abs(norms - 1.0) <= tol):
        worst = float(np.max(np.abs(norms - 1.0)))
        raise NotOnSphereError(f"points deviate from unit norm by {worst:.3e}")
    return p


def check_tangent(p, v, tol=TANGENT_TOL):
    """Validate that ``v`` is tangent at ``p`` (relative to ``max(1, |v|)``)."""
    p = _as_array(p)
    v = _as_array(v)
    _check_same_dim(p, v)
    radial = np.abs(np.sum(p * v, axis=-1))
    scale = np.maximum(1.0, np.linalg.norm(v, axis=-1))
    if not np.all(radial <= tol * scale):
        raise NotTangentError(f"vector has radial component {float(np.max(radial)):.3e}")
    return v


def normalize(x):
    """Radially project nonzero ambient vectors onto the sphere."""
    x = _as_array(x)
    norms = np.linalg.norm(x, axis=-1, keepdims=True)
    if np.any(norms == 0):
        raise NotOnSphereError("cannot normalize the zero vector")
    return x / norms


def inner(p, q):
    return np.sum(_as_array(p) * _as_array(q), axis=-1)


def _distance(p, q):
    c = np.sum(p * q, axis=-1)
    u = q - c[..., None] * p
    # atan2(sin, cos) equals arccos(clip(c, -1, 1)) and keeps full precision near 0 and pi
    return np.arctan2(np.linalg.norm(u, axis=-1), c)


def geodesic_distance(p, q):
    """Great-circle distance ``arccos(<p, q>)`` in radians, in ``[0, pi]``.

    Parameters
    ----------
    p, q : array_like, shape (..., d0)
        Unit vectors; leading axes broadcast.

    Returns
    -------
    ndarray or float
        Pointwise distances.
    """
    p = check_points(p)
    q = check_points(q)
    _check_same_dim(p, q)
    d = _distance(p, q)
    return float(d) if d.ndim == 0 else d


def _exp(p, v):
    nv = np.linalg.norm(v, axis=-1, keepdims=True)
    small = nv < EXP_ZERO_TOL
    safe = np.where(small, 1.0, nv)
    out = np.cos(nv) * p + np.sin(nv) * (v / safe)
    out = np.where(small, p, out)
    return out / np.linalg.norm(out, axis=-1, keepdims=True)


def exp_map(p, v):
    """Riemannian exponential ``cos|v| p + sin|v| v/|v|``.

    Tangent vectors shorter than ``EXP_ZERO_TOL`` map to ``p`` itself.
    """
    p = check_points(p)
    v = check_tangent(p, v)
    return _exp(p, v)


def _log(p, q, tol=ANTIPODAL_TOL):
    c = np.sum(p * q, axis=-1)
    u = q - c[..., None] * p
    nu = np.linalg.norm(u, axis=-1)
    theta = np.arctan2(nu, c)
    bad = theta >= np.pi - tol
    if np.any(bad):
        idx = np.argwhere(bad)[0]
        index = tuple(int(i) for i in idx) if idx.size > 1 else (int(idx[0]) if idx.size else None)
        raise AntipodalPointError(
            f"log map undefined: points at distance {float(theta[bad].flat[0]):.12f} "
            f"(antipode within {tol:g} rad)", index=index)
    scale = np.where(nu > 0, theta / np.where(nu > 0, nu, 1.0), 0.0)
    return scale[..., None] * u


def log_map(p, q):
    """Riemannian logarithm ``d(p, q) u/|u|`` with ``u = q - <p, q> p``.

    Raises
    ------
    AntipodalPointError
        If ``q`` lies within ``ANTIPODAL_TOL`` radians of ``-p``.  When the
        inputs are batched, ``err.index`` is the first offending position.
    """
    p = check_points(p)
    q = check_points(q)
    _check_same_dim(p, q)
    return _log(*np.broadcast_arrays(p, q))


def project_to_tangent(p, w):
    """Remove the radial component: ``w - <p, w> p``."""
    p = check_points(p)
    w = _as_array(w)
    _check_same_dim(p, w)
    return w - np.sum(p * w, axis=-1, keepdims=True) * p


def geodesic_midpoint(p, q):
    """Point halfway along the minimizing geodesic from ``p`` to ``q``."""
    p = check_points(p)
    return _exp(p, 0.5 * log_map(p, q))
