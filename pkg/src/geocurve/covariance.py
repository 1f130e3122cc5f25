"""Covariance operators of log-mapped curves and the weighted inner products.

Functions in ``H = L2(T, R^d0)`` are stored as ``(N, d0)`` arrays of node
values.  Operators are stored in *whitened* coordinates: a function ``f`` maps
to the flat vector ``sqrt(q_a) f(t_a)`` where ``q`` are the trapezoid weights of
the grid.  The Euclidean inner product of whitened vectors is then the
quadrature inner product of ``H``, and a kernel operator
``(Kf)(t) = int k(t, s) f(s) ds`` becomes the symmetric matrix
``sqrt(q_a) k(t_a, t_b) sqrt(q_b)``.

A *stack* is ``m + 1`` functions side by side, shape ``(m + 1, N, d0)``.
"""

from dataclasses import dataclass, field

import numpy as np

from .curve import TangentCurve, TimeGrid, check_same_grid
from .errors import DegenerateCovarianceError, DimensionError, GridMismatchError

#: Eigenvalues above ``-EIG_CLIP_TOL * lambda_1`` are treated as rounding noise.
EIG_CLIP_TOL = 1e-10


def _sqrt_weights(grid):
    return np.sqrt(grid.weights)


def whiten(grid, values):
    """Flatten ``(..., N, d0)`` node values into whitened coordinates."""
    values = np.asarray(values, dtype=float)
    w = (_sqrt_weights(grid)[:, None] * values)
    return w.reshape(values.shape[:-2] + (-1,))


def unwhiten(grid, vec, d0):
    vec = np.asarray(vec, dtype=float)
    vals = vec.reshape(vec.shape[:-1] + (len(grid), d0))
    return vals / _sqrt_weights(grid)[:, None]


def tangent_array(curves):
    """``(n, N, d0)`` array of tangent vectors from a sequence of TangentCurves."""
    if isinstance(curves, np.ndarray):
        return curves
    check_same_grid(*curves)
    return np.stack([c.vectors for c in curves])


@dataclass(frozen=True, eq=False)
class DiscretizedKernel:
    """Matrix-valued kernel ``k(t_a, t_b)`` with quadrature folded in.

    ``matrix`` has shape ``(N*d0, N*d0)``, indexed by (node, component) pairs
    in row-major order.
    """

    grid: TimeGrid
    d0: int
    matrix: np.ndarray

    def __post_init__(self):
        size = len(self.grid) * self.d0
        if self.matrix.shape != (size, size):
            raise DimensionError(f"kernel matrix must be {size}x{size}, got {self.matrix.shape}")

    def apply(self, values):
        """``(Kf)(t) = int k(t, s) f(s) ds`` for node values of shape ``(..., N, d0)``."""
        out = whiten(self.grid, values) @ self.matrix.T
        return unwhiten(self.grid, out, self.d0)

    def kernel_values(self):
        """Unweighted kernel samples, shape ``(N, d0, N, d0)``."""
        s = np.repeat(_sqrt_weights(self.grid), self.d0)
        k = self.matrix / np.outer(s, s)
        N = len(self.grid)
        return k.reshape(N, self.d0, N, self.d0)

    @property
    def T(self):
        return DiscretizedKernel(self.grid, self.d0, self.matrix.T)

    def frobenius(self):
        return float(np.linalg.norm(self.matrix))

    def trace_norm(self):
        """Nuclear norm (sum of singular values) of the operator."""
        return float(np.sum(np.linalg.svd(self.matrix, compute_uv=False)))


def empirical_lag_covariance(tangent_curves, lag, center=True):
    """Lag-``lag`` cross-covariance ``(1/(n-lag)) sum_l c_l (x) c_{l+lag}``.

    Parameters
    ----------
    tangent_curves : sequence of TangentCurve or ndarray (n, N, d0)
        Log-mapped curves in time order.  Arrays must be accompanied by
        ``grid`` via :func:`lag_covariance_array`.
    lag : int
        ``0 <= lag < n``.
    center : bool
        Subtract the sample mean over all ``n`` curves first.
    """
    grid = check_same_grid(*tangent_curves)
    return lag_covariance_array(grid, tangent_array(tangent_curves), lag, center)


def lag_covariance_array(grid, V, lag, center=True):
    V = np.asarray(V, dtype=float)
    n, N, d0 = V.shape
    if N != len(grid):
        raise GridMismatchError("tangent array does not match the grid")
    if not 0 <= lag < n:
        raise ValueError(f"lag must satisfy 0 <= lag < n = {n}, got {lag}")
    if center:
        V = V - V.mean(axis=0)
    W = whiten(grid, V)
    A, B = W[: n - lag], W[lag:]
    return DiscretizedKernel(grid, d0, A.T @ B / (n - lag))


@dataclass(frozen=True, eq=False)
class BlockCovarianceOperator:
    """Empirical covariance operator of ``m + 1`` consecutive log-mapped curves.

    Block ``(i, j)`` holds the lag ``j - i`` covariance for ``i <= j`` and the
    adjoint of the lag ``i - j`` covariance below the diagonal.
    """

    grid: TimeGrid
    d0: int
    m: int
    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)

    @property
    def size(self):
        return (self.m + 1) * len(self.grid) * self.d0

    @property
    def lags(self):
        return self.m + 1

    def block(self, i, j):
        D = len(self.grid) * self.d0
        return DiscretizedKernel(self.grid, self.d0, self.matrix[i * D:(i + 1) * D, j * D:(j + 1) * D])

    @property
    def blocks(self):
        return [[self.block(i, j) for j in range(self.m + 1)] for i in range(self.m + 1)]

    def to_whitened(self, stack):
        stack = np.asarray(stack, dtype=float)
        if stack.shape[-3:] != (self.m + 1, len(self.grid), self.d0):
            raise DimensionError(
                f"expected stack of shape ({self.m + 1}, {len(self.grid)}, {self.d0}), got {stack.shape}")
        w = whiten(self.grid, stack)
        return w.reshape(stack.shape[:-3] + (-1,))

    def from_whitened(self, vec):
        vec = np.asarray(vec, dtype=float)
        vals = unwhiten(self.grid, vec.reshape(vec.shape[:-1] + (self.m + 1, -1)), self.d0)
        return vals

    def apply(self, stack):
        """Forward operator on a stack of functions."""
        return self.from_whitened(self.to_whitened(stack) @ self.matrix.T)

    def eigenfunctions(self, k):
        """k-th eigenfunction as a stack; orthonormal in the quadrature inner product."""
        return self.from_whitened(self.eigenvectors[:, k])


def assemble_block_operator(tangent_curves, m, center=True):
    """Build the ``(m+1) x (m+1)`` block operator and its eigendecomposition."""
    grid = check_same_grid(*tangent_curves)
    return assemble_block_array(grid, tangent_array(tangent_curves), m, center)


def assemble_block_array(grid, V, m, center=True):
    V = np.asarray(V, dtype=float)
    n, N, d0 = V.shape
    if not 0 <= m < n:
        raise ValueError(f"need 0 <= m < n, got m={m}, n={n}")
    D = N * d0
    lags = [lag_covariance_array(grid, V, k, center).matrix for k in range(m + 1)]
    R = np.empty(((m + 1) * D, (m + 1) * D))
    for i in range(m + 1):
        for j in range(m + 1):
            blk = lags[j - i] if j >= i else lags[i - j].T
            R[i * D:(i + 1) * D, j * D:(j + 1) * D] = blk
    R = 0.5 * (R + R.T)
    lam, U = np.linalg.eigh(R)
    lam, U = lam[::-1], U[:, ::-1]
    scale = max(lam[0], 0.0)
    # small negative eigenvalues are rounding; larger ones come from the lag
    # normalization and are equally excluded from every regularized inverse
    lam = np.where(lam < 0, 0.0, lam)
    if scale == 0:
        lam = np.zeros_like(lam)
    R.setflags(write=False)
    lam.setflags(write=False)
    U = np.ascontiguousarray(U)
    U.setflags(write=False)
    return BlockCovarianceOperator(grid, d0, m, R, lam, U)


class RegularizedInverse:
    """Spectral semi-inverse ``sum_{lambda_k >= c lambda_1} (lambda_k + r)^-1 u_k u_k^T``.

    Zero on the discarded part of the spectrum.
    """

    def __init__(self, op, ridge=None, rel_cutoff=1e-3):
        if not 0 < rel_cutoff < 1:
            raise ValueError("rel_cutoff must lie in (0, 1)")
        lam = op.eigenvalues
        if lam.size == 0 or not lam[0] > 0:
            raise DegenerateCovarianceError("covariance operator has no positive eigenvalue")
        if ridge is None:
            ridge = 1e-6 * lam[0]
        if ridge < 0:
            raise ValueError("ridge must be nonnegative")
        keep = (lam >= rel_cutoff * lam[0]) & (lam > 0)
        if not np.any(keep):
            raise DegenerateCovarianceError("all eigenvalues fall below the cutoff")
        self.op = op
        self.ridge = float(ridge)
        self.rel_cutoff = float(rel_cutoff)
        self.retained = int(np.sum(keep))
        self.basis = op.eigenvectors[:, keep]
        self.eigenvalues = lam[keep]
        self.coefficients = 1.0 / (self.eigenvalues + self.ridge)

    def coords(self, stack):
        """Retained spectral coordinates ``<u_k, f>`` of a stack (or batch of stacks)."""
        return self.op.to_whitened(stack) @ self.basis

    def apply(self, stack):
        c = self.coords(stack) * self.coefficients
        return self.op.from_whitened(c @ self.basis.T)

    def pairing(self, u, v):
        """``<u, R^-1 v>`` for stacks ``u`` and ``v`` (batched over leading axes of ``v``)."""
        cu = self.coords(u) * self.coefficients
        return self.coords(v) @ cu

    def projector(self, stack):
        """Orthogonal projection of a stack onto the retained span."""
        return self.op.from_whitened(self.coords(stack) @ self.basis.T)


def regularized_inverse(op, ridge=None, rel_cutoff=1e-3):
    """Spectrally truncated, ridge-shifted inverse of ``op``.

    ``ridge`` defaults to ``1e-6 * lambda_1``.
    """
    return RegularizedInverse(op, ridge, rel_cutoff)


class RegularizedKernel:
    """Scalar trace-class kernel on ``T`` applied componentwise.

    The kernel has eigenfunctions ``phi_k`` (orthonormal in the quadrature
    inner product) and normalized eigenvalues ``gamma_k`` with ``sum = 1``.
    ``sqrt(K)`` scales the ``k``-th coefficient of every ambient component by
    ``gamma_k ** 0.5``.
    """

    def __init__(self, grid, phis, gammas, exponent=1.0, source=None):
        phis = np.asarray(phis, dtype=float)
        gammas = np.asarray(gammas, dtype=float)
        if phis.shape != (gammas.size, len(grid)):
            raise DimensionError("eigenfunctions must have shape (retained, N)")
        if np.any(gammas <= 0) or abs(gammas.sum() - 1) > 1e-10:
            raise ValueError("normalized eigenvalues must be positive and sum to one")
        self.grid = grid
        self.phis = phis
        self.gammas = gammas
        self.exponent = float(exponent)
        self.source = source

    @property
    def retained(self):
        return self.gammas.size

    @classmethod
    def from_scalar_kernel(cls, grid, kernel, exponent=1.0, rel_cutoff=1e-3, source=None):
        """Kernel from samples ``k(t_a, t_b)`` of a symmetric PSD scalar kernel.

        Eigenvalues are raised to ``exponent`` and normalized to sum to one;
        those below ``rel_cutoff`` times the largest are discarded first.
        """
        kernel = np.asarray(kernel, dtype=float)
        s = _sqrt_weights(grid)
        Kw = s[:, None] * kernel * s[None, :]
        Kw = 0.5 * (Kw + Kw.T)
        mu, U = np.linalg.eigh(Kw)
        mu, U = mu[::-1], U[:, ::-1]
        if not mu[0] > 0:
            raise DegenerateCovarianceError("smoothing kernel has no positive eigenvalue")
        keep = mu >= rel_cutoff * mu[0]
        powered = mu[keep] ** exponent
        gammas = powered / powered.sum()
        phis = (U[:, keep] / s[:, None]).T
        return cls(grid, phis, gammas, exponent, source)

    @classmethod
    def from_operator(cls, op, exponent=1.0, rel_cutoff=1e-3):
        """Kernel built from the lag-0 block of ``op``, traced over components."""
        k = op.block(0, 0).kernel_values()
        scalar = np.einsum("acbc->ab", k)
        return cls.from_scalar_kernel(op.grid, scalar, exponent, rel_cutoff, source=op)

    def coefficients(self, values):
        """``<phi_k, f_c>`` for node values ``(..., N, d0)`` -> ``(..., retained, d0)``."""
        values = np.asarray(values, dtype=float)
        return np.einsum("kn,...nc->...kc", self.phis * self.grid.weights, values)

    def apply_array(self, values, base=None):
        """``sqrt(K)`` on node values; re-projected onto tangent spaces of ``base`` if given."""
        c = self.coefficients(values) * np.sqrt(self.gammas)[:, None]
        out = np.einsum("kn,...kc->...nc", self.phis, c)
        if base is not None:
            out = out - np.sum(out * base, axis=-1, keepdims=True) * base
        return out

    def inner_array(self, u, v):
        cu = self.coefficients(u)
        cv = self.coefficients(v)
        return np.einsum("k,...kc,...kc->...", self.gammas, cu, cv)


def _check_kernel_grid(kern, curve):
    if curve.grid != kern.grid:
        raise GridMismatchError("tangent curve and kernel use different grids")


def sqrt_kernel_apply(kern, v, reproject=True):
    """Componentwise spectral filter ``sqrt(K) v`` of a tangent curve."""
    _check_kernel_grid(kern, v)
    base = v.base.points if reproject else None
    out = kern.apply_array(v.vectors, base)
    if not reproject:
        return out
    return TangentCurve(v.base, out)


def hw_inner_product(kern, u, v):
    """``sum_c sum_k gamma_k <phi_k, u_c> <phi_k, v_c>`` = ``<sqrt(K) u, sqrt(K) v>``."""
    _check_kernel_grid(kern, u)
    _check_kernel_grid(kern, v)
    return float(kern.inner_array(u.vectors, v.vectors))


def mahalanobis_semidistance(op, u, v, ridge=None, rel_cutoff=1e-3, inverse=None):
    """``sqrt(<u - v, R^-1 (u - v)>)`` for stacks of ``m + 1`` tangent functions.

    ``u`` and ``v`` may be ``(m+1, N, d0)`` arrays or sequences of TangentCurve.
    A prebuilt :class:`RegularizedInverse` can be passed as ``inverse``.
    """
    inv = inverse or RegularizedInverse(op, ridge, rel_cutoff)
    d = tangent_array(u) - tangent_array(v)
    q = float(inv.pairing(d, d))
    return float(np.sqrt(max(q, 0.0)))
