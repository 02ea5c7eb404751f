"""Nodal bases on the reference segment and triangle.

Orthonormal Jacobi/Dubiner modes, Legendre-Gauss-Lobatto nodes in 1D and
alpha-optimized warp-and-blend nodes in 2D, plus the Gauss rules used for
over-integration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gamma, roots_jacobi

from dgnet.errors import BasisError

MAX_ORDER = 8

# warp-and-blend blending parameters for N = 1..15
_ALPHA_OPT = (0.0, 0.0, 1.4152, 0.1001, 0.2751, 0.9800, 1.0999, 1.2832, 1.3648, 1.4773, 1.4959, 1.5743, 1.5770,
              1.6223, 1.6258)

_NODE_TOL = 1e-10


# ---------------------------------------------------------------------------
# 1D polynomials and rules
# ---------------------------------------------------------------------------


def jacobi_p(x: np.ndarray, alpha: float, beta: float, n: int) -> np.ndarray:
    """Orthonormal Jacobi polynomial P_n^(alpha, beta) evaluated at x."""
    x = np.asarray(x, dtype=np.float64)
    pl = np.zeros((n + 1, x.size))
    gamma0 = (2 ** (alpha + beta + 1) / (alpha + beta + 1)
              * gamma(alpha + 1) * gamma(beta + 1) / gamma(alpha + beta + 1))
    pl[0] = 1.0 / np.sqrt(gamma0)
    if n == 0:
        return pl[0].reshape(x.shape)
    gamma1 = (alpha + 1) * (beta + 1) / (alpha + beta + 3) * gamma0
    pl[1] = ((alpha + beta + 2) * x.ravel() / 2 + (alpha - beta) / 2) / np.sqrt(gamma1)
    a_old = 2 / (2 + alpha + beta) * np.sqrt((alpha + 1) * (beta + 1) / (alpha + beta + 3))
    for i in range(1, n):
        h1 = 2 * i + alpha + beta
        a_new = 2 / (h1 + 2) * np.sqrt(
            (i + 1) * (i + 1 + alpha + beta) * (i + 1 + alpha) * (i + 1 + beta) / (h1 + 1) / (h1 + 3)
        )
        b_new = -(alpha**2 - beta**2) / h1 / (h1 + 2)
        pl[i + 1] = (-a_old * pl[i - 1] + (x.ravel() - b_new) * pl[i]) / a_new
        a_old = a_new
    return pl[n].reshape(x.shape)


def grad_jacobi_p(x: np.ndarray, alpha: float, beta: float, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if n == 0:
        return np.zeros_like(x)
    return np.sqrt(n * (n + alpha + beta + 1)) * jacobi_p(x, alpha + 1, beta + 1, n - 1)


def jacobi_gq(alpha: float, beta: float, n_points: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Jacobi nodes and weights with n_points points (exact to degree 2n-1)."""
    x, w = roots_jacobi(n_points, alpha, beta)
    return np.asarray(x), np.asarray(w)


def jacobi_gl(alpha: float, beta: float, N: int) -> np.ndarray:
    """Gauss-Lobatto-Jacobi nodes, N+1 points including the endpoints."""
    if N == 1:
        return np.array([-1.0, 1.0])
    interior, _ = roots_jacobi(N - 1, alpha + 1, beta + 1)
    return np.concatenate([[-1.0], np.sort(interior), [1.0]])


def vandermonde_1d(N: int, r: np.ndarray) -> np.ndarray:
    return np.stack([jacobi_p(r, 0, 0, j) for j in range(N + 1)], axis=1)


def grad_vandermonde_1d(N: int, r: np.ndarray) -> np.ndarray:
    return np.stack([grad_jacobi_p(r, 0, 0, j) for j in range(N + 1)], axis=1)


# ---------------------------------------------------------------------------
# 2D simplex polynomials and nodes
# ---------------------------------------------------------------------------


def _warp_factor(N: int, rout: np.ndarray) -> np.ndarray:
    lgl = jacobi_gl(0, 0, N)
    req = np.linspace(-1, 1, N + 1)
    veq = vandermonde_1d(N, req)
    pmat = np.stack([jacobi_p(rout, 0, 0, i) for i in range(N + 1)])
    lmat = np.linalg.solve(veq.T, pmat)
    warp = lmat.T @ (lgl - req)
    interior = (np.abs(rout) < 1.0 - _NODE_TOL).astype(np.float64)
    sf = 1.0 - (interior * rout) ** 2
    return warp / sf + warp * (interior - 1.0)


def nodes_2d(N: int) -> tuple[np.ndarray, np.ndarray]:
    """Warp-and-blend nodes on the equilateral triangle, returned as (x, y)."""
    alpha = _ALPHA_OPT[N - 1] if N <= len(_ALPHA_OPT) else 5.0 / 3.0
    l1, l3 = [], []
    for n in range(N + 1):
        for m in range(N + 1 - n):
            l1.append(n / N)
            l3.append(m / N)
    l1, l3 = np.array(l1), np.array(l3)
    l2 = 1.0 - l1 - l3
    x = -l2 + l3
    y = (-l2 - l3 + 2 * l1) / np.sqrt(3.0)

    warp1 = 4 * l2 * l3 * _warp_factor(N, l3 - l2) * (1 + (alpha * l1) ** 2)
    warp2 = 4 * l1 * l3 * _warp_factor(N, l1 - l3) * (1 + (alpha * l2) ** 2)
    warp3 = 4 * l1 * l2 * _warp_factor(N, l2 - l1) * (1 + (alpha * l3) ** 2)

    x = x + warp1 + np.cos(2 * np.pi / 3) * warp2 + np.cos(4 * np.pi / 3) * warp3
    y = y + np.sin(2 * np.pi / 3) * warp2 + np.sin(4 * np.pi / 3) * warp3
    return x, y


def xy_to_rs(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Equilateral triangle -> reference triangle (-1,-1), (1,-1), (-1,1)."""
    l1 = (np.sqrt(3.0) * y + 1.0) / 3.0
    l2 = (-3.0 * x - np.sqrt(3.0) * y + 2.0) / 6.0
    l3 = (3.0 * x - np.sqrt(3.0) * y + 2.0) / 6.0
    return -l2 + l3 - l1, -l2 - l3 + l1


def rs_to_ab(r: np.ndarray, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Collapsed coordinates; the top vertex s = 1 maps to a = -1."""
    r, s = np.asarray(r, dtype=np.float64), np.asarray(s, dtype=np.float64)
    top = np.abs(s - 1.0) < _NODE_TOL
    a = np.where(top, -1.0, 2.0 * (1.0 + r) / np.where(top, 1.0, 1.0 - s) - 1.0)
    return a, s


def simplex_2dp(a: np.ndarray, b: np.ndarray, i: int, j: int) -> np.ndarray:
    h1 = jacobi_p(a, 0, 0, i)
    h2 = jacobi_p(b, 2 * i + 1, 0, j)
    return np.sqrt(2.0) * h1 * h2 * (1.0 - b) ** i


def grad_simplex_2dp(a: np.ndarray, b: np.ndarray, i: int, j: int) -> tuple[np.ndarray, np.ndarray]:
    fa, dfa = jacobi_p(a, 0, 0, i), grad_jacobi_p(a, 0, 0, i)
    gb, dgb = jacobi_p(b, 2 * i + 1, 0, j), grad_jacobi_p(b, 2 * i + 1, 0, j)

    dr = dfa * gb
    if i > 0:
        dr = dr * (0.5 * (1.0 - b)) ** (i - 1)
    ds = dfa * (gb * (0.5 * (1.0 + a)))
    if i > 0:
        ds = ds * (0.5 * (1.0 - b)) ** (i - 1)
    tmp = dgb * (0.5 * (1.0 - b)) ** i
    if i > 0:
        tmp = tmp - 0.5 * i * gb * (0.5 * (1.0 - b)) ** (i - 1)
    ds = ds + fa * tmp
    scale = 2.0 ** (i + 0.5)
    return dr * scale, ds * scale


def _modes_2d(N: int):
    return [(i, j) for i in range(N + 1) for j in range(N + 1 - i)]


def vandermonde_2d(N: int, r: np.ndarray, s: np.ndarray) -> np.ndarray:
    a, b = rs_to_ab(r, s)
    return np.stack([simplex_2dp(a, b, i, j) for i, j in _modes_2d(N)], axis=1)


def grad_vandermonde_2d(N: int, r: np.ndarray, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a, b = rs_to_ab(r, s)
    grads = [grad_simplex_2dp(a, b, i, j) for i, j in _modes_2d(N)]
    return np.stack([g[0] for g in grads], axis=1), np.stack([g[1] for g in grads], axis=1)


def collapsed_gauss_rule(n_points: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre x Gauss-Jacobi(1,0) rule on the reference triangle.

    Exact for total degree 2*n_points - 1. Returns (nodes (n^2, 2), weights).
    """
    a, wa = jacobi_gq(0, 0, n_points)
    b, wb = jacobi_gq(1, 0, n_points)
    A, B = np.meshgrid(a, b, indexing="ij")
    W = np.outer(wa, wb) / 2.0
    r = 0.5 * (1.0 + A) * (1.0 - B) - 1.0
    return np.stack([r.ravel(), B.ravel()], axis=1), W.ravel()


# ---------------------------------------------------------------------------
# NodalBasis
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class NodalBasis:
    """Reference-element nodal basis of order N.

    Face nodes of face e are ordered from the face's start vertex to its end
    vertex (faces run v0->v1, v1->v2, v2->v0), so the two sides of a conforming
    interior face see each other's nodes in reverse order.

    Attributes:
        nodes: (Np, d) interpolation nodes.
        vandermonde: (Np, Np) orthonormal-mode Vandermonde matrix.
        mass: (Np, Np) reference mass matrix M̂.
        diff: (d, Np, Np) differentiation matrices D_r (, D_s).
        fmask: (Nf, Ne) node indices on each face.
        face_mass: (Ne, Ne) reference face mass (identity weight 1 in 1D).
        quad_nodes, quad_weights: over-integration volume rule.
        quad_interp: (Nq, Np) nodal -> quadrature interpolation.
        quad_diff: (d, Nq, Np) derivatives of the nodal basis at quadrature points.
        face_quad_weights: (Nfq,) Gauss weights on the reference face.
        face_quad_interp: (Nfq, Ne) face nodal -> face Gauss interpolation.
    """

    dim: int
    N: int
    nodes: np.ndarray
    vandermonde: np.ndarray
    mass: np.ndarray
    inv_mass: np.ndarray
    diff: np.ndarray
    fmask: np.ndarray
    face_mass: np.ndarray
    quad_nodes: np.ndarray
    quad_weights: np.ndarray
    quad_interp: np.ndarray
    quad_diff: np.ndarray
    face_quad_weights: np.ndarray
    face_quad_interp: np.ndarray

    @property
    def n_p(self) -> int:
        return int(self.nodes.shape[0])

    @property
    def n_e(self) -> int:
        return int(self.fmask.shape[1])

    @property
    def n_faces(self) -> int:
        return int(self.fmask.shape[0])

    @property
    def n_q(self) -> int:
        return int(self.quad_weights.shape[0])

    @property
    def n_fq(self) -> int:
        return int(self.face_quad_weights.shape[0])


def _basis_1d(N: int) -> NodalBasis:
    r = jacobi_gl(0, 0, N)
    V = vandermonde_1d(N, r)
    Vinv = np.linalg.inv(V)
    Dr = grad_vandermonde_1d(N, r) @ Vinv
    mass = np.linalg.inv(V @ V.T)
    rq, wq = jacobi_gq(0, 0, N + 1)
    return NodalBasis(
        dim=1,
        N=N,
        nodes=r[:, None],
        vandermonde=V,
        mass=mass,
        inv_mass=V @ V.T,
        diff=Dr[None],
        fmask=np.array([[0], [N]]),
        face_mass=np.ones((1, 1)),
        quad_nodes=rq[:, None],
        quad_weights=wq,
        quad_interp=vandermonde_1d(N, rq) @ Vinv,
        quad_diff=(grad_vandermonde_1d(N, rq) @ Vinv)[None],
        face_quad_weights=np.ones(1),
        face_quad_interp=np.ones((1, 1)),
    )


def _basis_2d(N: int) -> NodalBasis:
    x, y = nodes_2d(N)
    r, s = xy_to_rs(x, y)
    V = vandermonde_2d(N, r, s)
    Vinv = np.linalg.inv(V)
    Vr, Vs = grad_vandermonde_2d(N, r, s)
    diff = np.stack([Vr @ Vinv, Vs @ Vinv])
    mass = np.linalg.inv(V @ V.T)

    # face nodes sorted by the face parameter t running start -> end vertex
    on_face = [np.abs(s + 1) < _NODE_TOL, np.abs(r + s) < _NODE_TOL, np.abs(r + 1) < _NODE_TOL]
    params = [r, s, -s]
    fmask = []
    for mask, t in zip(on_face, params):
        idx = np.flatnonzero(mask)
        fmask.append(idx[np.argsort(t[idx])])
    fmask = np.array(fmask)
    if fmask.shape != (3, N + 1):
        raise BasisError(f"face node extraction failed for N={N}")

    t_face = jacobi_gl(0, 0, N)
    V1 = vandermonde_1d(N, t_face)
    face_mass = np.linalg.inv(V1 @ V1.T)
    tg, wg = jacobi_gq(0, 0, N + 1)

    quad_nodes, quad_weights = collapsed_gauss_rule(N + 1)
    Vq = vandermonde_2d(N, quad_nodes[:, 0], quad_nodes[:, 1])
    Vqr, Vqs = grad_vandermonde_2d(N, quad_nodes[:, 0], quad_nodes[:, 1])
    return NodalBasis(
        dim=2,
        N=N,
        nodes=np.stack([r, s], axis=1),
        vandermonde=V,
        mass=mass,
        inv_mass=V @ V.T,
        diff=diff,
        fmask=fmask,
        face_mass=face_mass,
        quad_nodes=quad_nodes,
        quad_weights=quad_weights,
        quad_interp=Vq @ Vinv,
        quad_diff=np.stack([Vqr @ Vinv, Vqs @ Vinv]),
        face_quad_weights=wg,
        face_quad_interp=vandermonde_1d(N, tg) @ np.linalg.inv(V1),
    )


def build_basis(dim: int, N: int) -> NodalBasis:
    """Build the order-N nodal basis on the reference element of dimension dim.

    Raises:
        BasisError: dim not in {1, 2} or N outside 1..MAX_ORDER.
    """
    if dim not in (1, 2) or not 1 <= N <= MAX_ORDER:
        raise BasisError(f"unsupported basis (dim={dim}, N={N}); need dim in (1, 2) and 1 <= N <= {MAX_ORDER}")
    return _basis_1d(N) if dim == 1 else _basis_2d(N)
