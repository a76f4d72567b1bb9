"""A posteriori error estimation for the compressed solver.

The solver's solution error obeys

    ||q_approx - q|| <= ||A_approx^-1|| ||A - A_approx|| ||q||,

so estimating the two operator norms bounds the error without ever
solving exactly.  Both norms are estimated by power iteration on the
normal operator (apply, then adjoint-apply), which converges to the
largest singular value for non-symmetric operators too.
"""

from __future__ import annotations

import numpy as np

from . import quadrature as quad
from .hbs import HbsMatrix, hbs_matvec, hbs_transpose
from .inversion import HbsInverse, apply_inverse, inverse_transpose
from .quadrature import QuadratureGrid


def power_norm(apply, apply_adjoint, dim, iters=50, seed=0):
    """Spectral-norm estimate of a linear operator via power iteration on
    A* A; a lower bound on the true norm up to round-off."""
    if iters < 2:
        raise ValueError("iters must be >= 2")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(iters):
        w = apply(v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = apply_adjoint(w / nw)
        sigma = np.linalg.norm(v)
        if sigma == 0.0:
            return 0.0
        # v is now A* u for a unit vector u, so ||v|| -> sigma_max
        v /= sigma
    return float(sigma)


def _exact_matvecs(A_exact):
    """Forward/adjoint matvec callbacks for a dense array or a grid."""
    if isinstance(A_exact, QuadratureGrid):
        return (
            lambda v: quad.dense_matvec(A_exact, v),
            lambda v: quad.dense_matvec_transpose(A_exact, v),
            A_exact.size,
        )
    A = np.asarray(A_exact, float)
    return (lambda v: A @ v), (lambda v: A.T @ v), A.shape[0]


def estimate_solver_error(A_exact, A_approx: HbsMatrix, inv: HbsInverse, *,
                          iters=50, seed=0):
    """Returns (err_A, norm_inv, bound_factor).

    err_A estimates ||A - A_approx||, norm_inv estimates ||A_approx^-1||,
    and their product bounds ||q_approx - q|| / ||q||.  A_exact is either
    the dense matrix or a QuadratureGrid (streamed dense matvec).
    """
    mv, mvT, n = _exact_matvecs(A_exact)
    At = hbs_transpose(A_approx)
    err_A = power_norm(
        lambda v: mv(v) - hbs_matvec(A_approx, v),
        lambda v: mvT(v) - hbs_matvec(At, v),
        n, iters=iters, seed=seed,
    )
    invT = inverse_transpose(inv)
    norm_inv = power_norm(
        lambda v: apply_inverse(inv, v),
        lambda v: apply_inverse(invT, v),
        n, iters=iters, seed=seed + 1,
    )
    return err_A, norm_inv, err_A * norm_inv
