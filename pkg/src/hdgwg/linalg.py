"""Linear algebra for the saddle systems: solves and inf-sup constants."""

from __future__ import annotations

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class SingularMatrixError(RuntimeError):
    """Raised when a solve does not meet the requested residual tolerance."""


def solve_symmetric_indefinite(matrix, rhs, rtol=1e-10):
    """Solve A x = b for symmetric (generally indefinite) sparse A.

    The solution is refined iteratively until ||A x - b|| <= rtol ||b||
    when the matrix is well scaled; in general the acceptance criterion is
    the normwise backward error ||A x - b|| <= rtol (||A||_F ||x|| + ||b||),
    which is attainable in double precision even when the stabilization
    weights inflate the matrix scale.  Failure raises SingularMatrixError.
    """
    A = sp.csr_matrix(matrix)
    b = np.asarray(rhs, dtype=float)
    if A.shape[0] != A.shape[1] or A.shape[0] != b.shape[0]:
        raise ValueError("matrix/rhs shapes do not match")
    try:
        factor = spla.splu(A.tocsc())
        x = factor.solve(b)
    except Exception as exc:
        raise SingularMatrixError("sparse factorization failed") from exc
    if not np.all(np.isfinite(x)):
        raise SingularMatrixError("solution contains non-finite entries")
    strict = rtol * max(np.linalg.norm(b), 1e-300)
    anorm = np.sqrt(np.sum(A.data**2))
    for _ in range(5):
        r = b - A @ x
        if np.linalg.norm(r) <= strict:
            return x
        x = x + factor.solve(r)
    residual = np.linalg.norm(b - A @ x)
    bound = rtol * max(anorm * np.linalg.norm(x) + np.linalg.norm(b), 1e-300)
    if residual > bound:
        raise SingularMatrixError(
            "residual {:.3e} exceeds tolerance {:.3e}".format(residual, bound)
        )
    return x


def min_generalized_singular_value(A, N):
    """Smallest |lambda| of N^{-1/2} A N^{-1/2} for symmetric A and SPD N.

    Equals min_x max_y (x' A y) / (|x|_N |y|_N), the discrete inf-sup
    constant of A measured in the norm induced by N.
    """
    Ad = _densify(A)
    Nd = _densify(N)
    if Ad.shape != Nd.shape or Ad.shape[0] != Ad.shape[1]:
        raise ValueError("A and N must be square with equal shapes")
    try:
        scipy.linalg.cholesky(Nd)
    except scipy.linalg.LinAlgError as exc:
        raise ValueError("norm matrix N must be symmetric positive definite") from exc
    eigvals = scipy.linalg.eigh(Ad, Nd, eigvals_only=True)
    return float(np.min(np.abs(eigvals)))


def _densify(M):
    if sp.issparse(M):
        return M.toarray()
    return np.asarray(M, dtype=float)


def write_matrix(matrix, fh):
    """Write ``row col value`` coordinate text, row-major, 17 digits."""
    coo = sp.coo_matrix(matrix)
    order = np.lexsort((coo.col, coo.row))
    for i in order:
        fh.write("{} {} {:.17g}\n".format(coo.row[i], coo.col[i], coo.data[i]))


def read_matrix(fh):
    """Read the square coordinate text format produced by write_matrix."""
    rows, cols, vals = [], [], []
    for line in fh:
        if not line.strip():
            continue
        r, c, v = line.split()
        rows.append(int(r))
        cols.append(int(c))
        vals.append(float(v))
    n = max(max(rows), max(cols)) + 1 if rows else 0
    return sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
