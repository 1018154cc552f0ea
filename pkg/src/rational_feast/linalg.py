"""Hermitian pencils, complex-shifted solves, the reduced eigenproblem and
Matrix Market I/O.

Everything here targets desk-scale problems: sparse matrices are kept in
CSR for products, but shifted systems are factored densely.
"""

import warnings

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import (DomainError, MatrixMarketError, RankDeficiencyWarning,
                     SingularShiftError)

HERMITIAN_RTOL = 1e-12
PIVOT_TOL = 1e-14
SOLVE_RTOL = 1e-10
RANK_TOL = 1e-12


def _as_matrix(M, name):
    if sp.issparse(M):
        M = sp.csr_matrix(M)
    else:
        M = np.asarray(M)
        if M.dtype.kind not in "fciub":
            raise DomainError(f"{name} must be numeric")
        M = M.astype(np.result_type(M.dtype, float))
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DomainError(f"{name} must be square, got shape {M.shape}")
    return M


def _hermitian_defect(M):
    D = M - M.conj().T
    if sp.issparse(D):
        d = abs(D).max() if D.nnz else 0.0
        scale = abs(M).max() if M.nnz else 0.0
    else:
        d = np.max(np.abs(D), initial=0.0)
        scale = np.max(np.abs(M), initial=0.0)
    return d, scale


def _todense(M):
    return M.toarray() if sp.issparse(M) else np.asarray(M)


class HermitianPencil:
    """The pencil ``(A, B)`` with ``A`` Hermitian and ``B`` Hermitian positive definite.

    Parameters
    ----------
    A : array_like or sparse matrix
        Hermitian matrix, dense or sparse (stored as CSR).
    B : array_like or sparse matrix, optional
        Hermitian positive-definite mass matrix; the identity when omitted.
    check : bool
        Verify Hermitian symmetry to ``1e-12`` relative and that ``B`` admits
        a Cholesky factorization.
    """

    def __init__(self, A, B=None, check=True):
        A = _as_matrix(A, "A")
        self.N = A.shape[0]
        self.b_is_identity = B is None
        if B is None:
            B = sp.identity(self.N, format="csr") if sp.issparse(A) else np.eye(self.N)
        B = _as_matrix(B, "B")
        if B.shape != A.shape:
            raise DomainError(f"A is {A.shape} but B is {B.shape}")
        self.A = A
        self.B = B
        self.real_symmetric = not (np.iscomplexobj(A.data if sp.issparse(A) else A)
                                   or np.iscomplexobj(B.data if sp.issparse(B) else B))
        self._dense = None
        if check:
            self._check()

    def _check(self):
        for name, M in (("A", self.A), ("B", self.B)):
            d, scale = _hermitian_defect(M)
            if d > HERMITIAN_RTOL * max(scale, np.finfo(float).tiny):
                raise DomainError(f"{name} is not Hermitian (defect {d:.3e}, scale {scale:.3e})")
        if not self.b_is_identity:
            try:
                sla.cholesky(_todense(self.B), lower=True)
            except np.linalg.LinAlgError as exc:
                raise DomainError("B is not positive definite") from exc

    @property
    def is_sparse(self):
        return sp.issparse(self.A)

    def dense(self):
        """Dense copies ``(A, B)``, built once."""
        if self._dense is None:
            self._dense = (_todense(self.A), _todense(self.B))
        return self._dense

    def matvec_A(self, X):
        return self.A @ X

    def matvec_B(self, X):
        if self.b_is_identity:
            return np.array(X, copy=True)
        return self.B @ X

    def norm_scale(self):
        A, B = self.dense()
        return max(np.max(np.abs(A), initial=0.0), np.max(np.abs(B), initial=0.0))


class ShiftedFactor:
    """LU factorization of ``z*B - A`` for one complex shift ``z``."""

    def __init__(self, pencil, z):
        self.pencil = pencil
        self.z = complex(z)
        A, B = pencil.dense()
        M = self.z * B - A
        scale = np.max(np.abs(M), initial=0.0)
        if not np.all(np.isfinite(M)):
            raise SingularShiftError(self.z, f"non-finite entries in z*B - A at z = {self.z!r}")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", sla.LinAlgWarning)
            lu, piv = sla.lu_factor(M, check_finite=False)
        pivot = np.min(np.abs(np.diag(lu)), initial=np.inf)
        if pivot <= PIVOT_TOL * scale:
            raise SingularShiftError(
                self.z, f"shifted system is singular at z = {self.z!r} "
                        f"(pivot {pivot:.3e}, scale {scale:.3e})")
        self._M = M
        self._lu = (lu, piv)

    def solve(self, RHS):
        RHS = np.asarray(RHS)
        X = sla.lu_solve(self._lu, RHS, check_finite=False)
        # one step of iterative refinement
        R = RHS - self._M @ X
        X = X + sla.lu_solve(self._lu, R, check_finite=False)
        rnorm = np.linalg.norm(RHS - self._M @ X)
        bnorm = np.linalg.norm(RHS)
        if bnorm > 0 and rnorm > SOLVE_RTOL * bnorm:
            raise SingularShiftError(
                self.z, f"shifted solve at z = {self.z!r} reached only relative "
                        f"residual {rnorm / bnorm:.3e}")
        return X


def shifted_solve(pencil, z, RHS):
    """Solve ``(z B - A) X = RHS``.

    Raises
    ------
    SingularShiftError
        If a pivot of the LU factorization falls below ``1e-14`` times the
        largest entry of ``z B - A``, or the refined solution misses the
        ``1e-10`` relative residual target.
    """
    RHS = np.asarray(RHS)
    if RHS.shape[0] != pencil.N:
        raise DomainError(f"RHS has {RHS.shape[0]} rows, pencil has N = {pencil.N}")
    return ShiftedFactor(pencil, z).solve(RHS)


def reduced_eig(Ahat, Bhat):
    """Solve the small Hermitian pencil ``Ahat w = theta Bhat w``.

    Returns
    -------
    theta : ndarray
        Eigenvalues, ascending.
    W : ndarray
        ``Bhat``-orthonormal eigenvectors.  When ``Bhat`` is numerically
        rank deficient (eigenvalues below ``1e-12`` times the largest), the
        deficient directions are dropped, a :class:`RankDeficiencyWarning`
        is issued, and ``W`` has fewer columns than ``Bhat``.
    """
    Ahat = np.asarray(Ahat)
    Bhat = np.asarray(Bhat)
    if Ahat.shape != Bhat.shape or Ahat.ndim != 2 or Ahat.shape[0] != Ahat.shape[1]:
        raise DomainError("Ahat and Bhat must be square and of equal size")
    Ahat = 0.5 * (Ahat + Ahat.conj().T)
    Bhat = 0.5 * (Bhat + Bhat.conj().T)
    s, U = np.linalg.eigh(Bhat)
    smax = s[-1] if len(s) else 0.0
    if smax <= 0:
        raise DomainError("Bhat has no positive eigenvalues")
    keep = s > RANK_TOL * smax
    if not np.all(keep):
        warnings.warn(
            f"reduced mass matrix has effective rank {int(keep.sum())} of {len(s)}; "
            "subspace truncated", RankDeficiencyWarning, stacklevel=2)
        T = U[:, keep] / np.sqrt(s[keep])
        C = T.conj().T @ Ahat @ T
        theta, V = np.linalg.eigh(0.5 * (C + C.conj().T))
        return theta, T @ V
    L = sla.cholesky(Bhat, lower=True)
    C = sla.solve_triangular(L, Ahat, lower=True)
    C = sla.solve_triangular(L, C.conj().T, lower=True).conj().T
    theta, V = np.linalg.eigh(0.5 * (C + C.conj().T))
    W = sla.solve_triangular(L.conj().T, V, lower=False)
    return theta, W


def b_inner(pencil, U, V):
    """``U^H B V``."""
    U = np.asarray(U)
    V = np.asarray(V)
    if U.shape[0] != pencil.N or V.shape[0] != pencil.N:
        raise DomainError(f"blocks must have N = {pencil.N} rows, got {U.shape[0]} and {V.shape[0]}")
    return U.conj().T @ pencil.matvec_B(V)


# -- Matrix Market ---------------------------------------------------------

_FORMATS = ("coordinate", "array")
_FIELDS = ("real", "complex", "integer", "pattern")
_SYMMETRIES = ("general", "symmetric", "hermitian", "skew-symmetric")


def _parse_header(line, lineno):
    parts = line.strip().split()
    if len(parts) != 5 or parts[0].lower() != "%%matrixmarket" or parts[1].lower() != "matrix":
        raise MatrixMarketError("expected '%%MatrixMarket matrix <format> <field> <symmetry>'", lineno)
    fmt, field, symm = (p.lower() for p in parts[2:])
    if fmt not in _FORMATS:
        raise MatrixMarketError(f"unknown format {fmt!r}", lineno)
    if field not in _FIELDS:
        raise MatrixMarketError(f"unknown field {field!r}", lineno)
    if symm not in _SYMMETRIES:
        raise MatrixMarketError(f"unknown symmetry {symm!r}", lineno)
    if fmt == "array" and field == "pattern":
        raise MatrixMarketError("pattern field is only valid in coordinate format", lineno)
    if symm == "hermitian" and field != "complex":
        raise MatrixMarketError("hermitian symmetry requires the complex field", lineno)
    return fmt, field, symm


def _parse_value(tokens, field, lineno):
    try:
        if field == "complex":
            if len(tokens) != 2:
                raise ValueError
            return complex(float(tokens[0]), float(tokens[1]))
        if len(tokens) != 1:
            raise ValueError
        if field == "integer":
            return int(tokens[0])
        return float(tokens[0])
    except ValueError:
        raise MatrixMarketError(f"malformed {field} value {' '.join(tokens)!r}", lineno) from None


def _data_lines(lines, start):
    for lineno, line in enumerate(lines, start=start):
        s = line.strip()
        if s and not s.startswith("%"):
            yield lineno, s


def load_matrix_market(path):
    """Read a Matrix Market file.

    Coordinate files return a CSR matrix, array files a dense ndarray.
    Symmetric, skew-symmetric and Hermitian storage is expanded to the full
    matrix.  Malformed input raises :class:`MatrixMarketError` naming the
    offending line.
    """
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise MatrixMarketError("empty file", 1)
    fmt, field, symm = _parse_header(lines[0], 1)
    dtype = complex if field == "complex" else float
    body = _data_lines(lines[1:], 2)
    try:
        lineno, size_line = next(body)
    except StopIteration:
        raise MatrixMarketError("missing size line", len(lines)) from None
    try:
        dims = [int(t) for t in size_line.split()]
    except ValueError:
        raise MatrixMarketError(f"malformed size line {size_line!r}", lineno) from None
    if fmt == "coordinate":
        if len(dims) != 3:
            raise MatrixMarketError("coordinate size line needs 'rows cols nnz'", lineno)
        nrows, ncols, nnz = dims
    else:
        if len(dims) != 2:
            raise MatrixMarketError("array size line needs 'rows cols'", lineno)
        nrows, ncols = dims
    if min(dims) < 0:
        raise MatrixMarketError("negative dimension", lineno)
    if symm != "general" and nrows != ncols:
        raise MatrixMarketError(f"{symm} matrix must be square, got {nrows}x{ncols}", lineno)

    if fmt == "coordinate":
        rows, cols, vals = [], [], []
        for lineno, s in body:
            if len(rows) == nnz:
                raise MatrixMarketError(f"more than the declared {nnz} entries", lineno)
            tok = s.split()
            try:
                i, j = int(tok[0]), int(tok[1])
            except (ValueError, IndexError):
                raise MatrixMarketError(f"malformed entry {s!r}", lineno) from None
            if not (1 <= i <= nrows and 1 <= j <= ncols):
                raise MatrixMarketError(f"index ({i}, {j}) outside {nrows}x{ncols}", lineno)
            if symm != "general" and i < j:
                raise MatrixMarketError(f"{symm} storage expects the lower triangle, got ({i}, {j})", lineno)
            if symm == "skew-symmetric" and i == j:
                raise MatrixMarketError("skew-symmetric storage has no diagonal", lineno)
            v = 1.0 if field == "pattern" else _parse_value(tok[2:], field, lineno)
            if field == "pattern" and len(tok) != 2:
                raise MatrixMarketError(f"pattern entry must hold two indices, got {s!r}", lineno)
            rows.append(i - 1)
            cols.append(j - 1)
            vals.append(v)
        if len(rows) != nnz:
            raise MatrixMarketError(f"declared {nnz} entries, found {len(rows)}", len(lines))
        rows = np.array(rows, dtype=np.int64)
        cols = np.array(cols, dtype=np.int64)
        vals = np.array(vals, dtype=dtype)
        if symm != "general":
            off = rows != cols
            mirror = {"symmetric": vals[off], "skew-symmetric": -vals[off],
                      "hermitian": np.conj(vals[off])}[symm]
            rows, cols = np.concatenate([rows, cols[off]]), np.concatenate([cols, rows[off]])
            vals = np.concatenate([vals, mirror])
        return sp.csr_matrix((vals, (rows, cols)), shape=(nrows, ncols))

    # array format: column-major; non-general stores the lower triangle
    if symm == "general":
        positions = [(i, j) for j in range(ncols) for i in range(nrows)]
    else:
        first = 1 if symm == "skew-symmetric" else 0
        positions = [(i, j) for j in range(ncols) for i in range(j + first, nrows)]
    M = np.zeros((nrows, ncols), dtype=dtype)
    k = 0
    for lineno, s in body:
        if k == len(positions):
            raise MatrixMarketError(f"more than the expected {len(positions)} values", lineno)
        i, j = positions[k]
        v = _parse_value(s.split(), field, lineno)
        M[i, j] = v
        if i != j:
            if symm == "symmetric":
                M[j, i] = v
            elif symm == "skew-symmetric":
                M[j, i] = -v
            elif symm == "hermitian":
                M[j, i] = np.conj(v)
        k += 1
    if k != len(positions):
        raise MatrixMarketError(f"expected {len(positions)} values, found {k}", len(lines))
    return M


def _fmt_value(v, field):
    if field == "complex":
        return f"{float(v.real)!r} {float(v.imag)!r}"
    if field == "integer":
        return str(int(v))
    return repr(float(v.real))


def write_matrix_market(path, M, symmetry="general", comment=None):
    """Write ``M`` in Matrix Market format.

    Sparse input is written in coordinate format, dense input in array
    format.  Values use ``repr`` so doubles round-trip exactly.  With
    ``symmetry`` other than ``"general"`` only the lower triangle is stored.
    """
    if symmetry not in _SYMMETRIES:
        raise DomainError(f"unknown symmetry {symmetry!r}")
    sparse = sp.issparse(M)
    data = M.data if sparse else np.asarray(M)
    if np.iscomplexobj(data):
        field = "complex"
    elif data.dtype.kind in "iub":
        field = "integer"
    else:
        field = "real"
    if symmetry == "hermitian" and field != "complex":
        raise DomainError("hermitian storage requires complex values")
    nrows, ncols = M.shape
    out = [f"%%MatrixMarket matrix {'coordinate' if sparse else 'array'} {field} {symmetry}"]
    if comment:
        out.extend(f"% {line}" for line in comment.splitlines())
    if sparse:
        C = sp.coo_matrix(M)
        order = np.lexsort((C.row, C.col))
        r, c, v = C.row[order], C.col[order], C.data[order]
        if symmetry != "general":
            keep = r > c if symmetry == "skew-symmetric" else r >= c
            r, c, v = r[keep], c[keep], v[keep]
        out.append(f"{nrows} {ncols} {len(v)}")
        out.extend(f"{i + 1} {j + 1} {_fmt_value(x, field)}" for i, j, x in zip(r, c, v))
    else:
        out.append(f"{nrows} {ncols}")
        first = {"general": None, "skew-symmetric": 1}.get(symmetry, 0)
        for j in range(ncols):
            start = 0 if first is None else j + first
            out.extend(_fmt_value(data[i, j], field) for i in range(start, nrows))
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
