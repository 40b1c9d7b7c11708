"""Hermitian eigensolvers for the discretized quadratic forms.

Two routes: a dense path (LAPACK via numpy/scipy, with Cholesky reduction
for generalized pencils) used for oracles and small problems, and a block
LOBPCG iteration with optional Jacobi preconditioning for the shell-scale
sparse pencils.  Both return the same SpectrumResult record with per-pair
residuals ||A x - mu B x|| / ||B x||.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp

__all__ = [
    "HermitianPencil",
    "SpectrumResult",
    "EigensolveError",
    "dense_hermitian_eig",
    "lobpcg_smallest",
    "pencil_from_triplets",
]

DENSE_DIM_LIMIT = 8192
DENSE_FALLBACK_DIM = 2048


class EigensolveError(RuntimeError):
    pass


@dataclass(frozen=True)
class HermitianPencil:
    """Pair (A, B) with A hermitian and B hermitian positive definite.

    ``b`` may be None, meaning the identity (standard problem).  Matrices
    may be dense arrays or scipy sparse.
    """

    a: object
    b: object | None
    dim: int

    @staticmethod
    def make(a, b=None) -> "HermitianPencil":
        dim = a.shape[0]
        if a.shape != (dim, dim):
            raise ValueError("A must be square")
        if b is not None and b.shape != (dim, dim):
            raise ValueError("B must match A")
        return HermitianPencil(a=a, b=b, dim=dim)

    def apply_a(self, x: np.ndarray) -> np.ndarray:
        return self.a @ x

    def apply_b(self, x: np.ndarray) -> np.ndarray:
        return x if self.b is None else self.b @ x


@dataclass(frozen=True)
class SpectrumResult:
    eigenvalues: np.ndarray
    residuals: np.ndarray
    iterations: int
    converged: bool
    vectors: np.ndarray | None = None


def _as_dense(mat) -> np.ndarray:
    if sp.issparse(mat):
        return mat.toarray()
    return np.asarray(mat)


def _check_hermitian(a: np.ndarray, tol: float = 1e-12) -> None:
    scale = max(np.abs(a).max(), 1.0)
    dev = np.abs(a - a.conj().T).max()
    if dev > tol * scale:
        raise ValueError(f"matrix is not hermitian: deviation {dev:g} at scale {scale:g}")


def _residuals(pencil: HermitianPencil, vals: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    av = pencil.apply_a(vecs)
    bv = pencil.apply_b(vecs)
    num = np.linalg.norm(av - bv * vals[None, :], axis=0)
    den = np.linalg.norm(bv, axis=0)
    return num / np.where(den > 0, den, 1.0)


def dense_hermitian_eig(a, b=None, check: bool = True) -> SpectrumResult:
    """Full ascending spectrum of the pencil (A, B) by dense factorization.

    B, when given, must pass a Cholesky positivity check; the generalized
    problem is reduced through that factorization (scipy.linalg.eigh).
    """
    a = _as_dense(a).astype(complex)
    dim = a.shape[0]
    if dim > DENSE_DIM_LIMIT:
        raise ValueError(f"dense path capped at dim {DENSE_DIM_LIMIT}, got {dim}")
    if check:
        _check_hermitian(a)
    if b is None:
        vals, vecs = np.linalg.eigh(a)
        pencil = HermitianPencil.make(a)
    else:
        b = _as_dense(b).astype(complex)
        if check:
            _check_hermitian(b)
        try:
            np.linalg.cholesky(b)
        except np.linalg.LinAlgError as exc:
            raise ValueError("B is not positive definite") from exc
        vals, vecs = scipy.linalg.eigh(a, b)
        pencil = HermitianPencil.make(a, b)
    res = _residuals(pencil, vals, vecs)
    return SpectrumResult(eigenvalues=vals, residuals=res, iterations=0, converged=True, vectors=vecs)


def _b_orthonormalize(pencil, block, b_block=None):
    """Return (V, BV) with V^H B V = I, dropping near-dependent directions."""
    if b_block is None:
        b_block = pencil.apply_b(block)
    gram = block.conj().T @ b_block
    gram = 0.5 * (gram + gram.conj().T)
    try:
        chol = np.linalg.cholesky(gram)
        inv = scipy.linalg.solve_triangular(chol, np.eye(gram.shape[0], dtype=complex), lower=True)
        v = block @ inv.conj().T
        bv = b_block @ inv.conj().T
        return v, bv
    except np.linalg.LinAlgError:
        w, q = np.linalg.eigh(gram)
        keep = w > max(w.max(), 0.0) * 1e-12
        if not np.any(keep):
            return None, None
        scale = q[:, keep] / np.sqrt(w[keep])[None, :]
        return block @ scale, b_block @ scale


def lobpcg_smallest(
    pencil: HermitianPencil,
    count: int,
    tol: float = 1e-8,
    maxiter: int = 3000,
    preconditioner: str = "jacobi",
    seed: int = 0,
    x0: np.ndarray | None = None,
    dense_cutoff: int = DENSE_FALLBACK_DIM,
) -> SpectrumResult:
    """The ``count`` smallest generalized eigenpairs by block LOBPCG.

    Soft locking: converged Ritz pairs stay in the subspace but stop
    producing preconditioned residual directions.  For dim <= dense_cutoff
    the dense path is used outright.  Non-convergence returns a partial
    result with converged=False rather than raising.
    """
    if count < 1 or count > 16:
        raise ValueError("count must lie in 1..16")
    dim = pencil.dim
    if dim < 4 * count:
        raise ValueError("pencil too small for the requested block (need dim >= 4*count)")

    if dim <= dense_cutoff:
        full = dense_hermitian_eig(pencil.a, pencil.b, check=False)
        return SpectrumResult(
            eigenvalues=full.eigenvalues[:count],
            residuals=full.residuals[:count],
            iterations=0,
            converged=True,
            vectors=full.vectors[:, :count],
        )

    if callable(preconditioner):
        precond = preconditioner
    elif preconditioner == "jacobi":
        diag = pencil.a.diagonal() if sp.issparse(pencil.a) else np.diagonal(pencil.a)
        diag = np.real(diag).copy()
        floor = max(np.abs(diag).max(), 1.0) * 1e-14
        diag[np.abs(diag) < floor] = floor
        precond = lambda r: r / diag[:, None]
    elif preconditioner == "none":
        precond = lambda r: r
    else:
        raise ValueError("preconditioner must be 'none', 'jacobi', or a callable")

    nb = min(count + max(4, count // 2), dim // 4)
    rng = np.random.default_rng(seed)
    if x0 is not None:
        x = np.array(x0, dtype=complex)
        if x.shape[1] < nb:
            extra = rng.standard_normal((dim, nb - x.shape[1])) + 1j * rng.standard_normal(
                (dim, nb - x.shape[1])
            )
            x = np.hstack([x, extra])
    else:
        x = rng.standard_normal((dim, nb)) + 1j * rng.standard_normal((dim, nb))

    x, bx = _b_orthonormalize(pencil, x)
    ax = pencil.apply_a(x)
    p = bp = ap = None
    vals = np.zeros(nb)
    res = np.full(nb, np.inf)
    iterations = 0

    for iterations in range(1, maxiter + 1):
        xax = x.conj().T @ ax
        vals = np.real(np.diagonal(xax))
        order = np.argsort(vals)
        # keep the block sorted so locking always applies to the lowest pairs
        if not np.array_equal(order, np.arange(nb)):
            x, ax, bx = x[:, order], ax[:, order], bx[:, order]
            vals = vals[order]
        r = ax - bx * vals[None, :]
        bnorm = np.linalg.norm(bx, axis=0)
        res = np.linalg.norm(r, axis=0) / np.where(bnorm > 0, bnorm, 1.0)
        active = res[:count] > tol
        if not np.any(active):
            break

        w = precond(r)
        # soft lock: only residuals of unconverged pairs expand the subspace
        mask = res > tol
        w = w[:, mask]
        basis = [x]
        if p is not None:
            basis.append(p)
        basis.append(w)
        s = np.hstack(basis)
        s, bs = _b_orthonormalize(pencil, s)
        if s is None:
            break
        as_ = pencil.apply_a(s)
        gram = s.conj().T @ as_
        gram = 0.5 * (gram + gram.conj().T)
        theta, y = np.linalg.eigh(gram)
        y = y[:, :nb]
        x_new = s @ y
        ax_new = as_ @ y
        bx_new = bs @ y
        # implicit P: the part of the new block outside the previous X
        cx = x.conj().T @ (bs @ y)
        p = x_new - x @ cx
        ap = ax_new - ax @ cx
        bp = bx_new - bx @ cx
        pn = np.linalg.norm(p, axis=0)
        keep = pn > 1e-12 * max(1.0, float(np.linalg.norm(x_new)))
        p, ap, bp = p[:, keep], ap[:, keep], bp[:, keep]
        if p.shape[1] == 0:
            p = ap = bp = None
        x, ax, bx = x_new, ax_new, bx_new

    order = np.argsort(vals)[:count]
    vecs = x[:, order]
    out_vals = vals[order]
    out_res = res[order]
    converged = bool(np.all(out_res <= tol))
    return SpectrumResult(
        eigenvalues=out_vals,
        residuals=out_res,
        iterations=iterations,
        converged=converged,
        vectors=vecs,
    )


def pencil_from_triplets(rows, cols, re, im, dim, b=None) -> HermitianPencil:
    """Assemble a pencil from symmetric sparse triplets (row, col, re, im)."""
    data = np.asarray(re, dtype=float) + 1j * np.asarray(im, dtype=float)
    a = sp.coo_matrix((data, (rows, cols)), shape=(dim, dim)).tocsr()
    return HermitianPencil.make(a, b)
