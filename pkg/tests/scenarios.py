"""Synthetic pencils with prescribed spectra shared by several test modules."""

import numpy as np

from rational_feast.linalg import HermitianPencil

GAP = 0.98


def convergence_pencil(near, seed=0, N=60):
    """Dense generalized pencil with ten eigenvalues inside ``[-1, 1]``.

    The inside eigenvalues are ``+-G`` and eight points in ``[-0.9, 0.9]``;
    ``near`` are the first exterior eigenvalues and the rest lie in
    ``[1.05, 5]``.  The exterior is one-sided on purpose: eigenvectors from
    both sides of the interval with comparable filter values can mix into
    spurious Ritz values inside it.  The pencil is ``A = X^T L X``,
    ``B = X^T X`` with ``X`` a random perturbation of the identity, so the
    eigenvalues are exactly ``L``.
    """
    rng = np.random.default_rng(seed)
    inside = np.concatenate([[-GAP, GAP], np.linspace(-0.9, 0.9, 8)])
    near = np.asarray(near, dtype=float)
    far = rng.uniform(1.05, 5.0, N - len(inside) - len(near))
    lam = np.concatenate([inside, near, far])
    Xr = np.eye(N) + 0.1 * rng.standard_normal((N, N)) / np.sqrt(N)
    Xi = np.linalg.inv(Xr)
    A = Xi.T @ np.diag(lam) @ Xi
    B = Xi.T @ Xi
    return HermitianPencil(0.5 * (A + A.T), 0.5 * (B + B.T)), lam


NEAR_AT_GAP = [1 / GAP, 1.001 / GAP, 1.002 / GAP]
NEAR_AT_EDGE = [1.003, 1.004, 1.005]


def edge_cluster_pencil(seed=0):
    """Spectrum for a two-part split of ``[-1, 1]`` at zero.

    Fifteen eigenvalues in each half plus six clustered just right of the
    shared edge, inside the right part and just outside the left one.
    """
    rng = np.random.default_rng(seed)
    own1 = np.linspace(-0.9, -0.3, 15)
    cluster = np.linspace(0.015, 0.05, 6)
    own2 = np.linspace(0.2, 0.9, 15)
    lam = np.concatenate([own1, cluster, own2])
    N = len(lam)
    Q = np.linalg.qr(rng.standard_normal((N, N)))[0]
    A = Q @ np.diag(lam) @ Q.T
    return HermitianPencil(0.5 * (A + A.T)), lam


def random_diagonal_pencil(seed, N=60, n_inside=8):
    """Diagonal pencil with ``n_inside`` eigenvalues in ``(-0.9, 0.9)``, the rest at ``|lam| >= 1.1``."""
    rng = np.random.default_rng(seed)
    inside = rng.uniform(-0.9, 0.9, n_inside)
    out = rng.uniform(1.1, 5, N - n_inside) * rng.choice([-1, 1], N - n_inside)
    lam = rng.permutation(np.concatenate([inside, out]))
    b = rng.uniform(0.5, 2, N)
    return HermitianPencil(np.diag(lam * b), np.diag(b)), lam
