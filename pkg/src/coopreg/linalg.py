"""Dense small-matrix numerics.

Sylvester and Lyapunov equations are solved through their Kronecker-product
linear systems, the minimal polynomial comes from a rank test on the Krylov
sequence ``I, S, S^2, ...``, and eigenvalues are computed by balancing,
Householder reduction to Hessenberg form and Francis double-shift QR.
Everything here targets matrices of dimension up to a few dozen.
"""
from dataclasses import dataclass
import math

import numpy as np

from .errors import NoConvergence, NotHurwitz, Singular, SpectraOverlap

__all__ = [
    "Tolerances",
    "DEFAULT_TOL",
    "solve_sylvester",
    "solve_lyapunov",
    "minimal_polynomial",
    "companion_pair",
    "poly_eval",
    "poly_divmod",
    "eigenvalues",
    "spectral_abscissa",
    "is_hurwitz",
    "poly_is_hurwitz",
    "controllability_rank",
]


@dataclass(frozen=True)
class Tolerances:
    spectra_gap: float = 1e-8
    residual: float = 1e-10
    hurwitz: float = 1e-9
    krylov_rank: float = 1e-9
    condition: float = 1e8
    # QR sweeps allowed per matrix row (total budget scales with size)
    qr_max_iter: int = 30


DEFAULT_TOL = Tolerances()

# below this size the QR sweeps run on Python floats
_SMALL_N = 20


def _as_matrix(a):
    a = np.asarray(a, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        a = a.reshape(1, -1)
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def _vec(x):
    # column-stacking vectorization, vec(AXB) = (B^T kron A) vec(X)
    return x.reshape(-1, order="F")


def _unvec(x, shape):
    return x.reshape(shape, order="F")


def solve_sylvester(A, B, C, tol=DEFAULT_TOL, spectra=None):
    """Solve ``X B - A X = C`` for ``X``.

    Parameters
    ----------
    A : (n, n) array_like
    B : (m, m) array_like
    C : (n, m) array_like
    spectra : (eig(A), eig(B)), optional
        Eigenvalues already at hand, to skip recomputing them.

    Returns
    -------
    X : (n, m) ndarray

    Raises
    ------
    SpectraOverlap
        If some eigenvalue of ``A`` lies within ``tol.spectra_gap`` of an
        eigenvalue of ``B``.
    Singular
        If the Kronecker system is numerically rank deficient.
    """
    A = np.asarray(A, dtype=float)
    B = _as_matrix(B)
    C = np.asarray(C, dtype=float)
    n, m = A.shape[0], B.shape[0]
    C = C.reshape(n, m)
    if n == 0 or m == 0:
        return np.zeros((n, m))
    A = _as_matrix(A)
    ea, eb = spectra if spectra is not None else (eigenvalues(A), eigenvalues(B))
    gap = np.min(np.abs(ea[:, None] - eb[None, :]))
    if gap < tol.spectra_gap:
        raise SpectraOverlap(f"spectra of A and B are {gap:.3e} apart")
    K = np.kron(B.T, np.eye(n)) - np.kron(np.eye(m), A)
    if np.linalg.matrix_rank(K) < K.shape[0]:
        raise Singular("Kronecker system of the Sylvester equation is singular")
    return _unvec(np.linalg.solve(K, _vec(C)), (n, m))


def solve_lyapunov(M, tol=DEFAULT_TOL):
    """Return the symmetric positive definite ``P`` with ``M^T P + P M = -I``.

    Raises ``NotHurwitz`` when some eigenvalue of ``M`` has real part
    ``>= -tol.hurwitz``.
    """
    M = _as_matrix(M)
    n = M.shape[0]
    if spectral_abscissa(M) >= -tol.hurwitz:
        raise NotHurwitz("Lyapunov equation needs a Hurwitz matrix")
    I = np.eye(n)
    K = np.kron(I, M.T) + np.kron(M.T, I)
    P = _unvec(np.linalg.solve(K, -_vec(I)), (n, n))
    return 0.5 * (P + P.T)


def minimal_polynomial(S, tol=DEFAULT_TOL):
    """Monic minimal polynomial of ``S``.

    Returns the coefficients ``alpha_0 .. alpha_{l-1}`` in ascending degree;
    the leading coefficient 1 is implicit, so ``len(result) == l``.
    """
    S = _as_matrix(S)
    q = S.shape[0]
    powers = [np.eye(q)]
    for k in range(1, q + 1):
        powers.append(powers[-1] @ S)
        K = np.column_stack([_vec(P) for P in powers])
        norms = np.linalg.norm(K, axis=0)
        scale = np.where(norms > 0, norms, 1.0)
        sv = np.linalg.svd(K / scale, compute_uv=False)
        if np.sum(sv > tol.krylov_rank * sv[0]) < K.shape[1]:
            coeffs, *_ = np.linalg.lstsq(K[:, :k], -K[:, k], rcond=None)
            return coeffs + 0.0
    raise AssertionError("unreachable: Cayley-Hamilton bounds the degree by q")


def companion_pair(p, l=None):
    """Companion matrix ``Phi`` (last row ``-alpha``) and ``Psi = [1 0 ... 0]``."""
    p = np.atleast_1d(np.asarray(p, dtype=float))
    if l is None:
        l = p.size
    if l < 1 or p.size != l:
        raise ValueError(f"need {l} >= 1 coefficients, got {p.size}")
    Phi = np.eye(l, k=1)
    Phi[-1, :] = -p
    Psi = np.zeros((1, l))
    Psi[0, 0] = 1.0
    return Phi, Psi


def poly_eval(p, x):
    """Evaluate the monic polynomial with ascending coefficients ``p`` at ``x``.

    ``x`` may be a scalar or a square matrix.
    """
    p = np.atleast_1d(np.asarray(p, dtype=float))
    if np.ndim(x) == 2:
        x = np.asarray(x)
        acc = np.eye(x.shape[0], dtype=x.dtype)
        for c in p[::-1]:
            acc = acc @ x + c * np.eye(x.shape[0])
        return acc
    acc = 1.0 + 0 * x
    for c in p[::-1]:
        acc = acc * x + c
    return acc


def poly_divmod(num, den):
    """Long division of descending-coefficient polynomials; returns (q, r)."""
    num = np.array(num, dtype=complex)
    den = np.array(den, dtype=complex)
    if len(num) < len(den):
        return np.zeros(1, dtype=complex), num
    q = np.zeros(len(num) - len(den) + 1, dtype=complex)
    r = num.copy()
    for i in range(len(q)):
        q[i] = r[i] / den[0]
        r[i:i + len(den)] -= q[i] * den
    return q, r[len(q):]


def poly_is_hurwitz(p):
    """True when every root of the monic ascending-coefficient ``p`` has Re < 0."""
    p = np.atleast_1d(np.asarray(p, dtype=float))
    if p.size == 0:
        return True
    Phi, _ = companion_pair(p)
    return is_hurwitz(Phi)


def controllability_rank(M, N):
    M = _as_matrix(M)
    N = np.asarray(N, dtype=float).reshape(M.shape[0], -1)
    blocks = [N]
    for _ in range(M.shape[0] - 1):
        blocks.append(M @ blocks[-1])
    return np.linalg.matrix_rank(np.hstack(blocks))


# --- eigenvalues ----------------------------------------------------------

def _balance(A):
    """Parlett-Reinsch diagonal scaling by powers of two (in place)."""
    n = A.shape[0]
    radix2 = 4.0
    done = False
    while not done:
        done = True
        for i in range(n):
            c = np.sum(np.abs(A[:, i])) - abs(A[i, i])
            r = np.sum(np.abs(A[i, :])) - abs(A[i, i])
            if c == 0.0 or r == 0.0:
                continue
            g, f, s = r / 2.0, 1.0, c + r
            while c < g:
                f *= 2.0
                c *= radix2
            g = r * 2.0
            while c > g:
                f /= 2.0
                c /= radix2
            if (c + r) / f < 0.95 * s:
                done = False
                A[i, :] /= f
                A[:, i] *= f
    return A


def _householder(x):
    """Unit vector v with (I - 2 v v^T) x = -sign(x0) |x| e_1, or None."""
    nrm = math.sqrt(float(x @ x))
    if nrm == 0.0:
        return None
    v = np.array(x, dtype=float)
    v[0] += math.copysign(nrm, v[0])
    return v / math.sqrt(float(v @ v))


def _hessenberg(A):
    n = A.shape[0]
    for k in range(n - 2):
        v = _householder(A[k + 1:, k])
        if v is None:
            continue
        A[k + 1:, k:] -= 2.0 * np.outer(v, v @ A[k + 1:, k:])
        A[:, k + 1:] -= 2.0 * np.outer(A[:, k + 1:] @ v, v)
        A[k + 2:, k] = 0.0
    return A


def _eig2(a, b, c, d):
    """Eigenvalues of [[a, b], [c, d]] without cancellation in the real case."""
    p = 0.5 * (a - d)
    bc = b * c
    disc = p * p + bc
    if disc >= 0.0:
        z = p + np.copysign(np.sqrt(disc), p)
        lam1 = d + z
        lam2 = d - bc / z if z != 0.0 else d
        return complex(lam1), complex(lam2)
    im = np.sqrt(-disc)
    return complex(d + p, im), complex(d + p, -im)


def _reflect(H, v, rows, cols):
    """Apply I - 2 v v^T from the left to H[rows, cols_tail] and from the right to H[rows_head, cols]."""
    blk = H[rows[0]:rows[1], cols[0]:]
    blk -= np.outer(2.0 * v, v @ blk)
    blk = H[:cols[1], rows[0]:rows[1]]
    blk -= np.outer(blk @ v, 2.0 * v)


def _francis_step(H, trace, det):
    """One implicit double-shift QR sweep on the unreduced Hessenberg block H."""
    m = H.shape[0]
    h00, h01, h10, h11 = H[0, 0], H[0, 1], H[1, 0], H[1, 1]
    x = h00 * h00 + h01 * h10 - trace * h00 + det
    y = h10 * (h00 + h11 - trace)
    z = h10 * H[2, 1]
    for k in range(m - 2):
        v = _householder(np.array((x, y, z)))
        if v is not None:
            _reflect(H, v, (k, k + 3), (max(0, k - 1), min(k + 4, m)))
            if k > 0:
                H[k + 1, k - 1] = H[k + 2, k - 1] = 0.0
        x = H[k + 1, k]
        y = H[k + 2, k]
        if k < m - 3:
            z = H[k + 3, k]
    v = _householder(np.array((x, y)))
    if v is not None:
        _reflect(H, v, (m - 2, m), (m - 3, m))
        H[m - 1, m - 3] = 0.0


def _reflect_small(H, v, row0, cols, rows):
    """List-of-lists version of :func:`_reflect` for a 2- or 3-vector ``v``.

    Left application on columns ``cols``, right application on rows ``rows``.
    """
    if len(v) == 3:
        v0, v1, v2 = v
        r0, r1, r2 = H[row0], H[row0 + 1], H[row0 + 2]
        for j in cols:
            s = 2.0 * (v0 * r0[j] + v1 * r1[j] + v2 * r2[j])
            r0[j] -= s * v0
            r1[j] -= s * v1
            r2[j] -= s * v2
        for i in rows:
            r = H[i]
            s = 2.0 * (v0 * r[row0] + v1 * r[row0 + 1] + v2 * r[row0 + 2])
            r[row0] -= s * v0
            r[row0 + 1] -= s * v1
            r[row0 + 2] -= s * v2
    else:
        v0, v1 = v
        r0, r1 = H[row0], H[row0 + 1]
        for j in cols:
            s = 2.0 * (v0 * r0[j] + v1 * r1[j])
            r0[j] -= s * v0
            r1[j] -= s * v1
        for i in rows:
            r = H[i]
            s = 2.0 * (v0 * r[row0] + v1 * r[row0 + 1])
            r[row0] -= s * v0
            r[row0 + 1] -= s * v1


def _householder_small(x):
    nrm = math.hypot(*x)
    if nrm == 0.0:
        return None
    v = list(x)
    v[0] += math.copysign(nrm, v[0])
    scale = math.hypot(*v)
    return [t / scale for t in v]


def _francis_step_small(H, lo, hi, trace, det):
    """:func:`_francis_step` on rows/columns ``lo..hi`` of a list-of-lists ``H``.

    For the small blocks that dominate internal-model work, plain floats beat
    numpy's per-call overhead several times over.
    """
    h00, h01, h10, h11 = H[lo][lo], H[lo][lo + 1], H[lo + 1][lo], H[lo + 1][lo + 1]
    x = h00 * h00 + h01 * h10 - trace * h00 + det
    y = h10 * (h00 + h11 - trace)
    z = h10 * H[lo + 2][lo + 1]
    for k in range(lo, hi - 1):
        v = _householder_small((x, y, z))
        if v is not None:
            _reflect_small(H, v, k, range(max(lo, k - 1), hi + 1), range(lo, min(k + 4, hi + 1)))
            if k > lo:
                H[k + 1][k - 1] = H[k + 2][k - 1] = 0.0
        x, y = H[k + 1][k], H[k + 2][k]
        if k < hi - 2:
            z = H[k + 3][k]
    v = _householder_small((x, y))
    if v is not None:
        _reflect_small(H, v, hi - 1, range(hi - 2, hi + 1), range(lo, hi + 1))
        H[hi][hi - 2] = 0.0


def eigenvalues(M, tol=DEFAULT_TOL):
    """All eigenvalues of a real square matrix, with multiplicity.

    Returns a complex ndarray; complex pairs are emitted adjacently. Raises
    ``NoConvergence`` when the whole reduction needs more than
    ``tol.qr_max_iter * max(10, n)`` QR sweeps.
    """
    H = np.array(_as_matrix(M), dtype=float)
    n = H.shape[0]
    if H.shape != (n, n):
        raise ValueError(f"eigenvalues need a square matrix, got {H.shape}")
    out = np.zeros(n, dtype=complex)
    if n == 0:
        return out
    _balance(H)
    _hessenberg(H)
    eps = np.finfo(float).eps
    anorm = np.sum(np.abs(H)) or 1.0
    hnorm = n * np.linalg.norm(H)
    small = n <= _SMALL_N
    if small:
        H = H.tolist()
    hi = n - 1
    its = total = 0
    budget = tol.qr_max_iter * max(10, n)
    while hi >= 0:
        lo = hi
        while lo > 0:
            s = abs(H[lo - 1][lo - 1]) + abs(H[lo][lo])
            if s == 0.0:
                s = anorm
            # local test, plus a global floor at the backward error of the
            # reduction (n eps ||H||): below it a subdiagonal is rounding noise
            # and, on repeated eigenvalues, never shrinks further
            if abs(H[lo][lo - 1]) <= eps * s or abs(H[lo][lo - 1]) <= eps * hnorm:
                H[lo][lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            out[hi] = H[hi][hi]
            hi -= 1
            its = 0
            continue
        if lo == hi - 1:
            out[hi - 1], out[hi] = _eig2(H[hi - 1][hi - 1], H[hi - 1][hi],
                                         H[hi][hi - 1], H[hi][hi])
            hi -= 2
            its = 0
            continue
        if total >= budget:
            raise NoConvergence(f"QR iteration stalled at index {hi} after {total} sweeps")
        its += 1
        total += 1
        if its % 10 == 0:
            # ad hoc shift breaks cycles of the standard Francis shift
            s = abs(H[hi][hi - 1]) + abs(H[hi - 1][hi - 2])
            h = 0.75 * s + H[hi][hi]
            trace, det = 2.0 * h, h * h + 0.4375 * s * s
        else:
            trace = H[hi - 1][hi - 1] + H[hi][hi]
            det = H[hi - 1][hi - 1] * H[hi][hi] - H[hi - 1][hi] * H[hi][hi - 1]
        if small:
            _francis_step_small(H, lo, hi, trace, det)
        else:
            _francis_step(H[lo:hi + 1, lo:hi + 1], trace, det)
    return out


def spectral_abscissa(M, tol=DEFAULT_TOL):
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return -np.inf
    return float(np.max(eigenvalues(M, tol).real))


def is_hurwitz(M, margin=0.0, tol=DEFAULT_TOL):
    """True iff every eigenvalue of ``M`` has real part ``< -margin``.

    An empty matrix is vacuously Hurwitz.
    """
    return spectral_abscissa(M, tol) < -margin
