"""Closed-loop matrix assembly and spectral certification of gain choices."""
from dataclasses import dataclass, field
import itertools

import numpy as np

from . import linalg
from .errors import ConfigMismatch, DimensionMismatch, NonPositiveEigenvalue
from .models import default_samples, realize_plant
from .regulator import observer_matrices

__all__ = [
    "assemble_abar",
    "output_feedback_blocks",
    "assemble_output_feedback",
    "sharing_base_matrix",
    "assemble_sharing_matrix",
    "CheckRecord",
    "CertificationReport",
    "certify",
    "grid_samples",
    "bound_phi",
]


def _check_dims(p, im, gains):
    if gains.r != p.r:
        raise DimensionMismatch(f"gains built for relative degree {gains.r}, plant has {p.r}")
    if im.N1.shape != (im.l, 1) or im.N2.shape != (im.l, 1):
        raise DimensionMismatch("internal model input vectors must be l x 1")


def assemble_abar(plant, actuator, im, gains, w):
    """State-feedback closed loop in the coordinates (xi, z, eta1~, zeta1, eta2~, zeta2).

    ``gains`` carries the single-actuator ``k1``, ``k2`` (use
    ``GainSet.single_equivalent`` for a distributed design). Every
    coefficient below follows the transformed augmented system literally.
    """
    p = realize_plant(plant, w)
    _check_dims(p, im, gains)
    nz, r, l = p.nz, p.r, im.l
    a, ba = actuator.a, actuator.b_a
    k1, k2, b = gains.k1, gains.k2, p.b
    A1, A2, A3, c = p.A1, p.A2, p.A3, p.c
    M1, N1, M2, N2 = im.M1, im.N1, im.M2, im.N2
    psi1, psi2 = im.psiT1inv, im.psiT2inv
    g = np.array(gains.gammas)
    I = np.eye(l)

    g_last = g[-1] if r >= 2 else 0.0
    cg = c[r - 1] + g_last
    C = np.zeros((1, r - 1))
    for s in range(1, r):
        C[0, s - 1] = c[s - 1] - cg * g[s - 1] + (g[s - 2] if s >= 2 else 0.0)
    if r >= 2:
        Lam, _ = linalg.companion_pair(g)
    else:
        Lam = np.zeros((0, 0))
    D = np.eye(1, r - 1)
    G = np.eye(r - 1)[:, -1:] if r >= 2 else np.zeros((0, 1))

    psiN1 = (psi1 @ N1).item()
    psiN2 = (psi2 @ N2).item()
    c_tilde = cg - k1 * b + psiN1
    A3_check = -N1 @ A3 / b
    C1_check = -N1 @ C / b
    C2_check = (M1 @ N1 - cg * N1) / b
    A3_bar = k1 * A3
    C1_bar = k1 * C
    c1_bar = k1 * (c_tilde - a + psiN1) + (psi1 @ (a * I - M1 - N1 @ psi1) @ N1).item() / b
    C2_bar = psi1 @ ((a + k1 * b) * I - M1 - N1 @ psi1)
    c2_bar = a - psiN1 + psiN2 + k1 * b
    A3_hat = -N2 @ A3_bar / ba
    C1_hat = -N2 @ C1_bar / ba
    C2_hat = -N2 * c1_bar / ba
    C3_hat = -N2 @ C2_bar / ba
    C4_hat = ((M2 + N2 @ psi2) @ N2 - N2 * c2_bar) / ba

    sizes = [r - 1, nz, l, 1, l, 1]
    off = np.concatenate([[0], np.cumsum(sizes)])
    dim = off[-1]
    Abar = np.zeros((dim, dim))

    def put(i, j, blk):
        Abar[off[i]:off[i + 1], off[j]:off[j + 1]] = blk

    XI, Z, E1, Z1, E2, Z2 = range(6)
    put(XI, XI, Lam)
    put(XI, Z1, G)
    put(Z, XI, A2 @ D)
    put(Z, Z, A1)
    if r == 1:
        put(Z, Z1, A2)
    put(E1, XI, C1_check)
    put(E1, Z, A3_check)
    put(E1, E1, M1)
    put(E1, Z1, C2_check)
    put(Z1, XI, C)
    put(Z1, Z, A3)
    put(Z1, E1, b * psi1)
    put(Z1, Z1, c_tilde)
    put(Z1, Z2, b)
    put(E2, XI, C1_hat)
    put(E2, Z, A3_hat)
    put(E2, E1, C3_hat)
    put(E2, Z1, C2_hat)
    put(E2, E2, M2)
    put(E2, Z2, C4_hat)
    put(Z2, XI, C1_bar)
    put(Z2, Z, A3_bar)
    put(Z2, E1, C2_bar)
    put(Z2, Z1, c1_bar)
    put(Z2, E2, ba * psi2)
    put(Z2, Z2, c2_bar - ba * k2)
    return Abar


def output_feedback_blocks(plant, actuator, im, obs, gains, w):
    """Blocks (A11, A12, A21, A22) of the output-feedback closed loop.

    State ``(z, xi, x_bar, eta1, eta2)`` deviations from steady state with
    ``x_bar = x - PsiT1^-1 eta1``, followed by the scaled observer error
    ``psi``. ``A22 = h A0(1)``; ``obs`` and ``gains`` must agree on ``h``.
    """
    p = realize_plant(plant, w)
    _check_dims(p, im, gains)
    if obs.r != p.r:
        raise DimensionMismatch(f"observer has r={obs.r}, plant has r={p.r}")
    if obs.h != gains.h:
        raise ConfigMismatch(f"observer built for h={obs.h}, gains have h={gains.h}")
    nz, r, l = p.nz, p.r, im.l
    a, ba = actuator.a, actuator.b_a
    k1, k2, h, b = gains.k1, gains.k2, gains.h, p.b
    M1, N1, M2, N2 = im.M1, im.N1, im.M2, im.N2
    psi1, psi2 = im.psiT1inv, im.psiT2inv
    Gam = gains.Gamma1
    I = np.eye(l)

    A4 = np.zeros((r, nz))
    A4[-1:, :] = p.A3
    A5 = np.eye(r, k=1)
    A5[-1, :] = p.c
    B = np.zeros((r, 1))
    B[-1, 0] = b
    D = np.eye(1, r)
    C1 = a - ba * k2 - (psi1 @ N1).item()
    C2 = psi1 @ (a * I - M1 - N1 @ psi1)

    sizes = [nz, r, 1, l, l]
    off = np.concatenate([[0], np.cumsum(sizes)])
    A11 = np.zeros((off[-1], off[-1]))

    def put(i, j, blk):
        A11[off[i]:off[i + 1], off[j]:off[j + 1]] = blk

    Z, XI, X, E1, E2 = range(5)
    put(Z, Z, p.A1)
    put(Z, XI, p.A2 @ D)
    put(XI, Z, A4)
    put(XI, XI, A5)
    put(XI, X, B)
    put(XI, E1, B @ psi1)
    put(X, XI, -ba * k1 * k2 * Gam)
    put(X, X, C1)
    put(X, E1, C2)
    put(X, E2, ba * psi2)
    put(E1, X, N1)
    put(E1, E1, M1 + N1 @ psi1)
    put(E2, XI, -k1 * k2 * N2 @ Gam)
    put(E2, X, -k2 * N2)
    put(E2, E2, M2 + N2 @ psi2)

    Dh_inv = np.diag([h ** -(r - s) for s in range(1, r + 1)])
    col = np.zeros((off[-1], 1))
    col[off[X], 0] = ba * k1 * k2
    col[off[E2]:off[E2 + 1], :] = k1 * k2 * N2
    A12 = col @ Gam @ Dh_inv

    A21 = np.zeros((r, off[-1]))
    A21[-1, off[Z]:off[Z + 1]] = p.A3.ravel()
    A21[-1, off[XI]:off[XI + 1]] = p.c
    A21[-1, off[X]] = b
    A21[-1, off[E1]:off[E1 + 1]] = b * psi1.ravel()

    A0_unit, _ = observer_matrices(obs.deltas, 1.0)
    return A11, A12, A21, h * A0_unit


def assemble_output_feedback(plant, actuator, im, obs, gains, w):
    """Full output-feedback closed-loop matrix of dimension n + 1 + 2l + r."""
    A11, A12, A21, A22 = output_feedback_blocks(plant, actuator, im, obs, gains, w)
    return np.block([[A11, A12], [A21, A22]])


def sharing_base_matrix(actuator, im, k2):
    """Per-agent matrix acting on ``(x_i, eta1_i, eta2_i)`` without coupling."""
    a, ba = actuator.a, actuator.b_a
    l = im.l
    psi1, psi2 = im.psiT1inv, im.psiT2inv
    return np.block([
        [np.array([[a - ba * k2]]), ba * k2 * psi1, ba * psi2],
        [im.N1, im.M1, np.zeros((l, l))],
        [-k2 * im.N2, k2 * im.N2 @ psi1, im.M2 + im.N2 @ psi2],
    ])


def assemble_sharing_matrix(actuator, im, gains, lam):
    """``A - lam J`` governing disagreement along the Laplacian eigenvalue ``lam``."""
    if not lam > 0:
        raise NonPositiveEigenvalue(f"Laplacian eigenvalue {lam} is not positive")
    l = im.l
    J = np.diag(np.concatenate([[0.0], np.full(l, gains.sigma1), np.full(l, gains.sigma2)]))
    return sharing_base_matrix(actuator, im, gains.k2) - lam * J


@dataclass
class CheckRecord:
    name: str
    params: str
    abscissa: float
    passed: bool


@dataclass
class CertificationReport:
    records: list = field(default_factory=list)
    margin: float = 1e-6
    sampling: str = ""

    @property
    def passed(self):
        return all(rec.passed for rec in self.records)

    def failures(self):
        return [rec for rec in self.records if not rec.passed]

    def worst(self, name):
        recs = [rec for rec in self.records if rec.name == name]
        return max(recs, key=lambda rec: rec.abscissa) if recs else None

    def to_text(self):
        lines = [
            f"# verdict\t{'pass' if self.passed else 'FAIL'}",
            f"# margin\t{self.margin:g}",
            f"# sampling\t{self.sampling}",
            "check\tparameters\tspectral_abscissa\tverdict",
        ]
        for rec in self.records:
            lines.append(f"{rec.name}\t{rec.params}\t{rec.abscissa:.12e}\t{'pass' if rec.passed else 'FAIL'}")
        return "\n".join(lines) + "\n"

    def write(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_text())


def grid_samples(W, resolution):
    W = np.asarray(W, dtype=float).reshape(-1, 2)
    axes = [np.linspace(lo, hi, resolution) for lo, hi in W]
    return np.array(list(itertools.product(*axes))).reshape(-1, W.shape[0])


def _fmt_w(w):
    return "w=[" + ",".join(f"{x:g}" for x in np.ravel(w)) + "]"


def certify(plant, exo, actuator, graph, im, obs, gains, samples=None, margin=1e-6, grid=0):
    """Spectral certificate for a (distributed) output-feedback design.

    Checks, at each sampled ``w``, that the output-feedback closed loop of the
    (sum) dynamics is Hurwitz with margin; for N > 1 additionally that
    ``A - lam_i J`` is Hurwitz at each nonzero Laplacian eigenvalue and that
    ``k2 > a / b_a``. Failures are recorded, never raised.
    """
    N = 1 if graph is None else graph.N
    if samples is None:
        samples = default_samples(plant)
        sampling = "vertices of W + origin"
    else:
        sampling = f"{len(np.atleast_2d(samples))} explicit samples"
    samples = np.atleast_2d(samples)
    if grid and grid > 1:
        samples = np.vstack([samples, grid_samples(plant.W, grid)])
        sampling += f" + grid {grid}^{plant.n_w}"
    report = CertificationReport(margin=margin, sampling=sampling)
    single = gains.single_equivalent(N)
    for w in samples:
        M = assemble_output_feedback(plant, actuator, im, obs, single, w)
        absc = linalg.spectral_abscissa(M)
        report.records.append(CheckRecord("output_feedback", _fmt_w(w), absc, absc < -margin))
    if N > 1:
        lam = np.sort(np.linalg.eigvalsh(graph.laplacian()))
        for lam_i in lam[1:]:
            if lam_i <= 1e-9:
                report.records.append(CheckRecord("graph_connected", f"lambda={lam_i:g}", lam_i, False))
                continue
            M = assemble_sharing_matrix(actuator, im, gains, lam_i)
            absc = linalg.spectral_abscissa(M)
            report.records.append(CheckRecord(
                "sharing", f"lambda={lam_i:.6g},sigma1={gains.sigma1:g},sigma2={gains.sigma2:g}",
                absc, absc < -margin))
        a11 = actuator.a - actuator.b_a * gains.k2
        report.records.append(CheckRecord(
            "actuator_precondition", f"k2={gains.k2:g},a/b_a={actuator.a / actuator.b_a:g}",
            a11, gains.k2 > actuator.a / actuator.b_a))
    return report


def _bound_value(phi, mu1):
    return float(phi(mu1)) if callable(phi) else float(phi)


def bound_phi(m1_fn, m2_fn, phi1, phi2, phi3, mu1, w_samples):
    """Coupling threshold above which the block system is Hurwitz at the samples.

    For ``[[M1(w, mu1), N1], [N2, N3 + mu2 M2(w)]]`` with ``||N_i|| <= phi_i``
    returns ``max_w 2 phi3 |Q| + 4 (phi1^2 |P|^2 + phi2^2 |Q|^2)`` where ``P``,
    ``Q`` solve the Lyapunov equations of ``M1`` and ``M2``; any ``mu2`` above
    it stabilizes the composite.

    ``m1_fn(w, mu1)`` and ``m2_fn(w)`` return matrices; ``phi_i`` are numbers
    or callables of ``mu1``.
    """
    f1, f2, f3 = (_bound_value(f, mu1) for f in (phi1, phi2, phi3))
    best = 0.0
    for w in w_samples:
        P = linalg.solve_lyapunov(m1_fn(w, mu1))
        Q = linalg.solve_lyapunov(m2_fn(w))
        nP, nQ = np.linalg.norm(P, 2), np.linalg.norm(Q, 2)
        best = max(best, 2 * f3 * nQ + 4 * (f1 ** 2 * nP ** 2 + f2 ** 2 * nQ ** 2))
    return best
