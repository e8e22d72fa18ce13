"""Heralded preparation of non-Gaussian two-mode squeezed vacuum resources.

A two-mode squeezed vacuum (modes A1, A2) is mixed with ancilla Fock states
``|m1>``, ``|m2>`` on beam splitters of transmissivity ``T1``, ``T2``;
photon-number detection of ``n1``, ``n2`` on the ancilla output ports heralds
photon subtraction (m < n), addition (m > n) or catalysis (m = n) on the kept
modes.  Everything is carried in the characteristic-function picture: the
unnormalized heralded state is a quadratic exponent in four phase variables
and eight counting variables (one (u, v) pair per ancilla Fock factor), acted
on by mixed derivatives at zero.

Two routes produce that exponent:

* :func:`closed_form_matrices` evaluates the published closed-form blocks,
* :func:`general_pipeline` rebuilds it from first principles with the
  quadratic-form engine (including the exact scalar prefactor and, when
  detector efficiencies are below one, a loss beam splitter in front of each
  detector with its vacuum port traced out).

The scalar prefactor that normalization-sensitive quantities need is
``1 / a0`` with ``a0 = cosh^2 r - sinh^2 r T1 T2``; it equals the
vacuum-herald probability of the beam-split state and is validated against
the pipeline and the Fock oracle in the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .phase_space import (
    GaussianState,
    beam_splitter_symplectic,
    embed_two_mode,
    symplectic_form,
    tmsv_covariance,
)
from .quadratic_forms import (
    QuadraticExponent,
    derivative_at_zero,
    gaussian_integrate,
    pairing_moment,
)

__all__ = [
    "LAMBDA_VARS",
    "ANCILLA_LAMBDA_VARS",
    "COUNT_VARS",
    "OperationFamily",
    "OperationKind",
    "HeraldConfig",
    "ResourceExponent",
    "ZeroProbabilityError",
    "config_from_kind",
    "herald_coefficients",
    "phase_block",
    "coupling_block",
    "ancilla_block",
    "closed_form_matrices",
    "herald_log_prefactor",
    "general_pipeline",
    "derivative_scale",
    "success_probability",
    "success_probability_grid",
    "ng_char",
    "ng_char_many",
    "fock_preparation_probability",
    "effective_probability",
]

LAMBDA_VARS = ("tau1", "sig1", "tau2", "sig2")
ANCILLA_LAMBDA_VARS = ("tau3", "sig3", "tau4", "sig4")
LOSS_LAMBDA_VARS = ("tau5", "sig5", "tau6", "sig6")
# counting variables: (u, v) pair per ancilla Fock factor; the first four
# belong to the inputs |m1>, |m2>, the primed-style last four to the detections
COUNT_VARS = ("u1", "v1", "u2", "v2", "up1", "vp1", "up2", "vp2")


class ZeroProbabilityError(ArithmeticError):
    """Herald pattern has probability zero; the conditional state is undefined."""


class OperationFamily(Enum):
    ASYM_PS = "asym-ps"
    ASYM_PA = "asym-pa"
    ASYM_PC = "asym-pc"
    SYM_PS = "sym-ps"
    SYM_PA = "sym-pa"
    SYM_PC = "sym-pc"

    @property
    def is_symmetric(self) -> bool:
        return self in (OperationFamily.SYM_PS, OperationFamily.SYM_PA, OperationFamily.SYM_PC)

    @property
    def is_catalysis(self) -> bool:
        return self in (OperationFamily.ASYM_PC, OperationFamily.SYM_PC)


@dataclass(frozen=True)
class OperationKind:
    """Operation family plus photon count(s).

    ``photons`` is a single count for the standard table of operations; the
    catalysis families also accept a pair ``(k1, k2)`` for two-arm catalysis
    with different photon numbers (e.g. 1 on arm 1 and 2 on arm 2).
    """

    family: OperationFamily
    photons: int | tuple[int, int] = 1

    def __post_init__(self):
        p = self.photons
        if isinstance(p, tuple):
            if not self.family.is_catalysis:
                raise ValueError("photon pairs are only defined for catalysis operations")
            if len(p) != 2 or any(int(x) != x or x < 0 for x in p):
                raise ValueError(f"photon pair must be two non-negative integers, got {p}")
        elif int(p) != p or p < 1:
            raise ValueError(f"photon count must be a positive integer, got {p}")

    @property
    def label(self) -> str:
        if isinstance(self.photons, tuple):
            return f"{self.family.value}-{self.photons[0]},{self.photons[1]}"
        return f"{self.family.value}-{self.photons}"


@dataclass(frozen=True)
class HeraldConfig:
    """Full description of one heralding experiment."""

    r: float
    m1: int
    m2: int
    n1: int
    n2: int
    T1: float
    T2: float
    eta1: float = 1.0
    eta2: float = 1.0

    def __post_init__(self):
        for name in ("m1", "m2", "n1", "n2"):
            val = getattr(self, name)
            if int(val) != val or val < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {val}")
            object.__setattr__(self, name, int(val))
        if not np.isfinite(self.r) or self.r < 0:
            raise ValueError(f"squeezing must be finite and non-negative, got {self.r}")
        for name in ("T1", "T2", "eta1", "eta2"):
            val = getattr(self, name)
            if not 0.0 < val <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1], got {val}")

    @property
    def is_lossless(self) -> bool:
        return self.eta1 == 1.0 and self.eta2 == 1.0

    @property
    def total_photon_order(self) -> int:
        return 2 * (self.m1 + self.m2 + self.n1 + self.n2)

    def photon_orders(self) -> dict[str, int]:
        """Derivative orders per counting variable."""
        m1, m2, n1, n2 = self.m1, self.m2, self.n1, self.n2
        return dict(zip(COUNT_VARS, (m1, m1, m2, m2, n1, n1, n2, n2)))

    def counts(self) -> tuple[int, ...]:
        return tuple(self.photon_orders()[v] for v in COUNT_VARS)

    def swapped(self) -> "HeraldConfig":
        """Exchange the roles of the two arms."""
        return replace(
            self, m1=self.m2, m2=self.m1, n1=self.n2, n2=self.n1,
            T1=self.T2, T2=self.T1, eta1=self.eta2, eta2=self.eta1,
        )


def config_from_kind(kind: OperationKind, r: float, T1: float, T2: float,
                     eta1: float = 1.0, eta2: float = 1.0) -> HeraldConfig:
    """Photon-number pattern for each operation kind.

    Single-count asymmetric operations act on mode A2 only; their idle arm is
    pinned at unit transmissivity so that nothing conditions on it.
    """
    fam = kind.family
    if isinstance(kind.photons, tuple):
        k1, k2 = kind.photons
        return HeraldConfig(r=r, m1=k1, m2=k2, n1=k1, n2=k2, T1=T1, T2=T2, eta1=eta1, eta2=eta2)
    n = kind.photons
    if fam is OperationFamily.ASYM_PS:
        m, det = (0, 0), (0, n)
    elif fam is OperationFamily.ASYM_PA:
        m, det = (0, n), (0, 0)
    elif fam is OperationFamily.ASYM_PC:
        m, det = (0, n), (0, n)
    elif fam is OperationFamily.SYM_PS:
        m, det = (0, 0), (n, n)
    elif fam is OperationFamily.SYM_PA:
        m, det = (n, n), (0, 0)
    else:
        m, det = (n, n), (n, n)
    if not fam.is_symmetric:
        T1 = 1.0
        eta1 = 1.0
    return HeraldConfig(r=r, m1=m[0], m2=m[1], n1=det[0], n2=det[1], T1=T1, T2=T2, eta1=eta1, eta2=eta2)


# -- closed-form exponent blocks ---------------------------------------------
#
# All builders broadcast over numpy arrays of (T1, T2): passing grids of
# transmissivities yields stacked matrices with shape (..., rows, cols).


def herald_coefficients(r: float, T1, T2) -> dict[str, np.ndarray]:
    """Scalar combinations entering the closed-form blocks."""
    t1 = np.sqrt(np.asarray(T1, dtype=float))
    t2 = np.sqrt(np.asarray(T2, dtype=float))
    alpha, beta = math.sinh(r), math.cosh(r)
    a0 = beta**2 - alpha**2 * t1**2 * t2**2
    a1 = beta**2 + alpha**2 * t1**2 * t2**2
    a2 = 2.0 * alpha * beta * t1 * t2
    return {"alpha": alpha, "beta": beta, "t1": t1, "t2": t2,
            "r1": np.sqrt(1.0 - t1**2), "r2": np.sqrt(1.0 - t2**2),
            "a0": a0, "a1": a1, "a2": a2, "a3": a1 - a2}


def phase_block(r: float, T1, T2) -> np.ndarray:
    """4x4 quadratic block over the kept-mode phase variables."""
    c = herald_coefficients(r, T1, T2)
    a0, a1, a2 = c["a0"], c["a1"], c["a2"]
    zero = np.zeros_like(a1)
    rows = [
        [a1, zero, -a2, zero],
        [zero, a1, zero, a2],
        [-a2, zero, a1, zero],
        [zero, a2, zero, a1],
    ]
    m = np.stack([np.stack(row, axis=-1) for row in rows], axis=-2)
    return -m / (4.0 * a0)[..., None, None] if np.ndim(a0) else -m / (4.0 * a0)


def coupling_block(r: float, T1, T2) -> np.ndarray:
    """8x4 coupling between counting variables and phase variables."""
    c = herald_coefficients(r, T1, T2)
    al, be, t1, t2, r1, r2, a0 = (c[k] for k in ("alpha", "beta", "t1", "t2", "r1", "r2", "a0"))
    b1 = be**2 * r1
    b2 = -al * be * r1 * t1 * t2
    b3 = -al * be * r2 * t1 * t2
    b4 = be**2 * r2
    b5 = -(al**2) * r1 * t1 * t2**2
    b6 = al * be * r1 * t2
    b7 = al * be * r2 * t1
    b8 = -(al**2) * r2 * t1**2 * t2
    i = 1j
    rows = [
        [b1, i * b1, b2, -i * b2],
        [-b1, i * b1, -b2, -i * b2],
        [b3, -i * b3, b4, i * b4],
        [-b3, -i * b3, -b4, i * b4],
        [b5, i * b5, b6, -i * b6],
        [-b5, i * b5, -b6, -i * b6],
        [b7, -i * b7, b8, i * b8],
        [-b7, -i * b7, -b8, i * b8],
    ]
    m = np.stack([np.stack(np.broadcast_arrays(*row), axis=-1) for row in rows], axis=-2).astype(complex)
    return m / a0[..., None, None] if np.ndim(a0) else m / a0


def _patterned_8x8(p):
    """Assemble the hollow checkerboard layout shared by the herald and
    coherent-overlap blocks from ten independent entries."""
    g1, g2, g3, g4, g5, g6, g7, g8, g9, g10 = np.broadcast_arrays(*p)
    z = np.zeros_like(g1)
    rows = [
        [z, g1, g2, z, z, g3, g4, z],
        [g1, z, z, g2, g3, z, z, g4],
        [g2, z, z, g5, g6, z, z, g7],
        [z, g2, g5, z, z, g6, g7, z],
        [z, g3, g6, z, z, g8, g9, z],
        [g3, z, z, g6, g8, z, z, g9],
        [g4, z, z, g7, g9, z, z, g10],
        [z, g4, g7, z, z, g9, g10, z],
    ]
    return np.stack([np.stack(row, axis=-1) for row in rows], axis=-2).astype(complex)


def _herald_entries(r: float, T1, T2):
    c = herald_coefficients(r, T1, T2)
    al, be, t1, t2, r1, r2 = (c[k] for k in ("alpha", "beta", "t1", "t2", "r1", "r2"))
    return {
        "c1": be**2 * r1**2,
        "c2": al * be * r1 * r2 * t1 * t2,
        "c3": be**2 * t1 - al**2 * t1 * t2**2,
        "c4": -al * be * r1 * r2 * t1,
        "c5": be**2 * r2**2,
        "c6": -al * be * r1 * r2 * t2,
        "c7": be**2 * t2 - al**2 * t1**2 * t2,
        "c8": al**2 * r1**2 * t2**2,
        "c9": al * be * r1 * r2,
        "c10": al**2 * r2**2 * t1**2,
    }


def ancilla_block(r: float, T1, T2) -> np.ndarray:
    """8x8 quadratic block among the counting variables."""
    e = _herald_entries(r, T1, T2)
    a0 = herald_coefficients(r, T1, T2)["a0"]
    m = _patterned_8x8([e[f"c{k}"] for k in range(1, 11)])
    return m / a0[..., None, None] if np.ndim(a0) else m / a0


@dataclass(frozen=True)
class ResourceExponent:
    """Closed-form exponent of the unnormalized heralded state.

    ``prefactor_log`` is filled by the pipeline route; the closed-form route
    leaves it ``None`` (use :func:`herald_log_prefactor` for the lossless
    analytic value).
    """

    phase_quad: np.ndarray      # 4x4, phase variables
    coupling: np.ndarray        # 8x4, counting x phase
    ancilla_quad: np.ndarray    # 8x8, counting variables
    prefactor_log: complex | None
    config: HeraldConfig


def closed_form_matrices(cfg: HeraldConfig) -> ResourceExponent:
    """Published closed-form blocks; only valid for unit-efficiency detectors."""
    if not cfg.is_lossless:
        raise ValueError("closed-form blocks are only available for unit detector efficiency")
    return ResourceExponent(
        phase_quad=phase_block(cfg.r, cfg.T1, cfg.T2),
        coupling=coupling_block(cfg.r, cfg.T1, cfg.T2),
        ancilla_quad=ancilla_block(cfg.r, cfg.T1, cfg.T2),
        prefactor_log=None,
        config=cfg,
    )


def herald_log_prefactor(r: float, T1, T2) -> np.ndarray | float:
    """Log of the scalar prefactor of the unnormalized heralded exponent.

    Equals ``-log(a0)``: the Gaussian-integral prefactor of the detection
    integral, a.k.a. the probability of heralding vacuum on both ancilla
    ports when no photons are injected.
    """
    a0 = herald_coefficients(r, T1, T2)["a0"]
    return -np.log(a0)


# -- general pipeline ---------------------------------------------------------


def _generating_pair(u: str, v: str, tau: str, sig: str) -> QuadraticExponent:
    # exp(2 u v + u (tau + i sig) - v (tau - i sig)); the Gaussian envelope of
    # the Fock characteristic function lives in the vacuum covariance already.
    return QuadraticExponent.from_terms(
        (u, v, tau, sig),
        quad_terms={(u, v): 2.0, (u, tau): 1.0, (u, sig): 1.0j, (v, tau): -1.0, (v, sig): 1.0j},
    )


def _vacuum_envelope(tau: str, sig: str) -> QuadraticExponent:
    return QuadraticExponent.from_terms((tau, sig), quad_terms={(tau, tau): -0.25, (sig, sig): -0.25})


def general_pipeline(cfg: HeraldConfig) -> QuadraticExponent:
    """Unnormalized heralded exponent built from first principles.

    Steps: four-mode Gaussian characteristic function of TMSV x ancilla
    vacua, input Fock generating couplings, beam-splitter substitution of the
    phase variables, optional loss beam splitter per detected mode (vacuum on
    the loss port, which is then traced by pinning its phase variables to
    zero), detection generating couplings, and Gaussian integration over the
    measured-mode phase variables with the double phase-space measure.

    The returned form carries the exact scalar prefactor in its
    ``log_prefactor``; its variables are the four kept phase variables plus
    all eight counting variables.
    """
    lam8 = LAMBDA_VARS + ANCILLA_LAMBDA_VARS
    # modes ordered (A1, A2, F1, F2); F modes start in vacuum, their Fock
    # character enters through the generating couplings below
    V = np.zeros((8, 8))
    V[:4, :4] = tmsv_covariance(cfg.r)
    V[4:, 4:] = 0.5 * np.eye(4)
    omega = symplectic_form(4)
    form = QuadraticExponent(lam8, -0.5 * omega @ V @ omega.T, np.zeros(8))

    form = form * _generating_pair("u1", "v1", "tau3", "sig3")
    form = form * _generating_pair("u2", "v2", "tau4", "sig4")

    B = embed_two_mode(beam_splitter_symplectic(cfg.T1), (0, 2), 4) @ \
        embed_two_mode(beam_splitter_symplectic(cfg.T2), (1, 3), 4)
    form = form.substitute_linear(lam8, np.linalg.inv(B), lam8)

    for eta, (tau, sig), (ltau, lsig) in (
        (cfg.eta1, ("tau3", "sig3"), ("tau5", "sig5")),
        (cfg.eta2, ("tau4", "sig4"), ("tau6", "sig6")),
    ):
        if eta == 1.0:
            continue
        form = form * _vacuum_envelope(ltau, lsig)
        loss = beam_splitter_symplectic(eta)
        form = form.substitute_linear((tau, sig, ltau, lsig), np.linalg.inv(loss), (tau, sig, ltau, lsig))
        form = form.substitute_values({ltau: 0.0, lsig: 0.0})

    form = form * _vacuum_envelope("tau3", "sig3") * _generating_pair("up1", "vp1", "tau3", "sig3")
    form = form * _vacuum_envelope("tau4", "sig4") * _generating_pair("up2", "vp2", "tau4", "sig4")

    form = gaussian_integrate(form, ANCILLA_LAMBDA_VARS, measure_log=-2.0 * math.log(2.0 * math.pi))
    # canonical variable order: phase variables first, then counting variables
    order = LAMBDA_VARS + COUNT_VARS
    perm = [form.index(v) for v in order]
    return QuadraticExponent(order, form.quad[np.ix_(perm, perm)], form.lin[perm], form.const, form.log_prefactor)


def derivative_scale(cfg: HeraldConfig) -> float:
    """Combinatorial scale of the photon-number derivative operator."""
    return 2.0 ** (-(cfg.m1 + cfg.m2 + cfg.n1 + cfg.n2)) / (
        math.factorial(cfg.m1) * math.factorial(cfg.m2) * math.factorial(cfg.n1) * math.factorial(cfg.n2)
    )


# -- probabilities ------------------------------------------------------------


def success_probability(cfg: HeraldConfig) -> float:
    """Probability that both detectors register the required photon pattern."""
    counts = cfg.counts()
    if cfg.is_lossless:
        quad = ancilla_block(cfg.r, cfg.T1, cfg.T2)
        raw = pairing_moment(quad, None, counts)
        value = float(np.real(raw)) * derivative_scale(cfg) / float(herald_coefficients(cfg.r, cfg.T1, cfg.T2)["a0"])
    else:
        form = general_pipeline(cfg).substitute_values({v: 0.0 for v in LAMBDA_VARS})
        raw = pairing_moment(form.quad, None, counts)
        value = float(np.real(raw * np.exp(form.log_prefactor + form.const))) * derivative_scale(cfg)
    # heralding zero photons on nothing is exact; clip only numerical dust
    return max(value, 0.0)


def success_probability_grid(r: float, T1, T2, counts) -> np.ndarray:
    """Vectorized lossless success probability over transmissivity arrays."""
    quad = ancilla_block(r, T1, T2)
    raw = np.real(pairing_moment(quad, None, counts))
    a0 = herald_coefficients(r, T1, T2)["a0"]
    m1, _, m2, _, n1, _, n2, _ = counts
    scale = 2.0 ** (-(m1 + m2 + n1 + n2)) / (
        math.factorial(m1) * math.factorial(m2) * math.factorial(n1) * math.factorial(n2)
    )
    return np.maximum(raw * scale / a0, 0.0)


def _unnormalized_char_form(cfg: HeraldConfig) -> QuadraticExponent:
    form = general_pipeline(cfg)
    return form


def ng_char_many(cfg: HeraldConfig, points: np.ndarray) -> np.ndarray:
    """Normalized characteristic function at an array of phase points.

    Args:
        cfg: herald configuration.
        points: array of shape (..., 4) holding (tau1, sig1, tau2, sig2).
    """
    points = np.asarray(points, dtype=float)
    form = _unnormalized_char_form(cfg)
    prob_raw = pairing_moment(form.substitute_values({v: 0.0 for v in LAMBDA_VARS}).quad, None, cfg.counts())
    if abs(prob_raw) == 0.0:
        raise ZeroProbabilityError(f"herald pattern has zero probability for {cfg}")
    lam_idx = [form.index(v) for v in LAMBDA_VARS]
    cnt_idx = [form.index(v) for v in COUNT_VARS]
    a_ll = form.quad[np.ix_(lam_idx, lam_idx)]
    a_cl = form.quad[np.ix_(cnt_idx, lam_idx)]
    a_cc = form.quad[np.ix_(cnt_idx, cnt_idx)]
    gauss = np.einsum("...i,ij,...j->...", points, a_ll, points)
    lin = 2.0 * np.einsum("ki,...i->...k", a_cl, points)
    raw = pairing_moment(np.broadcast_to(a_cc, points.shape[:-1] + (8, 8)), lin, cfg.counts())
    return np.exp(gauss) * raw / prob_raw


def ng_char(cfg: HeraldConfig, lam1, lam2) -> complex:
    """Normalized characteristic function at a single two-mode phase point.

    This scalar route goes through the polynomial-carry derivative engine;
    :func:`ng_char_many` is the vectorized pair-contraction route and the two
    are cross-checked in the tests.
    """
    point = {v: x for v, x in zip(LAMBDA_VARS, (*lam1, *lam2))}
    form = _unnormalized_char_form(cfg)
    orders = cfg.photon_orders()
    prob = derivative_at_zero(form.substitute_values({v: 0.0 for v in LAMBDA_VARS}), orders)
    if abs(prob) == 0.0:
        raise ZeroProbabilityError(f"herald pattern has zero probability for {cfg}")
    return complex(derivative_at_zero(form.substitute_values(point), orders) / prob)


def fock_preparation_probability(m: int, r: float) -> float:
    """Probability of preparing ``|m>`` by photon-number measurement on one
    arm of an auxiliary two-mode squeezed vacuum of squeezing ``r``."""
    if m < 0 or int(m) != m:
        raise ValueError(f"photon number must be a non-negative integer, got {m}")
    lam = math.tanh(r)
    if m > 0 and lam == 0.0:
        return 0.0
    return (1.0 - lam**2) * lam ** (2 * m)


def effective_probability(cfg: HeraldConfig, fock_source_squeezing: float | None = None) -> float:
    """Success probability weighted by the cost of preparing the input Fock states.

    The auxiliary sources default to the same squeezing as the resource.
    """
    rs = cfg.r if fock_source_squeezing is None else fock_source_squeezing
    if (cfg.m1 > 0 or cfg.m2 > 0) and rs <= 0.0:
        raise ValueError("Fock-state inputs require a positive source squeezing")
    p = success_probability(cfg)
    return fock_preparation_probability(cfg.m1, rs) * fock_preparation_probability(cfg.m2, rs) * p
