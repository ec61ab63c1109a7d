"""Estimation-error lower bounds from the exact Fisher information.

Two routes to the same bounds are provided deliberately. The discrete-sum
route evaluates the reduced angle/distance expressions built from per-element
distance-gradient sums. The matrix route assembles the full 4 x 4 information
matrix over (theta, r, Re beta, Im beta) from response-derivative inner
products and inverts its location block; it also covers the amplitude+phase
channel model, where no reduced expression is used.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .geometry import ArrayGeometry, TargetLocation, distance_gradients
from .scenario import Scenario
from .signal import ChannelModel, OfdmConfig, response_matrix

_COND_LIMIT = 1e12
_M_CHUNK = 64


class SingularInformation(ArithmeticError):
    """The information matrix does not support a finite bound."""


class _Unbounded:
    """Marker for bounds that diverge in an asymptotic limit. Kept out of
    arithmetic on purpose; use is_unbounded to test for it."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "unbounded"


UNBOUNDED = _Unbounded()


def is_unbounded(value) -> bool:
    return value is UNBOUNDED


class CrbMethod(enum.Enum):
    EXACT_FIM = "fim"
    DISCRETE_SUM = "sum"
    CLOSED_FORM = "closed"
    ASYMPTOTIC = "asymptotic"


@dataclass(frozen=True)
class IntermediateTerms:
    """Distance-gradient sums over the array elements and the two composite
    quantities built from them.

    u_theta = sum (dr_n/dtheta)^2      [m^2]
    u_r     = sum (dr_n/dr)^2          [-]
    c_theta = sum dr_n/dtheta          [m]
    c_r     = sum dr_n/dr              [-]
    epsilon = sum (dr_n/dtheta)(dr_n/dr)   [m]
    phi     = u_theta u_r - epsilon^2
    psi     = u_theta c_r^2 + u_r c_theta^2 - 2 epsilon c_theta c_r
    """

    u_theta: float
    u_r: float
    c_theta: float
    c_r: float
    epsilon: float
    phi: float
    psi: float

    @classmethod
    def from_sums(cls, u_theta, u_r, c_theta, c_r, epsilon) -> "IntermediateTerms":
        phi = u_theta * u_r - epsilon**2
        psi = (
            u_theta * c_r**2
            + u_r * c_theta**2
            - 2.0 * epsilon * c_theta * c_r
        )
        return cls(
            u_theta=float(u_theta),
            u_r=float(u_r),
            c_theta=float(c_theta),
            c_r=float(c_r),
            epsilon=float(epsilon),
            phi=float(phi),
            psi=float(psi),
        )


@dataclass
class CrbReport:
    """Bound values plus the route that produced them. Asymptotic routes may
    carry the UNBOUNDED marker instead of a float."""

    crb_theta: float
    crb_r: float
    method: CrbMethod
    terms: IntermediateTerms | None = None
    fim: np.ndarray | None = None


def intermediate_terms(geom: ArrayGeometry, loc: TargetLocation) -> IntermediateTerms:
    """Exact discrete gradient sums for the given array and target."""
    d_theta, d_r = distance_gradients(geom, loc)
    return IntermediateTerms.from_sums(
        u_theta=np.sum(d_theta**2),
        u_r=np.sum(d_r**2),
        c_theta=np.sum(d_theta),
        c_r=np.sum(d_r),
        epsilon=np.sum(d_theta * d_r),
    )


def crb_from_terms(
    ofdm: OfdmConfig,
    terms: IntermediateTerms,
    rho: float,
    n_symbols: int,
    n_antennas: int,
) -> tuple[float, float]:
    """Reduced phase-only bounds from gradient sums and frequency moments.

    crb_theta = (N M m2 u_r + U c_r^2) / (4 rho L m2 (N M m2 phi + U psi))
    and the distance bound with the theta sums in the numerator, where
    U = M m2 - 2 m1^2 is evaluated in factored form by OfdmConfig.
    """
    m_sub = ofdm.n_subcarriers
    core = n_antennas * m_sub * ofdm.m2
    deficit = ofdm.moment_deficit
    denom_inner = core * terms.phi + deficit * terms.psi
    denom = 4.0 * rho * n_symbols * ofdm.m2 * denom_inner
    num_theta = core * terms.u_r + deficit * terms.c_r**2
    num_r = core * terms.u_theta + deficit * terms.c_theta**2
    if denom <= 0 or num_theta <= 0 or num_r <= 0:
        raise SingularInformation(
            "angle and distance are not jointly identifiable here"
        )
    return num_theta / denom, num_r / denom


def crb_phase_only(scenario: Scenario) -> CrbReport:
    """Phase-only bounds via the exact discrete gradient sums."""
    terms = intermediate_terms(scenario.geometry, scenario.target)
    crb_theta, crb_r = crb_from_terms(
        scenario.ofdm,
        terms,
        scenario.rho,
        scenario.ofdm.n_symbols,
        scenario.geometry.n_antennas,
    )
    return CrbReport(
        crb_theta=crb_theta,
        crb_r=crb_r,
        method=CrbMethod.DISCRETE_SUM,
        terms=terms,
    )


@dataclass(frozen=True)
class InnerProducts:
    """Inner products of the stacked mean vector and its derivatives."""

    norm_u_sq: float
    ut_ut: float
    ur_ur: float
    ut_ur: complex
    ut_u: complex
    ur_u: complex


def response_derivatives(
    geom: ArrayGeometry,
    ofdm: OfdmConfig,
    loc: TargetLocation,
    model: ChannelModel,
    differentiate_r0: bool = True,
    m_slice: slice | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Response vectors and their analytic (theta, r) derivatives, each of
    shape (M, N) for the selected subcarrier slice.

    For the amplitude+phase model the chain rule covers both the phase term
    and the r0/r_n amplitude, including the dependence of the mean distance
    r0 on the target location (disable with differentiate_r0=False to treat
    r0 as a constant)."""
    from .geometry import DegenerateGeometry, propagation_distances

    rn = propagation_distances(geom, loc)
    if np.any(rn == 0.0):
        raise DegenerateGeometry("target coincides with an antenna element")
    d_theta, d_r = distance_gradients(geom, loc)
    k = ofdm.wavenumbers
    if m_slice is not None:
        k = k[m_slice]
    phase = np.exp(-1j * k[:, None] * rn[None, :])

    if model is ChannelModel.AMPLITUDE_PHASE:
        r0 = rn.mean()
        amp = r0 / rn
        if differentiate_r0:
            d_amp_theta = (d_theta.mean() * rn - r0 * d_theta) / rn**2
            d_amp_r = (d_r.mean() * rn - r0 * d_r) / rn**2
        else:
            d_amp_theta = -r0 * d_theta / rn**2
            d_amp_r = -r0 * d_r / rn**2
    else:
        amp = np.ones_like(rn)
        d_amp_theta = np.zeros_like(rn)
        d_amp_r = np.zeros_like(rn)

    a = amp[None, :] * phase
    da_theta = (d_amp_theta[None, :] - 1j * k[:, None] * d_theta[None, :] * amp) * phase
    da_r = (d_amp_r[None, :] - 1j * k[:, None] * d_r[None, :] * amp) * phase
    return a, da_theta, da_r


def response_inner_products(
    scenario: Scenario,
    model: ChannelModel | None = None,
    transmit_frame: np.ndarray | None = None,
    differentiate_r0: bool = True,
) -> InnerProducts:
    """Inner products of the stacked mean derivatives.

    With no transmit frame, the per-subcarrier signal Gram matrix is replaced
    by its expectation L (P/N) I (the statistical bound). Passing the realized
    (M, N, L) transmit frame yields the conditional variant used for
    finite-difference validation and estimator-consistency experiments.
    """
    model = model or scenario.model
    geom, ofdm = scenario.geometry, scenario.ofdm
    m_total = ofdm.n_subcarriers

    norm_u = 0.0
    ut_ut = 0.0
    ur_ur = 0.0
    ut_ur = 0.0 + 0.0j
    ut_u = 0.0 + 0.0j
    ur_u = 0.0 + 0.0j

    if transmit_frame is None:
        scale = ofdm.n_symbols * scenario.power / geom.n_antennas
        for lo in range(0, m_total, _M_CHUNK):
            sl = slice(lo, min(lo + _M_CHUNK, m_total))
            a, at, ar = response_derivatives(
                geom, ofdm, scenario.target, model, differentiate_r0, sl
            )
            na = np.einsum("mn,mn->m", a.real, a.real) + np.einsum(
                "mn,mn->m", a.imag, a.imag
            )
            s_t = np.einsum("mn,mn->m", np.conj(a), at)
            s_r = np.einsum("mn,mn->m", np.conj(a), ar)
            h_tt = np.einsum("mn,mn->m", np.conj(at), at).real
            h_rr = np.einsum("mn,mn->m", np.conj(ar), ar).real
            h_tr = np.einsum("mn,mn->m", np.conj(at), ar)
            norm_u += scale * np.sum(na**2)
            ut_ut += scale * 2.0 * np.sum(np.abs(s_t) ** 2 + na * h_tt)
            ur_ur += scale * 2.0 * np.sum(np.abs(s_r) ** 2 + na * h_rr)
            ut_ur += scale * 2.0 * np.sum(np.conj(s_t) * s_r + na * h_tr)
            ut_u += scale * 2.0 * np.sum(na * np.conj(s_t))
            ur_u += scale * 2.0 * np.sum(na * np.conj(s_r))
    else:
        a_all, at_all, ar_all = response_derivatives(
            geom, ofdm, scenario.target, model, differentiate_r0
        )
        for m in range(m_total):
            a, at, ar = a_all[m], at_all[m], ar_all[m]
            gram = transmit_frame[m] @ np.conj(transmit_frame[m]).T
            a_mat = np.outer(a, a)
            dt_mat = np.outer(at, a) + np.outer(a, at)
            dr_mat = np.outer(ar, a) + np.outer(a, ar)

            def tr(p, q, gram=gram):
                return np.sum(np.conj(p) * (q @ gram))

            norm_u += tr(a_mat, a_mat).real
            ut_ut += tr(dt_mat, dt_mat).real
            ur_ur += tr(dr_mat, dr_mat).real
            ut_ur += tr(dt_mat, dr_mat)
            ut_u += tr(dt_mat, a_mat)
            ur_u += tr(dr_mat, a_mat)

    return InnerProducts(
        norm_u_sq=float(norm_u),
        ut_ut=float(ut_ut),
        ur_ur=float(ur_ur),
        ut_ur=complex(ut_ur),
        ut_u=complex(ut_u),
        ur_u=complex(ur_u),
    )


def fim_matrix(
    scenario: Scenario,
    model: ChannelModel | None = None,
    transmit_frame: np.ndarray | None = None,
    differentiate_r0: bool = True,
) -> np.ndarray:
    """4 x 4 information matrix over (theta, r, Re beta, Im beta)."""
    ip = response_inner_products(scenario, model, transmit_frame, differentiate_r0)
    pre = 2.0 / scenario.noise_power
    beta = scenario.beta
    b2 = abs(beta) ** 2
    bt = np.conj(beta) * ip.ut_u
    br = np.conj(beta) * ip.ur_u
    j = np.zeros((4, 4))
    j[0, 0] = b2 * ip.ut_ut
    j[1, 1] = b2 * ip.ur_ur
    j[0, 1] = j[1, 0] = b2 * ip.ut_ur.real
    j[0, 2] = j[2, 0] = bt.real
    j[0, 3] = j[3, 0] = -bt.imag
    j[1, 2] = j[2, 1] = br.real
    j[1, 3] = j[3, 1] = -br.imag
    j[2, 2] = j[3, 3] = ip.norm_u_sq
    return pre * j


def fim_crb(
    scenario: Scenario,
    model: ChannelModel | None = None,
    transmit_frame: np.ndarray | None = None,
    differentiate_r0: bool = True,
) -> CrbReport:
    """Bounds from the full information matrix, eliminating the gain block
    by its Schur complement. Valid for both channel models."""
    j = fim_matrix(scenario, model, transmit_frame, differentiate_r0)
    gain_info = j[2, 2]
    if not (gain_info > 0 and np.isfinite(gain_info)):
        raise SingularInformation("gain block of the information matrix is void")
    loc_block = j[:2, :2]
    cross = j[:2, 2:]
    schur = loc_block - (cross @ cross.T) / gain_info
    eigs = np.linalg.eigvalsh(schur)
    if eigs[0] <= 0 or eigs[1] / eigs[0] > _COND_LIMIT:
        raise SingularInformation("information matrix is numerically singular")
    det = schur[0, 0] * schur[1, 1] - schur[0, 1] * schur[1, 0]
    return CrbReport(
        crb_theta=float(schur[1, 1] / det),
        crb_r=float(schur[0, 0] / det),
        method=CrbMethod.EXACT_FIM,
        fim=j,
    )


def fim_crb_reference(
    scenario: Scenario,
    model: ChannelModel | None = None,
    transmit_frame: np.ndarray | None = None,
    differentiate_r0: bool = True,
) -> tuple[float, float]:
    """Cross-check form of the bounds via the normalized projection angles
    between the mean derivatives and the mean vector. Must agree with
    fim_crb to high precision; kept as an independent assembly of the same
    information."""
    ip = response_inner_products(scenario, model, transmit_frame, differentiate_r0)
    norm_u = ip.norm_u_sq
    sin2_omega = 1.0 - abs(ip.ut_u) ** 2 / (ip.ut_ut * norm_u)
    sin2_theta = 1.0 - abs(ip.ur_u) ** 2 / (ip.ur_ur * norm_u)
    q11 = ip.ut_ut * sin2_omega
    q22 = ip.ur_ur * sin2_theta
    q12 = ip.ut_ur.real - (np.conj(ip.ut_u) * ip.ur_u).real / norm_u
    det_q = q11 * q22 - q12**2
    if det_q <= 0:
        raise SingularInformation("projected information is singular")
    b2 = abs(scenario.beta) ** 2
    pre = scenario.noise_power / (2.0 * b2 * det_q)
    return pre * q22, pre * q11
