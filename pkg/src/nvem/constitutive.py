"""von Mises plasticity with mixed linear hardening.

Six-component Voigt vectors are ordered ``(11, 22, 33, 12, 23, 13)``.
Strains (total and plastic) carry engineering shear ``2 e_ij``; stresses
and backstresses carry tensor shear. Plane-strain callers pass
``(e11, e22, 2 e12)`` and read back the (11, 22, 12) block.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

SQ32 = np.sqrt(1.5)
SQ23 = np.sqrt(2.0 / 3.0)
PLANE = np.array([0, 1, 3])  # plane-strain rows/cols of the 6-vector

M = np.array([1.0, 1.0, 1.0, 0.0, 0.0, 0.0])
I_DEV = np.diag([1.0, 1.0, 1.0, 0.5, 0.5, 0.5]) - np.outer(M, M) / 3.0
# tensor (Frobenius) inner-product weights for tensor-shear 6-vectors
METRIC = np.array([1.0, 1.0, 1.0, 2.0, 2.0, 2.0])


@dataclass(frozen=True)
class Material:
    youngs_modulus: float
    poissons_ratio: float
    initial_yield: float
    iso_hardening: float = 0.0
    kin_hardening: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.poissons_ratio < 0.5:
            raise ValueError("poissons_ratio must lie in (0, 0.5)")
        if self.youngs_modulus <= 0.0:
            raise ValueError("youngs_modulus must be positive")
        if self.initial_yield <= 0.0:
            raise ValueError("initial_yield must be positive")
        if self.iso_hardening < 0.0 or self.kin_hardening < 0.0:
            raise ValueError("hardening moduli must be non-negative")

    @property
    def shear_modulus(self) -> float:
        return self.youngs_modulus / (2.0 * (1.0 + self.poissons_ratio))

    @property
    def bulk_modulus(self) -> float:
        return self.youngs_modulus / (3.0 * (1.0 - 2.0 * self.poissons_ratio))

    def yield_stress(self, eps_bar_p):
        return self.initial_yield + self.iso_hardening * eps_bar_p

    def elastic_tangent(self) -> np.ndarray:
        return 2.0 * self.shear_modulus * I_DEV + self.bulk_modulus * np.outer(M, M)

    def deviatoric_moduli(self) -> np.ndarray:
        return 2.0 * self.shear_modulus * I_DEV


@dataclass
class PlasticState:
    eps_p: np.ndarray = field(default_factory=lambda: np.zeros(6))
    beta: np.ndarray = field(default_factory=lambda: np.zeros(6))
    eps_bar_p: float = 0.0


@dataclass
class StateField:
    """Plastic history at ``n`` sample points (nodes or elements)."""

    eps_p: np.ndarray
    beta: np.ndarray
    eps_bar_p: np.ndarray

    @classmethod
    def virgin(cls, n: int) -> "StateField":
        return cls(np.zeros((n, 6)), np.zeros((n, 6)), np.zeros(n))

    def __len__(self):
        return len(self.eps_bar_p)

    def copy(self) -> "StateField":
        return StateField(self.eps_p.copy(), self.beta.copy(), self.eps_bar_p.copy())

    def point(self, k: int) -> PlasticState:
        return PlasticState(self.eps_p[k].copy(), self.beta[k].copy(), float(self.eps_bar_p[k]))


@dataclass
class StressReturn:
    sigma: np.ndarray
    tangent6: np.ndarray
    tangent3: np.ndarray
    new_state: PlasticState
    plastic: bool
    delta_gamma: float = 0.0


@dataclass
class BatchReturn:
    sigma: np.ndarray  # (n, 6)
    tangent6: np.ndarray  # (n, 6, 6)
    state: StateField
    plastic: np.ndarray  # (n,) bool
    delta_gamma: np.ndarray  # (n,)

    @property
    def tangent3(self) -> np.ndarray:
        return self.tangent6[:, PLANE][:, :, PLANE]

    @property
    def sigma3(self) -> np.ndarray:
        return self.sigma[:, PLANE]


def tensor_norm(v: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(METRIC * v * v, axis=-1))


def promote_strain(strain3: np.ndarray) -> np.ndarray:
    strain3 = np.asarray(strain3, dtype=float)
    eps = np.zeros(strain3.shape[:-1] + (6,))
    eps[..., PLANE] = strain3
    return eps


def return_map_batch(material: Material, state: StateField, strain3: np.ndarray) -> BatchReturn:
    """Elastic predictor / radial return at every sample point.

    ``state`` is the committed history and is not modified.
    """
    G = material.shear_modulus
    K = material.bulk_modulus
    Hi, Hk = material.iso_hardening, material.kin_hardening

    eps_e = promote_strain(strain3) - state.eps_p
    trace = eps_e[:, :3].sum(axis=1)
    s_trial = 2.0 * G * (eps_e @ I_DEV)  # I_DEV is symmetric
    eta = s_trial - state.beta
    eta_norm = tensor_norm(eta)
    q_trial = SQ32 * eta_norm
    phi = q_trial - material.yield_stress(state.eps_bar_p)
    plastic = phi > 0.0

    n = len(trace)
    sigma = s_trial + K * trace[:, None] * M
    tangent = np.broadcast_to(material.elastic_tangent(), (n, 6, 6)).copy()
    new = state.copy()
    dgamma = np.zeros(n)

    if plastic.any():
        p = np.flatnonzero(plastic)
        if np.any(eta_norm[p] == 0.0):
            raise RuntimeError("plastic corrector with zero relative stress")
        denom = 3.0 * G + Hk + Hi
        dg = phi[p] / denom
        N = eta[p] / eta_norm[p, None]
        N_eng = N * METRIC
        new.eps_bar_p[p] += dg
        new.eps_p[p] += (dg * SQ32)[:, None] * N_eng
        new.beta[p] += (dg * SQ23 * Hk)[:, None] * N
        s_new = s_trial[p] - (2.0 * G * SQ32 * dg)[:, None] * N
        sigma[p] = s_new + K * trace[p, None] * M
        a = 2.0 * G * (1.0 - 3.0 * G * dg / q_trial[p])
        b = 6.0 * G * G * (dg / q_trial[p] - 1.0 / denom)
        tangent[p] = (
            a[:, None, None] * I_DEV
            + b[:, None, None] * N[:, :, None] * N[:, None, :]
            + K * np.outer(M, M)
        )
        dgamma[p] = dg
    return BatchReturn(sigma, tangent, new, plastic, dgamma)


def return_map(material: Material, state_n: PlasticState, strain3) -> StressReturn:
    field_ = StateField(
        np.asarray(state_n.eps_p, float)[None].copy(),
        np.asarray(state_n.beta, float)[None].copy(),
        np.array([state_n.eps_bar_p], dtype=float),
    )
    out = return_map_batch(material, field_, np.asarray(strain3, dtype=float)[None])
    return StressReturn(
        sigma=out.sigma[0],
        tangent6=out.tangent6[0],
        tangent3=out.tangent3[0],
        new_state=out.state.point(0),
        plastic=bool(out.plastic[0]),
        delta_gamma=float(out.delta_gamma[0]),
    )


def deviator(sigma6: np.ndarray) -> np.ndarray:
    sigma6 = np.asarray(sigma6, dtype=float)
    return sigma6 - (sigma6[..., :3].sum(axis=-1) / 3.0)[..., None] * M


def von_mises(sigma6: np.ndarray) -> np.ndarray:
    return SQ32 * tensor_norm(deviator(sigma6))


def pressure(sigma6: np.ndarray) -> np.ndarray:
    """Mean stress ``(s11 + s22 + s33) / 3``."""
    return np.asarray(sigma6, dtype=float)[..., :3].sum(axis=-1) / 3.0


def yield_value(material: Material, sigma6, beta6, eps_bar_p):
    eta = deviator(sigma6) - np.asarray(beta6, dtype=float)
    return SQ32 * tensor_norm(eta) - material.yield_stress(eps_bar_p)


def consistent_tangent_check(
    material: Material, state_n: PlasticState, strain3, h: Optional[float] = None
) -> Optional[float]:
    """Max relative discrepancy between the returned plane-strain tangent
    and central finite differences of the stress.

    Returns ``None`` when the perturbed points straddle the elastic/plastic
    switch (non-smooth; check skipped).
    """
    strain3 = np.asarray(strain3, dtype=float)
    if h is None:
        h = 1e-6 * max(1.0, float(np.linalg.norm(strain3)))
    base = return_map(material, state_n, strain3)
    fd = np.zeros((3, 3))
    for j in range(3):
        de = np.zeros(3)
        de[j] = h
        plus = return_map(material, state_n, strain3 + de)
        minus = return_map(material, state_n, strain3 - de)
        if plus.plastic != base.plastic or minus.plastic != base.plastic:
            return None
        fd[:, j] = (plus.sigma[PLANE] - minus.sigma[PLANE]) / (2.0 * h)
    scale = np.abs(base.tangent3).max()
    return float(np.abs(fd - base.tangent3).max() / scale)
