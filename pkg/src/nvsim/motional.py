"""Two-site exchange model of the room-temperature orbital averaging.

The excited-state ESR line of each orbital branch sits at its own
frequency; stochastic hopping between the branches at `hop_rate`
(spin-conserving) narrows the doublet into a single line at the mean
frequency. Temperature enters through an Arrhenius map for the hop rate.
"""

from dataclasses import dataclass

import numpy as np

from .linalg import hermitian_eigen
from .model import StrainVector, build_excited_hamiltonian
from .sweep import classify_level

KB_MEV_PER_K = 0.08617333  # Boltzmann constant, meV/K

# Arrhenius defaults calibrated (not measured) so that, at the default
# 20 GHz strain working point, the ESR contrast is ~0.5 at 150 K, >=0.8
# near room temperature and ~0 in the cryogenic limit.
DEFAULT_ATTEMPT_RATE = 3.2e3   # GHz (phonon-scale attempt frequency)
DEFAULT_ACTIVATION_MEV = 60.0


class BranchError(Exception):
    pass


@dataclass(frozen=True)
class ExchangeModel:
    freq_a: float                 # GHz, branch-a ESR frequency
    freq_b: float                 # GHz, branch-b ESR frequency
    linewidth_0: float = 0.1      # GHz, intrinsic FWHM
    hop_rate: float = 0.0         # GHz, symmetric a<->b exchange
    weight_a: float = 0.5

    def __post_init__(self):
        if self.freq_a <= 0 or self.freq_b <= 0:
            raise ValueError("ESR frequencies must be positive")
        if self.hop_rate < 0:
            raise ValueError("hop_rate must be nonnegative")
        if not 0.0 <= self.weight_a <= 1.0:
            raise ValueError("weight_a must lie in [0, 1]")

    @property
    def mean_frequency(self):
        return self.weight_a * self.freq_a \
            + (1.0 - self.weight_a) * self.freq_b


@dataclass(frozen=True)
class TemperatureMap:
    """Arrhenius hop rate r0 * exp(-ea / kB T)."""

    r0: float = DEFAULT_ATTEMPT_RATE       # GHz
    ea: float = DEFAULT_ACTIVATION_MEV     # meV

    def __post_init__(self):
        if self.r0 <= 0 or self.ea < 0:
            raise ValueError("need r0 > 0 and ea >= 0")

    def hop_rate(self, temperature):
        if temperature <= 0:
            raise ValueError("temperature must be positive")
        return self.r0 * np.exp(-self.ea / (KB_MEV_PER_K * temperature))


def branch_esr_frequencies(params, strain_perp):
    """Within-branch ESR frequency (mean ms=+-1 energy minus ms=0
    energy) and internal ms=+-1 splitting for the upper (a = Ex) and
    lower (b = Ey) orbital branches.

    Requires strain large enough that every level is cleanly assigned to
    a branch (orbital weight > 0.9)."""
    es = hermitian_eigen(build_excited_hamiltonian(
        params, StrainVector(strain_perp, 0.0)))
    chars = [classify_level(es.vectors[:, k]) for k in range(6)]
    if any(0.1 < c.p_branch_x < 0.9 for c in chars):
        raise BranchError(
            f"branches unresolved at delta_perp={strain_perp} GHz")
    out = {}
    for branch, in_branch in (("a", lambda c: c.p_branch_x > 0.9),
                              ("b", lambda c: c.p_branch_x < 0.1)):
        idx = [k for k in range(6) if in_branch(chars[k])]
        sz = [k for k in idx if chars[k].p_sz > 0.5]
        ms1 = [k for k in idx if chars[k].p_sz <= 0.5]
        if len(sz) != 1 or len(ms1) != 2:
            raise BranchError(
                f"spin characters unresolved at delta_perp={strain_perp}")
        freq = float(np.mean(es.values[ms1]) - es.values[sz[0]])
        split = float(abs(es.values[ms1[1]] - es.values[ms1[0]]))
        out[branch] = (freq, split)
    return out["a"][0], out["b"][0], out["a"][1], out["b"][1]


def exchange_lineshape(model, grid):
    """Absorption intensity of the symmetric two-site exchange problem
    on an ascending frequency grid (GHz).

    Resolvent form: I(nu) = (1/pi) Re{ w^T [i 2pi(nu I - Omega) + K +
    Gamma0]^-1 w }, with K the exchange generator and Gamma0 the
    intrinsic damping. Integrated area is hop-rate independent."""
    grid = np.asarray(grid, dtype=float)
    if grid.size > 1 and np.any(np.diff(grid) <= 0):
        raise ValueError("frequency grid must be ascending")
    gamma0 = np.pi * model.linewidth_0  # damping giving FWHM linewidth_0
    k = model.hop_rate
    wa = model.weight_a
    w = np.array([np.sqrt(wa), np.sqrt(1.0 - wa)])
    omega = np.array([model.freq_a, model.freq_b])
    kmat = k * np.array([[1.0, -1.0], [-1.0, 1.0]])
    out = np.empty(grid.size)
    for i, nu in enumerate(grid):
        a = 1j * 2.0 * np.pi * (nu * np.eye(2) - np.diag(omega)) \
            + kmat + gamma0 * np.eye(2)
        det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
        assert det != 0, "resolvent singular despite positive damping"
        inv = np.array([[a[1, 1], -a[0, 1]], [-a[1, 0], a[0, 0]]]) / det
        out[i] = (w @ inv @ w).real / np.pi
    return out


def _fast_limit_height(model):
    """Peak height of the fully collapsed line (hop_rate -> infinity)."""
    return 1.0 / (np.pi ** 2 * model.linewidth_0)


def esr_contrast_vs_temperature(tmap, params, strain_perp, temperatures,
                                linewidth_0=0.1, weight_a=0.5):
    """ESR contrast versus temperature: intensity at the averaged
    frequency, normalized so the fast-exchange limit is 1."""
    fa, fb, _, _ = branch_esr_frequencies(params, strain_perp)
    rows = []
    for t in temperatures:
        m = ExchangeModel(freq_a=fa, freq_b=fb, linewidth_0=linewidth_0,
                          hop_rate=float(tmap.hop_rate(t)),
                          weight_a=weight_a)
        height = exchange_lineshape(m, np.array([m.mean_frequency]))[0]
        rows.append((float(t), float(height / _fast_limit_height(m))))
    return rows


def averaged_split_large_strain(params, strain_perp):
    """Closed form for the two orbit-averaged ESR frequencies once the
    strain-induced transverse spin-spin term is included: d_es -/+
    e_es_coeff * delta_perp."""
    if params.e_es_coeff < 0:
        raise ValueError("e_es_coeff must be >= 0")
    e_es = params.e_es_coeff * strain_perp
    return (params.d_es - e_es, params.d_es + e_es)
