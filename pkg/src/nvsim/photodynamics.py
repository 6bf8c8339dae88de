"""Optical transitions and classical rate-equation dynamics.

Ten-level scheme: three ground spin sublevels (gSz, gSx, gSy), the six
strain-dependent excited eigenstates (ascending energy) and one
metastable singlet. Populations are classical (no optical coherences);
the only coherent element is the microwave rotation inside the Rabi
pulse sequence. Rates in 1/ns, energies/detunings in GHz.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from .linalg import hermitian_eigen
from .model import build_excited_hamiltonian, ground_levels
from .sweep import classify_level

N_LEVELS = 10
IDX_GSZ, IDX_GSX, IDX_GSY = 0, 1, 2
IDX_EXC = slice(3, 9)
IDX_META = 9

WEAK_LINE_FLOOR = 1e-4


@dataclass(frozen=True)
class TransitionLine:
    ground_sublevel: str          # gSz | gSx | gSy
    excited_index: int            # 1..6, ascending energy
    detuning: float               # GHz, relative to the optical reference
    strength: float               # in [0, 1]; sums to 1 per ground sublevel
    spin_conserving: bool
    weak: bool = False


@dataclass(frozen=True)
class RateParams:
    """Decay, shelving and drive rates (1/ns). The magnitudes are
    artifact defaults, not measured values; only the orderings
    k_isc_z << k_isc_xy and beta_z -> gSz are physically mandated."""

    gamma_rad: float = 1.0 / 12.0
    k_isc_xy: float = 0.05
    k_isc_z: float = 0.004
    gamma_singlet: float = 1.0 / 300.0
    beta_z: float = 0.9
    pump_green: float = 0.02
    pump_res_max: float = 0.02
    linewidth: float = 0.02       # optical FWHM, GHz
    mw_mix_rate: float = 0.01

    def __post_init__(self):
        rates = (self.gamma_rad, self.k_isc_xy, self.k_isc_z,
                 self.gamma_singlet, self.pump_green, self.pump_res_max,
                 self.linewidth, self.mw_mix_rate)
        if any(r < 0 for r in rates):
            raise ValueError("rates must be nonnegative")
        if not 0.0 <= self.beta_z <= 1.0:
            raise ValueError("beta_z must lie in [0, 1]")
        if self.k_isc_z > self.k_isc_xy:
            raise ValueError("k_isc_z must not exceed k_isc_xy")


class RateModelError(Exception):
    pass


@lru_cache(maxsize=64)
def _excited_structure(params, strain):
    es = hermitian_eigen(build_excited_hamiltonian(params, strain))
    chars = [classify_level(es.vectors[:, k]) for k in range(6)]
    return es.values, chars


def transition_lines(params, strain):
    """All 18 ground-to-excited lines. Line strength is the spin
    population of the excited eigenstate matching the ground sublevel
    (the optical dipole is spin-blind), halved so that the strengths per
    ground sublevel sum to one over the two orbital branches."""
    values, chars = _excited_structure(params, strain)
    g_energies = dict(zip(("gSz", "gSx", "gSy"), ground_levels(params)))
    spin_of = {"gSz": "p_sz", "gSx": "p_sx", "gSy": "p_sy"}
    lines = []
    for gname, ge in g_energies.items():
        for k in range(6):
            strength = getattr(chars[k], spin_of[gname]) / 2.0
            lines.append(TransitionLine(
                ground_sublevel=gname,
                excited_index=k + 1,
                detuning=float(values[k] - ge),
                strength=float(strength),
                spin_conserving=("p_" + chars[k].dominant_spin)
                == spin_of[gname],
                weak=strength < WEAK_LINE_FLOOR,
            ))
    return lines


def lorentzian_peak(detuning, fwhm):
    """Unit-peak symmetric line profile."""
    half = 0.5 * fwhm
    return half * half / (detuning * detuning + half * half)


def build_rate_matrix(params, strain, rp, laser_detuning=0.0,
                      mw_on=False, green_on=False):
    """10x10 population-rate generator G with dP/dt = G P.

    Columns sum to zero. The resonant laser drives every optical line at
    pump_res_max * strength * profile(laser offset); optical pumping is
    bidirectional (absorption and stimulated emission at equal rates).
    """
    values, chars = _excited_structure(params, strain)
    spin_pop = np.array([[c.p_sz, c.p_sx, c.p_sy] for c in chars])  # (6,3)
    g_energies = np.array(ground_levels(params))  # gSz, gSx, gSy
    g = np.zeros((N_LEVELS, N_LEVELS))

    def move(src, dst, rate):
        g[dst, src] += rate
        g[src, src] -= rate

    for k in range(6):
        e = 3 + k
        for gi in range(3):
            share = spin_pop[k, gi]
            # spontaneous decay, spin projection conserved
            move(e, gi, rp.gamma_rad * share)
            # resonant drive on the (gi -> e) line
            offset = laser_detuning - (values[k] - g_energies[gi])
            prof = lorentzian_peak(offset, rp.linewidth)
            if not np.isfinite(prof):
                raise RateModelError(
                    f"line profile not finite at detuning {laser_detuning}")
            pump = rp.pump_res_max * (share / 2.0) * prof
            move(gi, e, pump)
            move(e, gi, pump)
            # spin-conserving off-resonant (green) pumping
            if green_on:
                move(gi, e, rp.pump_green * share)
        # spin-selective shelving into the metastable singlet
        isc = (rp.k_isc_xy * (spin_pop[k, 1] + spin_pop[k, 2])
               + rp.k_isc_z * spin_pop[k, 0])
        move(e, IDX_META, isc)

    # metastable decay, preferentially into gSz
    move(IDX_META, IDX_GSZ, rp.gamma_singlet * rp.beta_z)
    move(IDX_META, IDX_GSX, rp.gamma_singlet * (1.0 - rp.beta_z) / 2.0)
    move(IDX_META, IDX_GSY, rp.gamma_singlet * (1.0 - rp.beta_z) / 2.0)

    if mw_on:
        for gi in (IDX_GSX, IDX_GSY):
            move(IDX_GSZ, gi, rp.mw_mix_rate)
            move(gi, IDX_GSZ, rp.mw_mix_rate)
    return g


def uniform_ground():
    pop = np.zeros(N_LEVELS)
    pop[:3] = 1.0 / 3.0
    return pop


def propagate(pop, generator, duration):
    """Advance populations by exp(G * t); exact for a fixed generator."""
    if duration < 0:
        raise ValueError("duration must be nonnegative")
    pop = np.asarray(pop, dtype=float)
    if duration == 0:
        return pop.copy()
    out = expm(generator * duration) @ pop
    total = out.sum()
    if abs(total - pop.sum()) > 1e-9:
        raise RateModelError(
            f"propagation violated probability conservation by "
            f"{abs(total - pop.sum()):.3e}")
    return out


def stationary_state(generator):
    """Unique normalized null vector of the generator."""
    a = np.vstack([generator, np.ones(N_LEVELS)])
    b = np.zeros(N_LEVELS + 1)
    b[-1] = 1.0
    sol, *_ = np.linalg.lstsq(a, b, rcond=None)
    residual = np.max(np.abs(generator @ sol))
    if residual > 1e-8 or np.min(sol) < -1e-8:
        raise RateModelError(
            f"stationary state not found (residual {residual:.3e})")
    return np.clip(sol, 0.0, None) / np.clip(sol, 0.0, None).sum()


def excitation_spectrum(params, strain, rp, detunings, mw_on=True):
    """Steady-state photoluminescence rate versus laser detuning."""
    detunings = np.asarray(detunings, dtype=float)
    if detunings.size and np.any(np.diff(detunings) <= 0):
        raise ValueError("detuning grid must be ascending")
    pl = np.empty(detunings.size)
    for i, nu in enumerate(detunings):
        gmat = build_rate_matrix(params, strain, rp, laser_detuning=nu,
                                 mw_on=mw_on, green_on=False)
        try:
            ss = stationary_state(gmat)
        except RateModelError as err:
            raise RateModelError(f"at detuning {nu} GHz: {err}") from err
        pl[i] = rp.gamma_rad * ss[IDX_EXC].sum()
    return np.column_stack([detunings, pl])


def _mw_rotation(pop, angle):
    """Coherent population rotation between gSz and gSx (the driven
    member of the ground doublet); cos^2 transfer, populations only."""
    out = pop.copy()
    c2 = np.cos(angle / 2.0) ** 2
    s2 = 1.0 - c2
    out[IDX_GSZ] = c2 * pop[IDX_GSZ] + s2 * pop[IDX_GSX]
    out[IDX_GSX] = s2 * pop[IDX_GSZ] + c2 * pop[IDX_GSX]
    return out


GREEN_INIT_NS = 3000.0
SETTLE_NS = 2000.0
READOUT_NS = 1000.0


def polarize(params, strain, rp, green_ns=GREEN_INIT_NS,
             settle_ns=SETTLE_NS):
    """Green initialization pulse followed by a dark interval letting the
    excited and metastable populations relax back to the ground manifold."""
    g_on = build_rate_matrix(params, strain, rp, green_on=True)
    pop = propagate(uniform_ground(), g_on, green_ns)
    g_off = build_rate_matrix(params, strain, rp)
    return propagate(pop, g_off, settle_ns)


def rabi_trace(params, strain, rp, omega_mw, readout_line, mw_durations):
    """Initialize (green pulse plus dark settle), rotate (MW for tau),
    read out (resonant laser on `readout_line`, integrating PL).
    Returns (tau, counts) rows."""
    if omega_mw <= 0:
        raise ValueError("omega_mw must be positive")
    if readout_line.strength <= 0:
        raise ValueError("readout line has zero strength")

    init = polarize(params, strain, rp)

    g_read = build_rate_matrix(params, strain, rp,
                               laser_detuning=readout_line.detuning)
    # augmented generator: last row integrates gamma_rad * P_excited
    aug = np.zeros((N_LEVELS + 1, N_LEVELS + 1))
    aug[:N_LEVELS, :N_LEVELS] = g_read
    aug[N_LEVELS, IDX_EXC] = rp.gamma_rad
    read_prop = expm(aug * READOUT_NS)

    rows = []
    for tau in mw_durations:
        pop = _mw_rotation(init, omega_mw * tau)
        state = np.append(pop, 0.0)
        counts = (read_prop @ state)[N_LEVELS]
        rows.append((float(tau), float(counts)))
    return rows
