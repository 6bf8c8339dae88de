"""Strain sweeps: adiabatic level tracking, crossing detection and the
orbit-averaged spin splitting."""

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .linalg import hermitian_eigen
from .model import (FineStructureParams, StrainVector,
                    build_excited_hamiltonian, symmetry_states)

SYMMETRY_OVERLAP_MIN = 0.9
GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


class SweepError(Exception):
    pass


@dataclass(frozen=True)
class LevelCharacter:
    """Orbital-branch and spin-population weights of one eigenstate."""

    p_branch_x: float
    p_sx: float
    p_sy: float
    p_sz: float
    symmetry_tag: Optional[str] = None

    @property
    def dominant_spin(self):
        return max(("sx", "sy", "sz"),
                   key=lambda s: getattr(self, "p_" + s))


@dataclass(frozen=True)
class CrossingEvent:
    strain_at_min_gap: float
    track_a: int
    track_b: int
    min_gap: float
    avoided: bool


@dataclass
class SweepResult:
    grid: np.ndarray                  # ascending delta_perp values (GHz)
    energies: np.ndarray              # (npoints, 6), track-ordered
    characters: list                  # per point: list of 6 LevelCharacter
    params: FineStructureParams
    ambiguous_points: list            # grid indices where tracking overlap^2 < 0.5


def classify_level(vec, tag_refs=None):
    """Branch and spin populations of a unit-norm 6-vector; a symmetry
    tag is attached when the overlap with a zero-strain symmetry state
    exceeds 0.9."""
    v = np.asarray(vec, dtype=complex)
    if v.shape != (6,):
        raise ValueError("expected a 6-component eigenvector")
    norm = np.linalg.norm(v)
    if abs(norm - 1.0) > 1e-6:
        raise ValueError(f"eigenvector norm {norm:.6f} is not 1")
    w = np.abs(v) ** 2
    tag = None
    refs = symmetry_states() if tag_refs is None else tag_refs
    for lab, ref in refs.items():
        if abs(np.vdot(ref, v)) ** 2 >= SYMMETRY_OVERLAP_MIN:
            tag = lab
            break
    return LevelCharacter(
        p_branch_x=float(w[0] + w[1] + w[2]),
        p_sx=float(w[0] + w[3]),
        p_sy=float(w[1] + w[4]),
        p_sz=float(w[2] + w[5]),
        symmetry_tag=tag,
    )


def _greedy_match(prev_vectors, vectors):
    """Assign current eigenvectors to tracks by descending |overlap|^2.

    Returns (permutation, best overlap^2 per track): perm[track] = column
    index in `vectors` continuing that track.
    """
    ov = np.abs(prev_vectors.conj().T @ vectors) ** 2
    order = np.dstack(np.unravel_index(np.argsort(ov, axis=None)[::-1],
                                       ov.shape))[0]
    perm = np.full(6, -1)
    taken = np.zeros(6, dtype=bool)
    quality = np.zeros(6)
    for i, j in order:
        if perm[i] < 0 and not taken[j]:
            perm[i] = j
            taken[j] = True
            quality[i] = ov[i, j]
    return perm, quality


def sweep(params, grid):
    """Diagonalize along an ascending strain grid and stitch the six
    levels into continuous tracks by maximum eigenvector overlap."""
    grid = np.asarray(grid, dtype=float)
    if grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise SweepError("grid must be ascending with at least 2 points")

    refs = symmetry_states()
    energies = np.empty((grid.size, 6))
    characters = []
    ambiguous = []
    prev_vectors = None
    for idx, dperp in enumerate(grid):
        es = hermitian_eigen(build_excited_hamiltonian(
            params, StrainVector(dperp, 0.0)))
        if prev_vectors is None:
            perm = np.arange(6)
        else:
            perm, quality = _greedy_match(prev_vectors, es.vectors)
            if np.min(quality) < 0.5:
                ambiguous.append(idx)
        energies[idx] = es.values[perm]
        prev_vectors = es.vectors[:, perm]
        characters.append([classify_level(prev_vectors[:, k], refs)
                           for k in range(6)])
    return SweepResult(grid=grid, energies=energies, characters=characters,
                       params=params, ambiguous_points=ambiguous)


def _sorted_gap(params, dperp, rank):
    ev = hermitian_eigen(build_excited_hamiltonian(
        params, StrainVector(dperp, 0.0))).values
    return ev[rank + 1] - ev[rank]


def _golden_min(f, a, b, tol=1e-9):
    """Golden-section minimum of f on [a, b]."""
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = f(x2)
    x = 0.5 * (a + b)
    return x, f(x)


def detect_crossings(sr, gap_threshold):
    """Locate (avoided) crossings: local minima of pairwise track gaps
    below `gap_threshold`, refined by golden-section search on the true
    sorted-eigenvalue gap. `avoided` requires an exchange of dominant
    spin character between the two tracks across the minimum."""
    if gap_threshold <= 0:
        raise ValueError("gap_threshold must be positive")
    events = []
    n = sr.grid.size
    for a in range(6):
        for b in range(a + 1, 6):
            gap = np.abs(sr.energies[:, a] - sr.energies[:, b])
            for i in range(1, n - 1):
                if not (gap[i] <= gap[i - 1] and gap[i] < gap[i + 1]
                        and gap[i] < gap_threshold):
                    continue
                # rank of the lower of the two levels in the sorted spectrum
                ev = np.sort(hermitian_eigen(build_excited_hamiltonian(
                    sr.params, StrainVector(sr.grid[i], 0.0))).values)
                lower = min(sr.energies[i, a], sr.energies[i, b])
                rank = int(np.argmin(np.abs(ev - lower)))
                if rank == 5:
                    rank = 4
                x, g = _golden_min(
                    lambda d: _sorted_gap(sr.params, d, rank),
                    sr.grid[max(i - 1, 0)], sr.grid[min(i + 1, n - 1)])
                before = max(i - 3, 0)
                after = min(i + 3, n - 1)
                exchanged = (
                    sr.characters[before][a].dominant_spin
                    == sr.characters[after][b].dominant_spin
                    and sr.characters[before][b].dominant_spin
                    == sr.characters[after][a].dominant_spin
                    and sr.characters[before][a].dominant_spin
                    != sr.characters[before][b].dominant_spin)
                events.append(CrossingEvent(
                    strain_at_min_gap=float(x), track_a=a, track_b=b,
                    min_gap=float(g), avoided=bool(exchanged)))
    events.sort(key=lambda e: e.strain_at_min_gap)
    return events


def _ms0_ranks(params, dperp):
    """Sorted-spectrum positions of the two ms=0 levels in the decoupled
    lambda_perp = 0 reference at the same strain."""
    ref = replace(params, lambda_perp=0.0)
    es = hermitian_eigen(build_excited_hamiltonian(
        ref, StrainVector(dperp, 0.0)))
    psz = np.abs(es.vectors[2]) ** 2 + np.abs(es.vectors[5]) ** 2
    return set(np.argsort(psz)[-2:])


def averaged_splitting(params, dperp):
    """Mean of the four ms=+-1-character eigenvalues minus the mean of
    the two ms=0-character ones (the orbit-averaged ESR splitting)."""
    es = hermitian_eigen(build_excited_hamiltonian(
        params, StrainVector(dperp, 0.0)))
    psz = np.abs(es.vectors[2]) ** 2 + np.abs(es.vectors[5]) ** 2
    ms0 = set(np.flatnonzero(psz > 0.5))
    if len(ms0) != 2:
        # near an avoided crossing characters mix; fall back on the
        # sorted-position partition of the decoupled reference
        ms0 = _ms0_ranks(params, dperp)
        if len(ms0) != 2:
            raise SweepError(
                f"cannot partition ms=0 levels at delta_perp={dperp}")
    ms1 = [k for k in range(6) if k not in ms0]
    return float(np.mean(es.values[ms1]) - np.mean(es.values[list(ms0)]))


def _upper_branch_sz_gap(params, dperp):
    """Gap between the upper-branch ms=0 level and the nearer upper-branch
    ms=+-1 level."""
    es = hermitian_eigen(build_excited_hamiltonian(
        params, StrainVector(dperp, 0.0)))
    chars = [classify_level(es.vectors[:, k]) for k in range(6)]
    upper = [k for k in range(6) if chars[k].p_branch_x > 0.5]
    sz = [k for k in upper if chars[k].p_sz > 0.5]
    if len(upper) != 3 or len(sz) != 1:
        raise SweepError(
            f"upper branch not resolved at delta_perp={dperp}")
    others = [k for k in upper if k != sz[0]]
    return float(min(abs(es.values[k] - es.values[sz[0]]) for k in others))


def nv2_condition_strain(params, window=(0.0, 100.0), tol=1e-6):
    """Smallest strain at which the upper-branch ms=0 level is separated
    from the nearer ms=+-1 level by exactly the ground-state splitting
    (the resonant-repumping condition)."""
    target = params.d_gs

    def f(d):
        return _upper_branch_sz_gap(params, d) - target

    lo = max(window[0], 0.3)  # branches unresolved at tiny strain
    n = 400
    xs = np.linspace(lo, window[1], n)
    fprev = f(xs[0])
    for x0, x1 in zip(xs[:-1], xs[1:]):
        fcur = f(x1)
        if fprev == 0.0 or fprev * fcur < 0:
            a, b = x0, x1
            fa = fprev
            while b - a > tol:
                m = 0.5 * (a + b)
                fm = f(m)
                if fa * fm <= 0:
                    b = m
                else:
                    a, fa = m, fm
            return 0.5 * (a + b)
        fprev = fcur
    raise SweepError(
        f"no strain in {window} satisfies the d_gs={target} GHz condition")
