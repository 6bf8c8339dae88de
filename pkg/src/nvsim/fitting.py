"""Estimation of the zero-strain fine-structure parameters from measured
excitation-line positions.

Each defect contributes a handful of line detunings relative to an
arbitrary per-defect reference; the model predicts the six excited-state
eigenvalues at the defect's (unknown) transverse strain, shifted by a
free per-defect offset. Global parameters (lambda_z, d_es, delta_cap and
optionally lambda_perp) are shared across defects and found by
derivative-free simplex descent over a nested per-defect strain/offset
optimization.
"""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .model import (FineStructureParams, StrainVector,
                    build_excited_hamiltonian)

STRAIN_MAX = 30.0
COARSE_STEP = 0.25
REFINE_ITERS = 18


class FitError(Exception):
    pass


@dataclass(frozen=True)
class ObservedDefect:
    id: str
    lines: tuple            # detunings, GHz
    sigma: float = 0.01     # GHz

    def __post_init__(self):
        if len(self.lines) < 2:
            raise ValueError(f"defect {self.id}: need at least 2 lines")
        if not all(np.isfinite(x) for x in self.lines):
            raise ValueError(f"defect {self.id}: non-finite line position")
        if self.sigma <= 0:
            raise ValueError(f"defect {self.id}: sigma must be positive")


@dataclass
class FitModel:
    params: FineStructureParams = field(default_factory=FineStructureParams)
    fit_lambda_perp: bool = False
    strains: dict = field(default_factory=dict)   # defect id -> delta_perp
    offsets: dict = field(default_factory=dict)   # defect id -> GHz
    bounds: dict = field(default_factory=lambda: {
        "lambda_z": (1.0, 15.0),
        "d_es": (0.1, 5.0),
        "delta_cap": (0.1, 5.0),
        "lambda_perp": (0.0, 1.0),
    })


@dataclass
class FitResult:
    params: FineStructureParams
    strains: dict
    offsets: dict
    residual_rms: float
    iterations: int
    converged: bool
    assignments: dict = field(default_factory=dict)


def assign_lines(predicted, measured):
    """Optimal order-preserving injection of the measured lines into the
    predicted lines, minimizing total |pred - meas|; dynamic programming
    over the two sorted sequences. Returns list of (meas_idx, pred_idx)
    in sorted order."""
    pred = np.sort(np.asarray(predicted, dtype=float))
    meas = np.sort(np.asarray(measured, dtype=float))
    m, n = meas.size, pred.size
    if m > n:
        raise FitError(f"more measured lines ({m}) than predicted ({n})")
    if m == n:
        # equal lengths force the identity on the sorted lists
        return [(i, i) for i in range(n)]
    cost = np.full((m + 1, n + 1), np.inf)
    cost[0, :] = 0.0
    choice = np.zeros((m + 1, n + 1), dtype=bool)
    for i in range(1, m + 1):
        for j in range(i, n + 1):
            skip = cost[i, j - 1]
            take = cost[i - 1, j - 1] + abs(pred[j - 1] - meas[i - 1])
            if take <= skip:
                cost[i, j] = take
                choice[i, j] = True
            else:
                cost[i, j] = skip
    pairs = []
    i, j = m, n
    while i > 0:
        if choice[i, j]:
            pairs.append((i - 1, j - 1))
            i -= 1
        j -= 1
    pairs.reverse()
    return pairs


def predicted_lines(params, delta_perp):
    """The six excited eigenvalues (GHz): line positions up to the
    per-defect offset, with the ground sublevels collapsed."""
    h = build_excited_hamiltonian(params, StrainVector(delta_perp, 0.0))
    return np.linalg.eigvalsh(h)


def _strain_family(params):
    """(h0, hd) with H(delta_perp) = h0 + delta_perp * hd; the spectrum
    depends on the strain vector only through its norm, so the sweep is
    taken along +x."""
    h0 = build_excited_hamiltonian(params, StrainVector(0.0, 0.0))
    h1 = build_excited_hamiltonian(params, StrainVector(1.0, 0.0))
    return h0, h1 - h0


def _batch_lines(family, dperps):
    """Sorted eigenvalues (n, 6) over a strain batch, one stacked solve."""
    h0, hd = family
    return np.linalg.eigvalsh(h0[None, :, :]
                              + np.asarray(dperps)[:, None, None] * hd)


def _defect_cost(pred, defect, offset=None):
    """Whitened squared cost of one defect at fixed predicted lines; the
    offset is re-centered from the initial assignment if not given."""
    meas = np.sort(np.asarray(defect.lines))
    if offset is None:
        pairs = assign_lines(pred, meas - (np.mean(meas) - np.mean(pred)))
        offset = float(np.mean([meas[i] - pred[j] for i, j in pairs]))
    pairs = assign_lines(pred + offset, meas)
    resid = np.array([(pred[j] + offset - meas[i]) / defect.sigma
                      for i, j in pairs])
    return float(resid @ resid), offset, pairs, resid


def residuals(fm, data):
    """Whitened residual vector over all defects at the model's current
    per-defect strains and offsets."""
    out = []
    for defect in data:
        try:
            dperp = fm.strains[defect.id]
            offset = fm.offsets.get(defect.id)
            pred = predicted_lines(fm.params, dperp)
            _, _, _, resid = _defect_cost(pred, defect, offset)
        except (KeyError, FitError) as err:
            raise FitError(f"defect {defect.id}: {err}") from err
        out.extend(resid)
    return np.array(out)


# --- fast path: every defect reports all six lines -----------------------
#
# With six measured lines the assignment is the identity and the optimal
# offset is the mean difference, so the per-defect cost at strain d is a
# closed-form function of the centered eigenvalue vector. Everything is
# vectorized over defects and candidate strains.

def _centered(lines_matrix):
    arr = np.sort(np.asarray(lines_matrix, dtype=float), axis=-1)
    return arr - arr.mean(axis=-1, keepdims=True)


def _grid_costs(family, grid, meas_c, sigmas):
    """Cost matrix (ndefect, ngrid) on a shared strain grid."""
    pred_c = _centered(_batch_lines(family, grid))           # (ngrid, 6)
    diff = pred_c[None, :, :] - meas_c[:, None, :]           # (nd, ng, 6)
    return (diff * diff).sum(axis=2) / sigmas[:, None] ** 2


def _point_costs(family, dperps, meas_c, sigmas):
    """Cost of defect i at its own candidate strain dperps[i]."""
    pred_c = _centered(_batch_lines(family, dperps))
    diff = pred_c - meas_c
    return (diff * diff).sum(axis=1) / sigmas ** 2


def _refine_strains(family, grid, costs, meas_c, sigmas,
                    iters=REFINE_ITERS):
    """Per-defect strain minimization: safeguarded successive parabolic
    interpolation, batched across defects (one stacked eigensolve per
    iteration)."""
    nd = costs.shape[0]
    k = np.clip(np.argmin(costs, axis=1), 1, grid.size - 2)
    idx = np.arange(nd)
    xs = np.stack([grid[k - 1], grid[k], grid[k + 1]], axis=1)
    fs = np.stack([costs[idx, k - 1], costs[idx, k],
                   costs[idx, k + 1]], axis=1)
    for _ in range(iters):
        x0, x1, x2 = xs[:, 0], xs[:, 1], xs[:, 2]
        f0, f1, f2 = fs[:, 0], fs[:, 1], fs[:, 2]
        num = ((x1 - x0) ** 2 * (f1 - f2) - (x1 - x2) ** 2 * (f1 - f0))
        den = ((x1 - x0) * (f1 - f2) - (x1 - x2) * (f1 - f0))
        with np.errstate(divide="ignore", invalid="ignore"):
            cand = x1 - 0.5 * num / den
        # fall back to bisecting the wider flank when the parabola is
        # degenerate or escapes the bracket
        wide_left = (x1 - x0) >= (x2 - x1)
        fallback = np.where(wide_left, 0.5 * (x0 + x1), 0.5 * (x1 + x2))
        bad = (~np.isfinite(cand)) | (cand <= x0) | (cand >= x2) \
            | (np.abs(cand - x1) < 1e-14)
        cand = np.where(bad, fallback, cand)
        fc = _point_costs(family, cand, meas_c, sigmas)
        # merge the new point, keeping a bracketing triple around the min
        allx = np.concatenate([xs, cand[:, None]], axis=1)
        allf = np.concatenate([fs, fc[:, None]], axis=1)
        order = np.argsort(allx, axis=1)
        allx = np.take_along_axis(allx, order, axis=1)
        allf = np.take_along_axis(allf, order, axis=1)
        kmin = np.clip(np.argmin(allf, axis=1), 1, 2)
        cols = np.stack([kmin - 1, kmin, kmin + 1], axis=1)
        xs = np.take_along_axis(allx, cols, axis=1)
        fs = np.take_along_axis(allf, cols, axis=1)
    return xs[:, 1], fs[:, 1]


def _best_defect_fit(params, defect, coarse_grid, coarse_pred):
    """Generic path for one defect (any line count): coarse scan over the
    shared strain grid, then bounded 1-D refinement."""
    costs = np.array([_defect_cost(coarse_pred[i], defect)[0]
                      for i in range(coarse_grid.size)])
    k = int(np.argmin(costs))
    lo = coarse_grid[max(k - 1, 0)]
    hi = coarse_grid[min(k + 1, coarse_grid.size - 1)]

    def f(d):
        return _defect_cost(predicted_lines(params, d), defect)[0]

    res = minimize_scalar(f, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-10})
    best_d = float(res.x)
    cost, offset, pairs, _ = _defect_cost(
        predicted_lines(params, best_d), defect)
    return cost, best_d, offset, pairs


def fit(data, init=None, max_iter=400, tol=1e-6):
    """Fit shared fine-structure parameters plus per-defect strain and
    offset. Nelder-Mead over the global parameters; for each candidate,
    every defect's strain is re-optimized by a grid scan plus 1-D
    refinement (a deterministic multi-start over strain)."""
    if not data:
        raise FitError("no defects supplied")
    fm = init if init is not None else FitModel()
    names = ["lambda_z", "d_es", "delta_cap"]
    if fm.fit_lambda_perp:
        names.append("lambda_perp")
    n_lines = sum(len(d.lines) for d in data)
    n_free = len(names) + 2 * len(data)
    if n_lines < n_free:
        raise FitError(
            f"under-determined: {n_lines} lines for {n_free} free "
            f"parameters ({len(names)} global + 2 per defect)")

    grid = np.arange(0.0, STRAIN_MAX + COARSE_STEP, COARSE_STEP)
    lo = np.array([fm.bounds[n][0] for n in names])
    hi = np.array([fm.bounds[n][1] for n in names])
    all_full = all(len(d.lines) == 6 for d in data)
    if all_full:
        meas_c = _centered([d.lines for d in data])
        sigmas = np.array([d.sigma for d in data])

    def solve_strains(params):
        family = _strain_family(params)
        costs = _grid_costs(family, grid, meas_c, sigmas)
        return _refine_strains(family, grid, costs, meas_c, sigmas)

    def objective(theta):
        if np.any(theta < lo) or np.any(theta > hi):
            return 1e12
        params = replace(fm.params, **dict(zip(names, theta)))
        if all_full:
            return float(solve_strains(params)[1].sum())
        coarse_pred = _batch_lines(_strain_family(params), grid)
        return sum(_best_defect_fit(params, d, grid, coarse_pred)[0]
                   for d in data)

    x0 = np.array([getattr(fm.params, n) for n in names])
    res = minimize(objective, x0, method="Nelder-Mead",
                   options={"maxiter": max_iter, "xatol": 1e-6,
                            "fatol": tol, "adaptive": True})

    best = replace(fm.params, **dict(zip(names, res.x)))
    strains, offsets, assignments = {}, {}, {}
    sq_sum, count = 0.0, 0
    if all_full:
        ds, _ = solve_strains(best)
        for defect, d in zip(data, ds):
            cost, off, pairs, _ = _defect_cost(
                predicted_lines(best, float(d)), defect)
            strains[defect.id] = float(d)
            offsets[defect.id] = off
            assignments[defect.id] = pairs
            sq_sum += cost * defect.sigma ** 2
            count += len(pairs)
    else:
        coarse_pred = _batch_lines(_strain_family(best), grid)
        for defect in data:
            cost, d, off, pairs = _best_defect_fit(best, defect,
                                                   grid, coarse_pred)
            strains[defect.id] = d
            offsets[defect.id] = off
            assignments[defect.id] = pairs
            sq_sum += cost * defect.sigma ** 2
            count += len(pairs)
    return FitResult(
        params=best,
        strains=strains,
        offsets=offsets,
        residual_rms=float(np.sqrt(sq_sum / count)),
        iterations=int(res.nit),
        converged=bool(res.success),
        assignments=assignments,
    )


def synthesize_dataset(params, strains, offsets=None, noise=0.0, seed=0):
    """Synthetic defect set drawn from the model itself (round-trip and
    Monte-Carlo fixtures)."""
    rng = np.random.default_rng(seed)
    if offsets is None:
        offsets = rng.uniform(-5.0, 5.0, size=len(strains))
    defects = []
    for i, (d, off) in enumerate(zip(strains, offsets)):
        lines = predicted_lines(params, d) + off
        if noise > 0:
            lines = lines + rng.normal(0.0, noise, size=lines.size)
        defects.append(ObservedDefect(
            id=f"nv{i+1:02d}", lines=tuple(np.sort(lines)),
            sigma=max(noise, 0.01)))
    return defects
