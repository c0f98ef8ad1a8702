"""Experiment layer: coupled-path strong errors, rate fits, long-run dynamics
classification, and truncation-frequency tables.

Everything here is deterministic given (base_seed, n_paths): paths are keyed
by absolute path index, partial results land in preallocated per-path arrays,
and reductions run once over those arrays in index order. Chunk size and
thread count therefore change memory use and wall time, never the numbers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .model import (
    ExtinctionCase,
    extinction_case,
    f_max_sigma,
    persistence_lambda,
    reproduction_numbers,
)
from .paths import generate
from .schemes import SchemeParams, lcm_evolve, milstein_evolve

__all__ = [
    "DynamicsThresholds",
    "DynamicsVerdict",
    "ErrorTable",
    "RateFit",
    "TruncationTable",
    "classify_dynamics",
    "count_crossings",
    "fit_rate",
    "milstein_violation_fraction",
    "strong_error",
    "truncation_table",
    "write_dynamics_summary",
    "write_error_table",
    "write_rate_fit",
    "write_truncation_table",
]


@dataclass(frozen=True)
class ErrorTable:
    """Strong errors per step size, against a common fine reference."""

    step_sizes: tuple[float, ...]
    errors: tuple[float, ...]
    n_paths: int
    h_reference: float


@dataclass(frozen=True)
class RateFit:
    """Least-squares slope of log error against log h, with its SSR."""

    q: float
    residual: float


def fit_rate(table):
    """Fit error ~ C h^q by ordinary least squares in log-log coordinates."""
    h = np.asarray(table.step_sizes, dtype=np.float64)
    e = np.asarray(table.errors, dtype=np.float64)
    if h.size < 2:
        raise ValueError("rate fit needs at least two (h, error) rows")
    if np.any(h <= 0.0) or np.any(e <= 0.0):
        raise ValueError("rate fit needs positive step sizes and errors")
    x = np.log(h)
    y = np.log(e)
    dx = x - x.mean()
    sxx = float(np.dot(dx, dx))
    if sxx == 0.0:
        raise ValueError("rate fit needs at least two distinct step sizes")
    q = float(np.dot(dx, y - y.mean()) / sxx)
    resid = y - y.mean() - q * dx
    return RateFit(q=q, residual=float(np.dot(resid, resid)))


def _chunk_spans(n, size):
    return [(lo, min(lo + size, n)) for lo in range(0, n, size)]


def _run_chunks(worker, n, size, threads):
    spans = _chunk_spans(n, size)
    if threads > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            # list() forces completion so worker exceptions propagate
            list(pool.map(lambda span: worker(*span), spans))
    else:
        for lo, hi in spans:
            worker(lo, hi)


def _increment_matrix(base_seed, lo, hi, t_final, fine_steps):
    dw = np.empty((hi - lo, fine_steps))
    for j in range(lo, hi):
        dw[j - lo] = generate(base_seed, j, t_final, fine_steps).increments
    return dw


def _whole_steps(t_final, h, what):
    steps = round(t_final / h)
    if steps < 1 or not math.isclose(steps * h, t_final, rel_tol=1e-9):
        raise ValueError(f"{what} {t_final!r} is not a whole number of steps of {h!r}")
    return steps


def strong_error(params, scheme_ref, levels, n_paths, base_seed, t_final,
                 threads=1, chunk=512):
    """Coupled-path strong errors of the log-space scheme at several step sizes.

    Every level reuses the same fine Brownian increments as the reference run
    (summed in blocks), so the difference measured per path is discretization
    error alone. The error at step size L is the L2 norm, over paths, of the
    end-time gap |I_ref(T) - I_L(T)|.
    """
    levels = tuple(float(x) for x in levels)
    h_ref = float(scheme_ref.h)
    fine_steps = _whole_steps(t_final, h_ref, "t_final")
    ratios = []
    for L in levels:
        r = round(L / h_ref)
        if (r < 1 or not math.isclose(r * h_ref, L, rel_tol=1e-9)
                or r & (r - 1) or fine_steps % r):
            raise ValueError(
                f"level {L!r} must be a power-of-two multiple of the "
                f"reference step {h_ref!r} that divides the horizon")
        ratios.append(r)

    y0 = math.log(params.I0)
    gap2 = np.empty((len(levels), n_paths))

    def worker(lo, hi):
        dwf = _increment_matrix(base_seed, lo, hi, t_final, fine_steps)
        ref = lcm_evolve(y0, dwf, h_ref, params, scheme_ref)
        iref = np.exp(ref.y_final)
        for li, (L, r) in enumerate(zip(levels, ratios)):
            dwl = dwf if r == 1 else dwf.reshape(hi - lo, -1, r).sum(axis=2)
            out = lcm_evolve(y0, dwl, L, params, replace(scheme_ref, h=L))
            gap2[li, lo:hi] = (iref - np.exp(out.y_final)) ** 2

    _run_chunks(worker, n_paths, chunk, threads)
    errors = tuple(math.sqrt(float(np.mean(gap2[li])))
                   for li in range(len(levels)))
    return ErrorTable(step_sizes=levels, errors=errors, n_paths=n_paths,
                      h_reference=h_ref)


def milstein_violation_fraction(params, h, t_final, n_paths, base_seed,
                                threads=1, chunk=128):
    """Fraction of direct-Milstein paths that ever produce a forbidden state
    (negative, above N, or non-finite) before t_final."""
    steps = _whole_steps(t_final, float(h), "t_final")
    violated = np.empty(n_paths, dtype=bool)

    def worker(lo, hi):
        dw = _increment_matrix(base_seed, lo, hi, t_final, steps)
        out = milstein_evolve(params.I0, dw, float(h), params, record_stride=None)
        violated[lo:hi] = out.violated

    _run_chunks(worker, n_paths, chunk, threads)
    return float(violated.mean())


@dataclass(frozen=True)
class TruncationTable:
    """Truncation percentages indexed as percent[set, I0, h]."""

    percent: np.ndarray
    hs: tuple[float, ...]
    I0s: tuple[float, ...]
    labels: tuple


def truncation_table(param_sets, I0s, hs, n_paths, horizon, base_seed,
                     threads=1, chunk=2048, alpha=0.1, theta=2.0, labels=None):
    """Percentage of steps the log-space scheme truncates, per parameter set,
    initial value, and step size.

    The denominator is total steps taken (n_paths times steps per path), so a
    path that truncates every other step contributes 50.
    """
    param_sets = list(param_sets)
    I0s = tuple(float(x) for x in I0s)
    hs = tuple(float(x) for x in hs)
    if labels is None:
        labels = tuple(range(1, len(param_sets) + 1))
    percent = np.empty((len(param_sets), len(I0s), len(hs)))

    for si, p0 in enumerate(param_sets):
        for ii, i0 in enumerate(I0s):
            p = replace(p0, I0=i0)
            y0 = math.log(i0)
            for hi_, h in enumerate(hs):
                steps = _whole_steps(horizon, h, "horizon")
                s = SchemeParams(h=h, alpha=alpha, theta=theta)
                counts = np.zeros(n_paths, dtype=np.int64)

                def worker(lo, hi):
                    dw = _increment_matrix(base_seed, lo, hi, horizon, steps)
                    out = lcm_evolve(y0, dw, h, p, s)
                    counts[lo:hi] = out.trunc_counts

                _run_chunks(worker, n_paths, chunk, threads)
                percent[si, ii, hi_] = 100.0 * counts.sum() / (n_paths * steps)
    return TruncationTable(percent=percent, hs=hs, I0s=I0s,
                           labels=tuple(labels))


def count_crossings(values, level):
    """Count strict sign changes of values - level, ignoring exact touches."""
    d = np.asarray(values, dtype=np.float64) - level
    d = d[d != 0.0]
    if d.size < 2:
        return 0
    return int(np.sum(d[:-1] * d[1:] < 0.0))


@dataclass(frozen=True)
class DynamicsThresholds:
    """Decision constants for classify_dynamics.

    margin is the fraction of the theoretical decay rate the observed
    Lyapunov estimate may fall short by and still count as extinction.
    """

    margin: float = 0.5
    extinction_floor: float = 1e-8
    min_crossings: int = 3
    min_horizon: float = 1.0


@dataclass(frozen=True)
class DynamicsVerdict:
    kind: str  # "Extinct" | "Persistent" | "Inconclusive"
    lyapunov_estimate: float
    lambda_crossings: int
    terminal_value: float


def classify_dynamics(traj, p, thresholds=None):
    """Judge one trajectory against the long-run theorem its parameters fall
    under.

    In the extinction regime the test is a Lyapunov estimate log I(T) / T
    within margin of the theoretical rate plus a terminal value below the
    floor. In the persistence regime it is repeated crossings of the
    persistence level during the second half of the run. Parameter sets
    covered by neither theorem, and runs failing their regime's test, come
    back Inconclusive.
    """
    th = thresholds if thresholds is not None else DynamicsThresholds()
    times = np.asarray(traj.times, dtype=np.float64)
    t_span = float(times[-1] - times[0])
    if t_span < th.min_horizon:
        raise ValueError(
            f"horizon {t_span:g} is too short to classify dynamics "
            f"(need at least {th.min_horizon:g})")
    terminal = float(traj.values[-1])
    if traj.log_values is not None:
        log_term = float(traj.log_values[-1])
    elif terminal > 0.0:
        log_term = math.log(terminal)
    else:
        log_term = -math.inf
    lyap = log_term / t_span

    _, r0s = reproduction_numbers(p)
    case = extinction_case(p)
    kind = "Inconclusive"
    crossings = 0
    if r0s < 1.0 and case is not ExtinctionCase.NEITHER:
        decay = f_max_sigma(p)
        if lyap <= (1.0 - th.margin) * decay and terminal < th.extinction_floor:
            kind = "Extinct"
    elif r0s > 1.0:
        lam = persistence_lambda(p)
        tail = times >= times[0] + 0.5 * t_span
        crossings = count_crossings(np.asarray(traj.values)[tail], lam)
        if crossings >= th.min_crossings:
            kind = "Persistent"
    return DynamicsVerdict(kind=kind, lyapunov_estimate=lyap,
                           lambda_crossings=crossings, terminal_value=terminal)


def _num(x):
    return repr(float(x))


def _compact(x):
    xf = float(x)
    return str(int(xf)) if xf == int(xf) else repr(xf)


def write_error_table(table, fh):
    fh.write("h,error\n")
    for h, e in zip(table.step_sizes, table.errors):
        fh.write(f"{_num(h)},{_num(e)}\n")


def write_rate_fit(fit, fh):
    fh.write("q,residual\n")
    fh.write(f"{_num(fit.q)},{_num(fit.residual)}\n")


def write_truncation_table(tbl, fh):
    fh.write("set,I0,h,percent\n")
    for si, lab in enumerate(tbl.labels):
        for ii, i0 in enumerate(tbl.I0s):
            for hi_, h in enumerate(tbl.hs):
                fh.write(f"{lab},{_compact(i0)},{_compact(h)},"
                         f"{_num(tbl.percent[si, ii, hi_])}\n")


def write_dynamics_summary(rows, fh):
    fh.write("seed,kind,lyapunov,crossings,terminal\n")
    for seed, v in rows:
        fh.write(f"{seed},{v.kind},{_num(v.lyapunov_estimate)},"
                 f"{v.lambda_crossings},{_num(v.terminal_value)}\n")
