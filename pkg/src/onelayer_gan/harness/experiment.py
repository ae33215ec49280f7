"""Seeded experiment orchestration.

Every trial owns its randomness: ``SeedSequence([seed, d, n, trial])``
spawns one independent stream per random ingredient of the trial.
Results therefore do not depend on how many workers run them or in which
order.
"""

from __future__ import annotations

import dataclasses
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..model import get_activation, make_rng
from ..optimizer import train
from .config import ExperimentConfig
from .io import write_matrix, write_summary, write_trajectory

log = logging.getLogger(__name__)

_STREAM_TRUTH, _STREAM_DATA, _STREAM_OPT = 0, 1, 2


@dataclass(frozen=True)
class SummaryRow:
    d: int
    n: int
    trials: int
    mean_rec_err: float
    std_rec_err: float
    mean_wall_ms: float


@dataclass
class SweepSummary:
    rows: list
    failures: list = field(default_factory=list)

    def cell(self, d: int, n: int) -> SummaryRow:
        for r in self.rows:
            if r.d == d and r.n == n:
                return r
        raise KeyError((d, n))


@dataclass
class TrialResult:
    d: int
    n: int
    trial_id: int
    record: object
    truth_A: np.ndarray
    norms: np.ndarray


def trial_seeds(seed: int, d: int, n: int, trial: int):
    """Integer seeds for the independent streams of one trial (truth first)."""
    ss = np.random.SeedSequence([seed, d, n, trial])
    return [int(c.generate_state(2, dtype=np.uint64)[0]) for c in ss.spawn(3)]


def run_trial(config: ExperimentConfig, d: int, n: int, trial: int) -> TrialResult:
    """One trial: ground truth, ``n`` observations, the configured stage(s)."""
    act = get_activation(config.activation, config.leak)
    s_truth, s_data, s_opt = trial_seeds(config.seed, d, n, trial)
    truth = config.make_truth(d, make_rng(s_truth))
    z = make_rng(s_data).standard_normal((truth.k0, n))
    X = act.value(truth.A_star @ z)
    tc = dataclasses.replace(config.train, n=n, seed=s_opt, k=config.k or config.train.k)
    norms, record = train(X, act, tc, truth=truth)
    return TrialResult(d, n, trial, record, truth.A_star, np.asarray(norms))


def _run_trial_packed(args):
    config, d, n, trial = args
    try:
        return run_trial(config, d, n, trial)
    except Exception as exc:  # recorded per cell, aggregation continues
        return (d, n, trial, f"{type(exc).__name__}: {exc}")


def _tag(d: int, n: int, trial: int) -> str:
    return f"d{d}_n{n}_trial{trial:03d}"


def _persist(out: Path, res: TrialResult) -> None:
    tag = _tag(res.d, res.n, res.trial_id)
    write_matrix(out / f"truth_A_{tag}.csv", res.truth_A)
    if res.record is None:
        write_matrix(out / f"norms_{tag}.csv", res.norms[None, :])
        return
    write_trajectory(out / f"traj_{tag}.csv", res.trial_id, res.record)
    write_matrix(out / f"final_A_{tag}.csv", res.record.final_A)


def summarize(d: int, n: int, results) -> SummaryRow:
    """Mean and population std (ddof 0) of final recovery errors."""
    errs = np.array([r.record.final_rec_err for r in results], dtype=float)
    walls = np.array([r.record.wall_ms[-1] if len(r.record) else 0 for r in results], dtype=float)
    return SummaryRow(d, n, len(results), float(errs.mean()), float(errs.std()), float(walls.mean()))


def _execute(tasks, threads: int):
    if threads <= 1 or len(tasks) <= 1:
        return [_run_trial_packed(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_run_trial_packed, tasks))


def _prepare_out(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc.strerror or exc}") from exc
    return out


def sweep(config: ExperimentConfig, write: bool = True) -> SweepSummary:
    """All trials of every ``(d, n)`` cell, aggregated per cell.

    Failed trials are logged in ``failures.csv`` and left out of the
    aggregates; a cell with no successful trial is dropped from the summary.
    """
    out = _prepare_out(config.out_dir) if write else None
    tasks = [(config, d, n, t) for d in config.d_grid for n in config.n_grid for t in range(config.trials)]
    results = _execute(tasks, config.threads)
    rows, failures = [], []
    by_cell: dict = {}
    for res in results:
        if isinstance(res, tuple):
            failures.append(res)
            log.warning("trial %s failed: %s", _tag(*res[:3]), res[3])
            continue
        by_cell.setdefault((res.d, res.n), []).append(res)
        if out is not None:
            _persist(out, res)
    for d in config.d_grid:
        for n in config.n_grid:
            cell = [r for r in by_cell.get((d, n), []) if r.record is not None]
            if cell:
                rows.append(summarize(d, n, cell))
    summary = SweepSummary(rows, failures)
    if out is not None:
        write_summary(out / "summary.csv", rows)
        if failures:
            with (out / "failures.csv").open("w", encoding="utf-8") as fh:
                fh.write("d,n,trial_id,error\n")
                for d, n, t, msg in failures:
                    fh.write(f"{d},{n},{t},\"{msg.replace(chr(34), chr(39))}\"\n")
    return summary


def run_experiment(config: ExperimentConfig, write: bool = True):
    """Trials of the single cell ``(config.d, config.train.n)``.

    Returns ``(trial results, summary)``; files go to ``config.out_dir``.
    """
    cell = dataclasses.replace(config, d_grid=[config.d], n_grid=[config.train.n])
    out = _prepare_out(cell.out_dir) if write else None
    tasks = [(cell, cell.d, cell.train.n, t) for t in range(cell.trials)]
    results = _execute(tasks, cell.threads)
    bad = [r for r in results if isinstance(r, tuple)]
    if bad:
        d, n, t, msg = bad[0]
        raise RuntimeError(f"trial {t} failed: {msg}")
    if out is not None:
        for r in results:
            _persist(out, r)
    trained = [r for r in results if r.record is not None]
    summary = SweepSummary([summarize(cell.d, cell.train.n, trained)] if trained else [])
    if out is not None:
        write_summary(out / "summary.csv", summary.rows)
    return results, summary
