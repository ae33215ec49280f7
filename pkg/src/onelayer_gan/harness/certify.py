"""Stationarity report for a trained generator."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..hermite import expand_activation
from ..model import ActivationSpec, GroundTruth
from ..stationarity import DEFAULT_PROBES, fosp_certificate, recovery_bound_check, sosp_residual
from .io import read_matrix


def certify(A, truth: GroundTruth, activation: ActivationSpec, probes: int = DEFAULT_PROBES, seed: int = 0) -> dict:
    """SOSP residuals of A, the FOSP certificate of ``AA^T`` and the recovery bound."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    exp = expand_activation(activation)
    cert = sosp_residual(A, exp, truth, probes=probes, seed=seed, activation=activation)
    Z = A @ A.T
    fosp = fosp_certificate(Z, exp, truth, activation=activation)
    bound = recovery_bound_check(Z, fosp.eps, exp.sigma1, truth)
    return {
        "d": int(A.shape[0]),
        "k": int(A.shape[1]),
        "activation": activation.describe(),
        "eps_feas": cert.eps_feas,
        "eps_grad": cert.eps_grad,
        "eps_curv": cert.eps_curv,
        "sosp_max_eps": cert.max_eps,
        "fosp_eps": fosp.eps,
        "fosp_within_sosp": bool(fosp.eps <= cert.max_eps + 1e-6),
        "sigma1": exp.sigma1,
        "bound_lhs": bound.lhs,
        "bound_rhs": bound.rhs,
        "holds": bool(bound.holds),
    }


def certify_run_dir(run_dir, activation: ActivationSpec, probes: int = DEFAULT_PROBES, seed: int = 0) -> list:
    """Certify every ``final_A_<tag>.csv`` against its ``truth_A_<tag>.csv``."""
    run_dir = Path(run_dir)
    finals = sorted(run_dir.glob("final_A_*.csv"))
    if not finals:
        raise FileNotFoundError(f"no final_A_*.csv files in {run_dir}")
    reports = []
    for path in finals:
        tag = path.name[len("final_A_") : -len(".csv")]
        truth_path = run_dir / f"truth_A_{tag}.csv"
        if not truth_path.is_file():
            raise FileNotFoundError(f"missing ground truth {truth_path}")
        rep = certify(read_matrix(path), GroundTruth(read_matrix(truth_path)), activation, probes, seed)
        rep["run"] = tag
        reports.append(rep)
    return reports
