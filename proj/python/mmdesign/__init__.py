"""Minimax designs and design-based inference for time-series experiments."""

import json

from . import _core
from ._core import MmdError, SCHEMA_VERSION

__all__ = [
    "MmdError",
    "SCHEMA_VERSION",
    "standard_design",
    "optimal_design",
    "closed_form_design",
    "theta_star",
    "worst_case_objective",
    "simulate",
    "report_to_csv",
    "estimate",
    "verify",
]


def _params(**kw):
    return json.dumps({k: v for k, v in kw.items() if v is not None})


def standard_design(kind, T, p):
    return list(_core.standard_design(kind, T, p))


def optimal_design(T, p, N=20, q1=0.6, q2=0.4, psi_d=0.5, psi_s=None, B=1.0):
    return json.loads(_core.optimal_design(_params(T=T, p=p, N=N, q1=q1, q2=q2, psi_d=psi_d, psi_s=psi_s, B=B)))


def closed_form_design(T, p, N=20, q1=0.6, q2=0.4, psi_d=0.5, psi_s=None, B=1.0):
    return json.loads(_core.closed_form_design(_params(T=T, p=p, N=N, q1=q1, q2=q2, psi_d=psi_d, psi_s=psi_s, B=B)))


def theta_star(N=20, q1=0.6, q2=0.4, psi_d=0.5, psi_s=None):
    # T and p do not enter theta
    return _core.theta_star(_params(T=10, p=1, N=N, q1=q1, q2=q2, psi_d=psi_d, psi_s=psi_s))


def worst_case_objective(decision_points, T, p, N=20, q1=0.6, q2=0.4, r=0.5, psi_d=0.5, psi_s=None, B=1.0):
    return json.loads(
        _core.worst_case_objective(
            list(decision_points), _params(T=T, p=p, N=N, q1=q1, q2=q2, r=r, psi_d=psi_d, psi_s=psi_s, B=B)
        )
    )


def simulate(config, seed, workers=1):
    """Run a scenario (dict or JSON text) and return the report as a dict."""
    text = config if isinstance(config, str) else json.dumps(config)
    return json.loads(_core.simulate(text, int(seed), int(workers)))


def report_to_csv(report):
    return _core.report_to_csv(report if isinstance(report, str) else json.dumps(report))


def estimate(trajectory_csv, decision_points, p, q1=0.6, q2=0.4, alpha=0.05):
    return json.loads(_core.estimate(trajectory_csv, list(decision_points), p, q1, q2, alpha))


def verify(seed=20240501):
    return json.loads(_core.verify(int(seed)))
