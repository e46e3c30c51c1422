"""Repeated-trial experiment runner.

Each trial draws fresh calibration/test datasets and fresh acceptance
randomness, calibrates every requested method on the *same* data (paired
comparison), and evaluates on the shared target test set.  Per-trial RNG
streams are derived from the master seed and the trial index, so trials
are independent of execution order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .binomial import RiskParams
from .intervals import RELAXED, Aborted, WeightBox
from .predsets import (
    ABORTED,
    AcceptanceRandomness,
    ThresholdResult,
    aborted_result,
    evaluate_set,
    psc_threshold,
    psr_threshold,
    psw_threshold,
    ps_threshold,
    wcp_threshold,
)
from .shift_sim import ShiftSpec, SyntheticModel, sample_shifted, true_weights
from .weights import (
    SingularMatrix,
    bbse_point_weights,
    delta_split,
    estimate_confusion,
    estimate_qhat,
    weight_box,
)

METHODS = ("PS", "PS-W", "PS-C", "PS-R", "WCP", "ORACLE")


@dataclass
class TrialReport:
    """Per-trial outcome for one method."""

    method: str
    trial: int
    error: float
    avg_size: float
    tau: float
    aborted: bool = False
    weight_box: WeightBox | None = None


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Splittable per-trial stream: independent of other trials' consumption."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(trial,)))


def _calibrate(method, src, v, rp, rp_resid, box, pointw, truew):
    if method == "PS":
        return ps_threshold(src, rp)
    if method == "PS-W":
        return psw_threshold(src, v, box, rp_resid)
    if method == "PS-C":
        return psc_threshold(src, box, RiskParams(rp.epsilon, rp_resid.delta))
    if method == "PS-R":
        if pointw is None:
            return aborted_result()
        return psr_threshold(src, v, pointw, rp)
    if method == "WCP":
        if pointw is None:
            return aborted_result()
        return wcp_threshold(src, pointw, rp.epsilon)
    if method == "ORACLE":
        return psr_threshold(src, v, truew, rp)
    raise ValueError(f"unknown method {method!r}")


def run_trials(
    spec: ShiftSpec,
    model: SyntheticModel,
    methods,
    rp: RiskParams,
    trials: int,
    seed: int,
    mode: str = RELAXED,
) -> list[TrialReport]:
    """Run `trials` paired repetitions of every requested method."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    for method in methods:
        if method not in METHODS:
            raise ValueError(f"unknown method {method!r}")
    K = spec.k
    box_budget, calib_delta = delta_split(K, rp.delta)
    rp_resid = RiskParams(rp.epsilon, calib_delta)
    truew = true_weights(spec)
    reports: list[TrialReport] = []

    for trial in range(trials):
        rng = trial_rng(seed, trial)
        data_seed = int(rng.integers(2**62))
        v_seed = int(rng.integers(2**62))
        src, tgt, test = sample_shifted(spec, model, data_seed)
        v = AcceptanceRandomness.draw(spec.m, v_seed)

        box = None
        if "PS-W" in methods or "PS-C" in methods:
            box = weight_box(src, tgt, box_budget, mode=mode)
        pointw = None
        if "PS-R" in methods or "WCP" in methods:
            try:
                pointw = bbse_point_weights(estimate_confusion(src), estimate_qhat(tgt))
            except SingularMatrix:
                pointw = None

        for method in methods:
            result = _calibrate(method, src, v, rp, rp_resid, box, pointw, truew)
            error, avg_size = evaluate_set(result, test)
            snapshot = box if method in ("PS-W", "PS-C") and isinstance(box, WeightBox) else None
            reports.append(
                TrialReport(
                    method=method,
                    trial=trial,
                    error=error,
                    avg_size=avg_size,
                    tau=result.tau,
                    aborted=result.status == ABORTED,
                    weight_box=snapshot,
                )
            )
    return reports


def aggregate(reports, epsilon: float) -> dict:
    """Per-method error/size quantiles and the count of epsilon violations."""
    if not reports:
        raise ValueError("no reports to aggregate")
    summary = {}
    for method in dict.fromkeys(r.method for r in reports):
        rows = [r for r in reports if r.method == method]
        errors = np.array([r.error for r in rows])
        sizes = np.array([r.avg_size for r in rows])
        qs = [0, 25, 50, 75, 100]
        summary[method] = {
            "trials": len(rows),
            "error_quantiles": {q: float(np.percentile(errors, q)) for q in qs},
            "size_quantiles": {q: float(np.percentile(sizes, q)) for q in qs},
            "mean_error": float(errors.mean()),
            "mean_size": float(sizes.mean()),
            "violations": int(np.count_nonzero(errors > epsilon)),
            "aborts": sum(r.aborted for r in rows),
        }
    return summary
