"""Metric flow on the fuzzy torus: dc/dt = -L log c.

The metric is a Hermitian positive-definite ``n x n`` matrix ``c``; ``L`` is
the flat Laplacian of the torus. Because ``L`` annihilates scalars and its
flat-space kernel is orthogonal to every commutator, the flow preserves
``tr(c)`` exactly, never decreases ``det(c)``, and drives ``c`` to the
scalar matrix ``(tr(c0)/n) I``.

Integration uses an embedded Dormand-Prince 4(5) pair with proportional
step control on the Hilbert-Schmidt error norm. Two domain guards are
specific to this flow: every Runge-Kutta stage and every accepted state
must stay Hermitian positive definite (the vector field needs ``log c``),
and a trial step whose stages leave the positive cone is rejected and
retried at half the step size rather than reported as an error. The exact
flow cannot leave the cone, so a persistent violation signals integrator
tolerances that are too loose, reported as ``PositivityLost``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import InvalidInput, InvalidParams, MetricDegenerate, PositivityLost, StepUnderflow
from .linalg import (
    as_square_matrix,
    hermitian_eig,
    hs_norm,
    matrix_exp,
    matrix_from_json,
    matrix_log,
    matrix_to_json,
)
from .torus import FuzzyTorus

# Dormand-Prince 4(5) tableau. B5 is the fifth-order propagating weight
# vector, B4 the embedded fourth-order one; their difference estimates the
# local error. The last B5 entry is zero (FSAL structure, unused here).
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)

_SAFETY = 0.9
_MAX_GROWTH = 5.0
_MIN_SHRINK = 0.2
_ORDER_EXP = 1 / 5


@dataclass(frozen=True)
class FlowConfig:
    """Integration window, tolerances, and sampling cadence."""

    t0: float = 0.0
    t1: float = 50.0
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = 1.0
    min_step: float = 1e-12
    sample_stride: float = 0.5
    positivity_floor: float = 1e-12

    def __post_init__(self) -> None:
        if not np.isfinite(self.t0) or not np.isfinite(self.t1) or self.t1 < self.t0:
            # Forward integration only; t1 == t0 degenerates to a single sample.
            raise InvalidParams(f"bad time window [{self.t0}, {self.t1}]")
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise InvalidParams("tolerances must be positive")
        if self.min_step <= 0 or self.max_step <= self.min_step:
            raise InvalidParams("need 0 < min_step < max_step")
        if self.sample_stride <= 0:
            raise InvalidParams("sample_stride must be positive")


@dataclass(frozen=True)
class FlowSample:
    """State of the flow at one sample time."""

    t: float
    c: np.ndarray
    trace: float
    det: float
    min_eig: float
    dist_to_flat: float


@dataclass
class FlowResult:
    """Sampled trajectory plus step-control counters."""

    torus: FuzzyTorus
    samples: list[FlowSample] = field(default_factory=list)
    accepted_steps: int = 0
    rejected_steps: int = 0

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.samples])

    @property
    def final(self) -> FlowSample:
        return self.samples[-1]


def check_metric(c, n: int | None = None, floor: float = 0.0) -> np.ndarray:
    """Validate a metric: square, Hermitian, all eigenvalues above ``floor``.

    Returns the symmetrized matrix. Raises ``MetricDegenerate`` if positive
    definiteness fails.
    """
    c = as_square_matrix(c, "metric")
    if n is not None and c.shape[0] != n:
        raise InvalidInput(f"metric must be {n}x{n}, got {c.shape}")
    eig = hermitian_eig(c)  # symmetrizes; rejects gross non-Hermiticity
    lo = float(eig.eigenvalues[0])
    if lo <= floor:
        raise MetricDegenerate(
            f"metric is not positive definite: min eigenvalue {lo:.6e} <= {floor:g}"
        )
    return (c + c.conj().T) / 2


def random_metric(n: int, seed: int, scale: float = 1.0) -> np.ndarray:
    """Random positive-definite metric with trace ``n``.

    Draws a Hermitian ``h`` with independent seeded Gaussian entries scaled
    by ``scale``, exponentiates, and rescales so ``tr(c) = n``. The flat
    metric corresponds to ``scale = 0``.
    """
    if n < 1:
        raise InvalidParams(f"matrix size must be positive, got n={n}")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    h = scale * (g + g.conj().T) / 2
    c = matrix_exp(h)
    return c * (n / np.trace(c).real)


def flat_metric(n: int, trace: float | None = None) -> np.ndarray:
    """Scalar metric (trace/n) I; default trace is n."""
    tr = float(trace) if trace is not None else float(n)
    return (tr / n) * np.eye(n, dtype=complex)


def dist_to_flat(c) -> float:
    """Hilbert-Schmidt distance from ``c`` to the scalar matrix with equal trace."""
    c = as_square_matrix(c, "metric")
    n = c.shape[0]
    return hs_norm(c - (np.trace(c) / n) * np.eye(n))


def flow_field(torus: FuzzyTorus, c: np.ndarray, floor: float = 1e-12) -> np.ndarray:
    """Right-hand side -L log c.

    Traceless by construction (the Laplacian is a sum of commutators), which
    is what makes the flow conserve ``tr(c)`` to roundoff. Vanishes exactly
    when ``c`` is a positive scalar matrix. Raises ``MetricDegenerate`` when
    ``c`` has an eigenvalue at or below ``floor``.
    """
    c = check_metric(c, n=torus.n, floor=floor)
    return -torus.laplacian_apply(matrix_log(c))


def _field_or_reject(torus: FuzzyTorus, c: np.ndarray, floor: float) -> np.ndarray | None:
    """Evaluate the vector field at a trial stage; ``None`` marks a domain exit."""
    c = (c + c.conj().T) / 2
    try:
        w, v = hermitian_eig(c)
    except InvalidInput:
        return None
    if w[0] <= floor:
        return None
    log_c = (v * np.log(w)) @ v.conj().T
    return -torus.laplacian_apply(log_c)


def _trial_step(
    torus: FuzzyTorus, c: np.ndarray, h: float, config: FlowConfig
) -> tuple[np.ndarray, float, float] | None:
    """One embedded RK trial step of size ``h``.

    Returns ``(c_next, error_estimate, tolerance)`` for an evaluable step, or
    ``None`` when a stage leaves the positive cone and the step must be
    retried smaller. ``c_next`` is symmetrized; acceptance is the caller's
    decision (``error_estimate <= tolerance``).
    """
    stages: list[np.ndarray] = []
    for i in range(7):
        ci = c
        for a_ij, k in zip(_DP_A[i], stages):
            if a_ij != 0.0:
                ci = ci + h * a_ij * k
        k_i = _field_or_reject(torus, ci, config.positivity_floor)
        if k_i is None:
            return None
        stages.append(k_i)

    c5 = c + h * sum(b * k for b, k in zip(_DP_B5, stages) if b != 0.0)
    c4 = c + h * sum(b * k for b, k in zip(_DP_B4, stages) if b != 0.0)
    c5 = (c5 + c5.conj().T) / 2
    c4 = (c4 + c4.conj().T) / 2
    err = hs_norm(c5 - c4)
    tol = config.abs_tol + config.rel_tol * max(hs_norm(c), hs_norm(c5))
    return c5, err, tol


def flow_step(
    torus: FuzzyTorus, c: np.ndarray, t: float, h: float, config: FlowConfig
) -> tuple[np.ndarray, float, float]:
    """One accepted adaptive step from ``(t, c)``, starting at trial size ``h``.

    The trial step is rejected and halved while its Hilbert-Schmidt error
    estimate exceeds tolerance or a stage leaves the positive cone; the first
    accepted state is returned as ``(c_next, h_used, error_estimate)``.
    Raises ``StepUnderflow`` if no acceptable step exists above ``min_step``
    and ``PositivityLost`` if an accepted state is not positive definite.
    """
    h = min(max(h, config.min_step), config.max_step)
    while True:
        trial = _trial_step(torus, c, h, config)
        if trial is not None:
            c_next, err, tol = trial
            if err <= tol:
                w_min = float(hermitian_eig(c_next).eigenvalues[0])
                if w_min <= config.positivity_floor:
                    raise PositivityLost(
                        f"accepted step lost positivity (min eigenvalue {w_min:.3e})",
                        time=t + h,
                    )
                return c_next, h, err
        h = h / 2
        if h < config.min_step:
            raise StepUnderflow(
                f"no acceptable step above min_step={config.min_step:g}", time=t
            )


def _advance(
    torus: FuzzyTorus,
    c: np.ndarray,
    t: float,
    t_target: float,
    h: float,
    config: FlowConfig,
    counters: FlowResult,
) -> tuple[np.ndarray, float]:
    """Integrate from ``t`` to ``t_target`` exactly, adapting the step size."""
    while t < t_target:
        h = min(h, config.max_step, t_target - t)
        trial = _trial_step(torus, c, h, config)
        if trial is None:
            counters.rejected_steps += 1
            h = h / 2
            if h < config.min_step:
                raise PositivityLost(
                    "a Runge-Kutta stage left the positive cone at the minimum "
                    "step size; rerun with tighter tolerances",
                    time=t,
                )
            continue
        c_next, err, tol = trial
        if err <= tol:
            w_min = float(hermitian_eig(c_next).eigenvalues[0])
            if w_min <= config.positivity_floor:
                raise PositivityLost(
                    f"accepted state lost positivity (min eigenvalue {w_min:.3e}); "
                    "the exact flow preserves it, so tighten the tolerances",
                    time=t + h,
                )
            counters.accepted_steps += 1
            t = t + h
            c = c_next
            factor = _SAFETY * (tol / err) ** _ORDER_EXP if err > 0 else _MAX_GROWTH
            h = h * min(_MAX_GROWTH, max(_MIN_SHRINK, factor))
        else:
            counters.rejected_steps += 1
            factor = _SAFETY * (tol / err) ** _ORDER_EXP
            h = h * min(1.0, max(_MIN_SHRINK, factor))
        if h < config.min_step:
            raise StepUnderflow(
                f"step size fell below min_step={config.min_step:g}", time=t
            )
    return c, h


def sample_times(config: FlowConfig) -> np.ndarray:
    """Uniform cadence t0, t0 + stride, ... with t1 always included."""
    if config.t1 == config.t0:
        return np.array([config.t0])
    k = int(np.floor((config.t1 - config.t0) / config.sample_stride + 1e-9))
    ts = config.t0 + config.sample_stride * np.arange(k + 1)
    if config.t1 - ts[-1] > 1e-9 * max(1.0, abs(config.t1)):
        ts = np.append(ts, config.t1)
    else:
        ts[-1] = config.t1
    return ts


def _make_sample(t: float, c: np.ndarray, target_trace: float) -> FlowSample:
    eig = hermitian_eig(c)
    n = c.shape[0]
    return FlowSample(
        t=float(t),
        c=c,
        trace=float(np.trace(c).real),
        det=float(np.prod(eig.eigenvalues)),
        min_eig=float(eig.eigenvalues[0]),
        dist_to_flat=hs_norm(c - (target_trace / n) * np.eye(n)),
    )


def run_flow(
    torus: FuzzyTorus,
    c0: np.ndarray,
    config: FlowConfig | None = None,
    callback: Callable[[FlowSample], None] | None = None,
) -> FlowResult:
    """Integrate the metric flow and sample it on the configured cadence.

    The trajectory lands exactly on each sample time (the adaptive step is
    clipped at sample boundaries), so sampled states are integration states,
    not interpolants. ``callback``, if given, sees each sample as it is
    produced.
    """
    config = config or FlowConfig()
    c = check_metric(c0, n=torus.n, floor=config.positivity_floor)
    result = FlowResult(torus=torus)
    ts = sample_times(config)
    target_trace = float(np.trace(c).real)  # conserved; fixes the flat limit

    sample = _make_sample(ts[0], c, target_trace)
    result.samples.append(sample)
    if callback is not None:
        callback(sample)

    h = min(config.max_step, config.sample_stride)
    t = float(ts[0])
    for t_next in ts[1:]:
        c, h = _advance(torus, c, t, float(t_next), h, config, result)
        t = float(t_next)
        sample = _make_sample(t, c, target_trace)
        result.samples.append(sample)
        if callback is not None:
            callback(sample)
    return result


def trajectory_csv_rows(result: FlowResult) -> Iterator[list[str]]:
    """Trajectory as CSV rows (header first), deterministic formatting.

    Columns: t, the metric entries c_re_jk / c_im_jk in row-major (j, k)
    order, then trace, det, min_eig, dist_to_flat. Floats are rendered with
    ``repr`` so identical runs produce identical bytes.
    """
    n = result.torus.n
    header = ["t"]
    for j in range(n):
        for k in range(n):
            header += [f"c_re_{j}{k}", f"c_im_{j}{k}"]
    header += ["trace", "det", "min_eig", "dist_to_flat"]
    yield header
    for s in result.samples:
        row = [repr(s.t)]
        for z in s.c.reshape(-1):
            row += [repr(float(z.real)), repr(float(z.imag))]
        row += [repr(s.trace), repr(s.det), repr(s.min_eig), repr(s.dist_to_flat)]
        yield row


def trajectory_to_json(result: FlowResult, config: FlowConfig) -> dict:
    """Trajectory (with geometry parameters and integrator stats) as JSON."""
    return {
        "n": result.torus.n,
        "m": result.torus.m,
        "config": {
            "t0": config.t0,
            "t1": config.t1,
            "rel_tol": config.rel_tol,
            "abs_tol": config.abs_tol,
            "max_step": config.max_step,
            "min_step": config.min_step,
            "sample_stride": config.sample_stride,
            "positivity_floor": config.positivity_floor,
        },
        "samples": [
            {
                "t": s.t,
                "c": matrix_to_json(s.c),
                "trace": s.trace,
                "det": s.det,
                "min_eig": s.min_eig,
                "dist_to_flat": s.dist_to_flat,
            }
            for s in result.samples
        ],
        "accepted_steps": result.accepted_steps,
        "rejected_steps": result.rejected_steps,
    }


def metric_from_spec(spec: str | dict, n: int, seed_default: int = 0) -> np.ndarray:
    """Build an initial metric from a compact textual spec or a JSON document.

    Accepted forms: a dict in the matrix JSON encoding; ``"flat"``;
    ``"diag:v1,v2,..."`` (n positive reals); ``"random"``,
    ``"random:seed=S"``, or ``"random:seed=S,scale=X"`` for the seeded
    generator (defaults: ``seed_default`` and scale 1).
    """
    if isinstance(spec, dict):
        return matrix_from_json(spec)
    spec = spec.strip()
    if spec == "flat":
        return flat_metric(n)
    if spec == "random":
        return random_metric(n, seed_default)
    if spec.startswith("diag:"):
        try:
            values = [float(x) for x in spec[len("diag:"):].split(",")]
        except ValueError as exc:
            raise InvalidInput(f"bad diagonal metric spec {spec!r}: {exc}") from exc
        if len(values) != n:
            raise InvalidInput(
                f"diagonal metric spec has {len(values)} entries, expected {n}"
            )
        return np.diag(values).astype(complex)
    if spec.startswith("random:"):
        seed = seed_default
        scale = 1.0
        body = spec[len("random:"):]
        for part in filter(None, body.split(",")):
            key, _, value = part.partition("=")
            try:
                if key == "seed":
                    seed = int(value)
                elif key == "scale":
                    scale = float(value)
                else:
                    raise InvalidInput(f"unknown random-metric key {key!r}")
            except ValueError as exc:
                raise InvalidInput(f"bad random metric spec {spec!r}: {exc}") from exc
        return random_metric(n, seed, scale)
    raise InvalidInput(f"unrecognized initial metric spec {spec!r}")


def flow_states(
    torus: FuzzyTorus,
    c0: np.ndarray,
    times: Sequence[float],
    rel_tol: float = 1e-10,
    abs_tol: float = 1e-12,
) -> Iterator[tuple[float, np.ndarray]]:
    """Yield ``(t, c(t))`` at an arbitrary increasing sequence of times.

    Used by the eigenvalue tracker, which needs a dense custom cadence
    rather than the trajectory-file stride.
    """
    times = [float(t) for t in times]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise InvalidParams("times must be strictly increasing")
    config = FlowConfig(
        t0=times[0],
        t1=times[-1] if times[-1] > times[0] else times[0] + 1.0,
        rel_tol=rel_tol,
        abs_tol=abs_tol,
    )
    c = check_metric(c0, n=torus.n, floor=config.positivity_floor)
    counters = FlowResult(torus=torus)
    t = times[0]
    yield t, c
    h = min(config.max_step, 1e-2)
    for t_next in times[1:]:
        c, h = _advance(torus, c, t, t_next, h, config, counters)
        t = t_next
        yield t, c
