"""Multi-regression dynamic models.

Each series follows a conjugate-normal dynamic linear model whose design
vector is an intercept plus the contemporaneous observations of its parent
series.  Forecasting and filtering proceed series-by-series in the declared
(topological) order; the one-step-ahead predictive density factorizes by
series, and the total log density is the sum of per-series Gaussian terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .errors import (
    MissingParentObservationError,
    NumericalBreakdownError,
    OrderingViolationError,
    SpecValidationError,
)

PSD_TOL = 1e-10
Q_FLOOR = 1e-12


def _as_matrix(m, p: int) -> np.ndarray:
    a = np.asarray(m, dtype=float)
    if a.shape == ():
        a = np.eye(p) * float(a)
    if a.shape != (p, p):
        raise ValueError(f"expected {p}x{p} matrix, got {a.shape}")
    return a


@dataclass(frozen=True)
class MdmNodeSpec:
    """One series: parents are its contemporaneous regressors.

    State dimension is 1 + len(parents): an intercept plus one coefficient
    per parent, in declared parent order.
    """

    name: str
    parents: tuple[str, ...] = ()
    G: Optional[np.ndarray] = None          # system matrix, default identity
    W: Optional[np.ndarray] = None          # system covariance, default zero
    V: float = 1.0                          # observation variance
    m0: Optional[np.ndarray] = None         # prior mean, default zero
    C0: Optional[np.ndarray] = None         # prior covariance, default identity

    def __post_init__(self):
        object.__setattr__(self, "parents", tuple(self.parents))
        p = self.dim
        object.__setattr__(self, "G", _as_matrix(self.G if self.G is not None else np.eye(p), p))
        object.__setattr__(self, "W", _as_matrix(self.W if self.W is not None else np.zeros((p, p)), p))
        m0 = np.zeros(p) if self.m0 is None else np.asarray(self.m0, dtype=float).reshape(p)
        object.__setattr__(self, "m0", m0)
        object.__setattr__(self, "C0", _as_matrix(self.C0 if self.C0 is not None else np.eye(p), p))

    @property
    def dim(self) -> int:
        return 1 + len(self.parents)


def _psd_violation(m: np.ndarray) -> Optional[str]:
    if not np.allclose(m, m.T, atol=PSD_TOL):
        return "not symmetric"
    eig = np.linalg.eigvalsh((m + m.T) / 2)
    if eig.min() < -PSD_TOL:
        return f"negative eigenvalue {eig.min():.3g}"
    return None


class MdmSpec:
    """Ordered collection of series specs; parents must precede children."""

    def __init__(self, nodes: Sequence[MdmNodeSpec]):
        self.nodes = tuple(nodes)
        names = [n.name for n in self.nodes]
        if len(set(names)) != len(names):
            raise SpecValidationError("duplicate series names")
        self._index = {n.name: i for i, n in enumerate(self.nodes)}

    def __iter__(self):
        return iter(self.nodes)

    def node(self, name: str) -> MdmNodeSpec:
        return self.nodes[self._index[name]]

    @property
    def names(self) -> list[str]:
        return [n.name for n in self.nodes]


def validate(spec: MdmSpec) -> list[str]:
    """Check ordering, PSD and positivity invariants; return violations."""
    violations = []
    seen: set[str] = set()
    for node in spec:
        for p in node.parents:
            if p not in seen:
                violations.append(
                    f"series {node.name!r}: parent {p!r} does not precede it in the ordering"
                )
        seen.add(node.name)
        for label, m in (("W", node.W), ("C0", node.C0)):
            why = _psd_violation(m)
            if why:
                violations.append(f"series {node.name!r}: {label} {why}")
        if not node.V > 0:
            violations.append(f"series {node.name!r}: V must be positive, got {node.V}")
    return violations


def design_vector(spec: MdmSpec, name: str, y_t_prefix: Mapping[str, float]) -> np.ndarray:
    """[1, y_t(parent_1), ..., y_t(parent_k)] in declared parent order."""
    node = spec.node(name)
    values = [1.0]
    for p in node.parents:
        if p not in y_t_prefix or y_t_prefix[p] is None:
            raise MissingParentObservationError(name, p)
        values.append(float(y_t_prefix[p]))
    return np.array(values)


@dataclass(frozen=True)
class FilterState:
    """Per-series posterior moments at time t."""

    t: int
    means: dict[str, np.ndarray]
    covariances: dict[str, np.ndarray]

    @staticmethod
    def initial(spec: MdmSpec) -> "FilterState":
        return FilterState(
            t=0,
            means={n.name: n.m0.copy() for n in spec},
            covariances={n.name: n.C0.copy() for n in spec},
        )


@dataclass
class SeriesForecast:
    name: str
    f: float                      # predictive mean
    Q: float                      # predictive variance
    y: Optional[float] = None     # realized observation, if any
    std_residual: Optional[float] = None
    log_density: Optional[float] = None
    approximate: bool = False     # parent-forecast substitution used


@dataclass
class StepForecast:
    t: int
    series: dict[str, SeriesForecast]

    @property
    def total_log_density(self) -> float:
        return sum(
            s.log_density for s in self.series.values() if s.log_density is not None
        )


def _gaussian_logpdf(y: float, mean: float, var: float) -> float:
    return -0.5 * (math.log(2 * math.pi * var) + (y - mean) ** 2 / var)


def _propagate(node: MdmNodeSpec, m: np.ndarray, C: np.ndarray):
    a = node.G @ m
    R = node.G @ C @ node.G.T + node.W
    return a, (R + R.T) / 2


def one_step_forecast(
    spec: MdmSpec,
    state: FilterState,
    y_t: Mapping[str, Optional[float]],
) -> StepForecast:
    """Factorized one-step-ahead forecast from the state at t-1.

    Each series' design vector plugs in the realized contemporaneous
    parent observations from ``y_t``; when a parent value is missing its
    forecast mean is substituted and the variance is propagated, and the
    series forecast is flagged approximate.  Per-series Gaussian log
    densities are evaluated at the realized observations and summed.
    """
    out: dict[str, SeriesForecast] = {}
    for node in spec:
        a, R = _propagate(node, state.means[node.name], state.covariances[node.name])
        F = [1.0]
        extra_var = 0.0
        approximate = False
        for j, parent in enumerate(node.parents, start=1):
            value = y_t.get(parent)
            if value is None:
                parent_fc = out[parent]
                value = parent_fc.f
                # Independence approximation: Var(theta_j * Y_parent)
                # beyond the plug-in term.
                extra_var += (a[j] ** 2 + R[j, j]) * parent_fc.Q
                approximate = True
            F.append(float(value))
        F = np.array(F)
        f = float(F @ a)
        Q = float(F @ R @ F + node.V + extra_var)
        if Q <= 0:
            raise NumericalBreakdownError(f"nonpositive predictive variance for {node.name!r}")
        fc = SeriesForecast(node.name, f, Q, approximate=approximate)
        y = y_t.get(node.name)
        if y is not None:
            fc.y = float(y)
            fc.std_residual = (fc.y - f) / math.sqrt(Q)
            fc.log_density = _gaussian_logpdf(fc.y, f, Q)
        out[node.name] = fc
    return StepForecast(t=state.t + 1, series=out)


def step_filter(
    spec: MdmSpec,
    state: FilterState,
    y_t: Mapping[str, Optional[float]],
) -> tuple[FilterState, StepForecast]:
    """Advance the filter one step.

    The forecast is computed from the pre-update state; then each series
    with an observed value (and fully observed parents) receives the
    conjugate update.  Missing observations skip the update for that
    series, leaving the propagated prior.
    """
    forecast = one_step_forecast(spec, state, y_t)
    means: dict[str, np.ndarray] = {}
    covs: dict[str, np.ndarray] = {}
    for node in spec:
        a, R = _propagate(node, state.means[node.name], state.covariances[node.name])
        y = y_t.get(node.name)
        parents_observed = all(y_t.get(p) is not None for p in node.parents)
        if y is None or not parents_observed:
            means[node.name], covs[node.name] = a, R
            continue
        F = design_vector(spec, node.name, y_t)
        Q = max(float(F @ R @ F + node.V), Q_FLOOR)
        e = float(y) - float(F @ a)
        gain = R @ F / Q
        m = a + gain * e
        C = R - np.outer(R @ F, R @ F) / Q
        covs[node.name] = (C + C.T) / 2
        means[node.name] = m
    return FilterState(state.t + 1, means, covs), forecast


@dataclass(frozen=True)
class Rewire:
    """Replacement parent list for an existing series when a new series is
    added.  Retained parents keep their prior blocks (matched by name);
    new coefficients receive the given prior mean/variance and system
    noise, with zero cross terms."""

    child: str
    parents: tuple[str, ...]
    new_coef_mean: float = 0.0
    new_coef_var: float = 1.0
    new_coef_w: float = 0.0


def add_series(spec: MdmSpec, new_node: MdmNodeSpec, rewire: Iterable[Rewire] = ()) -> MdmSpec:
    """Insert a series (placed at the earliest position compatible with the
    ordering) and rewire existing children onto it.

    Untouched series keep their specs bitwise identical; the resulting
    spec must validate or an OrderingViolationError is raised.
    """
    rewires = {r.child: r for r in rewire}
    for r in rewires.values():
        if r.child not in spec.names:
            raise OrderingViolationError(f"rewired child {r.child!r} not in spec")
    if new_node.name in spec.names:
        raise OrderingViolationError(f"series {new_node.name!r} already present")

    # Earliest insertion point after all of the new node's parents.
    insert_at = 0
    for i, node in enumerate(spec.nodes):
        if node.name in new_node.parents:
            insert_at = i + 1
    nodes = list(spec.nodes)
    nodes.insert(insert_at, new_node)

    def rewired(node: MdmNodeSpec, r: Rewire) -> MdmNodeSpec:
        old_index = {p: i + 1 for i, p in enumerate(node.parents)}
        old_index[None] = 0  # intercept
        p_new = 1 + len(r.parents)
        pick = [0] + [old_index.get(p, -1) for p in r.parents]
        G = np.eye(p_new)
        W = np.zeros((p_new, p_new))
        C0 = np.zeros((p_new, p_new))
        m0 = np.zeros(p_new)
        for i, oi in enumerate(pick):
            if oi < 0:
                m0[i] = r.new_coef_mean
                C0[i, i] = r.new_coef_var
                W[i, i] = r.new_coef_w
                continue
            m0[i] = node.m0[oi]
            for j, oj in enumerate(pick):
                if oj >= 0:
                    G[i, j] = node.G[oi, oj]
                    W[i, j] = node.W[oi, oj]
                    C0[i, j] = node.C0[oi, oj]
        return MdmNodeSpec(node.name, tuple(r.parents), G=G, W=W, V=node.V, m0=m0, C0=C0)

    nodes = [rewired(n, rewires[n.name]) if n.name in rewires else n for n in nodes]
    out = MdmSpec(nodes)
    violations = validate(out)
    if violations:
        raise OrderingViolationError("; ".join(violations))
    return out


@dataclass
class Trajectory:
    states: list[FilterState]
    forecasts: list[StepForecast]

    def residual_rows(self) -> list[dict]:
        """Flat report: one row per (t, series)."""
        rows = []
        for fc in self.forecasts:
            for name, s in fc.series.items():
                rows.append(
                    {
                        "t": fc.t,
                        "series": name,
                        "y": s.y,
                        "f": s.f,
                        "Q": s.Q,
                        "std_resid": s.std_residual,
                        "logpdf": s.log_density,
                    }
                )
        return rows


def run(spec: MdmSpec, data: Mapping[str, Sequence[Optional[float]]]) -> Trajectory:
    """Filter through a time-indexed observation table.

    ``data`` maps series name to a sequence over t=1..T; None marks a
    missing observation.
    """
    violations = validate(spec)
    if violations:
        raise SpecValidationError(violations)
    lengths = {len(v) for v in data.values()}
    if len(lengths) != 1:
        raise SpecValidationError("all series must have the same length")
    missing_cols = set(spec.names) - set(data)
    if missing_cols:
        raise SpecValidationError(f"data missing series: {sorted(missing_cols)}")
    T = lengths.pop()
    if T < 1:
        raise SpecValidationError("need at least one time step")

    state = FilterState.initial(spec)
    states, forecasts = [state], []
    for t in range(T):
        y_t = {name: data[name][t] for name in spec.names}
        state, fc = step_filter(spec, state, y_t)
        states.append(state)
        forecasts.append(fc)
    return Trajectory(states, forecasts)


def estimate_variances(
    spec: MdmSpec, data: Mapping[str, Sequence[Optional[float]]], k: int = 10
) -> MdmSpec:
    """Method-of-moments initializer: set each V to the sample variance of
    the series' first k observed values (fallback 1.0)."""
    nodes = []
    for node in spec:
        values = [v for v in list(data.get(node.name, []))[:k] if v is not None]
        if len(values) >= 2:
            v = float(np.var(values, ddof=1))
            node = replace(node, V=v if v > 0 else 1.0)
        nodes.append(node)
    return MdmSpec(nodes)
