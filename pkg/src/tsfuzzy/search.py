"""Structure identification: partition search, premise tuning and
consequence-variable elimination driven by the unbiased criterion."""
from __future__ import annotations

import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .criteria import SplitSpec, UCEvaluator, UCUndefined, error_index, mse
from .data import Dataset, normalize
from .inference import Mode, TSModel, compile_premises
from .membership import MembershipFunction, Shape
from .regression import EmptyProblem, fit_model, solve_lse, RegressionProblem
from .simplex import nelder_mead


class OptimizationFailed(RuntimeError):
    pass


# -- partitions ------------------------------------------------------------------

@dataclass(frozen=True)
class PartitionCandidate:
    """A fuzzy partition of the premise space.

    ``mfs`` is a table of ``(variable, MembershipFunction)`` entries and each
    rule is a tuple of indices into it; rules created by splitting along a
    new variable keep sharing their parent's entries.
    """

    mfs: tuple[tuple[int, MembershipFunction], ...]
    rules: tuple[tuple[int, ...], ...]
    provenance: str = ""

    @classmethod
    def single_rule(cls) -> "PartitionCandidate":
        return cls((), ((),), "stage 1")

    @property
    def n_rules(self) -> int:
        return len(self.rules)

    @property
    def premises(self):
        return tuple(tuple(sorted((self.mfs[k] for k in rule), key=lambda c: c[0]))
                     for rule in self.rules)

    @property
    def variables(self) -> set:
        return {v for v, _ in self.mfs}

    def key(self):
        return tuple(sorted(tuple(sorted((v, mf.shape.value) for v, mf in prem))
                            for prem in self.premises))

    def describe(self) -> str:
        parts = []
        for prem in self.premises:
            if not prem:
                parts.append("(always)")
            else:
                parts.append(" & ".join(f"x{v + 1}:{mf}" for v, mf in prem))
        return " | ".join(parts)

    # parameter vector: per entry a base point followed by non-negative increments
    def to_vector(self) -> np.ndarray:
        out = []
        for _, mf in self.mfs:
            p = mf.points
            out.append(p[0])
            out.extend(np.diff(p))
        return np.array(out, dtype=float)

    def from_vector(self, theta, scales) -> "PartitionCandidate":
        theta = np.asarray(theta, dtype=float)
        mfs, pos = [], 0
        for (v, mf), scale in zip(self.mfs, scales):
            k = len(mf.points)
            base, inc = theta[pos], np.abs(theta[pos + 1:pos + k])
            pos += k
            # last increment kept strictly positive so the shape never collapses
            inc[-1] = max(inc[-1], 1e-9 * scale)
            mfs.append((v, MembershipFunction(mf.shape, tuple(base + np.concatenate(([0.0], np.cumsum(inc)))))))
        return PartitionCandidate(tuple(mfs), self.rules, self.provenance)

    def to_json(self):
        return {"mfs": [{"var": v, "mf": mf.to_json()} for v, mf in self.mfs],
                "rules": [list(r) for r in self.rules], "provenance": self.provenance}

    @classmethod
    def from_json(cls, obj):
        return cls(tuple((e["var"], MembershipFunction.from_json(e["mf"])) for e in obj["mfs"]),
                   tuple(tuple(r) for r in obj["rules"]), obj.get("provenance", ""))


def _split_own(mf: MembershipFunction):
    p = mf.points
    lo, hi = p[0], p[-1]
    r = hi - lo
    m1, m2 = lo + r / 3.0, lo + 2.0 * r / 3.0
    if mf.shape is Shape.Z:
        return MembershipFunction.z(lo, m2), MembershipFunction.trap(m1, m2, m2, hi)
    if mf.shape is Shape.S:
        return MembershipFunction.trap(lo, m1, m1, m2), MembershipFunction.s(m1, hi)
    x1, x2, x3, x4 = p
    return (MembershipFunction.trap(x1, min(x2, m1), m1, m2),
            MembershipFunction.trap(m1, m2, max(x3, m2), x4))


def _pair(lo: float, hi: float):
    r = hi - lo
    return MembershipFunction.z(lo, lo + 2.0 * r / 3.0), MembershipFunction.s(lo + r / 3.0, hi)


def split_rule(current: PartitionCandidate, rule: int, var: int, X) -> PartitionCandidate:
    """Split one rule's region in two along ``var``."""
    mfs = list(current.mfs)
    rules = list(current.rules)
    members = rules[rule]
    own = [k for k in members if mfs[k][0] == var]
    if own:
        k = own[0]
        a, b = _split_own(mfs[k][1])
        mfs.append((var, a))
        mfs.append((var, b))
        rest = tuple(j for j in members if j != k)
        children = [rest + (len(mfs) - 2,), rest + (len(mfs) - 1,)]
    else:
        X = np.asarray(X, dtype=float)
        w = kernels.rule_weights(X, *compile_premises([current.premises[rule]]), 1,
                                 kernels.MOVING)[:, 0]
        vals = X[w > 0, var] if np.count_nonzero(w > 0) else X[:, var]
        lo, hi = float(vals.min()), float(vals.max())
        if hi <= lo:
            lo, hi = float(X[:, var].min()), float(X[:, var].max())
        if hi <= lo:
            raise ValueError(f"input {var} is constant; cannot split on it")
        z, s = _pair(lo, hi)
        mfs.append((var, z))
        mfs.append((var, s))
        children = [members + (len(mfs) - 2,), members + (len(mfs) - 1,)]
    new_rules = rules[:rule] + children + rules[rule + 1:]
    return PartitionCandidate(tuple(mfs), tuple(new_rules),
                              f"split rule {rule + 1} on x{var + 1}")


def enumerate_candidates(current: PartitionCandidate, premise_vars, X):
    """All one-split refinements of ``current``, structural duplicates removed.

    Order is by rule index, then variable index; the first of a set of
    duplicates is kept.
    """
    X = np.asarray(X, dtype=float)
    seen, out = set(), []
    for i in range(current.n_rules):
        for v in sorted(premise_vars):
            if np.ptp(X[:, v]) == 0:
                continue
            cand = split_rule(current, i, v, X)
            key = cand.key()
            if key not in seen:
                seen.add(key)
                out.append(cand)
    return out


# -- configuration and report --------------------------------------------------------

@dataclass
class SearchConfig:
    max_rules: int = 4
    simplex_ftol: float = 1e-6
    simplex_evals_per_param: int = 200
    simplex_step: float = 0.1
    split: SplitSpec = field(default_factory=SplitSpec)
    eliminate: bool = True
    premise_vars: tuple[int, ...] | None = None
    mode: Mode = Mode.MOVING_RATE
    normalize: bool = False
    threads: int = 1
    prune_pool: bool = True

    def __post_init__(self):
        self.mode = Mode(self.mode)
        if self.max_rules < 1:
            raise ValueError("max_rules must be >= 1")
        if self.simplex_ftol <= 0 or self.simplex_evals_per_param <= 0 or self.simplex_step <= 0:
            raise ValueError("simplex tolerances must be positive")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    def to_json(self):
        return {"max_rules": self.max_rules, "simplex_ftol": self.simplex_ftol,
                "simplex_evals_per_param": self.simplex_evals_per_param,
                "simplex_step": self.simplex_step, "split": self.split.to_json(),
                "eliminate": self.eliminate,
                "premise_vars": None if self.premise_vars is None else list(self.premise_vars),
                "mode": self.mode.value, "normalize": self.normalize,
                "prune_pool": self.prune_pool}


@dataclass
class CandidateResult:
    candidate: PartitionCandidate
    uc: float = float("inf")
    sse: float = float("inf")
    mask: np.ndarray | None = None
    trace: list = field(default_factory=list)
    truncated: bool = False
    error: str | None = None

    def to_json(self):
        return {"structure": self.candidate.describe(),
                "partition": self.candidate.to_json(),
                "uc": None if self.error else self.uc,
                "sse": None if self.error else self.sse,
                "mask": None if self.mask is None else self.mask.astype(int).tolist(),
                "elimination_trace": self.trace,
                "simplex_truncated": self.truncated, "error": self.error}


@dataclass
class StageRecord:
    stage: int
    candidates: list
    best: int | None
    accepted: bool

    @property
    def best_uc(self):
        return None if self.best is None else self.candidates[self.best].uc

    def to_json(self):
        return {"stage": self.stage, "n_rules": self.candidates[0].candidate.n_rules,
                "best": self.best, "best_uc": self.best_uc, "accepted": self.accepted,
                "candidates": [c.to_json() for c in self.candidates]}


@dataclass
class FitReport:
    stages: list
    model: TSModel
    partition: PartitionCandidate
    mask: np.ndarray
    elimination_trace: list
    metrics: dict
    config: SearchConfig

    @property
    def accepted_ucs(self):
        return [s.best_uc for s in self.stages if s.accepted]

    @property
    def final_uc(self):
        return self.accepted_ucs[-1]

    def to_json(self):
        return {"stages": [s.to_json() for s in self.stages],
                "accepted_uc_trace": self.accepted_ucs,
                "final_structure": self.partition.describe(),
                "final_partition": self.partition.to_json(),
                "final_mask": self.mask.astype(int).tolist(),
                "elimination_trace": self.elimination_trace,
                "metrics": self.metrics, "config": self.config.to_json(),
                "model": self.model.to_json()}


# -- elimination -------------------------------------------------------------------------

def eliminate_variables(premises, X, y, split=None, mode=Mode.MOVING_RATE, mask=None):
    """Greedy backward elimination of consequence variables by UC.

    Starting from the full mask (or ``mask``), each step removes the variable
    whose removal gives the smallest UC; the removal is kept only if it
    lowers UC.  Removals that would leave a rule with no variable are not
    tried.  Returns ``(mask, trace)`` where ``trace`` lists UC after each
    accepted step, beginning with the full-mask value.
    """
    uc = UCEvaluator(premises, X, y, split, mode)
    m = np.asarray(X).shape[1]
    mask = (np.ones((len(premises), m + 1), dtype=bool) if mask is None
            else np.array(mask, dtype=bool))
    current = uc(mask)
    trace = [current]
    while True:
        best, best_cell = np.inf, None
        for i, j in zip(*np.nonzero(mask)):
            if mask[i].sum() == 1:
                continue
            mask[i, j] = False
            val = uc(mask)
            mask[i, j] = True
            if val < best:
                best, best_cell = val, (i, j)
        if best_cell is None or not best < current:
            return mask, trace
        mask[best_cell] = False
        current = best
        trace.append(current)


# -- premise tuning ------------------------------------------------------------------------

def _objective(premises, X, y, mode):
    """Squared output error with every consequence variable active."""
    n, m = len(premises), X.shape[1]
    W = kernels.rule_weights(X, *compile_premises(premises), n, Mode(mode).code)
    Z, keep = kernels.regressor_matrix(W, X, np.ones((n, m + 1), dtype=bool))
    if not keep.any():
        return np.inf
    cmap = tuple((i, j) for i in range(n) for j in range(m + 1))
    res = solve_lse(RegressionProblem(Z, y[keep], cmap, None))
    sse = res.residual_norm ** 2
    if not keep.all():
        # rows outside every support are predicted by the mean rule output
        coef = res.coefficients.reshape(n, m + 1)
        Xo = X[~keep]
        pred = (np.hstack([np.ones((len(Xo), 1)), Xo]) @ coef.T).mean(axis=1)
        sse += float(np.sum((y[~keep] - pred) ** 2))
    return float(sse)


def optimize_premise(candidate: PartitionCandidate, X, y, mode=Mode.MOVING_RATE,
                     config: SearchConfig | None = None):
    """Tune all premise breakpoints by Nelder-Mead.

    Each membership function is parameterized as a base point plus
    non-negative increments so ordering is preserved.  Returns
    ``(candidate, objective, truncated)``; the objective never exceeds the
    starting one.
    """
    config = config or SearchConfig()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if not candidate.mfs:
        return candidate, _objective(candidate.premises, X, y, mode), False
    ranges = np.ptp(X, axis=0)
    scales = [max(ranges[v], 1e-12) for v, _ in candidate.mfs]
    theta0 = candidate.to_vector()
    steps = np.concatenate([[config.simplex_step * s] * len(mf.points)
                            for s, (_, mf) in zip(scales, candidate.mfs)])

    def f(theta):
        return _objective(candidate.from_vector(theta, scales).premises, X, y, mode)

    res = nelder_mead(f, theta0, steps, ftol=config.simplex_ftol,
                      max_evals=config.simplex_evals_per_param * theta0.size)
    if not np.isfinite(res.fun):
        raise OptimizationFailed("objective undefined at every simplex vertex")
    return candidate.from_vector(res.x, scales), res.fun, res.truncated


def evaluate_candidate(candidate, X, y, config: SearchConfig) -> CandidateResult:
    try:
        tuned, sse, truncated = optimize_premise(candidate, X, y, config.mode, config)
        premises = tuned.premises
        if config.eliminate:
            mask, trace = eliminate_variables(premises, X, y, config.split, config.mode)
        else:
            mask = np.ones((tuned.n_rules, X.shape[1] + 1), dtype=bool)
            trace = [UCEvaluator(premises, X, y, config.split, config.mode)(mask)]
        return CandidateResult(tuned, trace[-1], sse, mask, trace, truncated)
    except (OptimizationFailed, UCUndefined, EmptyProblem) as exc:
        return CandidateResult(candidate, error=f"{type(exc).__name__}: {exc}")


# -- driver ----------------------------------------------------------------------------------

def _stage_log(stage: StageRecord, stream):
    if stream is None:
        return
    print(f"stage {stage.stage} ({stage.candidates[0].candidate.n_rules} rules)", file=stream)
    for k, c in enumerate(stage.candidates):
        mark = "*" if k == stage.best else " "
        uc = "failed" if c.error else f"UC={c.uc:.4f}"
        print(f"  {mark} [{k}] {uc}  {c.candidate.describe()}", file=stream)
    print(f"  -> {'accepted' if stage.accepted else 'rejected'}", file=stream)


def _evaluate_all(cands, X, y, config):
    if config.threads > 1 and len(cands) > 1:
        with ThreadPoolExecutor(config.threads) as pool:
            return list(pool.map(lambda c: evaluate_candidate(c, X, y, config), cands))
    return [evaluate_candidate(c, X, y, config) for c in cands]


def _best(results):
    best = None
    for k, r in enumerate(results):
        if r.error is None and (best is None or r.uc < results[best].uc):
            best = k
    return best


def _improves(uc, prev):
    # a relative margin keeps round-off ties from counting as an improvement
    return uc < prev - 1e-9 * max(1.0, abs(prev))


def identify(dataset: Dataset, config: SearchConfig | None = None, log_stream=sys.stderr) -> FitReport:
    """Stage-wise identification.

    Stage 1 fits a single always-on rule; each later stage tries every
    one-split refinement of the accepted partition, tunes its premise,
    eliminates consequence variables and scores it by UC.  A stage is
    accepted only if its best UC is strictly below the previous accepted
    one (beyond a 1e-9 relative margin); otherwise the previous model is returned.
    """
    config = config or SearchConfig()
    record = None
    work = dataset
    if config.normalize:
        _, record = normalize(dataset.identification())
        work, _ = normalize(dataset, record)
    ident = work.identification()
    X, y = ident.X, ident.y
    if len(y) < 2:
        raise ValueError("need at least two identification rows")

    pool = set(range(dataset.n_inputs) if config.premise_vars is None else config.premise_vars)
    current = PartitionCandidate.single_rule()
    first = evaluate_candidate(current, X, y, config)
    if first.error:
        raise OptimizationFailed(first.error)
    stages = [StageRecord(1, [first], 0, True)]
    _stage_log(stages[-1], log_stream)
    accepted = first

    while current.n_rules < config.max_rules:
        cands = enumerate_candidates(current, pool, X)
        if not cands:
            break
        results = _evaluate_all(cands, X, y, config)
        best = _best(results)
        if best is None:
            raise OptimizationFailed(f"every candidate failed in stage {len(stages) + 1}")
        ok = _improves(results[best].uc, accepted.uc)
        stage = StageRecord(len(stages) + 1, results, best, ok)
        stages.append(stage)
        _stage_log(stage, log_stream)
        if config.prune_pool and stage.stage == 2:
            # inputs whose own two-rule split scores worse than the one-rule model are dropped
            for r in results:
                var = next(iter(r.candidate.variables))
                if r.error or r.uc > first.uc:
                    pool.discard(var)
            pool.update(results[best].candidate.variables)
        if not ok:
            break
        accepted = results[best]
        current = accepted.candidate

    model = fit_model(accepted.candidate.premises, accepted.mask, X, y, config.mode, record)
    metrics = evaluate_metrics(model, dataset)
    return FitReport(stages, model, accepted.candidate, accepted.mask, accepted.trace,
                     metrics, config)


def evaluate_metrics(model: TSModel, dataset: Dataset) -> dict:
    """E (percent), MSE and fallback counts on identification and validation rows.

    MSE is reported in the model's working units (normalized when the model
    carries a normalization record) and in raw units.
    """
    out = {}
    for tag, part in (("ident", dataset.identification()), ("valid", dataset.validation())):
        if part.n_rows == 0:
            continue
        y_hat, fallback = model.predict(part.X)
        entry = {"n": part.n_rows, "fallback_rows": int(fallback.sum()),
                 "mse_raw": mse(part.y, y_hat)}
        if model.normalization is not None:
            nrm = model.normalization
            entry["mse"] = mse(nrm.forward_output(part.y), nrm.forward_output(y_hat))
        else:
            entry["mse"] = entry["mse_raw"]
        entry["E"] = error_index(part.y, y_hat) if np.all(part.y != 0) else None
        out[tag] = entry
    return out
