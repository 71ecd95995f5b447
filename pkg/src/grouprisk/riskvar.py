"""Finite discrete random variables and risk/deviation measures on them.

A variable is a finite set of (value, probability) atoms.  All measures
ignore atoms with zero probability, and atoms sharing a value are merged
(probabilities summed) before quantile or tail computations.

The central measure is the conditional value at risk at level ``alpha``,
the mean of the upper ``1 - alpha`` tail.  It is computed exactly through
its variational form

    cvar(Z, alpha) = min over r of  { r + E[(Z - r)+] / (1 - alpha) },

which for a discrete variable is a piecewise-linear convex function of r
whose minimum is attained at an atom value.  The implementation therefore
evaluates the expression at every distinct atom value and takes the
minimum; no interpolation or tail-count formula is involved.

Aggregators combine a variable into a scalar risk: plain expectation,
cvar, expectation plus a standard-deviation penalty, the mean of the k
largest equal-probability atoms, or the maximum.  ``check_axiom`` is a
seeded falsifier that searches for counterexamples to the risk-measure
axioms (convexity, positive homogeneity, monotonicity, continuity along
segments, translation, aversity, law invariance, behaviour on constants,
and nonnegativity of the induced deviation).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ParameterError

PROB_TOL = 1e-12

# Falsifier tolerances: relative for equalities, slack for inequalities.
AXIOM_TOL = 1e-9

AGGREGATOR_KINDS = ("expectation", "cvar", "sd_penalty", "top_k", "max")

FAIRNESS_AXIOMS = ("F1", "F2", "F3", "F4", "F5", "F6", "F7", "F8", "F9")


@dataclass(frozen=True, eq=False)
class DiscreteRandomVariable:
    """Finitely supported random variable given by parallel value/prob arrays.

    Invariants: at least one atom, probabilities nonnegative and summing
    to one within ``PROB_TOL``.  Zero-probability atoms are allowed; every
    measure in this module ignores them.
    """

    values: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).reshape(-1)
        probs = np.asarray(self.probs, dtype=float).reshape(-1)
        if values.size == 0:
            raise ParameterError("a discrete random variable needs at least one atom")
        if values.shape != probs.shape:
            raise ParameterError("values and probabilities must have equal length")
        if not np.all(np.isfinite(values)):
            raise ParameterError("atom values must be finite")
        if np.any(probs < 0.0):
            raise ParameterError("atom probabilities must be nonnegative")
        total = float(probs.sum())
        if abs(total - 1.0) > PROB_TOL:
            raise ParameterError(f"atom probabilities sum to {total!r}, expected 1")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_atoms(cls, atoms) -> "DiscreteRandomVariable":
        pairs = list(atoms)
        return cls(np.array([v for v, _ in pairs]), np.array([p for _, p in pairs]))

    @classmethod
    def uniform(cls, values) -> "DiscreteRandomVariable":
        values = np.asarray(values, dtype=float).reshape(-1)
        return cls(values, np.full(values.size, 1.0 / values.size))

    @classmethod
    def constant(cls, value: float) -> "DiscreteRandomVariable":
        return cls(np.array([float(value)]), np.array([1.0]))

    @property
    def atoms(self):
        return list(zip(self.values.tolist(), self.probs.tolist()))

    def support(self):
        """Values and probabilities of the positive-probability atoms."""
        mask = self.probs > 0.0
        return self.values[mask], self.probs[mask]


@dataclass(frozen=True)
class AggregatorSpec:
    """Tagged choice of aggregator over a subgroup-risk variable.

    kind is one of ``expectation``, ``cvar`` (requires ``alpha`` strictly
    inside (0, 1)), ``sd_penalty`` (requires ``lam >= 0``), ``top_k``
    (requires integer ``k >= 1``, equal-probability atoms) or ``max``.
    """

    kind: str
    alpha: Optional[float] = None
    lam: Optional[float] = None
    k: Optional[int] = None

    def __post_init__(self):
        if self.kind not in AGGREGATOR_KINDS:
            raise ParameterError(f"unknown aggregator kind {self.kind!r}")
        if self.kind == "cvar":
            if self.alpha is None or not 0.0 < self.alpha < 1.0:
                raise ParameterError("cvar aggregator needs alpha strictly in (0, 1)")
        if self.kind == "sd_penalty":
            if self.lam is None or self.lam < 0.0:
                raise ParameterError("sd_penalty aggregator needs lambda >= 0")
        if self.kind == "top_k":
            if self.k is None or int(self.k) != self.k or self.k < 1:
                raise ParameterError("top_k aggregator needs a positive integer k")

    @classmethod
    def expectation(cls):
        return cls("expectation")

    @classmethod
    def cvar(cls, alpha: float):
        return cls("cvar", alpha=alpha)

    @classmethod
    def sd_penalty(cls, lam: float):
        return cls("sd_penalty", lam=lam)

    @classmethod
    def top_k(cls, k: int):
        return cls("top_k", k=k)

    @classmethod
    def max_value(cls):
        return cls("max")

    def describe(self) -> str:
        if self.kind == "cvar":
            return f"cvar(alpha={self.alpha})"
        if self.kind == "sd_penalty":
            return f"sd_penalty(lambda={self.lam})"
        if self.kind == "top_k":
            return f"top_k(k={self.k})"
        return self.kind


def _merged_support(Z: DiscreteRandomVariable):
    """Positive-probability atoms, duplicates merged, values ascending."""
    v, p = Z.support()
    uv, inverse = np.unique(v, return_inverse=True)
    up = np.bincount(inverse, weights=p, minlength=uv.size)
    return uv, up


def expectation(Z: DiscreteRandomVariable) -> float:
    """Probability-weighted mean of the atom values."""
    return float(np.dot(Z.values, Z.probs))


def _check_alpha(alpha: float):
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha must lie strictly in (0, 1), got {alpha!r}")


def _quantile_value(values: np.ndarray, probs: np.ndarray, alpha: float) -> float:
    """Lower quantile inf{z : F(z) >= alpha} over merged, sorted atoms.

    Accepts alpha in [0, 1) so the trainer's limit cases stay in one code
    path; the public ``quantile`` enforces the open interval.
    """
    uv, inverse = np.unique(values, return_inverse=True)
    up = np.bincount(inverse, weights=probs, minlength=uv.size)
    cum = np.cumsum(up)
    # 1e-12 slack so accumulated rounding cannot skip the boundary atom.
    idx = int(np.searchsorted(cum, alpha - PROB_TOL, side="left"))
    idx = min(idx, uv.size - 1)
    return float(uv[idx])


def quantile(Z: DiscreteRandomVariable, alpha: float) -> float:
    """Lower quantile of Z at level alpha in (0, 1)."""
    _check_alpha(alpha)
    v, p = Z.support()
    return _quantile_value(v, p, alpha)


def _cvar_value(values: np.ndarray, probs: np.ndarray, alpha: float) -> float:
    """Exact cvar of merged atoms via the variational form, alpha in [0, 1).

    Evaluates f(r) = r + (1/(1-alpha)) * sum_i p_i * max(v_i - r, 0) at
    every distinct atom value r; the convex piecewise-linear f attains its
    minimum there.  Suffix sums keep this O(n log n).
    """
    uv, inverse = np.unique(values, return_inverse=True)
    up = np.bincount(inverse, weights=probs, minlength=uv.size)
    inv = 1.0 / (1.0 - alpha)
    # tail_p[j] / tail_pv[j]: total prob and prob-weighted value strictly above uv[j]
    tail_p = np.concatenate([np.cumsum(up[::-1])[::-1][1:], [0.0]])
    tail_pv = np.concatenate([np.cumsum((up * uv)[::-1])[::-1][1:], [0.0]])
    f = uv + inv * (tail_pv - uv * tail_p)
    return float(f.min())


def cvar(Z: DiscreteRandomVariable, alpha: float) -> float:
    """Conditional value at risk: mean of the upper (1 - alpha) tail.

    Computed by exact minimisation of the variational expression over the
    distinct atom values (see module docstring), never by sorting the tail.
    """
    _check_alpha(alpha)
    v, p = Z.support()
    return _cvar_value(v, p, alpha)


def cvar_deviation(Z: DiscreteRandomVariable, alpha: float) -> float:
    """Deviation counterpart of cvar: cvar(Z, alpha) - E(Z).

    Nonnegative, and zero exactly when Z is constant.
    """
    return cvar(Z, alpha) - expectation(Z)


def sd_deviation(Z: DiscreteRandomVariable) -> float:
    """Probability-weighted standard deviation sqrt(E[Z^2] - E[Z]^2).

    Evaluated through the centred sum sqrt(sum_i p_i (z_i - mean)^2),
    which is the same quantity without the catastrophic cancellation the
    raw-moment difference suffers on near-constant variables.
    """
    centred = Z.values - expectation(Z)
    return float(np.sqrt(np.dot(Z.probs, centred * centred)))


def aggregate(Z: DiscreteRandomVariable, spec: AggregatorSpec) -> float:
    """Apply an aggregator to a subgroup-risk variable.

    top_k requires equal probabilities on the positive-probability atoms
    and k at most the atom count; it averages the k largest values without
    merging duplicates.
    """
    if spec.kind == "expectation":
        return expectation(Z)
    if spec.kind == "cvar":
        return cvar(Z, spec.alpha)
    if spec.kind == "sd_penalty":
        return expectation(Z) + spec.lam * sd_deviation(Z)
    if spec.kind == "max":
        v, _ = Z.support()
        return float(v.max())
    # top_k
    v, p = Z.support()
    if v.size == 0:
        raise ParameterError("top_k needs at least one positive-probability atom")
    if float(p.max() - p.min()) > PROB_TOL:
        raise ParameterError("top_k requires equal-probability atoms")
    if spec.k > v.size:
        raise ParameterError(f"top_k with k={spec.k} exceeds {v.size} atoms")
    return float(np.sort(v)[-spec.k:].mean())


# ---------------------------------------------------------------------------
# Axiom falsification


@dataclass(frozen=True)
class FalsificationReport:
    """Outcome of a sampled search for an axiom violation."""

    axiom: str
    measure: str
    trials: int
    passed: bool
    counterexample: Optional[dict]
    seed: int

    def to_dict(self) -> dict:
        return {
            "axiom": self.axiom,
            "measure": self.measure,
            "trials": self.trials,
            "passed": self.passed,
            "counterexample": self.counterexample,
            "seed": self.seed,
        }


def _tol(*xs) -> float:
    return AXIOM_TOL * max(1.0, *(abs(x) for x in xs))


def _eval(spec: AggregatorSpec, values: np.ndarray, probs: np.ndarray) -> float:
    return aggregate(DiscreteRandomVariable(values, probs), spec)


def _sample_space(rng: np.random.Generator, spec: AggregatorSpec, uniform=False):
    """Shared sample space: a size and a probability vector.

    top_k needs equal probabilities and at least k atoms; otherwise half
    the trials use skewed probabilities so violations that need unbalanced
    groups are reachable.
    """
    low = spec.k if spec.kind == "top_k" else 2
    n = int(rng.integers(max(low, 2), max(low, 2) + 7))
    if uniform or spec.kind == "top_k" or rng.random() < 0.5:
        probs = np.full(n, 1.0 / n)
    else:
        w = rng.uniform(0.05, 1.0, n) ** 2
        probs = w / w.sum()
    return n, probs


def _sample_values(rng: np.random.Generator, n: int, min_spread: float = 0.0):
    while True:
        z = rng.uniform(-5.0, 5.0, n)
        if float(np.ptp(z)) >= min_spread:
            return z


def _ce(**kv) -> dict:
    out = {}
    for k, v in kv.items():
        out[k] = v.tolist() if isinstance(v, np.ndarray) else v
    return out


def _check_f1(spec, rng):
    """Convexity: R((1-t)Z + tZ') <= (1-t)R(Z) + tR(Z')."""
    n, probs = _sample_space(rng, spec)
    z = _sample_values(rng, n)
    variant = int(rng.integers(0, 3))
    if variant == 0:
        z2 = _sample_values(rng, n)
    elif variant == 1:
        z2 = -z
    else:
        z2 = z * rng.choice([-1.0, 1.0], size=n)
    t = float(rng.uniform(0.1, 0.9))
    lhs = _eval(spec, (1.0 - t) * z + t * z2, probs)
    rhs = (1.0 - t) * _eval(spec, z, probs) + t * _eval(spec, z2, probs)
    if lhs > rhs + _tol(lhs, rhs):
        return _ce(values=z, values2=z2, probs=probs, t=t, lhs=lhs, rhs=rhs)
    return None


def _check_f2(spec, rng):
    """Positive homogeneity: R(0) = 0 and R(cZ) = cR(Z) for c > 0."""
    n, probs = _sample_space(rng, spec)
    r0 = _eval(spec, np.zeros(n), probs)
    if abs(r0) > AXIOM_TOL:
        return _ce(values=np.zeros(n), probs=probs, lhs=r0, rhs=0.0)
    z = _sample_values(rng, n)
    c = float(rng.uniform(0.1, 10.0))
    lhs = _eval(spec, c * z, probs)
    rhs = c * _eval(spec, z, probs)
    if abs(lhs - rhs) > _tol(lhs, rhs):
        return _ce(values=z, probs=probs, c=c, lhs=lhs, rhs=rhs)
    return None


def _check_f3(spec, rng):
    """Monotonicity: Z <= Z' pointwise implies R(Z) <= R(Z')."""
    n, probs = _sample_space(rng, spec)
    z = _sample_values(rng, n)
    variant = int(rng.integers(0, 3))
    if variant == 0:
        z2 = z + np.abs(rng.normal(0.0, 1.0, n))
    elif variant == 1:
        delta = np.abs(rng.normal(0.0, 1.0, n))
        delta[rng.random(n) < 0.5] = 0.0
        z2 = z + delta
    else:
        # Raise the low coordinates toward a cap; the classic breaker for
        # deviation-penalised aggregators.
        cap = float(rng.uniform(np.median(z), np.max(z)))
        z2 = np.maximum(z, cap)
    lhs = _eval(spec, z, probs)
    rhs = _eval(spec, z2, probs)
    if lhs > rhs + _tol(lhs, rhs):
        return _ce(values=z, values2=z2, probs=probs, lhs=lhs, rhs=rhs)
    return None


def _check_f4(spec, rng):
    """Continuity surrogate: R along a sampled segment has no jumps."""
    n, probs = _sample_space(rng, spec)
    z, z2 = _sample_values(rng, n), _sample_values(rng, n)
    t = float(rng.uniform(0.05, 0.9))
    h = 1e-6
    a = _eval(spec, (1.0 - t) * z + t * z2, probs)
    b = _eval(spec, (1.0 - t - h) * z + (t + h) * z2, probs)
    if abs(a - b) > 1e-2:
        return _ce(values=z, values2=z2, probs=probs, t=t, lhs=a, rhs=b)
    return None


def _check_f5(spec, rng):
    """Translation: R(Z + C) = R(Z) + C."""
    n, probs = _sample_space(rng, spec)
    z = _sample_values(rng, n)
    c = float(rng.uniform(-5.0, 5.0))
    lhs = _eval(spec, z + c, probs)
    rhs = _eval(spec, z, probs) + c
    if abs(lhs - rhs) > _tol(lhs, rhs):
        return _ce(values=z, probs=probs, c=c, lhs=lhs, rhs=rhs)
    return None


def _check_f6(spec, rng):
    """Aversity: R(Z) > E(Z) for non-constant Z."""
    n, probs = _sample_space(rng, spec)
    z = _sample_values(rng, n, min_spread=0.5)
    r = _eval(spec, z, probs)
    e = float(np.dot(probs, z))
    if r - e <= _tol(r, e):
        return _ce(values=z, probs=probs, lhs=r, rhs=e)
    return None


def _check_f7(spec, rng):
    """Law invariance: permuting equal-probability atoms leaves R unchanged."""
    n, probs = _sample_space(rng, spec, uniform=True)
    z = _sample_values(rng, n)
    perm = rng.permutation(n)
    lhs = _eval(spec, z[perm], probs)
    rhs = _eval(spec, z, probs)
    if abs(lhs - rhs) > _tol(lhs, rhs):
        return _ce(values=z, probs=probs, permutation=perm, lhs=lhs, rhs=rhs)
    return None


def _check_f8(spec, rng):
    """Constants: R of a constant variable equals the constant."""
    n, probs = _sample_space(rng, spec)
    c = float(rng.uniform(-5.0, 5.0))
    lhs = _eval(spec, np.full(n, c), probs)
    if abs(lhs - c) > _tol(lhs, c):
        return _ce(values=np.full(n, c), probs=probs, lhs=lhs, rhs=c)
    return None


def _check_f9(spec, rng):
    """Induced deviation R - E is >= 0, zero exactly on constants."""
    n, probs = _sample_space(rng, spec)
    z = _sample_values(rng, n, min_spread=0.5)
    dev = _eval(spec, z, probs) - float(np.dot(probs, z))
    if dev < -_tol(dev):
        return _ce(values=z, probs=probs, deviation=dev, reason="negative deviation")
    if dev <= _tol(dev):
        return _ce(values=z, probs=probs, deviation=dev, reason="zero on non-constant")
    c = float(rng.uniform(-5.0, 5.0))
    dev_c = _eval(spec, np.full(n, c), probs) - c
    if abs(dev_c) > _tol(dev_c, c):
        return _ce(values=np.full(n, c), probs=probs, deviation=dev_c,
                   reason="nonzero on constant")
    return None


_FAIRNESS_CHECKS: dict[str, Callable] = {
    "F1": _check_f1,
    "F2": _check_f2,
    "F3": _check_f3,
    "F4": _check_f4,
    "F5": _check_f5,
    "F6": _check_f6,
    "F7": _check_f7,
    "F8": _check_f8,
    "F9": _check_f9,
}


def check_axiom(measure: AggregatorSpec, axiom: str, trials: int,
                rng_seed: int = 0) -> FalsificationReport:
    """Search for a counterexample to one axiom over sampled variable pairs.

    Pairs share a finite sample space and its probabilities, so pointwise
    ordering and convex combination are well defined.  This is
    falsification by sampling, not a proof: a pass means no violation was
    found in ``trials`` attempts at the module tolerances.
    """
    ax = str(axiom).upper()
    if ax not in _FAIRNESS_CHECKS:
        raise ParameterError(f"unknown axiom tag {axiom!r}")
    if trials < 1:
        raise ParameterError("trials must be at least 1")
    rng = np.random.default_rng(rng_seed)
    checker = _FAIRNESS_CHECKS[ax]
    for trial in range(trials):
        ce = checker(measure, rng)
        if ce is not None:
            ce["trial"] = trial
            return FalsificationReport(ax, measure.describe(), trials, False, ce,
                                       rng_seed)
    return FalsificationReport(ax, measure.describe(), trials, True, None, rng_seed)
