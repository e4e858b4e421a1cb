"""Synthetic contaminated regression instances (schemes A and B, Ex-1 .. Ex-7)."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import ValidationError
from .fits import Dataset, QuantileSpec

# (n, p, pi, scheme, q)
EXAMPLES = {
    "Ex1": (201, 5, 0.4, "B", 121),
    "Ex2": (201, 10, 0.5, "B", 101),
    "Ex3": (501, 5, 0.4, "A", 301),
    "Ex4": (501, 10, 0.4, "A", 301),
    "Ex5": (2001, 10, 0.4, "B", 1201),
    "Ex6": (5001, 10, 0.4, "B", 3001),
    "Ex7": (10001, 20, 0.4, "B", 6001),
}


@dataclass(frozen=True)
class SyntheticSpec:
    n: int
    p: int
    pi: float
    scheme: str = "B"
    seed: int = 0
    # N(0, 10) and N(0, 100) read as variances
    noise_sd: float = math.sqrt(10.0)
    x_sd: float = 10.0
    shift: float = 1000.0
    intercept: bool = False

    def __post_init__(self):
        if not 0.0 <= self.pi <= 1.0:
            raise ValidationError("pi must lie in [0, 1]")
        if self.n <= self.p:
            raise ValidationError("need n > p")
        if self.scheme not in ("A", "B"):
            raise ValidationError(f"unknown scheme {self.scheme!r}")

    @property
    def n_contaminated(self) -> int:
        return math.floor(round(self.pi * self.n, 9))


@dataclass(frozen=True)
class Instance:
    data: Dataset
    true_beta: np.ndarray
    contaminated: tuple
    covariate_shifted: tuple
    response_shifted: tuple


def generate(spec: SyntheticSpec) -> Instance:
    rng = np.random.default_rng(spec.seed)
    n, p = spec.n, spec.p
    X = rng.normal(0.0, spec.x_sd, size=(n, p))
    beta = np.ones(p)
    y = X @ beta + rng.normal(0.0, spec.noise_sd, size=n)
    k = spec.n_contaminated
    chosen = rng.permutation(n)[:k]
    if spec.scheme == "A":
        cov, resp = chosen, chosen[:0]
    else:
        half = (k + 1) // 2
        cov, resp = chosen[:half], chosen[half:]
    X[cov, 0] += spec.shift
    y[resp] += spec.shift
    if spec.intercept:
        X = np.hstack([np.ones((n, 1)), X])
        beta = np.ones(p + 1)
        y = y + 1.0
    return Instance(data=Dataset(y, X), true_beta=beta,
                    contaminated=tuple(sorted(int(i) for i in chosen)),
                    covariate_shifted=tuple(sorted(int(i) for i in cov)),
                    response_shifted=tuple(sorted(int(i) for i in resp)))


def canonical_name(name: str) -> str:
    m = re.fullmatch(r"(?i)ex-?([1-7])", name.strip())
    if not m:
        raise ValidationError(f"unknown example {name!r}; expected Ex1..Ex7")
    return f"Ex{m.group(1)}"


def example_sizes(name: str, scale: Optional[int] = None) -> dict:
    """(n, p, pi, scheme, q) of a named example, optionally divided by ``scale``.

    A scaled n is floored and bumped to the next odd number; q is floored.
    """
    key = canonical_name(name)
    n, p, pi, scheme, q = EXAMPLES[key]
    if scale is not None and scale != 1:
        if scale < 1:
            raise ValidationError("scale divisor must be >= 1")
        n = n // scale
        if n % 2 == 0:
            n += 1
        q = q // scale
        if n <= p + 1:
            raise ValidationError(f"scale {scale} leaves n={n} too small for p={p}")
        q = min(max(q, p + 1), n)
    return {"name": key, "n": n, "p": p, "pi": pi, "scheme": scheme, "q": q}


def named_example(name: str, scale: Optional[int] = None, seed: int = 0,
                  intercept: bool = False):
    """Generate a named example; returns (Dataset, QuantileSpec, metadata)."""
    meta = example_sizes(name, scale)
    spec = SyntheticSpec(n=meta["n"], p=meta["p"], pi=meta["pi"], scheme=meta["scheme"],
                         seed=seed, intercept=intercept)
    inst = generate(spec)
    meta = dict(meta, seed=seed, contaminated=list(inst.contaminated))
    return inst.data, QuantileSpec(meta["q"]), meta


def uncontaminated_draw(spec: SyntheticSpec) -> Instance:
    """The same random draw with contamination switched off."""
    return generate(replace(spec, shift=0.0))
