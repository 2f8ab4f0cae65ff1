"""Group penalties and their local linear approximation weights."""
from dataclasses import dataclass

import numpy as np

KINDS = ("lasso", "logsum", "scad")
_ALIASES = {"log-sum": "logsum", "log_sum": "logsum", "lsp": "logsum"}


@dataclass(frozen=True)
class PenaltySpec:
    """Penalty ``h_lambda`` applied to each group norm.

    ``epsilon`` is used by log-sum only, ``a`` by SCAD only.
    """

    kind: str = "lasso"
    lam: float = 1.0
    epsilon: float = 1e-3
    a: float = 3.7

    def __post_init__(self):
        kind = _ALIASES.get(self.kind, self.kind)
        object.__setattr__(self, "kind", kind)
        if kind not in KINDS:
            raise ValueError(f"unknown penalty {self.kind!r}; choose from {KINDS}")
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not self.a > 2:
            raise ValueError(f"SCAD a must exceed 2, got {self.a}")

    @property
    def convex(self):
        return self.kind == "lasso"

    def with_lambda(self, lam):
        return PenaltySpec(self.kind, lam, self.epsilon, self.a)


def penalty_value(spec, u):
    """``h_lambda(u)`` for ``u >= 0`` (scalar or array)."""
    u = np.asarray(u, dtype=float)
    if np.any(u < 0):
        raise ValueError("penalty argument must be non-negative")
    lam = spec.lam
    if spec.kind == "lasso":
        out = lam * u
    elif spec.kind == "logsum":
        out = lam * spec.epsilon * np.log1p(u / spec.epsilon)
    else:
        a = spec.a
        out = np.where(
            u <= lam,
            lam * u,
            np.where(
                u < a * lam,
                (2 * a * lam * u - u**2 - lam**2) / (2 * (a - 1)),
                lam**2 * (a + 1) / 2,
            ),
        )
    return out if out.ndim else float(out)


def penalty_derivative(spec, u):
    """``h'_lambda(u)`` for ``u >= 0``; at 0 this is the right derivative."""
    u = np.asarray(u, dtype=float)
    lam = spec.lam
    if spec.kind == "lasso":
        out = np.full_like(u, lam)
    elif spec.kind == "logsum":
        out = lam * spec.epsilon / (u + spec.epsilon)
    else:
        a = spec.a
        out = np.where(u <= lam, lam, np.where(u <= a * lam, (a * lam - u) / (a - 1), 0.0))
    return out if out.ndim else float(out)


def lla_weights(spec, group_norms):
    """Per-group weights ``lambda_ij`` linearizing the penalty at ``group_norms``."""
    norms = np.asarray(group_norms, dtype=float)
    if np.any(norms < 0):
        raise ValueError("group norms must be non-negative")
    return np.asarray(penalty_derivative(spec, norms), dtype=float).reshape(norms.shape)
