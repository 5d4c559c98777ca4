"""Method registry: canonical identifiers, orders, and per-step costs.

Identifiers accepted everywhere (CLI, config files, integrate):

    rk4  strang  suzuki4  yoshida4  etdrk4-krogstad  lawson-rk4
    exp-ab:K  exp-pece:K  lawson-ab:K  lawson-pece:K      (K = 1 .. 8)
"""

from __future__ import annotations

from dataclasses import dataclass

from . import multistep, onestep

__all__ = ["MethodSpec", "parse_method", "available_methods"]


@dataclass(frozen=True)
class MethodSpec:
    name: str
    family: str
    k: int | None
    order: int
    control_order: int
    b_evals_per_step: int
    is_multistep: bool
    has_estimator: bool
    variable_steps: bool

    def onestep_fn(self):
        if self.is_multistep:
            raise ValueError(f"{self.name} is a multistep method")
        return _ONESTEP_FNS[self.family]

    def multistep_fn(self):
        if not self.is_multistep:
            raise ValueError(f"{self.name} is a one-step method")
        return _MULTISTEP_FNS[self.family]


def _splitting(scheme):
    def step(problem, t, h, u):
        return onestep.splitting_step(problem, scheme, t, h, u)

    return step


_ONESTEP_FNS = {
    "rk4": onestep.rk4_step,
    "strang": _splitting(onestep.STRANG),
    "suzuki4": _splitting(onestep.SUZUKI4),
    "yoshida4": _splitting(onestep.YOSHIDA4),
    "etdrk4-krogstad": onestep.krogstad_step,
    "lawson-rk4": onestep.lawson_rk4_step,
}

_MULTISTEP_FNS = {
    "exp-ab": multistep.exp_ab_step,
    "exp-pece": multistep.exp_pece_step,
    "lawson-ab": multistep.lawson_ab_step,
    "lawson-pece": multistep.lawson_pece_step,
}

_ONESTEP_TABLE = {
    # family: (order, b_evals_per_step)
    "rk4": (4, 4),
    "strang": (2, 4),
    "suzuki4": (4, 20),
    "yoshida4": (4, 12),
    "etdrk4-krogstad": (4, 4),
    "lawson-rk4": (4, 4),
}

_MULTISTEP_TABLE = {
    # family: (order offset over k, b_evals, estimator, variable steps)
    "exp-ab": (0, 1, False, False),
    "exp-pece": (1, 2, True, False),
    "lawson-ab": (0, 1, False, True),
    "lawson-pece": (1, 2, True, True),
}


def parse_method(name: str) -> MethodSpec:
    """Resolve a method identifier string to its MethodSpec."""
    name = name.strip()
    if name in _ONESTEP_TABLE:
        order, cost = _ONESTEP_TABLE[name]
        return MethodSpec(
            name=name, family=name, k=None, order=order, control_order=order,
            b_evals_per_step=cost, is_multistep=False, has_estimator=False,
            variable_steps=False,
        )
    if ":" in name:
        family, _, ks = name.partition(":")
        family = family.strip()
        if family in _MULTISTEP_TABLE:
            try:
                k = int(ks)
            except ValueError:
                raise ValueError(f"malformed method order in {name!r}") from None
            if not 1 <= k <= multistep.MAX_ORDER:
                raise ValueError(
                    f"method order must be in 1..{multistep.MAX_ORDER}, got {k}"
                )
            offset, cost, est, var = _MULTISTEP_TABLE[family]
            return MethodSpec(
                name=f"{family}:{k}", family=family, k=k, order=k + offset,
                control_order=k + 1, b_evals_per_step=cost, is_multistep=True,
                has_estimator=est, variable_steps=var,
            )
    raise ValueError(f"unknown method identifier {name!r}")


def available_methods() -> list[str]:
    names = list(_ONESTEP_TABLE)
    for family in _MULTISTEP_TABLE:
        names.extend(f"{family}:{k}" for k in (1, 2, 3, 4, 5, 6, 7, 8))
    return names
