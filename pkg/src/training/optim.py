"""Adam with bias correction and the poly learning-rate schedule."""

from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional

import numpy as np

from src.errors import ContractError, DimensionError
from src.tensor.tensor import Tensor

BETA1 = 0.9
BETA2 = 0.999
ADAM_EPS = 1e-8


def poly_lr(step: int, total_steps: int, lr0: float, power: float = 0.9) -> float:
    """``lr0 · (1 − step/total_steps)^power``.

    Raises:
        ContractError: if ``total_steps`` is not positive or ``step`` is out of range.
    """
    if total_steps <= 0:
        raise ContractError("total_steps must be positive")
    if not 0 <= step <= total_steps:
        raise ContractError(f"step {step} outside [0, {total_steps}]")
    return lr0 * (1.0 - step / total_steps) ** power


@dataclass
class OptimizerState:
    """First/second moments per parameter name plus the step count ``t``."""

    m: Dict[str, np.ndarray] = field(default_factory=OrderedDict)
    v: Dict[str, np.ndarray] = field(default_factory=OrderedDict)
    t: int = 0
    beta1: float = BETA1
    beta2: float = BETA2
    eps: float = ADAM_EPS

    @classmethod
    def for_params(cls, params: Mapping[str, Tensor]) -> "OptimizerState":
        state = cls()
        for name, tensor in params.items():
            state.m[name] = np.zeros_like(tensor.data)
            state.v[name] = np.zeros_like(tensor.data)
        return state


def adam_step(
    params: Mapping[str, Tensor],
    grads: Mapping[str, Optional[np.ndarray]],
    state: OptimizerState,
    lr: float,
) -> OptimizerState:
    """Apply one bias-corrected Adam update in place; ``t`` always advances by 1.

    Missing or ``None`` gradients count as zero.

    Raises:
        DimensionError: if a gradient or moment shape differs from its parameter.
    """
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    correction1 = 1.0 - b1**state.t
    correction2 = 1.0 - b2**state.t
    for name, tensor in params.items():
        grad = grads.get(name)
        if grad is None:
            grad = np.zeros_like(tensor.data)
        if grad.shape != tensor.shape:
            raise DimensionError(f"{name}: gradient {grad.shape} != parameter {tensor.shape}")
        m = state.m.setdefault(name, np.zeros_like(tensor.data))
        v = state.v.setdefault(name, np.zeros_like(tensor.data))
        if m.shape != tensor.shape or v.shape != tensor.shape:
            raise DimensionError(f"{name}: moment shapes do not match parameter {tensor.shape}")
        m *= b1
        m += (1.0 - b1) * grad
        v *= b2
        v += (1.0 - b2) * grad * grad
        update = lr * (m / correction1) / (np.sqrt(v / correction2) + state.eps)
        tensor.data = (tensor.data - update).astype(tensor.dtype, copy=False)
    return state


class Adam:
    """Optimizer over a fixed named parameter set, reading ``Tensor.grad``."""

    def __init__(self, params: Mapping[str, Tensor], state: Optional[OptimizerState] = None):
        self.params = params
        self.state = state if state is not None else OptimizerState.for_params(params)

    def step(self, lr: float) -> None:
        adam_step(self.params, {k: t.grad for k, t in self.params.items()}, self.state, lr)

    def zero_grad(self) -> None:
        for tensor in self.params.values():
            tensor.zero_grad()
