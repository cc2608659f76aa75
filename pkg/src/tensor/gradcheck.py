"""Central-difference checks for reverse-mode gradients."""

from typing import Callable, Dict, Mapping, Optional

import numpy as np

from src.errors import ContractError
from src.tensor.prng import Prng
from src.tensor.tensor import Tensor

ScalarFn = Callable[[Tensor], Tensor]


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Max of |analytic - numeric| / max(1, |numeric|) over all coordinates."""
    if analytic.shape != numeric.shape:
        raise ContractError(f"gradient shapes differ: {analytic.shape} vs {numeric.shape}")
    if analytic.size == 0:
        return 0.0
    denom = np.maximum(1.0, np.abs(numeric))
    return float(np.max(np.abs(analytic - numeric) / denom))


def _sample_coords(size: int, max_coords: Optional[int], rng: Optional[Prng]) -> np.ndarray:
    if max_coords is None or size <= max_coords:
        return np.arange(size)
    rng = rng or Prng(0)
    return np.sort(rng.permutation(size)[:max_coords])


def analytic_gradient(f: ScalarFn, x: Tensor) -> np.ndarray:
    leaf = Tensor(x.data.copy(), requires_grad=True, dtype=x.dtype)
    f(leaf).backward()
    if leaf.grad is None:
        return np.zeros_like(leaf.data)
    return leaf.grad


def finite_diff_check(
    f: ScalarFn,
    x: Tensor,
    h: float = 1e-6,
    grad: Optional[np.ndarray] = None,
    max_coords: Optional[int] = None,
    rng: Optional[Prng] = None,
) -> float:
    """Compare a gradient against central differences of ``f`` at ``x``.

    Args:
        f: scalar-valued function of one tensor.
        x: evaluation point.
        h: step; each coordinate is perturbed by ``h * max(1, |x_i|)``.
        grad: gradient to check; defaults to the one ``backward`` produces.
        max_coords: check a seeded random subset of this many coordinates.
        rng: source for that subset.

    Returns:
        Max relative error over the checked coordinates.
    """
    if grad is None:
        grad = analytic_gradient(f, x)
    base = x.data.astype(x.dtype, copy=True)
    flat = base.reshape(-1)
    coords = _sample_coords(flat.size, max_coords, rng)
    numeric = np.zeros(coords.size, dtype=np.float64)
    for k, i in enumerate(coords):
        original = flat[i]
        step = h * max(1.0, abs(float(original)))
        flat[i] = original + step
        plus = f(Tensor(base.copy(), dtype=x.dtype)).item()
        flat[i] = original - step
        minus = f(Tensor(base.copy(), dtype=x.dtype)).item()
        flat[i] = original
        numeric[k] = (plus - minus) / (2.0 * step)
    analytic = np.asarray(grad, dtype=np.float64).reshape(-1)[coords]
    return relative_error(analytic, numeric)


def check_parameters(
    loss_fn: Callable[[], Tensor],
    params: Mapping[str, Tensor],
    h: float = 1e-6,
    max_coords: Optional[int] = 6,
    rng: Optional[Prng] = None,
) -> Dict[str, float]:
    """Gradient check every named parameter of a closure-built loss.

    ``loss_fn`` must rebuild the graph from ``params`` on each call; values
    are perturbed in place and restored.

    Returns:
        Mapping from parameter name to max relative error.
    """
    rng = rng or Prng(0)
    for tensor in params.values():
        tensor.zero_grad()
    loss_fn().backward()

    errors: Dict[str, float] = {}
    for name, tensor in params.items():
        analytic = tensor.grad if tensor.grad is not None else np.zeros_like(tensor.data)
        flat = tensor.data.reshape(-1)
        coords = _sample_coords(flat.size, max_coords, rng)
        numeric = np.zeros(coords.size, dtype=np.float64)
        for k, i in enumerate(coords):
            original = flat[i]
            step = h * max(1.0, abs(float(original)))
            flat[i] = original + step
            plus = loss_fn().item()
            flat[i] = original - step
            minus = loss_fn().item()
            flat[i] = original
            numeric[k] = (plus - minus) / (2.0 * step)
        errors[name] = relative_error(
            np.asarray(analytic, dtype=np.float64).reshape(-1)[coords], numeric
        )
    for tensor in params.values():
        tensor.zero_grad()
    return errors
