"""Dense tensors with define-by-run reverse-mode gradients.

Every primitive in ``src.tensor.ops`` produces a new ``Tensor`` that keeps a
reference to its parents and a vector-Jacobian closure. ``Tensor.backward``
walks that graph once in reverse topological order.
"""

from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.errors import ContractError

DEFAULT_DTYPE = np.float32
SUPPORTED_DTYPES = (np.float32, np.float64)

ArrayLike = Union["Tensor", np.ndarray, float, int, Sequence]
VjpFn = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]


def resolve_dtype(dtype) -> np.dtype:
    """Map ``"float32"``/``"f32"``/numpy dtypes onto a supported dtype."""
    if dtype is None:
        return np.dtype(DEFAULT_DTYPE)
    if isinstance(dtype, str):
        dtype = {"f32": "float32", "f64": "float64"}.get(dtype, dtype)
    resolved = np.dtype(dtype)
    if resolved.type not in SUPPORTED_DTYPES:
        raise ContractError(f"Unsupported dtype: {resolved}")
    return resolved


class Tensor:
    """A row-major array plus the bookkeeping needed for backpropagation.

    Leaves created with ``requires_grad=True`` accumulate gradients into
    ``grad`` across ``backward`` calls until ``zero_grad`` is called.
    """

    def __init__(
        self,
        data: ArrayLike,
        requires_grad: bool = False,
        dtype=None,
        _parents: Tuple["Tensor", ...] = (),
        _vjp: Optional[VjpFn] = None,
        _op: str = "",
    ):
        if isinstance(data, Tensor):
            data = data.data
        if dtype is None and isinstance(data, np.ndarray) and data.dtype.type in SUPPORTED_DTYPES:
            resolved = data.dtype
        else:
            resolved = resolve_dtype(dtype)
        self.data = np.ascontiguousarray(np.asarray(data, dtype=resolved))
        self.requires_grad = bool(requires_grad)
        self.grad: Optional[np.ndarray] = None
        self._parents = _parents
        self._vjp = _vjp
        self._op = _op

    # -- basic properties ---------------------------------------------------

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def is_leaf(self) -> bool:
        return self._vjp is None

    def numpy(self) -> np.ndarray:
        """Return a copy of the underlying array."""
        return self.data.copy()

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() needs a single element, got shape {self.shape}")
        return float(self.data.reshape(()))

    def detach(self) -> "Tensor":
        return Tensor(self.data, dtype=self.dtype)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{flag})"

    # -- graph construction -------------------------------------------------

    @staticmethod
    def from_op(
        data: np.ndarray, parents: Sequence["Tensor"], vjp: VjpFn, op: str
    ) -> "Tensor":
        """Wrap an op result, recording parents only when a gradient can flow."""
        tracked = any(p.requires_grad for p in parents)
        if not tracked:
            return Tensor(data, dtype=data.dtype)
        return Tensor(
            data,
            requires_grad=True,
            dtype=data.dtype,
            _parents=tuple(parents),
            _vjp=vjp,
            _op=op,
        )

    def _topological_order(self) -> List["Tensor"]:
        order: List[Tensor] = []
        visited = set()
        stack: List[Tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in reversed(node._parents):
                if parent.requires_grad and id(parent) not in visited:
                    stack.append((parent, False))
        return order

    def backward(self) -> None:
        """Populate ``grad`` on every reachable leaf that requires it.

        Raises:
            ContractError: if this tensor is not a scalar.
        """
        if self.data.size != 1:
            raise ContractError(
                f"backward() needs a scalar root, got shape {self.shape}"
            )
        if not self.requires_grad:
            return

        grads: Dict[int, np.ndarray] = {id(self): np.ones_like(self.data)}
        for node in reversed(self._topological_order()):
            grad = grads.pop(id(node), None)
            if grad is None:
                continue
            if node._vjp is None:
                if node.grad is None:
                    node.grad = np.zeros_like(node.data)
                node.grad = node.grad + grad
                continue
            parent_grads = node._vjp(grad)
            for parent, parent_grad in zip(node._parents, parent_grads):
                if parent_grad is None or not parent.requires_grad:
                    continue
                key = id(parent)
                if key in grads:
                    grads[key] = grads[key] + parent_grad
                else:
                    grads[key] = parent_grad

    # -- operator sugar -----------------------------------------------------

    def __add__(self, other: ArrayLike) -> "Tensor":
        return _ops.add(self, other)

    def __radd__(self, other: ArrayLike) -> "Tensor":
        return _ops.add(other, self)

    def __sub__(self, other: ArrayLike) -> "Tensor":
        return _ops.sub(self, other)

    def __rsub__(self, other: ArrayLike) -> "Tensor":
        return _ops.sub(other, self)

    def __mul__(self, other: ArrayLike) -> "Tensor":
        return _ops.mul(self, other)

    def __rmul__(self, other: ArrayLike) -> "Tensor":
        return _ops.mul(other, self)

    def __truediv__(self, other: ArrayLike) -> "Tensor":
        return _ops.div(self, other)

    def __rtruediv__(self, other: ArrayLike) -> "Tensor":
        return _ops.div(other, self)

    def __neg__(self) -> "Tensor":
        return _ops.neg(self)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return _ops.matmul(self, other)

    def sum(self) -> "Tensor":
        return _ops.sum_all(self)

    def mean(self) -> "Tensor":
        return _ops.mean_all(self)

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return _ops.reshape(self, shape)

    def transpose(self, *axes) -> "Tensor":
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return _ops.transpose(self, axes)


def as_tensor(value: ArrayLike, dtype=None) -> Tensor:
    """Return ``value`` unchanged if it is a Tensor, else wrap it as a constant."""
    if isinstance(value, Tensor):
        return value
    return Tensor(value, dtype=dtype)


from src.tensor import ops as _ops  # noqa: E402
