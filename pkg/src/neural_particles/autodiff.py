"""
Automatic differentiation engine for the Neural Particle Method.

Two layers cooperate here:

* A reverse-mode ``Tape``: every primitive applied to a ``Variable`` is
  appended to the tape together with its local vector-Jacobian products.
  Replaying the tape backwards yields the gradient of a scalar output with
  respect to every registered parameter.
* Forward-mode ``Dual`` numbers: a value plus one tangent per seeded input
  direction. Dual arithmetic is written in terms of the same primitives, so
  when the value and tangents are ``Variable`` objects the tangent
  computation itself is recorded on the tape (forward-over-reverse). This
  is how parameter gradients of losses built from ``grad p`` and ``div v``
  are obtained exactly.

All primitives also accept plain numpy arrays, in which case nothing is
recorded and the plain result is returned.
"""

from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

Operand = Union["Variable", np.ndarray, float]
VJP = Callable[[np.ndarray], np.ndarray]

SUPPORTED_PRIMITIVES = frozenset({
    "add", "sub", "mul", "div", "neg", "tanh", "matmul",
    "transpose", "sum", "getitem", "stack",
})


class UnsupportedPrimitiveError(TypeError):
    """Raised when a computation uses an operation the engine cannot differentiate."""


class TapeError(ValueError):
    """Raised for structurally invalid tape usage (foreign or non-scalar outputs)."""


class NonFiniteAdjointError(FloatingPointError):
    """Raised when a NaN or infinity shows up while replaying the tape."""

    def __init__(self, node_index: int, op: str):
        self.node_index = node_index
        self.op = op
        super().__init__(f"Non-finite adjoint at tape node {node_index} (op '{op}')")


@dataclass(frozen=True)
class Node:
    """One recorded operation: its value, operand indices and local VJPs."""
    index: int
    op: str
    value: np.ndarray
    parents: Tuple[int, ...] = ()
    vjps: Tuple[VJP, ...] = ()
    is_parameter: bool = False
    name: str = ""


class Tape:
    """Append-only record of a differentiable computation."""

    def __init__(self):
        self.nodes: List[Node] = []
        self._parameters: List[int] = []

    def __len__(self) -> int:
        return len(self.nodes)

    def parameter(self, value, name: str = "") -> "Variable":
        """Register a trainable leaf; gradients are reported for these."""
        index = len(self.nodes)
        self.nodes.append(Node(index, "parameter", np.array(value, dtype=float),
                               is_parameter=True, name=name))
        self._parameters.append(index)
        return Variable(self, index)

    @property
    def parameters(self) -> List["Variable"]:
        return [Variable(self, i) for i in self._parameters]

    def record(self, op: str, value: np.ndarray,
               parents: Sequence["Variable"], vjps: Sequence[VJP]) -> "Variable":
        if op not in SUPPORTED_PRIMITIVES:
            raise UnsupportedPrimitiveError(f"Primitive '{op}' is not supported")
        for parent in parents:
            if parent.tape is not self:
                raise TapeError("Operands belong to different tapes")
        index = len(self.nodes)
        self.nodes.append(Node(index, op, value,
                               tuple(p.index for p in parents), tuple(vjps)))
        return Variable(self, index)


class Variable:
    """Handle to a node on a tape; supports numpy-style arithmetic."""

    __slots__ = ("tape", "index")
    # ndarray binary operators defer to the reflected Variable methods
    __array_ufunc__ = None

    def __init__(self, tape: Tape, index: int):
        self.tape = tape
        self.index = index

    @property
    def node(self) -> Node:
        return self.tape.nodes[self.index]

    @property
    def value(self) -> np.ndarray:
        return self.tape.nodes[self.index].value

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    @property
    def ndim(self) -> int:
        return self.value.ndim

    @property
    def T(self) -> "Variable":
        return transpose(self)

    def sum(self, axis: Optional[int] = None) -> "Variable":
        return reduce_sum(self, axis)

    def __repr__(self) -> str:
        return f"Variable(#{self.index}, op={self.node.op}, shape={self.shape})"

    def _apply(self, fn, other, reflected=False):
        if isinstance(other, Dual):
            return NotImplemented
        return fn(other, self) if reflected else fn(self, other)

    def __add__(self, other): return self._apply(add, other)
    def __radd__(self, other): return self._apply(add, other, True)
    def __sub__(self, other): return self._apply(sub, other)
    def __rsub__(self, other): return self._apply(sub, other, True)
    def __mul__(self, other): return self._apply(mul, other)
    def __rmul__(self, other): return self._apply(mul, other, True)
    def __truediv__(self, other): return self._apply(div, other)
    def __rtruediv__(self, other): return self._apply(div, other, True)
    def __matmul__(self, other): return self._apply(matmul, other)
    def __rmatmul__(self, other): return self._apply(matmul, other, True)
    def __neg__(self): return neg(self)
    def __getitem__(self, index): return getitem(self, index)

    def __pow__(self, other):
        raise UnsupportedPrimitiveError("'**' is not a supported primitive; use multiplication")


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def value_of(x: Operand) -> np.ndarray:
    """Plain numpy value of an operand."""
    if isinstance(x, Variable):
        return x.value
    return np.asarray(x, dtype=float)


def _tape_of(*operands: Operand) -> Optional[Tape]:
    tape = None
    for x in operands:
        if isinstance(x, Variable):
            if tape is None:
                tape = x.tape
            elif x.tape is not tape:
                raise TapeError("Operands belong to different tapes")
    return tape


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast adjoint back down to the operand's shape."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


def _binary(op: str, a: Operand, b: Operand, out: np.ndarray,
            da: Callable[[np.ndarray], np.ndarray],
            db: Callable[[np.ndarray], np.ndarray]) -> Operand:
    tape = _tape_of(a, b)
    if tape is None:
        return out
    parents, vjps = [], []
    if isinstance(a, Variable):
        shape_a = a.shape
        parents.append(a)
        vjps.append(lambda g, s=shape_a: _unbroadcast(da(g), s))
    if isinstance(b, Variable):
        shape_b = b.shape
        parents.append(b)
        vjps.append(lambda g, s=shape_b: _unbroadcast(db(g), s))
    return tape.record(op, out, parents, vjps)


# ---------------------------------------------------------------------------
# Primitives
# ---------------------------------------------------------------------------

def add(a: Operand, b: Operand) -> Operand:
    av, bv = value_of(a), value_of(b)
    return _binary("add", a, b, av + bv, lambda g: g, lambda g: g)


def sub(a: Operand, b: Operand) -> Operand:
    av, bv = value_of(a), value_of(b)
    return _binary("sub", a, b, av - bv, lambda g: g, lambda g: -g)


def mul(a: Operand, b: Operand) -> Operand:
    av, bv = value_of(a), value_of(b)
    return _binary("mul", a, b, av * bv, lambda g: g * bv, lambda g: g * av)


def div(a: Operand, b: Operand) -> Operand:
    av, bv = value_of(a), value_of(b)
    out = av / bv
    return _binary("div", a, b, out, lambda g: g / bv, lambda g: -g * out / bv)


def neg(a: Operand) -> Operand:
    out = -value_of(a)
    if not isinstance(a, Variable):
        return out
    return a.tape.record("neg", out, [a], [lambda g: -g])


def tanh(a: Operand) -> Operand:
    out = np.tanh(value_of(a))
    if not isinstance(a, Variable):
        return out
    return a.tape.record("tanh", out, [a], [lambda g: g * (1.0 - out * out)])


def matmul(a: Operand, b: Operand) -> Operand:
    av, bv = value_of(a), value_of(b)
    out = av @ bv
    tape = _tape_of(a, b)
    if tape is None:
        return out
    if av.ndim > 2 or bv.ndim > 2:
        raise UnsupportedPrimitiveError("Recorded matmul supports vectors and matrices only")

    def da(g):
        if av.ndim == 2 and bv.ndim == 2:
            return g @ bv.T
        if av.ndim == 2:
            return np.outer(g, bv)
        if bv.ndim == 2:
            return bv @ g
        return g * bv

    def db(g):
        if av.ndim == 2 and bv.ndim == 2:
            return av.T @ g
        if av.ndim == 2:
            return av.T @ g
        if bv.ndim == 2:
            return np.outer(av, g)
        return g * av

    parents, vjps = [], []
    if isinstance(a, Variable):
        parents.append(a)
        vjps.append(da)
    if isinstance(b, Variable):
        parents.append(b)
        vjps.append(db)
    return tape.record("matmul", out, parents, vjps)


def transpose(a: Operand) -> Operand:
    out = value_of(a).T
    if not isinstance(a, Variable):
        return out
    return a.tape.record("transpose", out, [a], [lambda g: g.T])


def reduce_sum(a: Operand, axis: Optional[int] = None) -> Operand:
    av = value_of(a)
    out = np.asarray(av.sum(axis=axis))
    if not isinstance(a, Variable):
        return out
    shape = av.shape

    def vjp(g):
        if axis is None:
            return np.broadcast_to(g, shape).copy()
        return np.broadcast_to(np.expand_dims(g, axis), shape).copy()

    return a.tape.record("sum", out, [a], [vjp])


def getitem(a: Operand, index) -> Operand:
    av = value_of(a)
    out = np.array(av[index])
    if not isinstance(a, Variable):
        return out
    shape = av.shape

    def vjp(g):
        grad = np.zeros(shape)
        np.add.at(grad, index, g)
        return grad

    return a.tape.record("getitem", out, [a], [vjp])


def stack(items: Sequence[Operand], axis: int = 0) -> Operand:
    values = [value_of(x) for x in items]
    out = np.stack(values, axis=axis)
    tape = _tape_of(*items)
    if tape is None:
        return out
    parents, vjps = [], []
    for position, x in enumerate(items):
        if isinstance(x, Variable):
            parents.append(x)
            vjps.append(lambda g, k=position: np.take(g, k, axis=axis))
    return tape.record("stack", out, parents, vjps)


# ---------------------------------------------------------------------------
# Forward mode
# ---------------------------------------------------------------------------

def _reflect(forward: str, reflected: str):
    def handler(a, b):
        if isinstance(a, Dual):
            return getattr(a, forward)(b)
        return getattr(b, reflected)(a)
    return handler


_UFUNC_DISPATCH = {
    np.add: _reflect("__add__", "__radd__"),
    np.subtract: _reflect("__sub__", "__rsub__"),
    np.multiply: _reflect("__mul__", "__rmul__"),
    np.true_divide: _reflect("__truediv__", "__rtruediv__"),
    np.matmul: _reflect("__matmul__", "__rmatmul__"),
}


class Dual:
    """
    Value with one tangent per seeded input direction.

    ``value`` and every tangent are operands (numpy arrays or tape
    Variables). Arithmetic follows the chain rule exactly; operands that are
    not Dual are treated as constants with zero tangent.
    """

    __slots__ = ("value", "tangents")
    __array_priority__ = 200.0

    def __init__(self, value: Operand, tangents: Sequence[Operand]):
        self.value = value
        self.tangents = tuple(tangents)

    @classmethod
    def seed(cls, value, directions: Sequence) -> "Dual":
        """Seed an input with the given tangent directions."""
        value = np.asarray(value, dtype=float)
        return cls(value, [np.broadcast_to(np.asarray(d, dtype=float), value.shape).copy()
                           for d in directions])

    @property
    def n_directions(self) -> int:
        return len(self.tangents)

    @property
    def shape(self) -> Tuple[int, ...]:
        return value_of(self.value).shape

    def _check(self, other: "Dual") -> None:
        if other.n_directions != self.n_directions:
            raise ValueError(
                f"Tangent length mismatch: {self.n_directions} vs {other.n_directions}"
            )

    def __add__(self, other):
        if isinstance(other, Dual):
            self._check(other)
            return Dual(add(self.value, other.value),
                        [add(s, o) for s, o in zip(self.tangents, other.tangents)])
        return Dual(add(self.value, other), self.tangents)

    def __radd__(self, other):
        return Dual(add(other, self.value), self.tangents)

    def __sub__(self, other):
        if isinstance(other, Dual):
            self._check(other)
            return Dual(sub(self.value, other.value),
                        [sub(s, o) for s, o in zip(self.tangents, other.tangents)])
        return Dual(sub(self.value, other), self.tangents)

    def __rsub__(self, other):
        return Dual(sub(other, self.value), [neg(t) for t in self.tangents])

    def __neg__(self):
        return Dual(neg(self.value), [neg(t) for t in self.tangents])

    def __mul__(self, other):
        if isinstance(other, Dual):
            self._check(other)
            return Dual(mul(self.value, other.value),
                        [add(mul(s, other.value), mul(self.value, o))
                         for s, o in zip(self.tangents, other.tangents)])
        return Dual(mul(self.value, other), [mul(t, other) for t in self.tangents])

    def __rmul__(self, other):
        return Dual(mul(other, self.value), [mul(other, t) for t in self.tangents])

    def __truediv__(self, other):
        if isinstance(other, Dual):
            self._check(other)
            quotient = div(self.value, other.value)
            return Dual(quotient,
                        [div(sub(s, mul(quotient, o)), other.value)
                         for s, o in zip(self.tangents, other.tangents)])
        return Dual(div(self.value, other), [div(t, other) for t in self.tangents])

    def __rtruediv__(self, other):
        quotient = div(other, self.value)
        return Dual(quotient,
                    [neg(div(mul(quotient, t), self.value)) for t in self.tangents])

    def __matmul__(self, other):
        if isinstance(other, Dual):
            self._check(other)
            return Dual(matmul(self.value, other.value),
                        [add(matmul(s, other.value), matmul(self.value, o))
                         for s, o in zip(self.tangents, other.tangents)])
        return Dual(matmul(self.value, other), [matmul(t, other) for t in self.tangents])

    def __rmatmul__(self, other):
        return Dual(matmul(other, self.value), [matmul(other, t) for t in self.tangents])

    def __getitem__(self, index):
        return Dual(getitem(self.value, index), [getitem(t, index) for t in self.tangents])

    def tanh(self) -> "Dual":
        out = tanh(self.value)
        slope = sub(1.0, mul(out, out))
        return Dual(out, [mul(slope, t) for t in self.tangents])

    def sum(self, axis: Optional[int] = None) -> "Dual":
        return Dual(reduce_sum(self.value, axis), [reduce_sum(t, axis) for t in self.tangents])

    def __pow__(self, other):
        raise UnsupportedPrimitiveError("'**' is not a supported primitive")

    def __abs__(self):
        raise UnsupportedPrimitiveError("'abs' is not a supported primitive")

    def __array_ufunc__(self, ufunc, method, *inputs, **kwargs):
        if method != "__call__" or kwargs:
            raise UnsupportedPrimitiveError(f"numpy '{ufunc.__name__}.{method}' is not supported")
        if ufunc is np.tanh:
            return inputs[0].tanh()
        if ufunc is np.negative:
            return -inputs[0]
        handler = _UFUNC_DISPATCH.get(ufunc)
        if handler is None:
            raise UnsupportedPrimitiveError(f"numpy '{ufunc.__name__}' is not a supported primitive")
        return handler(*inputs)


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------

def forward_jvp(program: Callable[[Dual], Union[Dual, Operand]],
                inputs, seed) -> Tuple[np.ndarray, np.ndarray]:
    """
    Evaluate ``program`` and its directional derivative along ``seed``.

    Returns:
        (value, derivative) as numpy arrays.
    """
    x = Dual.seed(inputs, [seed])
    out = program(x)
    if not isinstance(out, Dual):
        value = value_of(out)
        return np.array(value), np.zeros_like(value)
    return np.array(value_of(out.value)), np.array(value_of(out.tangents[0]))


def reverse_grad(tape: Tape, output: "Variable",
                 wrt: Optional[Sequence["Variable"]] = None) -> List[np.ndarray]:
    """
    Replay the tape backwards from a scalar output.

    Returns one gradient array per parameter (registration order, or the
    order of ``wrt``). Parameters that do not influence the output get zeros.
    """
    if not isinstance(output, Variable) or output.tape is not tape:
        raise TapeError("Output is not a node of this tape")
    if output.value.size != 1:
        raise TapeError(f"Output must be scalar, got shape {output.shape}")

    adjoints: Dict[int, np.ndarray] = {output.index: np.ones_like(output.value)}
    for index in range(output.index, -1, -1):
        adjoint = adjoints.get(index)
        if adjoint is None:
            continue
        node = tape.nodes[index]
        if not np.all(np.isfinite(adjoint)):
            raise NonFiniteAdjointError(index, node.op)
        for parent, vjp in zip(node.parents, node.vjps):
            contribution = vjp(adjoint)
            if parent in adjoints:
                adjoints[parent] = adjoints[parent] + contribution
            else:
                adjoints[parent] = contribution

    targets = tape.parameters if wrt is None else list(wrt)
    grads = []
    for var in targets:
        if var.tape is not tape:
            raise TapeError("Gradient requested for a variable of another tape")
        grad = adjoints.get(var.index)
        grads.append(np.zeros_like(var.value) if grad is None else np.array(grad, dtype=float))
    return grads


def nested_grad(loss: Callable[[Tape, List["Variable"]], "Variable"],
                params: Sequence[np.ndarray]) -> Tuple[float, List[np.ndarray]]:
    """
    Value and exact parameter gradient of a loss that may contain Dual
    (input-derivative) computations.

    ``loss`` receives a fresh tape and the parameters registered on it and
    must return a scalar Variable (or a constant when it does not depend on
    the parameters).
    """
    tape = Tape()
    variables = [tape.parameter(p) for p in params]
    out = loss(tape, variables)
    if not isinstance(out, Variable):
        return float(value_of(out)), [np.zeros_like(np.asarray(p, dtype=float)) for p in params]
    return float(out.value), reverse_grad(tape, out, variables)
