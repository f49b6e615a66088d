"""
Named parameter collections and deterministic initialization.
"""

# Python imports
from __future__ import annotations

import zlib
from collections.abc import Iterator

import numpy as np

# Local imports
from ..exceptions import CheckpointError
from .tensor import Tensor


def uniform_init(name: str, shape: tuple[int, ...], fan_in: int, seed: int) -> Tensor:
    """
    Parameter drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)).

    The generator is keyed on (seed, crc32(name)), so a parameter's initial
    value does not depend on which other parameters a model declares.
    """
    bound = 1.0 / np.sqrt(max(fan_in, 1))
    rng = np.random.default_rng([seed, zlib.crc32(name.encode("utf-8"))])
    return Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True, name=name)


class ParameterSet:
    """
    Ordered mapping of parameter names to tensors.

    Iteration follows insertion order, which is fixed by model construction.

    Example:
        >>> params = ParameterSet()
        >>> params.add("head.out.weight", uniform_init("head.out.weight", (4, 1), 4, seed=0))
        >>> params.names()
        ['head.out.weight']
    """

    def __init__(self) -> None:
        self._tensors: dict[str, Tensor] = {}

    def add(self, name: str, tensor: Tensor) -> Tensor:
        """Register a tensor under a unique name."""
        if name in self._tensors:
            raise KeyError(f"Duplicate parameter name: {name}")
        tensor.name = name
        tensor.requires_grad = True
        self._tensors[name] = tensor
        return tensor

    def __getitem__(self, name: str) -> Tensor:
        return self._tensors[name]

    def __contains__(self, name: object) -> bool:
        return name in self._tensors

    def __iter__(self) -> Iterator[str]:
        return iter(self._tensors)

    def __len__(self) -> int:
        return len(self._tensors)

    def items(self) -> Iterator[tuple[str, Tensor]]:
        """(name, tensor) pairs in declaration order."""
        return iter(self._tensors.items())

    def names(self) -> list[str]:
        """Parameter names in declaration order."""
        return list(self._tensors)

    def shapes(self) -> dict[str, tuple[int, ...]]:
        """Parameter shapes by name."""
        return {name: t.shape for name, t in self._tensors.items()}

    def num_parameters(self) -> int:
        """Total number of scalar parameters."""
        return sum(t.size for t in self._tensors.values())

    def zero_grad(self) -> None:
        """Drop all accumulated gradients."""
        for tensor in self._tensors.values():
            tensor.zero_grad()

    def state_dict(self) -> dict[str, np.ndarray]:
        """Copies of all parameter arrays."""
        return {name: t.data.copy() for name, t in self._tensors.items()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        """
        Overwrite parameter values.

        Raises:
            CheckpointError: If names or shapes do not match
        """
        if set(state) != set(self._tensors):
            missing = sorted(set(self._tensors) - set(state))
            extra = sorted(set(state) - set(self._tensors))
            raise CheckpointError("Parameter names do not match", f"missing {missing}, unexpected {extra}")
        for name, tensor in self._tensors.items():
            values = np.asarray(state[name], dtype=np.float64)
            if values.shape != tensor.shape:
                raise CheckpointError("Parameter shape mismatch", f"{name}: {values.shape} vs {tensor.shape}")
            tensor.data = values.copy()
