"""
Parameter containers and the denoiser-branch interface.

A Module owns named leaf Tensors and child Modules. Parameter paths are
dot-joined ("blocks.0.m0_cs.wq"), which is also how they appear in checkpoints.
"""

import hashlib
from abc import ABC, abstractmethod
from collections import OrderedDict
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from ..numerics import Tensor, as_tensor, matmul
from ..utils.errors import ContractError, DataError, ShapeError


class Module:
    """Base class for everything that holds trainable parameters"""

    def __init__(self):
        self._parameters: "OrderedDict[str, Tensor]" = OrderedDict()
        self._modules: "OrderedDict[str, Module]" = OrderedDict()

    def add_parameter(self, name: str, value: np.ndarray, requires_grad: bool = True) -> Tensor:
        param = Tensor(value, requires_grad=requires_grad, name=name)
        self._parameters[name] = param
        return param

    def add_module(self, name: str, module: "Module") -> "Module":
        self._modules[name] = module
        return module

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Tensor]]:
        for name, param in self._parameters.items():
            yield prefix + name, param
        for name, module in self._modules.items():
            yield from module.named_parameters(prefix + name + ".")

    def parameters(self) -> List[Tensor]:
        return [p for _, p in self.named_parameters()]

    def parameter_dict(self, prefix: str = "") -> Dict[str, Tensor]:
        return dict(self.named_parameters(prefix))

    def trainable_parameters(self, prefix: str = "") -> Dict[str, Tensor]:
        return {name: p for name, p in self.named_parameters(prefix) if p.requires_grad}

    def requires_grad_(self, flag: bool = True) -> "Module":
        for param in self.parameters():
            param.requires_grad = flag
            if not flag:
                param.grad = None
        return self

    def zero_grad(self) -> None:
        for param in self.parameters():
            param.grad = None

    def state_dict(self, prefix: str = "") -> Dict[str, np.ndarray]:
        return {name: np.array(p.data) for name, p in self.named_parameters(prefix)}

    def load_state_dict(self, state: Dict[str, np.ndarray], prefix: str = "", strict: bool = True) -> None:
        params = self.parameter_dict(prefix)
        missing = sorted(set(params) - set(state))
        if missing:
            raise DataError(f"state is missing {len(missing)} parameter(s), e.g. '{missing[0]}'")
        if strict:
            unexpected = sorted(k for k in state if k.startswith(prefix) and k not in params)
            if unexpected:
                raise DataError(f"state has unexpected parameter(s), e.g. '{unexpected[0]}'")
        for name, param in params.items():
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != param.shape:
                raise ShapeError(f"parameter '{name}' shape mismatch", param.shape, value.shape)
            param.assign(value)

    def parameter_count(self) -> int:
        return int(sum(p.size for p in self.parameters()))

    def checksum(self) -> str:
        """SHA-256 over parameter names and little-endian bytes"""
        digest = hashlib.sha256()
        for name, param in sorted(self.named_parameters(), key=lambda item: item[0]):
            digest.update(name.encode("utf-8"))
            digest.update(np.ascontiguousarray(param.data, dtype="<f8").tobytes())
        return digest.hexdigest()


class ModuleList(Module):
    """Children named "0", "1", ... in order"""

    def __init__(self, modules: Sequence[Module] = ()):
        super().__init__()
        self._items: List[Module] = []
        for module in modules:
            self.append(module)

    def append(self, module: Module) -> None:
        self.add_module(str(len(self._items)), module)
        self._items.append(module)

    def __getitem__(self, index: int) -> Module:
        return self._items[index]

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self):
        return iter(self._items)


def xavier_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


class Linear(Module):
    """y = x @ W + b with W stored as (in, out)"""

    def __init__(self, in_dim: int, out_dim: int, rng: Optional[np.random.Generator] = None,
                 init: str = "xavier", bias: bool = True):
        super().__init__()
        self.in_dim = in_dim
        self.out_dim = out_dim
        if init == "zeros":
            weight = np.zeros((in_dim, out_dim))
        elif init == "xavier":
            if rng is None:
                raise ContractError("xavier initialization needs a random generator")
            weight = xavier_uniform(rng, in_dim, out_dim)
        else:
            raise ContractError(f"Unknown initialization '{init}'")
        self.weight = self.add_parameter("weight", weight)
        self.bias = self.add_parameter("bias", np.zeros(out_dim)) if bias else None

    def __call__(self, x) -> Tensor:
        x = as_tensor(x)
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ShapeError(f"Linear expects ... x {self.in_dim} input", x.shape, self.weight.shape)
        out = matmul(x, self.weight)
        return out + self.bias if self.bias is not None else out


class DenoiserBranch(Module, ABC):
    """
    What the dual-branch composer needs from a main branch: an input
    embedding, a timestep embedding, an ordered list of blocks that each map
    (h, eps_t, context) -> h, and an output head.
    """

    @abstractmethod
    def embed(self, x_t) -> Tensor:
        """T x D noisy motion -> T x C latent"""
        pass

    @abstractmethod
    def timestep_embedding(self, t: int) -> Tensor:
        """Integer timestep -> 1 x C embedding shared by every FiLM"""
        pass

    @property
    @abstractmethod
    def blocks(self) -> ModuleList:
        pass

    @abstractmethod
    def head(self, h: Tensor) -> Tensor:
        """T x C latent -> T x D x_start prediction"""
        pass

    def __call__(self, x_t, t: int, context) -> Tensor:
        eps_t = self.timestep_embedding(t)
        h = self.embed(x_t)
        for block in self.blocks:
            h = block(h, eps_t, context)
        return self.head(h)
