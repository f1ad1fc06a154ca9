"""
Fully connected feedforward network with exact input jets

The network is

    h^[0] = x,  h^[l] = phi(W^[l-1] h^[l-1] + b^[l-1]) for 1 <= l <= L-1,
    f(x) = psi(W^[L-1] h^[L-1] + b^[L-1])

with phi = tanh on hidden layers and psi the output activation (e^(-u) keeps
the output strictly positive, identity does not). Parameters live in one flat
float64 tensor; per-layer weights and biases are views into it.

forward_jet propagates truncated jets layer by layer: affine maps act
linearly on every entry and activations use Faa di Bruno's formula, so the
derivatives with respect to the inputs are exact up to order 3. Because all
of it is ordinary torch arithmetic, reverse-mode gradients with respect to
the parameters flow through the jets (grad_params).
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import torch

from algorithms.exceptions import ConfigurationError, NonFiniteLossError
from algorithms.network.jets import (
    DTYPE,
    JetTable,
    MultiIndex,
    downward_closure,
    exp_negative_derivatives,
    identity_derivatives,
    tanh_derivatives,
)

logger = logging.getLogger(__name__)

HIDDEN_ACTIVATIONS = ('tanh', 'identity')
OUTPUT_ACTIVATIONS = ('exp_negative', 'identity')

_ACTIVATION_DERIVATIVES = {
    'tanh': tanh_derivatives,
    'exp_negative': exp_negative_derivatives,
    'identity': identity_derivatives,
}


@dataclass(frozen=True)
class NetworkSpec:
    """Layer widths [m0, m1, ..., mL] and activations of a feedforward network."""
    layer_widths: Tuple[int, ...]
    hidden_activation: str = 'tanh'
    output_activation: str = 'exp_negative'

    def __post_init__(self):
        widths = tuple(int(w) for w in self.layer_widths)
        object.__setattr__(self, 'layer_widths', widths)
        if len(widths) < 3:
            raise ConfigurationError(f"A network needs L >= 2 layers, got widths {list(widths)}")
        if any(w < 1 for w in widths):
            raise ConfigurationError(f"Layer widths must be positive, got {list(widths)}")
        if self.hidden_activation not in HIDDEN_ACTIVATIONS:
            raise ConfigurationError(
                f"Unknown hidden activation '{self.hidden_activation}'. Use one of: {', '.join(HIDDEN_ACTIVATIONS)}"
            )
        if self.output_activation not in OUTPUT_ACTIVATIONS:
            raise ConfigurationError(
                f"Unknown output activation '{self.output_activation}'. Use one of: {', '.join(OUTPUT_ACTIVATIONS)}"
            )

    @property
    def depth(self) -> int:
        return len(self.layer_widths) - 1

    @property
    def input_width(self) -> int:
        return self.layer_widths[0]

    @property
    def output_width(self) -> int:
        return self.layer_widths[-1]

    @property
    def n_params(self) -> int:
        widths = self.layer_widths
        return sum(widths[l + 1] * (widths[l] + 1) for l in range(self.depth))

    def layer_shapes(self) -> List[Tuple[int, int]]:
        return [(self.layer_widths[l + 1], self.layer_widths[l]) for l in range(self.depth)]

    def to_dict(self) -> Dict:
        return {
            'layer_widths': list(self.layer_widths),
            'hidden_activation': self.hidden_activation,
            'output_activation': self.output_activation,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "NetworkSpec":
        return cls(tuple(data['layer_widths']), data.get('hidden_activation', 'tanh'),
                   data.get('output_activation', 'exp_negative'))


class ParameterVector:
    """Flat parameter vector theta with structured (W, b) views per layer."""

    def __init__(self, spec: NetworkSpec, flat: torch.Tensor):
        if flat.dim() != 1 or flat.numel() != spec.n_params:
            raise ValueError(f"Expected a flat vector of {spec.n_params} parameters, got shape {tuple(flat.shape)}")
        if flat.dtype != DTYPE:
            raise ValueError(f"Parameters must be float64, got {flat.dtype}")
        self.spec = spec
        self.flat = flat

    def layers(self) -> List[Tuple[torch.Tensor, torch.Tensor]]:
        views = []
        offset = 0
        for rows, cols in self.spec.layer_shapes():
            weight = self.flat[offset:offset + rows * cols].view(rows, cols)
            offset += rows * cols
            bias = self.flat[offset:offset + rows]
            offset += rows
            views.append((weight, bias))
        return views

    @classmethod
    def from_layers(cls, spec: NetworkSpec, layers: Sequence[Tuple[torch.Tensor, torch.Tensor]]) -> "ParameterVector":
        shapes = spec.layer_shapes()
        if len(layers) != len(shapes):
            raise ValueError(f"Expected {len(shapes)} layers, got {len(layers)}")
        pieces = []
        for (weight, bias), (rows, cols) in zip(layers, shapes):
            weight = torch.as_tensor(weight, dtype=DTYPE)
            bias = torch.as_tensor(bias, dtype=DTYPE)
            if tuple(weight.shape) != (rows, cols) or tuple(bias.shape) != (rows,):
                raise ValueError(f"Layer shape mismatch: expected W {rows}x{cols} and b {rows}")
            pieces.extend([weight.reshape(-1), bias])
        return cls(spec, torch.cat(pieces))

    @classmethod
    def zeros(cls, spec: NetworkSpec) -> "ParameterVector":
        return cls(spec, torch.zeros(spec.n_params, dtype=DTYPE))

    def with_flat(self, flat: torch.Tensor) -> "ParameterVector":
        return ParameterVector(self.spec, flat)

    def detach(self) -> "ParameterVector":
        return ParameterVector(self.spec, self.flat.detach().clone())

    def __len__(self) -> int:
        return self.flat.numel()

    def __repr__(self) -> str:
        return f"ParameterVector(widths={list(self.spec.layer_widths)}, P={len(self)})"


def init_network(spec: NetworkSpec, seed: int) -> ParameterVector:
    """
    Draw initial parameters for a network.

    Weights of layer l are N(0, 2 / (m_l + m_{l+1})), biases are zero. The
    draw depends only on (spec, seed).
    """
    if seed < 0 or seed >= 2 ** 64:
        raise ValueError(f"Seed must be a 64-bit unsigned integer, got {seed}")
    rng = np.random.default_rng(seed)
    pieces = []
    for rows, cols in spec.layer_shapes():
        scale = np.sqrt(2.0 / (rows + cols))
        pieces.append(rng.standard_normal(rows * cols) * scale)
        pieces.append(np.zeros(rows))
    return ParameterVector(spec, torch.from_numpy(np.concatenate(pieces)))


def _as_batch(spec: NetworkSpec, x) -> Tuple[torch.Tensor, bool]:
    points = torch.as_tensor(x, dtype=DTYPE)
    single = points.dim() == 1
    if single:
        points = points.unsqueeze(0)
    if points.dim() != 2 or points.shape[1] != spec.input_width:
        raise ValueError(f"Network expects inputs of length {spec.input_width}, got shape {tuple(points.shape)}")
    return points, single


def _affine(h: torch.Tensor, weight: torch.Tensor, bias: Optional[torch.Tensor]) -> torch.Tensor:
    z = h @ weight.T
    return z if bias is None else z + bias


def forward(params: ParameterVector, spec: NetworkSpec, x) -> torch.Tensor:
    """Network output at one point (shape (m0,)) or a batch (shape (N, m0))."""
    h, single = _as_batch(spec, x)
    layers = params.layers()
    for weight, bias in layers[:-1]:
        h = _activate(_affine(h, weight, bias), spec.hidden_activation)
    weight, bias = layers[-1]
    out = _activate(_affine(h, weight, bias), spec.output_activation)
    out = out.squeeze(-1) if spec.output_width == 1 else out
    return out[0] if single else out


def _activate(z: torch.Tensor, activation: str) -> torch.Tensor:
    if activation == 'tanh':
        return torch.tanh(z)
    if activation == 'exp_negative':
        return torch.exp(-z)
    return z


def propagate_jet(params: ParameterVector, spec: NetworkSpec, inputs: JetTable) -> JetTable:
    """
    Push an input jet through the network.

    `inputs` holds the jet of the input features (entries of shape (N, m0))
    with respect to any set of differentiation variables; lifted features
    (e.g. sin 2 pi x) carry their own derivatives. Returns the jet of the
    scalar output with entries of shape (N,).
    """
    zero = MultiIndex.zero(inputs.n_vars)
    if inputs.value.shape[-1] != spec.input_width:
        raise ValueError(f"Input jet has {inputs.value.shape[-1]} features, network expects {spec.input_width}")
    h = inputs
    layers = params.layers()
    for l, (weight, bias) in enumerate(layers):
        # Bias enters the value only; derivative entries are linear in W.
        z = JetTable({k: _affine(v, weight, bias if k == zero else None) for k, v in h.entries.items()},
                     h.n_vars)
        activation = spec.output_activation if l == len(layers) - 1 else spec.hidden_activation
        h = z if activation == 'identity' else z.apply(_ACTIVATION_DERIVATIVES[activation])
    if spec.output_width == 1:
        h = h.map(lambda v: v.squeeze(-1))
    return h


def identity_input_jet(points: torch.Tensor, keys: Iterable[MultiIndex]) -> JetTable:
    """Jet of the input coordinates themselves with respect to all of them."""
    n_vars = points.shape[-1]
    entries = {}
    for alpha in keys:
        if alpha.order == 0:
            entries[alpha] = points
        elif alpha.order == 1:
            column = torch.zeros_like(points)
            column[..., alpha.variables()[0]] = 1.0
            entries[alpha] = column
        else:
            entries[alpha] = torch.zeros_like(points)
    return JetTable(entries, n_vars)


def forward_jet(params: ParameterVector, spec: NetworkSpec, x,
                requested: Iterable[Sequence[int]]) -> JetTable:
    """
    Exact partial derivatives of the network output with respect to its inputs.

    Args:
        params: network parameters
        spec: network layout
        x: one point (m0,) or a batch (N, m0)
        requested: multi-indices over the m0 inputs, each of total order <= 3

    Returns:
        JetTable holding every requested entry, the zeroth entry and the
        lower-order entries they depend on
    """
    points, single = _as_batch(spec, x)
    requested = [MultiIndex(a) for a in requested]
    for alpha in requested:
        if len(alpha) != spec.input_width:
            raise ValueError(f"Multi-index {alpha!r} does not match {spec.input_width} inputs")
    keys = downward_closure(requested + [MultiIndex.zero(spec.input_width)])
    jet = propagate_jet(params, spec, identity_input_jet(points, keys))
    if single:
        jet = jet.map(lambda v: v[0])
    jet.point = points[0] if single else points
    return jet


def value_and_grad(closure: Callable[[ParameterVector], object], params: ParameterVector,
                   step: Optional[int] = None):
    """
    Evaluate a loss closure and its gradient with respect to the flat parameters.

    The closure may return a scalar tensor or any object with a `total`
    scalar tensor attribute (e.g. LossBreakdown); that object is returned
    together with the gradient.
    """
    flat = params.flat.detach().requires_grad_(True)
    output = closure(params.with_flat(flat))
    total = getattr(output, 'total', output)
    if not isinstance(total, torch.Tensor):
        total = torch.as_tensor(total, dtype=DTYPE)
    if not torch.isfinite(total).all():
        raise NonFiniteLossError(f"Loss is not finite ({total.item()})", step=step)
    if not total.requires_grad:
        return output, torch.zeros_like(params.flat)
    (grad,) = torch.autograd.grad(total, flat, allow_unused=True)
    if grad is None:
        grad = torch.zeros_like(params.flat)
    return output, grad.detach()


def grad_params(closure: Callable[[ParameterVector], object], params: ParameterVector) -> torch.Tensor:
    """Gradient of a scalar loss closure with respect to the flat parameter vector."""
    _, grad = value_and_grad(closure, params)
    return grad
