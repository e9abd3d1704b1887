from __future__ import annotations

import math
from collections.abc import Sequence

import torch
from torch import nn


class FullyConnected(nn.Sequential):
    """Multi-layer perceptron with ELU between layers and a linear output."""

    def __init__(self, sizes: Sequence[int]) -> None:
        layers: list[nn.Module] = []
        for in_size, out_size in zip(sizes, sizes[1:]):
            layers.append(nn.Linear(in_size, out_size))
            layers.append(nn.ELU())
        layers.pop(-1)
        super().__init__(*layers)


class TwinNet(nn.Module):
    """Pair of networks, one per treatment arm.

    ``t = 1`` selects ``treated`` and ``t = 0`` selects ``control``; the
    unselected network receives no gradient from that row.
    """

    def __init__(self, sizes: Sequence[int]) -> None:
        super().__init__()
        self.treated = FullyConnected(sizes)
        self.control = FullyConnected(sizes)

    def forward(self, inputs: torch.Tensor, t: torch.Tensor) -> torch.Tensor:
        gate = t.bool().unsqueeze(-1)
        # single-arm batches skip the other network
        if bool(gate.all()):
            return self.treated(inputs)
        if not bool(gate.any()):
            return self.control(inputs)
        return torch.where(gate, self.treated(inputs), self.control(inputs))


def mlp_sizes(in_dim: int, hidden_layers: int, width: int, out_dim: int) -> list[int]:
    return [in_dim, *([width] * hidden_layers), out_dim]


def init_parameters(module: nn.Module, generator: torch.Generator) -> None:
    """Weights from Normal(0, 2 / (fan_in + fan_out)), zero biases.

    Both arms of a :class:`TwinNet` start from the same draw, so arm
    contrasts are zero until the data pulls the arms apart.
    """
    for layer in module.modules():
        if not isinstance(layer, nn.Linear):
            continue
        fan_out, fan_in = layer.weight.shape
        std = math.sqrt(2.0 / (fan_in + fan_out))
        with torch.no_grad():
            draw = torch.randn(layer.weight.shape, generator=generator, dtype=torch.float64)
            layer.weight.copy_(draw * std)
            layer.bias.zero_()
    for twin in module.modules():
        if isinstance(twin, TwinNet):
            twin.control.load_state_dict(twin.treated.state_dict())
