"""Condition-injected denoiser over the 24-dim design vector.

Feature-wise linear modulation (FiLM) injects the 8-angle condition into every
hidden layer: a small embedding network maps the condition to a per-layer
(scale, shift) pair applied after each linear + activation block. Timesteps
enter through a sinusoidal embedding concatenated to the input.
"""

from __future__ import annotations

import math

import torch
from torch import nn


class SinusoidalEmbedding(nn.Module):
    def __init__(self, dim: int, max_period: float = 10_000.0):
        super().__init__()
        if dim % 2 != 0:
            raise ValueError("embedding dim must be even")
        self.dim = dim
        self.max_period = max_period

    def forward(self, t: torch.Tensor) -> torch.Tensor:
        half = self.dim // 2
        freqs = torch.exp(
            -math.log(self.max_period) * torch.arange(half, dtype=torch.float32) / half
        ).to(t.device)
        args = t.float().unsqueeze(-1) * freqs
        return torch.cat([torch.sin(args), torch.cos(args)], dim=-1)


class Denoiser(nn.Module):
    """MLP epsilon-predictor with FiLM condition injection at every layer."""

    def __init__(
        self,
        x_dim: int = 24,
        cond_dim: int = 8,
        hidden: int = 256,
        n_layers: int = 4,
        time_dim: int = 64,
    ):
        super().__init__()
        self.time_embed = SinusoidalEmbedding(time_dim)
        self.cond_net = nn.Sequential(
            nn.Linear(cond_dim, hidden),
            nn.SiLU(),
            nn.Linear(hidden, 2 * hidden * n_layers),
        )
        self.input = nn.Linear(x_dim + time_dim, hidden)
        self.blocks = nn.ModuleList(nn.Linear(hidden, hidden) for _ in range(n_layers))
        self.act = nn.SiLU()
        self.output = nn.Linear(hidden, x_dim)
        # zero-init the head so the untrained model predicts zero noise
        nn.init.zeros_(self.output.weight)
        nn.init.zeros_(self.output.bias)
        self.n_layers = n_layers
        self.hidden = hidden
        self.x_dim = x_dim
        self.cond_dim = cond_dim

    def forward(self, x: torch.Tensor, t: torch.Tensor, cond: torch.Tensor) -> torch.Tensor:
        if cond.shape[-1] != self.cond_dim:
            raise ValueError(
                f"condition dimension {cond.shape[-1]} != model condition dimension {self.cond_dim}"
            )
        film = self.cond_net(cond).view(-1, self.n_layers, 2, self.hidden)
        h = self.act(self.input(torch.cat([x, self.time_embed(t)], dim=-1)))
        for i, block in enumerate(self.blocks):
            scale, shift = film[:, i, 0], film[:, i, 1]
            h = h + self.act(block(h)) * (1.0 + scale) + shift
        return self.output(h)
