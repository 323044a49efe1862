"""Linear-beta DDPM noise schedule and closed-form forward noising."""

from __future__ import annotations

import numpy as np
import torch


def linear_betas(timesteps: int, beta_start: float = 1e-4, beta_end: float = 2e-2) -> torch.Tensor:
    """Strictly increasing betas in (0, 1)."""
    if timesteps < 1:
        raise ValueError("need at least one timestep")
    if not 0.0 < beta_start < beta_end < 1.0:
        raise ValueError("betas must be strictly increasing within (0, 1)")
    return torch.linspace(beta_start, beta_end, timesteps, dtype=torch.float64)


class Schedule:
    """Precomputed alpha products for forward noising and reverse steps."""

    def __init__(self, timesteps: int, beta_start: float = 1e-4, beta_end: float = 2e-2):
        self.timesteps = timesteps
        self.betas = linear_betas(timesteps, beta_start, beta_end)
        self.alphas = 1.0 - self.betas
        self.alpha_bar = torch.cumprod(self.alphas, dim=0)

    def q_sample(self, x0: torch.Tensor, t: torch.Tensor, eps: torch.Tensor) -> torch.Tensor:
        """x_t = sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps."""
        ab = self.alpha_bar[t].unsqueeze(-1).to(x0.dtype)
        return torch.sqrt(ab) * x0 + torch.sqrt(1.0 - ab) * eps

    def predict_x0(self, x_t: torch.Tensor, t: torch.Tensor, eps: torch.Tensor) -> torch.Tensor:
        """Invert q_sample given the (true or predicted) noise."""
        ab = self.alpha_bar[t].unsqueeze(-1).to(x_t.dtype)
        return (x_t - torch.sqrt(1.0 - ab) * eps) / torch.sqrt(ab)
