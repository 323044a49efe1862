"""Training and sampling for the conditional denoising diffusion model."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np
import torch

from .data import (
    COND_DIM,
    X_DIM,
    NormStats,
    decode_designs,
    load_training_arrays,
)
from .model import Denoiser
from .schedule import Schedule


@dataclass
class DiffusionConfig:
    timesteps: int = 500
    beta_start: float = 1e-4
    beta_end: float = 2e-2
    hidden: int = 256
    n_layers: int = 4
    time_dim: int = 64
    learning_rate: float = 1e-5
    epochs: int = 10_000
    batch_size: int = 256
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.beta_start < self.beta_end < 1.0:
            raise ValueError("betas must be strictly increasing within (0, 1)")
        if self.timesteps < 1 or self.epochs < 1 or self.batch_size < 1:
            raise ValueError("timesteps, epochs, and batch_size must be positive")


@dataclass
class TrainResult:
    first_epoch_loss: float
    final_epoch_loss: float
    losses: list[float]


class DiffusionModel:
    """Trained denoiser + schedule + normalization statistics."""

    def __init__(self, config: DiffusionConfig, net: Denoiser, stats: NormStats):
        self.config = config
        self.net = net
        self.stats = stats
        self.schedule = Schedule(config.timesteps, config.beta_start, config.beta_end)

    def save(self, path) -> None:
        torch.save(
            {
                "config": asdict(self.config),
                "state_dict": self.net.state_dict(),
                "stats": self.stats.to_dict(),
            },
            path,
        )

    @classmethod
    def load(cls, path) -> "DiffusionModel":
        blob = torch.load(path, map_location="cpu", weights_only=True)
        config = DiffusionConfig(**blob["config"])
        net = Denoiser(
            x_dim=X_DIM,
            cond_dim=COND_DIM,
            hidden=config.hidden,
            n_layers=config.n_layers,
            time_dim=config.time_dim,
        )
        net.load_state_dict(blob["state_dict"])
        net.eval()
        return cls(config, net, NormStats.from_dict(blob["stats"]))


def train(dataset_path, config: DiffusionConfig) -> tuple[DiffusionModel, TrainResult]:
    """Train the epsilon-predictor with MSE loss; deterministic given the seed."""
    torch.manual_seed(config.seed)
    x_tr, c_tr, _, _, stats = load_training_arrays(dataset_path, config.seed)
    x = torch.tensor(x_tr, dtype=torch.float32)
    c = torch.tensor(c_tr, dtype=torch.float32)
    net = Denoiser(
        x_dim=X_DIM,
        cond_dim=COND_DIM,
        hidden=config.hidden,
        n_layers=config.n_layers,
        time_dim=config.time_dim,
    )
    schedule = Schedule(config.timesteps, config.beta_start, config.beta_end)
    opt = torch.optim.Adam(net.parameters(), lr=config.learning_rate)
    gen = torch.Generator().manual_seed(config.seed)
    n = len(x)
    losses = []
    for epoch in range(config.epochs):
        perm = torch.randperm(n, generator=gen)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            idx = perm[start : start + config.batch_size]
            xb, cb = x[idx], c[idx]
            t = torch.randint(config.timesteps, (len(xb),), generator=gen)
            eps = torch.randn(xb.shape, generator=gen)
            x_t = schedule.q_sample(xb, t, eps).float()
            pred = net(x_t, t, cb)
            loss = torch.mean((pred - eps) ** 2)
            opt.zero_grad()
            loss.backward()
            opt.step()
            epoch_loss += float(loss.detach()) * len(xb)
        epoch_loss /= n
        if not np.isfinite(epoch_loss):
            raise RuntimeError(
                "training diverged (non-finite loss); config: "
                + json.dumps(asdict(config), sort_keys=True)
            )
        losses.append(epoch_loss)
    net.eval()
    model = DiffusionModel(config, net, stats)
    return model, TrainResult(losses[0], losses[-1], losses)


@torch.no_grad()
def sample(model: DiffusionModel, conditions_norm: np.ndarray, seed: int = 0) -> np.ndarray:
    """Reverse diffusion per condition row; returns (n, 24) design vectors.

    Deterministic DDIM (eta = 0) trajectory from seeded initial noise, so
    sampling is reproducible for a given (model, conditions, seed).
    """
    cond = torch.tensor(np.atleast_2d(conditions_norm), dtype=torch.float32)
    if cond.shape[1] != COND_DIM:
        raise ValueError(f"conditions must have {COND_DIM} columns, got {cond.shape[1]}")
    gen = torch.Generator().manual_seed(seed)
    n = len(cond)
    sched = model.schedule
    x = torch.randn((n, X_DIM), generator=gen)
    ab = sched.alpha_bar.float()
    for ti in range(model.config.timesteps - 1, -1, -1):
        t = torch.full((n,), ti, dtype=torch.long)
        eps = model.net(x, t, cond)
        x0 = (x - torch.sqrt(1.0 - ab[ti]) * eps) / torch.sqrt(ab[ti])
        if ti > 0:
            x = torch.sqrt(ab[ti - 1]) * x0 + torch.sqrt(1.0 - ab[ti - 1]) * eps
        else:
            x = x0
    return x.double().numpy()


def sample_designs(
    model: DiffusionModel, conditions_theta: np.ndarray, seed: int = 0
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(radii, thicknesses, orientations) for raw angle conditions."""
    from .data import encode_conditions

    x = sample(model, encode_conditions(conditions_theta, model.stats), seed)
    return decode_designs(x)
