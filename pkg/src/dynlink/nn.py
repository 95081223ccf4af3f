"""Differentiable building blocks: graph convolution, snapshot encoder,
fixed cosine time encoder, graphical GRU cell, mean readout.

All blocks operate on dense tensors; adjacency matrices are normalized as
D^{-1/2} (A + I) D^{-1/2} with D the degree matrix of A + I.
"""

from __future__ import annotations

import math

import numpy as np
import torch
from torch import Tensor, nn


def normalize_adjacency(A: Tensor) -> Tensor:
    """Symmetric normalization with self-loops."""
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"adjacency must be square, got shape {tuple(A.shape)}")
    A_hat = A + torch.eye(A.shape[0], dtype=A.dtype, device=A.device)
    d_inv_sqrt = A_hat.sum(dim=1).rsqrt()
    return A_hat * d_inv_sqrt.unsqueeze(0) * d_inv_sqrt.unsqueeze(1)


class TimeEncoder(nn.Module):
    """Fixed cosine features cos(t * omega), omega_i = alpha^{-(i-1)/beta}.

    With the default alpha = beta = sqrt(d_time) the frequencies decay from
    omega_1 = 1 towards 0, so small integer steps map to distinct vectors.
    The frequencies are buffers, never trained.
    """

    def __init__(self, d_time: int = 100, alpha: float | None = None, beta: float | None = None):
        super().__init__()
        if d_time < 1:
            raise ValueError("d_time must be >= 1")
        alpha = math.sqrt(d_time) if alpha is None else alpha
        beta = math.sqrt(d_time) if beta is None else beta
        exponents = -torch.arange(d_time, dtype=torch.float64) / beta
        self.register_buffer("omega", alpha**exponents)
        self.d_time = d_time

    def forward(self, step: float | Tensor) -> Tensor:
        step = torch.as_tensor(step, dtype=self.omega.dtype, device=self.omega.device)
        if (step < 0).any():
            raise ValueError("time steps must be nonnegative")
        return torch.cos(step.unsqueeze(-1) * self.omega)


class GCNLayer(nn.Module):
    """One graph convolution: act(A_norm @ X @ W + b)."""

    def __init__(self, in_dim: int, out_dim: int, bias: bool = True, activation: str = "none"):
        super().__init__()
        if activation not in ("relu", "none"):
            raise ValueError(f"unknown activation {activation!r}")
        self.weight = nn.Parameter(torch.empty(in_dim, out_dim, dtype=torch.float64))
        self.bias = nn.Parameter(torch.zeros(out_dim, dtype=torch.float64)) if bias else None
        self.activation = activation

    def forward(self, X: Tensor, A_norm: Tensor) -> Tensor:
        if X.shape[0] != A_norm.shape[0]:
            raise ValueError(
                f"feature rows {X.shape[0]} do not match adjacency size {A_norm.shape[0]}"
            )
        if X.shape[1] != self.weight.shape[0]:
            raise ValueError(
                f"feature dim {X.shape[1]} does not match weight in-dim {self.weight.shape[0]}"
            )
        H = A_norm @ (X @ self.weight)
        if self.bias is not None:
            H = H + self.bias
        return torch.relu(H) if self.activation == "relu" else H


class SnapshotEncoder(nn.Module):
    """3-layer GCN stack; ReLU after the first two layers, linear output.

    The final layer is linear so embeddings stay signed: nonnegative outputs
    would cap inner-product decoder scores.
    """

    def __init__(self, d_in: int, d_enc: int, bias: bool = True):
        super().__init__()
        self.layers = nn.ModuleList(
            [
                GCNLayer(d_in, d_enc, bias=bias, activation="relu"),
                GCNLayer(d_enc, d_enc, bias=bias, activation="relu"),
                GCNLayer(d_enc, d_enc, bias=bias, activation="none"),
            ]
        )

    def forward(self, X: Tensor, A_norm: Tensor) -> Tensor:
        H = X
        for layer in self.layers:
            H = layer(H, A_norm)
        return H


class GraphGRUCell(nn.Module):
    """Single-cell gated recurrent unit whose linear maps are graph convolutions.

    reset    R = sigmoid(conv_rz(input) + conv_rs(state))
    update   U = sigmoid(conv_uz(input) + conv_us(state))
    cand     C = tanh(conv_cz(input) + R * conv_cs(state))
    next     S' = (1 - U) * C + U * state
    """

    def __init__(self, in_dim: int, d_state: int, bias: bool = True):
        super().__init__()
        self.reset_in = GCNLayer(in_dim, d_state, bias=bias)
        self.reset_state = GCNLayer(d_state, d_state, bias=bias)
        self.update_in = GCNLayer(in_dim, d_state, bias=bias)
        self.update_state = GCNLayer(d_state, d_state, bias=bias)
        self.cand_in = GCNLayer(in_dim, d_state, bias=bias)
        self.cand_state = GCNLayer(d_state, d_state, bias=bias)

    def forward(self, Z_cat: Tensor, A_norm: Tensor, S: Tensor) -> Tensor:
        R = torch.sigmoid(self.reset_in(Z_cat, A_norm) + self.reset_state(S, A_norm))
        U = torch.sigmoid(self.update_in(Z_cat, A_norm) + self.update_state(S, A_norm))
        C = torch.tanh(self.cand_in(Z_cat, A_norm) + R * self.cand_state(S, A_norm))
        return (1.0 - U) * C + U * S


def readout(S: Tensor) -> Tensor:
    """Mean-pool node representations into one graph-level vector."""
    if S.shape[0] == 0:
        raise ValueError("cannot read out an empty node set")
    return S.mean(dim=0)


def glorot_init(model: nn.Module, rng: np.random.Generator) -> None:
    """Glorot-uniform weights, zero biases, drawn from one numpy stream.

    Draw order follows named_parameters(), so identical seeds reproduce
    identical parameters regardless of torch's global RNG state.
    """
    for name, param in model.named_parameters():
        with torch.no_grad():
            if param.ndim >= 2:
                fan_in, fan_out = param.shape[0], param.shape[1]
                limit = math.sqrt(6.0 / (fan_in + fan_out))
                values = rng.uniform(-limit, limit, size=tuple(param.shape))
                param.copy_(torch.from_numpy(values).to(param.dtype))
            else:
                param.zero_()
