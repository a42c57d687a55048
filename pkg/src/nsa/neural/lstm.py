"""LSTM cell, masked sequence unrolling and bi-directional encoding with manual BPTT.

Gate blocks are stacked in the order i, f, o, g along the first axis of W, U and b.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeMismatch
from .core import check_finite, glorot, sigmoid


@dataclass
class LstmCell:
    W: np.ndarray  # (4h, x) input weights
    U: np.ndarray  # (4h, h) recurrent weights
    b: np.ndarray  # (4h,)

    def __post_init__(self) -> None:
        h4 = self.W.shape[0]
        if h4 % 4 or self.U.shape != (h4, h4 // 4) or self.b.shape != (h4,):
            raise ShapeMismatch(f"inconsistent LSTM shapes W{self.W.shape} U{self.U.shape} b{self.b.shape}")

    @classmethod
    def init(cls, rng: np.random.Generator, n_in: int, n_hidden: int, forget_bias: float = 1.0):
        W = np.concatenate([glorot(rng, n_hidden, n_in) for _ in range(4)])
        U = np.concatenate([glorot(rng, n_hidden, n_hidden) for _ in range(4)])
        b = np.zeros(4 * n_hidden)
        b[n_hidden:2 * n_hidden] = forget_bias
        return cls(W, U, b)

    @property
    def hidden(self) -> int:
        return self.U.shape[1]

    @property
    def n_in(self) -> int:
        return self.W.shape[1]

    def params(self, prefix: str) -> dict[str, np.ndarray]:
        return {f"{prefix}.W": self.W, f"{prefix}.U": self.U, f"{prefix}.b": self.b}

    @classmethod
    def from_params(cls, params, prefix: str) -> "LstmCell":
        return cls(params[f"{prefix}.W"], params[f"{prefix}.U"], params[f"{prefix}.b"])


def _step(cell: LstmCell, x, h_prev, c_prev):
    n = cell.hidden
    if x.shape[-1] != cell.n_in or h_prev.shape[-1] != n or c_prev.shape[-1] != n:
        raise ShapeMismatch("LSTM step input shapes do not match the cell")
    a = x @ cell.W.T + h_prev @ cell.U.T + cell.b
    i = sigmoid(a[..., :n])
    f = sigmoid(a[..., n:2 * n])
    o = sigmoid(a[..., 2 * n:3 * n])
    g = np.tanh(a[..., 3 * n:])
    c = f * c_prev + i * g
    tc = np.tanh(c)
    h = o * tc
    return h, c, (x, h_prev, c_prev, i, f, o, g, tc)


def lstm_step(cell: LstmCell, x_t, h_prev, c_prev):
    """One LSTM step; returns (h_t, c_t)."""
    h, c, _ = _step(cell, np.asarray(x_t, float), np.asarray(h_prev, float), np.asarray(c_prev, float))
    check_finite(h, "LSTM state")
    check_finite(c, "LSTM state")
    return h, c


def _step_backward(cell: LstmCell, cache, dh, dc):
    x, h_prev, c_prev, i, f, o, g, tc = cache
    do = dh * tc
    dc = dc + dh * o * (1.0 - tc * tc)
    di = dc * g
    df = dc * c_prev
    dg = dc * i
    dc_prev = dc * f
    da = np.concatenate([di * i * (1 - i), df * f * (1 - f), do * o * (1 - o), dg * (1 - g * g)], axis=-1)
    da2 = da.reshape(-1, da.shape[-1])
    dW = da2.T @ x.reshape(-1, x.shape[-1])
    dU = da2.T @ h_prev.reshape(-1, h_prev.shape[-1])
    db = da2.sum(axis=0)
    dx = da @ cell.W
    dh_prev = da @ cell.U
    return dx, dh_prev, dc_prev, dW, dU, db


@dataclass
class SequenceCache:
    steps: list
    masks: np.ndarray | None


def lstm_forward(cell: LstmCell, xs, mask=None, h0=None, c0=None):
    """Unroll over ``xs`` of shape (T, [B,] x).

    Where ``mask`` is 0 the state is carried through unchanged, so padded
    positions do not affect the result. Returns (hs, c_last, cache) where
    hs has shape (T, [B,] h) and hs[-1] is the last valid hidden state.
    """
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim < 2 or xs.shape[0] == 0:
        raise ShapeMismatch("LSTM input sequence must be non-empty")
    state_shape = xs.shape[1:-1] + (cell.hidden,)
    h = np.zeros(state_shape) if h0 is None else np.asarray(h0, float)
    c = np.zeros(state_shape) if c0 is None else np.asarray(c0, float)
    m = None if mask is None else np.asarray(mask, dtype=np.float64)
    hs = np.empty(xs.shape[:-1] + (cell.hidden,))
    steps = []
    for t in range(xs.shape[0]):
        h_new, c_new, cache = _step(cell, xs[t], h, c)
        if m is not None:
            mt = m[t][..., None]
            h_new = mt * h_new + (1.0 - mt) * h
            c_new = mt * c_new + (1.0 - mt) * c
        steps.append(cache)
        h, c = h_new, c_new
        hs[t] = h
    check_finite(hs, "LSTM state")
    return hs, c, SequenceCache(steps, m)


def lstm_backward(cell: LstmCell, cache: SequenceCache, d_hs=None, d_h_last=None, d_c_last=None):
    """Backprop through time. Returns (dxs, dh0, dc0, {"W","U","b"} grads)."""
    steps = cache.steps
    T = len(steps)
    state_shape = steps[0][1].shape
    dh = np.zeros(state_shape) if d_h_last is None else np.array(d_h_last, dtype=float)
    dc = np.zeros(state_shape) if d_c_last is None else np.array(d_c_last, dtype=float)
    dW = np.zeros_like(cell.W)
    dU = np.zeros_like(cell.U)
    db = np.zeros_like(cell.b)
    dxs = np.empty((T,) + steps[0][0].shape)
    for t in range(T - 1, -1, -1):
        if d_hs is not None:
            dh = dh + d_hs[t]
        if cache.masks is not None:
            mt = cache.masks[t][..., None]
            carry_h, carry_c = (1.0 - mt) * dh, (1.0 - mt) * dc
            dh, dc = mt * dh, mt * dc
        dx, dh_prev, dc_prev, gW, gU, gb = _step_backward(cell, steps[t], dh, dc)
        dW += gW
        dU += gU
        db += gb
        dxs[t] = dx
        if cache.masks is not None:
            dh_prev = dh_prev + carry_h
            dc_prev = dc_prev + carry_c
        dh, dc = dh_prev, dc_prev
    grads = {"W": dW, "U": dU, "b": db}
    for g in grads.values():
        check_finite(g, "LSTM gradient")
    return dxs, dh, dc, grads


@dataclass
class BiCache:
    fwd: SequenceCache
    bwd: SequenceCache


def bilstm_forward(fwd: LstmCell, bwd: LstmCell, xs, mask=None):
    """Returns (summary, states, cache). summary = [last forward h; last backward h]."""
    xs = np.asarray(xs, dtype=np.float64)
    rev_mask = None if mask is None else np.asarray(mask)[::-1]
    hf, _, cf = lstm_forward(fwd, xs, mask)
    hb_rev, _, cb = lstm_forward(bwd, xs[::-1], rev_mask)
    hb = hb_rev[::-1]
    states = np.concatenate([hf, hb], axis=-1)
    summary = np.concatenate([hf[-1], hb_rev[-1]], axis=-1)
    return summary, states, BiCache(cf, cb)


def bilstm_encode(fwd_cell: LstmCell, bwd_cell: LstmCell, xs, mask=None):
    """Read ``xs`` left-to-right and right-to-left; returns (summary (2h), states (T, 2h))."""
    summary, states, _ = bilstm_forward(fwd_cell, bwd_cell, xs, mask)
    return summary, states


def bilstm_backward(fwd: LstmCell, bwd: LstmCell, cache: BiCache, d_summary=None, d_states=None):
    """Returns (dxs, fwd grads, bwd grads)."""
    n = fwd.hidden
    d_sf = d_sb = None
    if d_summary is not None:
        d_sf, d_sb = d_summary[..., :n], d_summary[..., n:]
    d_hf = d_hb_rev = None
    if d_states is not None:
        d_hf = d_states[..., :n]
        d_hb_rev = d_states[..., n:][::-1]
    dxf, _, _, gf = lstm_backward(fwd, cache.fwd, d_hf, d_sf)
    dxb_rev, _, _, gb = lstm_backward(bwd, cache.bwd, d_hb_rev, d_sb)
    return dxf + dxb_rev[::-1], gf, gb
