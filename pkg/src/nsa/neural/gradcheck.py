"""Central finite-difference gradient checking."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

LossFn = Callable[[Mapping[str, np.ndarray]], "tuple[float, Mapping[str, np.ndarray]]"]


def relative_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-8)


@dataclass
class GradReport:
    tol: float
    max_rel_error: dict[str, float] = field(default_factory=dict)
    coords_checked: dict[str, int] = field(default_factory=dict)

    @property
    def failures(self) -> dict[str, float]:
        return {k: v for k, v in self.max_rel_error.items() if not v <= self.tol}

    @property
    def ok(self) -> bool:
        return not self.failures

    def lines(self) -> list[str]:
        return [f"{'ok  ' if v <= self.tol else 'FAIL'} {k:<28} max rel err {v:.3e} "
                f"({self.coords_checked[k]} coords)" for k, v in self.max_rel_error.items()]


def grad_check(loss_fn: LossFn, params: Mapping[str, np.ndarray], eps: float = 1e-5,
               tol: float = 1e-4, n_coords: int = 32, seed: int = 0) -> GradReport:
    """Compare analytic gradients against (f(p+eps) - f(p-eps)) / 2eps.

    ``loss_fn(params)`` returns (loss, grads). Tensors larger than ``n_coords``
    are checked on a seeded random sample of ``n_coords`` coordinates; the
    parameters are perturbed in place and restored.
    """
    report = GradReport(tol)
    if not params:
        return report
    _, grads = loss_fn(params)
    rng = np.random.default_rng(seed)
    for name in sorted(params):
        p = params[name]
        if not p.flags.c_contiguous:
            raise ValueError(f"parameter {name} must be C-contiguous to be perturbed in place")
        flat = p.reshape(-1)
        g = np.asarray(grads[name]).reshape(-1)
        if flat.size <= n_coords:
            coords = np.arange(flat.size)
        else:
            coords = np.sort(rng.choice(flat.size, size=n_coords, replace=False))
        worst = 0.0
        for j in coords:
            old = flat[j]
            flat[j] = old + eps
            f_plus = loss_fn(params)[0]
            flat[j] = old - eps
            f_minus = loss_fn(params)[0]
            flat[j] = old
            numeric = (f_plus - f_minus) / (2 * eps)
            worst = max(worst, relative_error(float(g[j]), numeric))
        report.max_rel_error[name] = worst
        report.coords_checked[name] = len(coords)
    return report
