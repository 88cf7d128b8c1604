"""Three-layer tanh network with threshold augmentation and its tuning law.

Weights follow the augmented convention: the first row of ``V`` holds the
hidden thresholds and the first row of ``W`` holds the output threshold, so
both the input vector and the hidden activations get a leading ``1``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

N_INPUTS = 5


@dataclass
class NnWeights:
    """Input-to-hidden ``V`` of shape (n+1, L) and hidden-to-output ``W`` of shape (L+1, m)."""

    V: np.ndarray
    W: np.ndarray

    def __post_init__(self):
        self.V = np.asarray(self.V, dtype=float)
        self.W = np.asarray(self.W, dtype=float)
        if self.V.ndim != 2 or self.W.ndim != 2:
            raise ValueError("V and W must be 2-D")
        if self.W.shape[0] != self.V.shape[1] + 1:
            raise ValueError(
                f"W must have L+1 = {self.V.shape[1] + 1} rows, got {self.W.shape[0]}"
            )

    @property
    def n(self) -> int:
        return self.V.shape[0] - 1

    @property
    def L(self) -> int:
        return self.V.shape[1]

    @property
    def m(self) -> int:
        return self.W.shape[1]

    def copy(self) -> NnWeights:
        return NnWeights(self.V.copy(), self.W.copy())

    def to_csv(self) -> str:
        """Row-major dump, V then W, with a ``# n,L,m`` dimension header."""
        buf = io.StringIO()
        buf.write(f"# n={self.n},L={self.L},m={self.m}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["matrix", "row", "col", "value"])
        for name, mat in (("V", self.V), ("W", self.W)):
            for (i, j), v in np.ndenumerate(mat):
                writer.writerow([name, i, j, repr(float(v))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> NnWeights:
        lines = text.splitlines()
        dims = dict(item.split("=") for item in lines[0].lstrip("# ").split(","))
        n, L, m = int(dims["n"]), int(dims["L"]), int(dims["m"])
        V = np.zeros((n + 1, L))
        W = np.zeros((L + 1, m))
        for row in csv.DictReader(lines[1:]):
            target = V if row["matrix"] == "V" else W
            target[int(row["row"]), int(row["col"])] = float(row["value"])
        return cls(V, W)


@dataclass(frozen=True)
class TuningGains:
    """Scalar gains of the tuning law: S = S_scale*I, Q = Q_scale*I, leakage k."""

    S_scale: float = 8.0
    Q_scale: float = 9.0
    k: float = 0.002

    def __post_init__(self):
        for name in ("S_scale", "Q_scale", "k"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"tuning.{name} must be > 0, got {getattr(self, name)!r}")


def augment(x) -> np.ndarray:
    """Prefix a ``1`` so the first weight row acts as a threshold."""
    x = np.asarray(x, dtype=float).ravel()
    out = np.empty(x.size + 1)
    out[0] = 1.0
    out[1:] = x
    return out


def hidden_activation(w: NnWeights, x) -> np.ndarray:
    return np.tanh(w.V.T @ augment(x))


def forward(w: NnWeights, x) -> np.ndarray:
    """Network output ``W^T [1; tanh(V^T [1; x])]``, shape (m,)."""
    return w.W.T @ augment(hidden_activation(w, x))


def frobenius_norm(w: NnWeights) -> float:
    """Frobenius norm of the stacked weights [W; V]."""
    V, W = w.V.ravel(), w.W.ravel()
    return math.sqrt(V @ V + W @ W)


def weight_derivatives(
    w: NnWeights, gains: TuningGains, x_nn, T_tilde: float, sigma: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Time derivatives of V and W under the leakage-modified tuning law.

    dV/dt = -Q |T~| x_aug sigma^T - k Q |T~| V
    dW/dt = -S sigma_aug T~      - k S |T~| W

    ``sigma_aug`` includes the leading ``1`` so the output threshold row is
    tuned with the rest of ``W``. ``sigma`` may be passed in when the hidden
    activation for ``x_nn`` is already known.
    """
    x_aug = augment(x_nn)
    if sigma is None:
        sigma = np.tanh(w.V.T @ x_aug)
    sigma_aug = augment(sigma)
    abs_t = abs(T_tilde)
    dV = -gains.Q_scale * abs_t * (x_aug[:, None] * sigma[None, :] + gains.k * w.V)
    dW = -gains.S_scale * (sigma_aug[:, None] * T_tilde + gains.k * abs_t * w.W)
    return dV, dW


def init_weights(n: int, L: int, m: int, seed: int) -> NnWeights:
    """V uniform on [-1, 1] from a PCG64 stream seeded with ``seed``; W zero."""
    if min(n, L, m) < 1:
        raise ValueError(f"n, L, m must be >= 1, got {(n, L, m)}")
    rng = np.random.Generator(np.random.PCG64(seed))
    V = rng.uniform(-1.0, 1.0, size=(n + 1, L))
    return NnWeights(V, np.zeros((L + 1, m)))
