"""Generative network model: kernels, specs, block topologies, stationarity.

A network couples p observed and q hidden components. Component j excites
(or inhibits) component i through ``coefficient * exp(-rate_j * t)``; the
full (p+q) x (p+q) coefficient matrix stacks the observed-to-observed block
``theta``, the hidden-to-observed block ``delta``, and the rows driving the
hidden components themselves (``hidden_block``, all zeros for the shipped
generators: hidden components are autonomous Poisson sources).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, StationarityError

__all__ = [
    "TransitionKernel",
    "NetworkSpec",
    "SpectrumReport",
    "make_block_network",
    "make_orthogonal_block_network",
    "check_stationarity",
    "assumption_summary",
    "spec_to_json",
    "spec_from_json",
]


@dataclass(frozen=True)
class TransitionKernel:
    """Exponential transition kernel ``kappa(t) = exp(-rate * t)``."""

    family: str = "exponential"
    rate: float = 1.0

    def __post_init__(self):
        if self.family != "exponential":
            raise ConfigError(f"unsupported kernel family: {self.family!r}")
        if not self.rate > 0:
            raise ConfigError("kernel rate must be positive")

    def value(self, t):
        return np.exp(-self.rate * np.asarray(t, dtype=float))

    def integral(self) -> float:
        """Integral of the kernel over [0, inf)."""
        return 1.0 / self.rate


@dataclass
class NetworkSpec:
    """Ground-truth generative model for a partially observed Hawkes net.

    mu has length p+q (background intensities, events per unit time);
    theta is p x p (observed -> observed), delta is p x q (hidden ->
    observed), hidden_block is q x (p+q) (drivers of the hidden
    components). kernel lists one TransitionKernel per source component.
    """

    p: int
    q: int
    mu: np.ndarray
    theta: np.ndarray
    delta: np.ndarray
    hidden_block: np.ndarray
    kernel: list[TransitionKernel] = field(default_factory=list)

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=float)
        self.theta = np.atleast_2d(np.asarray(self.theta, dtype=float))
        self.delta = np.asarray(self.delta, dtype=float).reshape(self.p, self.q)
        self.hidden_block = np.asarray(self.hidden_block, dtype=float).reshape(
            self.q, self.p + self.q
        )
        if not self.kernel:
            self.kernel = [TransitionKernel() for _ in range(self.p + self.q)]
        n = self.p + self.q
        if self.mu.shape != (n,):
            raise ConfigError(f"mu must have length p+q={n}")
        if self.theta.shape != (self.p, self.p):
            raise ConfigError("theta must be p x p")
        if len(self.kernel) != n:
            raise ConfigError("need one kernel per source component")
        if np.any(self.mu <= 0):
            raise ConfigError("background intensities must be positive")

    @property
    def n_components(self) -> int:
        return self.p + self.q

    def full_matrix(self) -> np.ndarray:
        """Assemble the (p+q) x (p+q) coefficient matrix."""
        n = self.n_components
        b = np.zeros((n, n))
        b[: self.p, : self.p] = self.theta
        if self.q:
            b[: self.p, self.p :] = self.delta
            b[self.p :, :] = self.hidden_block
        return b

    def kernel_rates(self) -> np.ndarray:
        return np.array([k.rate for k in self.kernel], dtype=float)

    def kernel_integrals(self) -> np.ndarray:
        return np.array([k.integral() for k in self.kernel], dtype=float)


@dataclass
class SpectrumReport:
    """Checkable stationarity/flow quantities of a spec.

    lambda_max_omega is the top eigenvalue of Omega^T Omega where
    Omega_ij = |coef_ij| * integral(kernel_j); row/column sums are the
    in/out intensity-flow candidates.
    """

    lambda_max_omega: float
    max_row_sum: float
    max_col_sum: float
    passes_a1: bool
    passes_a4: bool


def check_stationarity(spec: NetworkSpec) -> SpectrumReport:
    """Compute the stationarity certificate for a spec.

    Always returns a report; generators raise on failing specs, direct
    callers decide for themselves.
    """
    omega = np.abs(spec.full_matrix()) * spec.kernel_integrals()[np.newaxis, :]
    gram = omega.T @ omega
    lam_max = float(max(np.linalg.eigvalsh(gram)[-1], 0.0)) if gram.size else 0.0
    row = float(omega.sum(axis=1).max()) if omega.size else 0.0
    col = float(omega.sum(axis=0).max()) if omega.size else 0.0
    return SpectrumReport(
        lambda_max_omega=lam_max,
        max_row_sum=row,
        max_col_sum=col,
        passes_a1=lam_max < 1.0,
        passes_a4=row < 1.0,
    )


def assumption_summary(spec: NetworkSpec, tau_select: float | None = None) -> dict:
    """Executable checks of the model assumptions for a generative spec.

    The signal-strength check (a5) needs the selection threshold and is
    only reported when ``tau_select`` is given; it compares the smallest
    nonzero observed edge against twice the threshold.
    """
    report = check_stationarity(spec)
    rates = spec.kernel_rates()
    out = {
        "a1_stationarity": report.passes_a1,
        "a2_positive_baselines": bool(np.all(spec.mu > 0)),
        "a3_integrable_kernels": bool(np.all(rates > 0)),
        "a4_flow_bounds": report.passes_a4,
        "lambda_max_omega": report.lambda_max_omega,
        "max_row_sum": report.max_row_sum,
        "max_col_sum": report.max_col_sum,
    }
    if tau_select is not None:
        nz = np.abs(spec.theta[spec.theta != 0])
        beta_min = float(nz.min()) if nz.size else 0.0
        out["a5_signal_strength"] = bool(nz.size) and beta_min > 2.0 * tau_select
        out["beta_min"] = beta_min
    return out


def _block_theta(p: int, block_size: int, beta: float, blocks) -> np.ndarray:
    theta = np.zeros((p, p))
    for b in blocks:
        lo, hi = b * block_size, (b + 1) * block_size
        theta[lo:hi, lo:hi] = beta
        idx = np.arange(lo, hi)
        theta[idx, idx] = 0.0  # no self-edges
    return theta


def _wire_hidden(p: int, q: int, block_size: int, delta: float, conf_blocks) -> np.ndarray:
    # each confounded block gets a dedicated, disjoint set of hidden
    # sources, fully connected at weight delta; wiring stops when the
    # hidden pool runs out
    d = np.zeros((p, q))
    nxt = 0
    for b in conf_blocks:
        take = min(block_size, q - nxt)
        if take <= 0:
            break
        lo = b * block_size
        d[lo : lo + block_size, nxt : nxt + take] = delta
        nxt += take
    return d


def _finish_spec(p, q, mu, theta, delta_mat, *, context: str) -> NetworkSpec:
    spec = NetworkSpec(
        p=p,
        q=q,
        mu=np.full(p + q, mu),
        theta=theta,
        delta=delta_mat,
        hidden_block=np.zeros((q, p + q)),
    )
    report = check_stationarity(spec)
    if not report.passes_a1:
        raise StationarityError(
            f"{context}: lambda_max(Omega^T Omega) = {report.lambda_max_omega:.6f} >= 1; "
            "refusing to emit an unstable spec",
            report=report,
        )
    return spec


def make_block_network(
    p: int,
    q: int,
    block_size: int,
    beta: float,
    delta: float,
    mu: float,
    confounded_fraction: float,
) -> NetworkSpec:
    """Block topology: observed nodes fully connected within blocks.

    All blocks carry within-block edges of weight ``beta`` (no
    self-edges); the first ``round(confounded_fraction * n_blocks)``
    blocks additionally receive edges of weight ``delta`` from dedicated
    hidden sources. Hidden components are Poisson with the same baseline.
    """
    if p <= 0 or block_size <= 0 or p % block_size:
        raise ConfigError(f"p={p} must be a positive multiple of block_size={block_size}")
    if not 0.0 <= confounded_fraction <= 1.0:
        raise ConfigError("confounded_fraction must lie in [0, 1]")
    n_blocks = p // block_size
    n_conf = int(round(confounded_fraction * n_blocks))
    theta = _block_theta(p, block_size, beta, range(n_blocks))
    delta_mat = _wire_hidden(p, q, block_size, delta, range(n_conf))
    return _finish_spec(p, q, mu, theta, delta_mat, context="make_block_network")


def make_orthogonal_block_network(
    p: int,
    q: int,
    block_size: int,
    beta: float,
    delta: float,
    mu: float,
) -> NetworkSpec:
    """Block topology with disjoint observed-edge and confounded blocks.

    The first half of the blocks receive hidden input only (no
    within-block observed edges); the remaining blocks carry observed
    edges only. Rows loaded by ``theta`` and ``delta`` are therefore
    disjoint, making their column spaces orthogonal.
    """
    if p <= 0 or block_size <= 0 or p % block_size:
        raise ConfigError(f"p={p} must be a positive multiple of block_size={block_size}")
    n_blocks = p // block_size
    n_conf = n_blocks // 2
    theta = _block_theta(p, block_size, beta, range(n_conf, n_blocks))
    delta_mat = _wire_hidden(p, q, block_size, delta, range(n_conf))
    spec = _finish_spec(p, q, mu, theta, delta_mat, context="make_orthogonal_block_network")
    if spec.q and np.abs(spec.theta.T @ spec.delta).max() >= 1e-10:
        raise StationarityError("orthogonality violated")  # unreachable by construction
    return spec


def spec_to_json(spec: NetworkSpec) -> str:
    doc = {
        "p": spec.p,
        "q": spec.q,
        "mu": spec.mu.tolist(),
        "theta": spec.theta.tolist(),
        "delta": spec.delta.tolist(),
        "hidden_block": spec.hidden_block.tolist(),
        "kernel": [{"family": k.family, "rate": k.rate} for k in spec.kernel],
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def spec_from_json(text: str) -> NetworkSpec:
    try:
        doc = json.loads(text)
        kernels = [TransitionKernel(k["family"], float(k["rate"])) for k in doc["kernel"]]
        return NetworkSpec(
            p=int(doc["p"]),
            q=int(doc["q"]),
            mu=np.array(doc["mu"], dtype=float),
            theta=np.array(doc["theta"], dtype=float),
            delta=np.array(doc["delta"], dtype=float),
            hidden_block=np.array(doc["hidden_block"], dtype=float),
            kernel=kernels,
        )
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"malformed network spec document: {exc}") from exc
