"""Network estimators and edge selection.

Three fitting routes share one pipeline (standardize columns, optionally
spectral-shrink, per-target lasso, back-transform, threshold):

* naive       -- identity transform; ignores hidden components entirely.
* hp_trim     -- trim transform at the median singular value first.
* hive        -- estimate the hidden-loading column space from naive-fit
                 residual covariance (heteroPCA), project outcomes onto
                 its orthogonal complement, then fit; exact only when the
                 observed and hidden loading spaces are orthogonal.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .design import RegressionData, standardize_columns
from .lasso import PenaltyRule, fit_lasso, select_lambda
from .network import NetworkSpec
from .spectral import apply_transform, trim_transform

__all__ = [
    "NetworkEstimate",
    "HiveState",
    "EdgeMetrics",
    "fit_naive",
    "fit_hp_trim",
    "fit_hive",
    "hive_state",
    "estimate_q",
    "hetero_pca",
    "orthogonal_complement_projector",
    "threshold_edges",
    "edge_metrics",
    "estimate_to_json",
    "estimate_from_json",
    "adjacency_to_csv",
    "estimate_to_dot",
]

METHODS = ("hp_trim", "naive", "hive_oracle", "hive_empirical")


@dataclass
class NetworkEstimate:
    """Fitted connectivity over the observed components.

    ``beta_hat[i, j]`` estimates the effect of component j on component i;
    ``edges`` is exactly the set of (i, j) with |beta_hat| above
    ``tau_select``.
    """

    method: str
    intercepts: np.ndarray
    beta_hat: np.ndarray
    lam: float
    tau_select: float
    edges: set
    q_used: int | None = None

    @property
    def p(self) -> int:
        return self.beta_hat.shape[0]

    def selected_matrix(self) -> np.ndarray:
        """beta_hat with sub-threshold entries zeroed (raw matrix retained)."""
        out = self.beta_hat.copy()
        out[np.abs(out) <= self.tau_select] = 0.0
        return out


@dataclass
class HiveState:
    """Intermediate quantities of the hive pipeline, kept for diagnostics."""

    residuals: np.ndarray
    resid_cov: np.ndarray
    eigengaps: np.ndarray
    q_hat: int
    p_delta: np.ndarray
    p_delta_perp: np.ndarray


@dataclass
class EdgeMetrics:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    l1_error: float


def _edges_above(beta_hat: np.ndarray, tau: float) -> set:
    idx = np.argwhere(np.abs(beta_hat) > tau)
    return {(int(i), int(j)) for i, j in idx}


def _fit_network(reg: RegressionData, rule: PenaltyRule, *, trim: bool, method: str,
                 y_override: np.ndarray | None = None, q_used: int | None = None,
                 tau_select: float | None = None, tau_spectrum: float | None = None) -> NetworkEstimate:
    y_raw = reg.Y if y_override is None else y_override
    x_std, x_mean, x_scale = standardize_columns(reg.X)
    y_means = y_raw.mean(axis=0)
    y_center = y_raw - y_means

    if trim:
        tf = trim_transform(x_std, tau=tau_spectrum)
        x_fit, y_fit = apply_transform(tf, x_std, y_center)
        f_norm = tf.f_norm()
    else:
        x_fit, y_fit = x_std, y_center
        f_norm = 1.0

    lam = select_lambda(x_fit, y_fit, rule, f_norm=f_norm, t_rows=reg.n_bins)
    x_fit = np.asfortranarray(x_fit)
    p = y_fit.shape[1]
    beta_hat = np.empty((p, reg.X.shape[1]))
    for i in range(p):
        beta_hat[i] = fit_lasso(x_fit, y_fit[:, i], lam).beta
    beta_hat /= x_scale[np.newaxis, :]
    intercepts = y_means - beta_hat @ x_mean

    tau = 0.5 * lam if tau_select is None else float(tau_select)
    return NetworkEstimate(
        method=method,
        intercepts=intercepts,
        beta_hat=beta_hat,
        lam=float(lam),
        tau_select=tau,
        edges=_edges_above(beta_hat, tau),
        q_used=q_used,
    )


def fit_naive(reg: RegressionData, rule: PenaltyRule, tau_select: float | None = None) -> NetworkEstimate:
    """Per-target lasso on the untransformed design (identity spectral map)."""
    return _fit_network(reg, rule, trim=False, method="naive", tau_select=tau_select)


def fit_hp_trim(reg: RegressionData, rule: PenaltyRule, tau_select: float | None = None,
                tau_spectrum: float | None = None) -> NetworkEstimate:
    """Trim transform, then per-target lasso.

    ``tau_spectrum`` overrides the spectral threshold (default: median
    singular value); at or above the top singular value the fit coincides
    with the naive one.
    """
    return _fit_network(reg, rule, trim=True, method="hp_trim",
                        tau_select=tau_select, tau_spectrum=tau_spectrum)


def estimate_q(resid_cov: np.ndarray):
    """Eigengap estimate of the number of latent factors.

    Returns (q_hat, eigengaps) with gaps[k-1] = lambda_k - lambda_{k+1}
    over the descending spectrum; q_hat takes the largest gap, ties broken
    toward the smallest k (callers can inspect the gaps for near-ties).
    """
    p = resid_cov.shape[0]
    if p < 2:
        raise ValueError("need at least two components to estimate q")
    vals = np.linalg.eigvalsh(resid_cov)[::-1]
    gaps = vals[:-1] - vals[1:]
    return int(np.argmax(gaps)) + 1, gaps


def hetero_pca(sigma: np.ndarray, q: int, iters: int = 10, tol: float = 1e-8) -> np.ndarray:
    """Iterative diagonal-refined PCA for heteroskedastic noise.

    Starts from ``sigma`` with its diagonal deleted and repeatedly imputes
    the diagonal from the current rank-``q`` reconstruction, keeping the
    original off-diagonal entries. Returns the final p x q top eigenbasis.
    Converges early when the imputed diagonal moves less than ``tol``.
    """
    sigma = np.asarray(sigma, dtype=float)
    p = sigma.shape[0]
    if sigma.shape != (p, p):
        raise ValueError("sigma must be square")
    if not np.allclose(sigma, sigma.T, atol=1e-10 * (1 + np.abs(sigma).max())):
        raise ValueError("sigma must be symmetric")
    if not 1 <= q < p:
        raise ValueError(f"need 1 <= q < p, got q={q}, p={p}")

    def top_eig(mat):
        vals, vecs = np.linalg.eigh(mat)
        return vals[::-1][:q], vecs[:, ::-1][:, :q]

    work = sigma.copy()
    np.fill_diagonal(work, 0.0)
    for _ in range(iters):
        vals, vecs = top_eig(work)
        new_diag = np.einsum("ij,j,ij->i", vecs, vals, vecs)
        if np.abs(new_diag - np.diag(work)).max() < tol:
            np.fill_diagonal(work, new_diag)
            break
        np.fill_diagonal(work, new_diag)
    return top_eig(work)[1]


def orthogonal_complement_projector(basis: np.ndarray) -> np.ndarray:
    """Projector onto the orthogonal complement of the column space of ``basis``."""
    basis = np.atleast_2d(np.asarray(basis, dtype=float))
    p = basis.shape[0]
    nonzero = basis[:, np.abs(basis).sum(axis=0) > 0]
    if nonzero.shape[1] == 0:
        return np.eye(p)
    u, s, _ = np.linalg.svd(nonzero, full_matrices=False)
    rank = int(np.sum(s > s[0] * max(nonzero.shape) * np.finfo(float).eps))
    ub = u[:, :rank]
    return np.eye(p) - ub @ ub.T


def hive_state(reg: RegressionData, rule: PenaltyRule, q: int | None = None,
               iters: int = 10) -> HiveState:
    """Run the hive front end: naive residuals, covariance, projectors."""
    naive = fit_naive(reg, rule)
    resid = reg.Y - naive.intercepts[np.newaxis, :] - reg.X @ naive.beta_hat.T
    resid_cov = resid.T @ resid / reg.n_bins
    q_gap, gaps = estimate_q(resid_cov)
    q_used = q_gap if q is None else int(q)
    p = resid_cov.shape[0]
    if q_used >= p:
        raise ValueError(f"q must be smaller than p={p}")
    if q_used == 0:
        p_delta = np.zeros((p, p))
    else:
        basis = hetero_pca(resid_cov, q_used, iters=iters)
        p_delta = basis @ basis.T
    return HiveState(
        residuals=resid,
        resid_cov=resid_cov,
        eigengaps=gaps,
        q_hat=q_used,
        p_delta=p_delta,
        p_delta_perp=np.eye(p) - p_delta,
    )


def fit_hive(reg: RegressionData, rule: PenaltyRule, q: int | None = None,
             tau_select: float | None = None, iters: int = 10) -> NetworkEstimate:
    """Hive baseline: project outcomes off the estimated hidden-loading space.

    With ``q`` given the method is tagged oracle; otherwise q comes from
    the eigengap rule on the residual covariance. ``q=0`` reduces exactly
    to the naive fit.
    """
    state = hive_state(reg, rule, q=q, iters=iters)
    y_proj = reg.Y @ state.p_delta_perp.T
    return _fit_network(
        reg,
        rule,
        trim=False,
        method="hive_oracle" if q is not None else "hive_empirical",
        y_override=y_proj,
        q_used=state.q_hat,
        tau_select=tau_select,
    )


def threshold_edges(est: NetworkEstimate, tau_select: float) -> NetworkEstimate:
    """Re-select edges at a new threshold (raw coefficients retained)."""
    if tau_select < 0:
        raise ValueError("tau_select must be nonnegative")
    return replace(est, tau_select=float(tau_select), edges=_edges_above(est.beta_hat, tau_select))


def edge_metrics(est: NetworkEstimate, truth: NetworkSpec) -> EdgeMetrics:
    """Edge selection counts and coefficient error against a known spec."""
    if truth.p != est.p:
        raise ValueError("estimate and truth disagree on p")
    true_edges = {(int(i), int(j)) for i, j in np.argwhere(truth.theta != 0)}
    tp = len(est.edges & true_edges)
    fp = len(est.edges - true_edges)
    fn = len(true_edges - est.edges)
    return EdgeMetrics(
        tp=tp,
        fp=fp,
        fn=fn,
        precision=tp / (tp + fp) if tp + fp else 1.0,
        recall=tp / (tp + fn) if tp + fn else 1.0,
        l1_error=float(np.abs(est.beta_hat - truth.theta).sum()),
    )


def estimate_to_json(est: NetworkEstimate) -> str:
    doc = {
        "kind": "network_estimate",
        "method": est.method,
        "lambda": est.lam,
        "tau_select": est.tau_select,
        "q_used": est.q_used,
        "p": est.p,
        "intercepts": est.intercepts.tolist(),
        "beta_hat": est.beta_hat.tolist(),
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def estimate_from_json(text: str) -> NetworkEstimate:
    doc = json.loads(text)
    if doc.get("kind") != "network_estimate":
        raise ValueError("not a network estimate document")
    beta_hat = np.array(doc["beta_hat"], dtype=float)
    tau = float(doc["tau_select"])
    return NetworkEstimate(
        method=doc["method"],
        intercepts=np.array(doc["intercepts"], dtype=float),
        beta_hat=beta_hat,
        lam=float(doc["lambda"]),
        tau_select=tau,
        edges=_edges_above(beta_hat, tau),
        q_used=doc.get("q_used"),
    )


def adjacency_to_csv(est: NetworkEstimate, path) -> None:
    """Full adjacency dump: i, j, beta_hat, selected_flag."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("i,j,beta_hat,selected\n")
        for i in range(est.p):
            for j in range(est.p):
                sel = int((i, j) in est.edges)
                fh.write(f"{i},{j},{est.beta_hat[i, j]!r},{sel}\n")


def estimate_to_dot(est: NetworkEstimate) -> str:
    """DOT digraph of the selected edges, width scaled by |coefficient|."""
    lines = [f"digraph {est.method} {{"]
    for i in range(est.p):
        lines.append(f"  n{i};")
    if est.edges:
        top = max(abs(est.beta_hat[i, j]) for i, j in est.edges)
        for i, j in sorted(est.edges):
            w = abs(est.beta_hat[i, j])
            pen = 0.5 + 2.5 * (w / top if top > 0 else 0.0)
            lines.append(f'  n{j} -> n{i} [penwidth={pen:.3f}, label="{est.beta_hat[i, j]:.4f}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
