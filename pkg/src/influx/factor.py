"""Matrix factorization of the weekly matrix: SVD, PPCA, fastICA, K-SVD.

Every method reduces the weeks-by-weekdays matrix to a set of length-7
weekly patterns (components), per-week mixing weights (coefficients) and an
energy ranking.  Components are stored energy-descending, and each is
sign-flipped so its largest-magnitude entry is positive, which makes results
deterministic for a fixed seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (BadParam, BadRank, NoConvergence, RankDeficient,
                     TooFewPoints)
from .ingest import WeeklyMatrix

_NONLINEARITIES = ("pow3", "gauss", "skew", "tanh")
_MODES = ("symmetric", "deflation")


@dataclass(frozen=True)
class FactorModel:
    method: str
    components: np.ndarray        # (n_components, pattern length)
    coefficients: np.ndarray      # (rows, n_components)
    energy_fractions: np.ndarray  # descending, sums to 1
    mean: np.ndarray | None = None  # offset restored on reconstruction
    reconstruction_error: float = 0.0
    singular_values: np.ndarray | None = field(default=None, compare=False)
    noise_variance: float | None = field(default=None, compare=False)
    log_likelihood_path: np.ndarray | None = field(default=None, compare=False)
    error_history: np.ndarray | None = field(default=None, compare=False)
    n_iterations: int = field(default=0, compare=False)
    converged: bool = field(default=True, compare=False)

    @property
    def n_components(self) -> int:
        return int(self.components.shape[0])

    def as_dict(self):
        return {"method": self.method,
                "components": [[float(v) for v in row] for row in self.components],
                "energy_fractions": [float(f) for f in self.energy_fractions],
                "reconstruction_error": float(self.reconstruction_error)}


def _as_matrix(data) -> np.ndarray:
    if isinstance(data, WeeklyMatrix):
        return data.cells.astype(float)
    matrix = np.asarray(data, dtype=float)
    if matrix.ndim != 2:
        raise BadParam("expected a 2-D matrix")
    return matrix


def _fix_signs(components, coefficients):
    """Flip each component so its largest-|value| entry is positive."""
    comps = components.copy()
    coefs = coefficients.copy()
    for i in range(comps.shape[0]):
        pivot = np.argmax(np.abs(comps[i]))
        if comps[i, pivot] < 0:
            comps[i] = -comps[i]
            coefs[:, i] = -coefs[:, i]
    return comps, coefs


def _contribution_energies(components, coefficients):
    comp_norms = np.sum(components ** 2, axis=1)
    coef_norms = np.sum(coefficients ** 2, axis=0)
    return comp_norms * coef_norms


def _rank_by_energy(components, coefficients):
    """Sort components/coefficients by rank-1 contribution energy, descending."""
    energies = _contribution_energies(components, coefficients)
    order = np.argsort(-energies, kind="stable")
    total = float(np.sum(energies))
    fractions = (energies[order] / total if total > 0
                 else np.zeros_like(energies))
    return components[order], coefficients[:, order], fractions, order


def svd_decompose(matrix) -> FactorModel:
    """Full SVD, components ranked by spectral energy (squared singular value)."""
    data = _as_matrix(matrix)
    u, s, vt = np.linalg.svd(data, full_matrices=False)
    coefficients = u * s
    components, coefficients = _fix_signs(vt, coefficients)
    components, coefficients, fractions, order = _rank_by_energy(components,
                                                                 coefficients)
    recon = coefficients @ components
    return FactorModel(method="svd", components=components,
                       coefficients=coefficients, energy_fractions=fractions,
                       singular_values=s[order],
                       reconstruction_error=float(np.linalg.norm(data - recon)))


def reconstruct_rank(model: FactorModel, rank: int) -> np.ndarray:
    """Sum of the top-``rank`` energy-ranked rank-1 terms (plus any offset)."""
    if rank < 1 or rank > model.n_components:
        raise BadRank(f"rank {rank} outside 1..{model.n_components}")
    recon = model.coefficients[:, :rank] @ model.components[:rank]
    if model.mean is not None:
        recon = recon + model.mean
    return recon


def _ppca_log_likelihood(sample_cov, w, sigma2, n_obs, dim):
    cov = w @ w.T + sigma2 * np.eye(dim)
    sign, logdet = np.linalg.slogdet(cov)
    if sign <= 0:
        return -np.inf
    trace_term = float(np.trace(np.linalg.solve(cov, sample_cov)))
    return -0.5 * n_obs * (dim * math.log(2 * math.pi) + logdet + trace_term)


def fit_ppca(matrix, n_components: int, max_iter: int = 500,
             tol: float = 1e-8, seed: int = 0, init: str = "pca") -> FactorModel:
    """Probabilistic PCA by expectation-maximization.

    Fits the latent-variable model data = W z + mean + isotropic noise; the
    log-likelihood is asserted non-decreasing on every EM iteration.  The
    default start is the principal-axes initializer (EM from a random W
    needs thousands of iterations for the same fixed point; pass
    ``init="random"`` to use it).  Components are returned as orthonormal
    principal directions with the latent scale folded into the coefficients.
    """
    data = _as_matrix(matrix)
    n_obs, dim = data.shape
    if not 1 <= n_components <= dim:
        raise BadParam(f"n_components {n_components} outside 1..{dim}")
    mu = data.mean(axis=0)
    centered = data - mu
    sample_cov = centered.T @ centered / n_obs

    # zero-noise data drives the ML noise variance to 0+ where the
    # likelihood is improper; the relative floor keeps C invertible
    floor = max(1e-10 * float(np.trace(sample_cov)) / dim, 1e-300)

    if init == "random":
        rng = np.random.default_rng(seed)
        w = rng.normal(scale=max(np.std(centered), 1e-3),
                       size=(dim, n_components))
        sigma2 = max(float(np.trace(sample_cov)) / dim * 0.5, 1e-6)
    elif init == "pca":
        eigvals, eigvecs = np.linalg.eigh(sample_cov)
        eigvals, eigvecs = eigvals[::-1], eigvecs[:, ::-1]
        if n_components < dim:
            sigma2 = max(float(np.mean(eigvals[n_components:])), floor)
        else:
            # full-rank ML is flat in sigma2 on [0, lambda_min];
            # the tiny end avoids posterior shrinkage
            sigma2 = floor
        scales = np.sqrt(np.maximum(eigvals[:n_components] - sigma2, floor))
        w = eigvecs[:, :n_components] * scales
    else:
        raise BadParam(f"unknown init {init!r}")
    sigma2 = max(sigma2, floor)

    ll_prev = _ppca_log_likelihood(sample_cov, w, sigma2, n_obs, dim)
    ll_path = [ll_prev]
    converged = False
    for iteration in range(1, max_iter + 1):
        m = w.T @ w + sigma2 * np.eye(n_components)
        m_inv = np.linalg.inv(m)
        ez = centered @ w @ m_inv            # posterior means, (n_obs, q)
        sum_ezz = n_obs * sigma2 * m_inv + ez.T @ ez
        w_new = np.linalg.solve(sum_ezz.T, (centered.T @ ez).T).T
        wtw = w_new.T @ w_new
        sigma2_new = (float(np.sum(centered ** 2))
                      - 2.0 * float(np.sum((centered @ w_new) * ez))
                      + float(np.sum(sum_ezz * wtw))) / (n_obs * dim)
        at_floor = sigma2_new <= floor and sigma2 <= floor
        sigma2_new = max(sigma2_new, floor)

        ll = _ppca_log_likelihood(sample_cov, w_new, sigma2_new, n_obs, dim)
        if not np.isfinite(ll):
            raise NoConvergence("ppca fit", iteration)
        # exact in theory; the slack absorbs float noise when C is nearly
        # singular (zero-noise degenerate data)
        assert ll >= ll_prev - 1e-6 * (1.0 + abs(ll_prev)), \
            "EM log-likelihood decreased"
        ll_path.append(ll)
        w, sigma2 = w_new, sigma2_new
        if abs(ll - ll_prev) <= tol * (1.0 + abs(ll)) or at_floor:
            converged = True
            ll_prev = ll
            break
        ll_prev = ll

    # rotate to ordered orthonormal directions: W = U diag(l) V^T
    u, l, vt = np.linalg.svd(w, full_matrices=False)
    scores = centered @ w @ np.linalg.inv(w.T @ w + sigma2 * np.eye(n_components))
    coefficients = (scores @ vt.T) * l
    components, coefficients = _fix_signs(u.T, coefficients)
    components, coefficients, fractions, _ = _rank_by_energy(components,
                                                             coefficients)
    recon = coefficients @ components
    return FactorModel(method="ppca", components=components,
                       coefficients=coefficients, energy_fractions=fractions,
                       mean=mu, noise_variance=float(sigma2),
                       log_likelihood_path=np.array(ll_path),
                       reconstruction_error=float(np.linalg.norm(centered - recon)),
                       n_iterations=len(ll_path) - 1, converged=converged)


def _contrast(name):
    if name == "pow3":
        return (lambda u: u ** 3, lambda u: 3.0 * u ** 2)
    if name == "tanh":
        return (np.tanh, lambda u: 1.0 - np.tanh(u) ** 2)
    if name == "gauss":
        def g(u):
            return u * np.exp(-0.5 * u ** 2)

        def g_prime(u):
            return (1.0 - u ** 2) * np.exp(-0.5 * u ** 2)
        return (g, g_prime)
    if name == "skew":
        return (lambda u: u ** 2, lambda u: 2.0 * u)
    raise BadParam(f"unknown nonlinearity {name!r}")


def _sym_decorrelate(w):
    """W <- (W W^T)^(-1/2) W via the eigendecomposition."""
    vals, vecs = np.linalg.eigh(w @ w.T)
    vals = np.maximum(vals, 1e-18)
    return (vecs * (1.0 / np.sqrt(vals))) @ vecs.T @ w


def _whiten(data, n_components):
    """Center channels and project onto the top principal axes, unit variance."""
    row_means = data.mean(axis=1, keepdims=True)
    centered = data - row_means
    n_samples = data.shape[1]
    cov = centered @ centered.T / n_samples
    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    if vals[0] <= 0:
        raise RankDeficient("data matrix has no variance")
    if n_components > vals.size or vals[n_components - 1] < 1e-12 * vals[0]:
        raise RankDeficient(f"effective rank below {n_components}")
    d = vals[:n_components]
    e = vecs[:, :n_components]
    whitener = (e / np.sqrt(d)).T          # (q, channels)
    dewhitener = e * np.sqrt(d)            # (channels, q)
    return centered, row_means, whitener @ centered, whitener, dewhitener


def _ica_symmetric(z, w0, g, g_prime, tol, max_iter):
    n_samples = z.shape[1]
    w = _sym_decorrelate(w0)
    for iteration in range(1, max_iter + 1):
        projections = w @ z
        w_new = g(projections) @ z.T / n_samples \
            - np.diag(g_prime(projections).mean(axis=1)) @ w
        w_new = _sym_decorrelate(w_new)
        shift = float(np.max(np.abs(np.abs(np.diag(w_new @ w.T)) - 1.0)))
        w = w_new
        if shift < tol:
            return w, iteration
    return None, max_iter


def _ica_deflation(z, w0, g, g_prime, tol, max_iter):
    q, n_samples = w0.shape[0], z.shape[1]
    w = np.zeros((q, q))
    total_iters = 0
    for comp in range(q):
        vec = w0[comp] / np.linalg.norm(w0[comp])
        converged = False
        for iteration in range(1, max_iter + 1):
            proj = vec @ z
            vec_new = z @ g(proj) / n_samples - g_prime(proj).mean() * vec
            if comp:  # orthogonalize against the components already found
                basis = w[:comp]
                vec_new = vec_new - basis.T @ (basis @ vec_new)
            norm = np.linalg.norm(vec_new)
            if norm < 1e-12:
                break
            vec_new /= norm
            shift = abs(abs(float(vec_new @ vec)) - 1.0)
            vec = vec_new
            if shift < tol:
                converged = True
                break
        if not converged:
            return None, comp, max_iter
        total_iters = max(total_iters, iteration)
        w[comp] = vec
    return w, q, total_iters


def fast_ica(data, n_components: int | None = None, nonlinearity: str = "tanh",
             mode: str = "symmetric", seed: int = 42, tol: float = 1e-6,
             max_iter: int = 1000, restarts: int = 5) -> FactorModel:
    """Fixed-point ICA after a PCA whitening prestage.

    For a WeeklyMatrix the week rows are the observed mixtures and the seven
    weekday cells are the samples, so at most six independent weekly patterns
    exist after centering.  Plain (channels, samples) arrays are accepted for
    general blind source separation.  A failed fixed point is retried from
    fresh seeded starts before NoConvergence is raised.
    """
    if nonlinearity not in _NONLINEARITIES:
        raise BadParam(f"nonlinearity must be one of {_NONLINEARITIES}")
    if mode not in _MODES:
        raise BadParam(f"mode must be one of {_MODES}")
    matrix = _as_matrix(data)
    channels, n_samples = matrix.shape
    if n_components is None:
        n_components = min(channels, n_samples - 1, 7)
    if n_components < 1 or n_components > min(channels, n_samples):
        raise BadParam(f"n_components {n_components} infeasible for "
                       f"{channels}x{n_samples} data")

    centered, row_means, z, whitener, dewhitener = _whiten(matrix, n_components)
    g, g_prime = _contrast(nonlinearity)

    rng = np.random.default_rng(seed)
    unmixing = None
    for _ in range(max(restarts, 1)):
        w0 = rng.standard_normal((n_components, n_components))
        if mode == "symmetric":
            unmixing, iterations = _ica_symmetric(z, w0, g, g_prime, tol, max_iter)
        else:
            unmixing, comp, iterations = _ica_deflation(z, w0, g, g_prime,
                                                        tol, max_iter)
        if unmixing is not None:
            break
    if unmixing is None:
        if mode == "deflation":
            raise NoConvergence(f"fastICA component {comp}", max_iter)
        raise NoConvergence("fastICA", max_iter)

    sources = unmixing @ z                      # unit variance, uncorrelated
    mixing = dewhitener @ unmixing.T            # original-space mixing
    components, coefficients = _fix_signs(sources, mixing)
    components, coefficients, fractions, _ = _rank_by_energy(components,
                                                             coefficients)
    residual = centered - coefficients @ components
    return FactorModel(method="ica", components=components,
                       coefficients=coefficients, energy_fractions=fractions,
                       mean=row_means,
                       reconstruction_error=float(np.linalg.norm(residual)),
                       n_iterations=int(iterations), converged=True)


@dataclass(frozen=True)
class KsvdConfig:
    dict_size: int = 11
    sparsity: int = 7
    max_iterations: int = 200
    target_error: float = 1e-10

    def validate(self, signal_dim: int):
        if self.dict_size < 1:
            raise BadParam("dict_size must be >= 1")
        if not 1 <= self.sparsity <= min(self.dict_size, signal_dim):
            raise BadParam(f"sparsity must lie in 1..min(dict_size, {signal_dim})")


def _omp(dictionary, signals, sparsity):
    """Orthogonal matching pursuit, at most ``sparsity`` atoms per signal."""
    n_atoms = dictionary.shape[1]
    codes = np.zeros((n_atoms, signals.shape[1]))
    for col in range(signals.shape[1]):
        x = signals[:, col]
        residual = x.copy()
        scale = max(float(np.linalg.norm(x)), 1.0)
        support: list[int] = []
        coef = np.zeros(0)
        while len(support) < sparsity and np.linalg.norm(residual) > 1e-13 * scale:
            scores = np.abs(dictionary.T @ residual)
            scores[support] = -1.0
            support.append(int(np.argmax(scores)))
            sub = dictionary[:, support]
            coef, *_ = np.linalg.lstsq(sub, x, rcond=None)
            residual = x - sub @ coef
        if support:
            codes[support, col] = coef
    return codes


def _init_dictionary(signals, dict_size, rng):
    dim, n_signals = signals.shape
    atoms = np.empty((dim, dict_size))
    take = min(dict_size, n_signals)
    chosen = rng.choice(n_signals, size=take, replace=False)
    atoms[:, :take] = signals[:, chosen]
    if take < dict_size:
        atoms[:, take:] = rng.standard_normal((dim, dict_size - take))
    for j in range(dict_size):
        norm = np.linalg.norm(atoms[:, j])
        if norm < 1e-12:
            atoms[:, j] = rng.standard_normal(dim)
            norm = np.linalg.norm(atoms[:, j])
        atoms[:, j] /= norm
    return atoms


def _update_atoms(dictionary, codes, signals):
    """Sequential rank-1 atom updates; never increases the residual error."""
    for j in range(dictionary.shape[1]):
        used = np.abs(codes[j]) > 1e-12
        if not np.any(used):
            continue
        residual = (signals[:, used] - dictionary @ codes[:, used]
                    + np.outer(dictionary[:, j], codes[j, used]))
        u, s, vt = np.linalg.svd(residual, full_matrices=False)
        dictionary[:, j] = u[:, 0]
        codes[j, used] = s[0] * vt[0]


def _replace_weak_atoms(dictionary, codes, signals, rng, error_budget):
    """Swap dead or mutually coherent atoms for the worst-represented signals.

    Dead-atom swaps are free (their coefficient row is zero).  A coherent
    atom hands its coefficients to its twin first, and the swap is kept only
    if the represented error stays within ``error_budget`` so the recorded
    alternation error cannot rise.
    """
    residual_norms = np.linalg.norm(signals - dictionary @ codes, axis=0)
    usage = np.count_nonzero(np.abs(codes) > 1e-12, axis=1)
    order = np.argsort(-residual_norms)
    next_pick = 0

    def fresh_atom():
        nonlocal next_pick
        if next_pick < order.size:
            candidate = signals[:, order[next_pick]].astype(float).copy()
            next_pick += 1
            if np.linalg.norm(candidate) >= 1e-12:
                return candidate / np.linalg.norm(candidate)
        candidate = rng.standard_normal(dictionary.shape[0])
        return candidate / np.linalg.norm(candidate)

    gram = np.abs(dictionary.T @ dictionary)
    np.fill_diagonal(gram, 0.0)
    for j in range(dictionary.shape[1]):
        if usage[j] == 0:
            dictionary[:, j] = fresh_atom()
            continue
        twins = np.nonzero(gram[j, :j] > 0.99)[0]
        if twins.size == 0:
            continue
        twin = int(twins[0])
        sign = np.sign(float(dictionary[:, j] @ dictionary[:, twin])) or 1.0
        saved_atom = dictionary[:, j].copy()
        saved_row_j = codes[j].copy()
        saved_row_t = codes[twin].copy()
        codes[twin] = codes[twin] + sign * codes[j]
        codes[j] = 0.0
        dictionary[:, j] = fresh_atom()
        error = float(np.linalg.norm(signals - dictionary @ codes))
        if error > error_budget:  # keep the recorded path non-increasing
            dictionary[:, j] = saved_atom
            codes[j] = saved_row_j
            codes[twin] = saved_row_t
        else:
            gram = np.abs(dictionary.T @ dictionary)
            np.fill_diagonal(gram, 0.0)


def ksvd(matrix, config: KsvdConfig | None = None, seed: int = 42) -> FactorModel:
    """K-SVD dictionary learning with OMP sparse coding.

    A WeeklyMatrix is transposed so the signals are the week columns and the
    learned atoms are length-7 weekly patterns.  Alternates OMP coding with
    rank-1 SVD atom updates; weak atoms are replaced by the currently
    worst-represented signal.  Stops at ``target_error`` (Frobenius) or
    ``max_iterations``, returning the best dictionary seen (flagged when the
    target was not reached).
    """
    config = config or KsvdConfig()
    if isinstance(matrix, WeeklyMatrix):
        signals = matrix.cells.T.astype(float)
    else:
        signals = _as_matrix(matrix)
    dim, n_signals = signals.shape
    if n_signals < 2:
        raise TooFewPoints("k-svd needs at least 2 signal columns")
    config.validate(dim)

    rng = np.random.default_rng(seed)
    dictionary = _init_dictionary(signals, config.dict_size, rng)
    best = None
    error_history = []
    converged = False
    codes = None
    stalled = 0
    for iteration in range(1, config.max_iterations + 1):
        if codes is not None:
            _replace_weak_atoms(dictionary, codes, signals, rng,
                                error_budget=error_history[-1])
        fresh = _omp(dictionary, signals, config.sparsity)
        trial_dict = dictionary.copy()
        trial_codes = fresh.copy()
        _update_atoms(trial_dict, trial_codes, signals)
        error = float(np.linalg.norm(signals - trial_dict @ trial_codes))
        if error_history and error > error_history[-1]:
            # greedy re-coding regressed; redo the step keeping, per signal,
            # the better of the previous and the fresh code (both feasible),
            # which bounds this alternation by the last recorded error
            old_cols = np.linalg.norm(signals - dictionary @ codes, axis=0)
            new_cols = np.linalg.norm(signals - dictionary @ fresh, axis=0)
            mixed = codes.copy()
            take = new_cols <= old_cols
            mixed[:, take] = fresh[:, take]
            fallback_dict = dictionary.copy()
            _update_atoms(fallback_dict, mixed, signals)
            fallback_error = float(np.linalg.norm(signals - fallback_dict @ mixed))
            trial_dict, trial_codes, error = fallback_dict, mixed, fallback_error
        dictionary, codes = trial_dict, trial_codes
        stalled = stalled + 1 if (error_history
                                  and error >= error_history[-1] * (1 - 1e-12)) else 0
        error_history.append(error)
        if best is None or error < best[2]:
            best = (dictionary.copy(), codes.copy(), error)
        if error <= config.target_error:
            converged = True
            break
        if stalled >= 5:
            break

    dictionary, codes, error = best
    components, coefficients = _fix_signs(dictionary.T, codes.T)
    components, coefficients, fractions, _ = _rank_by_energy(components,
                                                             coefficients)
    return FactorModel(method="ksvd", components=components,
                       coefficients=coefficients, energy_fractions=fractions,
                       reconstruction_error=error,
                       error_history=np.array(error_history),
                       n_iterations=len(error_history), converged=converged)


def energy_ranking(model: FactorModel, matrix=None):
    """Component order and energy fractions, descending (ties keep index order).

    Fraction i is the energy of component i's rank-1 contribution over the
    total contributed energy.
    """
    energies = _contribution_energies(model.components, model.coefficients)
    order = np.argsort(-energies, kind="stable")
    total = float(np.sum(energies))
    fractions = energies[order] / total if total > 0 else np.zeros_like(energies)
    return order, fractions
