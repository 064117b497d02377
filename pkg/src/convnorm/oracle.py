"""Reference computations on small or special instances.

* exact spectral norms for p = r = 2 on the cyclic group Z/m,
* multi-start gradient search for the operator norm on Z/m,
* the decay of operator norms for chirped kernels k(x) exp(i lam x^2).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .engine import IterationConfig, iterate
from .errors import DomainError, PreconditionError, ResolutionError, ZeroFunctionError
from .exponents import ExponentTriple
from .grid import Chirped, GridFunction, kernel_by_displacement, sample_kernel

@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    """Convolution z -> sum_i k[j - i] z[i] on Z/m (counting measure, h = 1)."""

    kernel: np.ndarray
    triple: ExponentTriple

    def __post_init__(self):
        k = np.array(self.kernel, dtype=np.complex128).ravel()
        if k.size < 2:
            raise DomainError(f"need m >= 2, got m = {k.size}")
        if k.size % 2:
            raise DomainError(f"the grid model needs even m, got m = {k.size}")
        if not np.all(np.isfinite(k)):
            raise DomainError("kernel has non-finite entries")
        if not np.any(k):
            raise ZeroFunctionError("kernel is identically zero")
        k.setflags(write=False)
        object.__setattr__(self, "kernel", k)

    @property
    def m(self) -> int:
        return self.kernel.size

    def to_grid(self) -> GridFunction:
        return sample_kernel_grid(self.kernel)

    def apply(self, z: np.ndarray) -> np.ndarray:
        return np.fft.ifft(np.fft.fft(self.kernel) * np.fft.fft(z))

    def scaled(self, t: float) -> "DiscreteOperator":
        return DiscreteOperator(self.kernel * t, self.triple)


def sample_kernel_grid(vector: np.ndarray) -> GridFunction:
    """Place a group-indexed vector on the grid with h = 1, L = m/2."""
    vec = np.asarray(vector, dtype=np.complex128)
    return GridFunction(np.roll(vec, vec.size // 2), vec.size / 2)


def random_operator(m: int, triple: ExponentTriple, rng: np.random.Generator) -> DiscreteOperator:
    """Complex Gaussian kernel entries."""
    return DiscreteOperator(rng.standard_normal(m) + 1j * rng.standard_normal(m), triple)


def spectral_norm_p2(op: DiscreteOperator) -> float:
    """max_j |(F k)_j|, the exact L2 -> L2 norm."""
    t = op.triple
    if not (abs(t.p - 2) < 1e-12 and abs(t.r - 2) < 1e-12):
        raise PreconditionError(f"spectral formula needs p = r = 2, got {t.as_tuple()}")
    return float(np.max(np.abs(np.fft.fft(op.kernel))))


def _vector_norm(v: np.ndarray, p: float) -> float:
    a = np.abs(v)
    if math.isinf(p):
        return float(a.max())
    top = a.max()
    if top == 0:
        return 0.0
    return float(top * math.fsum((a / top) ** p) ** (1.0 / p))


def _log_norm_and_grad(w: np.ndarray, s: float):
    """log ||w||_s and its gradient as a complex vector (d/dRe + i d/dIm)."""
    a = np.abs(w)
    top = a.max()
    if top == 0:
        return -math.inf, np.zeros_like(w)
    u = a / top
    total = np.sum(u ** s)
    val = math.log(top) + math.log(total) / s
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.where(a > 0, u ** (s - 2) * (w / top), 0.0) / (top * total)
    return val, g


class _Objective:
    """Negative log of ||k (*) z||_r' / ||z||_p over real coordinates of z."""

    def __init__(self, op: DiscreteOperator):
        self.fk = np.fft.fft(op.kernel)
        self.m = op.m
        self.p = op.triple.p
        self.s = op.triple.r_conj

    def __call__(self, x: np.ndarray):
        m = self.m
        z = x[:m] + 1j * x[m:]
        w = np.fft.ifft(self.fk * np.fft.fft(z))
        lw, gw = _log_norm_and_grad(w, self.s)
        lz, gz = _log_norm_and_grad(z, self.p)
        g = np.fft.ifft(np.conj(self.fk) * np.fft.fft(gw)) - gz
        return lz - lw, -np.concatenate((g.real, g.imag))

    def ratio(self, z: np.ndarray) -> float:
        w = np.fft.ifft(self.fk * np.fft.fft(z))
        nz = _vector_norm(z, self.p)
        return _vector_norm(w, self.s) / nz if nz > 0 else 0.0


def _ascend(obj: _Objective, z0: np.ndarray, max_iter: int) -> tuple[float, np.ndarray]:
    x0 = np.concatenate((z0.real, z0.imag))
    res = minimize(obj, x0, jac=True, method="L-BFGS-B",
                   options={"maxiter": max_iter, "ftol": 1e-15, "gtol": 1e-12})
    z = res.x[:obj.m] + 1j * res.x[obj.m:]
    # L-BFGS may stop at a worse point than it visited; keep the better end
    best = max((obj.ratio(z0), z0), (obj.ratio(z), z), key=lambda t: t[0])
    return best


@dataclass(frozen=True)
class BruteForceResult:
    value: float
    restart_values: tuple
    engine_value: float
    engine_start_value: float
    """Value reached by the search started from the engine's maximizer."""
    best_vector: np.ndarray


def engine_starts(op: DiscreteOperator, starts: int, seed: int) -> list[GridFunction]:
    """A smooth bump plus ``starts - 1`` seeded complex Gaussian vectors."""
    kg = op.to_grid()
    bump = np.exp(-0.5 * (kg.x / max(1.0, op.m / 8)) ** 2) * (1 + 0.1j * np.cos(kg.x))
    out = [kg.with_values(bump)]
    for rng in np.random.default_rng([seed, 1]).spawn(max(0, starts - 1)):
        out.append(kg.with_values(rng.standard_normal(op.m) + 1j * rng.standard_normal(op.m)))
    return out


def _engine_start(op: DiscreteOperator, cfg: IterationConfig, starts: int = 8, seed: int = 0):
    """Best engine limit over several starts.

    On Z/m the iteration can settle on a non-maximal fixed point, so a single
    start is not enough.
    """
    kg = op.to_grid()
    best = None
    for start in engine_starts(op, starts, seed):
        report = iterate(kg, op.triple, replace(cfg, initial=start))
        if best is None or report.norm_estimate > best.norm_estimate:
            best = report
    vec = np.roll(best.final_f.values, -(op.m // 2))
    return best.norm_estimate, vec


def brute_force_search(op: DiscreteOperator, restarts: int = 20, seed: int = 0,
                       jobs: int = 1, max_iter: int = 2000,
                       cfg: IterationConfig | None = None,
                       n_engine_starts: int = 8) -> BruteForceResult:
    """Maximize ||k (*) z||_r' / ||z||_p by L-BFGS from ``restarts`` random
    complex starts plus one start at the engine's limit.

    Each restart draws from its own child of ``seed``, so the result does not
    depend on ``jobs``.
    """
    if restarts < 1:
        raise DomainError("restarts must be >= 1")
    if op.triple.p == 1 or math.isinf(op.triple.r_conj):
        raise DomainError("gradient search needs 1 < p and r > 1")
    obj = _Objective(op)
    children = np.random.default_rng(seed).spawn(restarts)

    def run(rng):
        z0 = rng.standard_normal(op.m) + 1j * rng.standard_normal(op.m)
        return _ascend(obj, z0, max_iter)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            found = list(ex.map(run, children))
    else:
        found = [run(c) for c in children]
    eng_value, eng_vec = _engine_start(op, cfg or IterationConfig(), n_engine_starts, seed)
    from_engine = _ascend(obj, eng_vec, max_iter)
    best_val, best_vec = max(found + [from_engine], key=lambda t: t[0])
    return BruteForceResult(best_val, tuple(v for v, _ in found), eng_value,
                            from_engine[0], best_vec)


def brute_force_norm(op: DiscreteOperator, restarts: int = 20, seed: int = 0,
                     jobs: int = 1) -> float:
    """Best ratio found by :func:`brute_force_search` (a certified lower bound)."""
    return brute_force_search(op, restarts, seed, jobs).value


def engine_norm(op: DiscreteOperator, cfg: IterationConfig | None = None,
                starts: int = 8, seed: int = 0) -> float:
    """Largest engine limit over ``starts`` initial conditions."""
    return _engine_start(op, cfg or IterationConfig(), starts, seed)[0]


def discrete_young_bound(op: DiscreteOperator) -> float:
    """||k||_q with counting measure."""
    return _vector_norm(op.kernel, op.triple.q)


# -- chirped kernels ----------------------------------------------------------------


@dataclass(frozen=True)
class ChirpResult:
    points: tuple
    """(lambda, norm) pairs in input order."""
    slope: float | None
    """Least-squares slope of log norm against log lambda over lambda > 0."""
    max_ripple: float
    """Largest relative rise of a norm above the running minimum."""
    ripple_ok: bool


def grid_spectral_norm(k: GridFunction) -> float:
    """h max |F k| for the grid convolution, its exact L2 operator norm."""
    return float(k.step * np.max(np.abs(np.fft.fft(kernel_by_displacement(k)))))


def chirp_norm(base, lam: float, N: int, L: float, triple: ExponentTriple | None = None,
               cfg: IterationConfig | None = None) -> float:
    """Operator norm for the kernel base(x) exp(i lam x^2) on the grid."""
    h = 2.0 * L / N
    if abs(lam) * L * h > math.pi:
        raise ResolutionError(
            f"chirp unresolved: lambda*L*h = {abs(lam) * L * h:.3g} exceeds pi; refine N"
        )
    kg = sample_kernel(Chirped(base, lam), N, L).grid
    if triple is None or (abs(triple.p - 2) < 1e-12 and abs(triple.r - 2) < 1e-12):
        return grid_spectral_norm(kg)
    return iterate(kg, triple, cfg).norm_estimate


def fit_loglog_slope(points: Sequence[tuple]) -> float | None:
    pts = [(l, n) for l, n in points if l > 0 and n > 0]
    if len(pts) < 2:
        return None
    x = np.log([l for l, _ in pts])
    y = np.log([n for _, n in pts])
    return float(np.polyfit(x, y, 1)[0])


def chirp_decay(base, lambdas: Sequence[float], N: int, L: float,
                triple: ExponentTriple | None = None, cfg: IterationConfig | None = None,
                ripple_tol: float = 0.05) -> ChirpResult:
    """Norms of chirped kernels over ``lambdas``; p = r = 2 (the default)
    uses the spectral formula, any other triple runs the engine."""
    lams = [float(l) for l in lambdas]
    for lam in lams:
        h = 2.0 * L / N
        if abs(lam) * L * h > math.pi:
            raise ResolutionError(
                f"chirp unresolved at lambda={lam}: lambda*L*h = {abs(lam) * L * h:.3g} > pi"
            )
    points = tuple((lam, chirp_norm(base, lam, N, L, triple, cfg)) for lam in lams)
    order = sorted(points, key=lambda t: abs(t[0]))
    ripple, running = 0.0, math.inf
    for _, n in order:
        if n > running:
            ripple = max(ripple, n / running - 1.0)
        running = min(running, n)
    return ChirpResult(points, fit_loglog_slope(points), ripple, ripple <= ripple_tol)
