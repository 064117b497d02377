"""Periodic functions on a uniform 1-D grid and the primitives the iteration
composes.

A :class:`GridFunction` holds N samples at the nodes x_j = -L + j*h,
h = 2L/N, of a function on the circle of circumference 2L.  N must be even
so that x = 0 is a node (array index N//2); displacements between nodes are
then nodes as well, which is what makes the cyclic convolution an exact
convolution operator on the group Z/N.

Quadrature is the rectangle rule: ``||f||_p^p = h * sum |f_j|^p``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Union

import numpy as np
from scipy import integrate

from .errors import DomainError, GridMismatchError, ZeroFunctionError
from .output import atomic_write_text


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Complex samples on the periodic grid over [-L, L)."""

    values: np.ndarray
    half_length: float

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.complex128, copy=True).reshape(-1)
        n = vals.size
        if n < 2 or n % 2:
            raise DomainError(f"grid size must be an even integer >= 2, got {n}")
        L = float(self.half_length)
        if not (L > 0 and math.isfinite(L)):
            raise DomainError(f"half_length must be positive and finite, got {L!r}")
        if not np.all(np.isfinite(vals)):
            raise DomainError("grid function values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "half_length", L)

    @property
    def size(self) -> int:
        return self.values.size

    @property
    def step(self) -> float:
        return 2.0 * self.half_length / self.size

    @property
    def x(self) -> np.ndarray:
        return -self.half_length + self.step * np.arange(self.size)

    @property
    def origin_index(self) -> int:
        return self.size // 2

    @property
    def period(self) -> float:
        return 2.0 * self.half_length

    def with_values(self, values) -> "GridFunction":
        return GridFunction(values, self.half_length)

    def same_grid(self, other: "GridFunction") -> bool:
        return self.size == other.size and self.half_length == other.half_length

    def roll(self, nodes: int) -> "GridFunction":
        """Cyclic translation by ``nodes`` grid steps (T_a with a = nodes*h)."""
        return self.with_values(np.roll(self.values, nodes))

    def __add__(self, other):
        _check_same(self, other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other):
        _check_same(self, other)
        return self.with_values(self.values - other.values)

    def __mul__(self, c):
        return self.with_values(self.values * complex(c))

    __rmul__ = __mul__

    @classmethod
    def from_function(cls, func: Callable[[np.ndarray], np.ndarray], N: int, L: float):
        h = 2.0 * L / N
        x = -L + h * np.arange(N)
        return cls(np.asarray(func(x), dtype=np.complex128), L)

    @classmethod
    def zeros(cls, N: int, L: float):
        return cls(np.zeros(N, dtype=np.complex128), L)

    @classmethod
    def spike(cls, N: int, L: float, node: int = 0, height: float | None = None):
        """A single nonzero sample at the node x = node*h.

        The default height 1/h makes the spike a discrete delta (unit L_1
        mass), so that convolution with it is the identity.
        """
        vals = np.zeros(N, dtype=np.complex128)
        h = 2.0 * L / N
        vals[(N // 2 + node) % N] = 1.0 / h if height is None else height
        return cls(vals, L)


def _check_same(a: GridFunction, b: GridFunction) -> None:
    if not a.same_grid(b):
        raise GridMismatchError(
            f"grids differ: (N={a.size}, L={a.half_length}) vs "
            f"(N={b.size}, L={b.half_length})"
        )


def _check_exponent(p: float) -> None:
    if math.isnan(p) or p < 1:
        raise DomainError(f"norm exponent must be >= 1, got {p!r}")


def _power_sum(a: np.ndarray, p: float) -> float:
    # math.fsum is correctly rounded, so the result does not depend on the
    # order of the samples (shifts preserve norms bit for bit).
    return math.fsum((a ** p).tolist())


def values_norm(values: np.ndarray, p: float, h: float) -> float:
    """Rectangle-rule L_p norm of raw samples with cell width h."""
    a = np.abs(values)
    top = float(a.max()) if a.size else 0.0
    if top == 0.0:
        return 0.0
    if math.isinf(p):
        return top
    # scaling by the max keeps |f|^p representable for large p
    return top * (h * _power_sum(a / top, p)) ** (1.0 / p)


def lp_norm(f: GridFunction, p: float) -> float:
    """Rectangle-rule L_p norm; ``p = inf`` gives the max modulus."""
    _check_exponent(p)
    return values_norm(f.values, p, f.step)


def lp_norm_power(f: GridFunction, p: float) -> float:
    """``lp_norm(f, p) ** p`` evaluated without the final root."""
    _check_exponent(p)
    return f.step * _power_sum(np.abs(f.values), p)


def is_power_of_two(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


def kernel_by_displacement(k: GridFunction) -> np.ndarray:
    """Reorder kernel samples so index m holds k(m*h) (m taken mod N)."""
    return np.roll(k.values, -k.origin_index)


def convolve_direct(k: GridFunction, f: GridFunction) -> GridFunction:
    """O(N^2) reference summation: (k*f)_j = h * sum_i k(x_j - x_i) f_i."""
    _check_same(k, f)
    n = k.size
    kd = kernel_by_displacement(k)
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    return f.with_values(f.step * (kd[idx] @ f.values))


def convolve_fft(k: GridFunction, f: GridFunction) -> GridFunction:
    """Same sum as :func:`convolve_direct` through the discrete transform."""
    _check_same(k, f)
    kd = kernel_by_displacement(k)
    return f.with_values(f.step * np.fft.ifft(np.fft.fft(kd) * np.fft.fft(f.values)))


DENSE_MAX = 64


def _auto_method(n: int) -> str:
    # small grids are faster as a dense product; the transform wins above
    return "fft" if is_power_of_two(n) and n > DENSE_MAX else "direct"


def cyclic_convolve(k: GridFunction, f: GridFunction, method: str = "auto") -> GridFunction:
    """Cyclic convolution scaled by h.

    ``method='auto'`` uses the transform for power-of-two sizes above
    ``DENSE_MAX`` and direct summation otherwise.
    """
    if method == "auto":
        method = _auto_method(k.size)
    if method == "fft":
        return convolve_fft(k, f)
    if method == "direct":
        return convolve_direct(k, f)
    raise ValueError(f"unknown convolution method {method!r}")


class CyclicConvolver:
    """Convolution with a fixed kernel, with the kernel transform cached.

    Used by the iteration, which convolves with the same kernel thousands of
    times; arithmetic matches ``cyclic_convolve(method='auto')``.
    """

    def __init__(self, k: GridFunction):
        self.kernel = k
        self.size = k.size
        self.half_length = k.half_length
        self.step = k.step
        self._fft_path = _auto_method(k.size) == "fft"
        kd = kernel_by_displacement(k)
        if self._fft_path:
            self._spectrum = np.fft.fft(kd)
        else:
            n = k.size
            self._matrix = kd[(np.arange(n)[:, None] - np.arange(n)[None, :]) % n]

    def apply_array(self, values: np.ndarray) -> np.ndarray:
        if self._fft_path:
            return self.step * np.fft.ifft(self._spectrum * np.fft.fft(values))
        return self.step * (self._matrix @ values)

    def __call__(self, f: GridFunction) -> GridFunction:
        _check_same(self.kernel, f)
        return f.with_values(self.apply_array(f.values))


ArrayOrGrid = Union[GridFunction, np.ndarray, complex, float]


def signed_power(f: ArrayOrGrid, gamma: float):
    """Pointwise z -> conj(z) |z|^(gamma-1), with 0 -> 0 for every gamma > 0.

    Accepts a GridFunction, an array or a scalar and returns the same kind.
    """
    if not gamma > 0:
        raise DomainError(f"signed power needs gamma > 0, got {gamma!r}")
    if isinstance(f, GridFunction):
        return f.with_values(signed_power(f.values, gamma))
    z = np.asarray(f, dtype=np.complex128)
    a = np.abs(z)
    out = np.zeros_like(z)
    nz = a > 0
    out[nz] = np.conj(z[nz]) * a[nz] ** (gamma - 1.0)
    if out.ndim == 0:
        return complex(out)
    return out


def reflect_array(values: np.ndarray) -> np.ndarray:
    n = values.shape[-1]
    return values[..., (-np.arange(n)) % n]


def reflect(f: GridFunction) -> GridFunction:
    """f(x) -> f(-x); node x_j maps to x_{N-j} with periodic wrap."""
    return f.with_values(reflect_array(f.values))


def radial_project(f: GridFunction, p: float) -> GridFunction:
    """Scale f onto the unit sphere of L_p."""
    n = lp_norm(f, p)
    if n == 0:
        raise ZeroFunctionError("cannot project the zero function onto the unit sphere")
    return f.with_values(f.values / n)


def shift_argmax_to_origin(f: GridFunction) -> tuple[GridFunction, float]:
    """Cyclically shift f so its first node of maximal modulus sits at x = 0.

    Returns the shifted function and the applied translation in x-units.
    """
    a = np.abs(f.values)
    if not a.any():
        raise ZeroFunctionError("zero function has no argmax")
    nodes = f.origin_index - int(np.argmax(a))
    return f.roll(nodes), nodes * f.step


# -- kernels -----------------------------------------------------------------


@dataclass(frozen=True)
class LaplaceHp:
    """h_p(y) = exp(y/p' - e^y), the kernel of the log-substituted Laplace
    transform."""

    p: float

    def __post_init__(self):
        if not (1 < self.p < 2):
            raise DomainError(f"h_p needs 1 < p < 2, got {self.p!r}")

    def __call__(self, x):
        pc = self.p / (self.p - 1.0)
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore"):  # exp(-inf) = 0 far right
            return np.exp(x / pc - np.exp(x))

    def lq_power(self, q: float) -> float:
        """Closed form of ||h_p||_q^q = Gamma(q/p') (q)^(-q/p')."""
        pc = self.p / (self.p - 1.0)
        a = q / pc
        return math.exp(math.lgamma(a) - a * math.log(q))


@dataclass(frozen=True)
class Gaussian:
    """exp(-b x^2)."""

    b: float = 1.0

    def __post_init__(self):
        if not self.b > 0:
            raise DomainError(f"Gaussian kernel needs b > 0, got {self.b!r}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-self.b * x * x)

    def lq_power(self, q: float) -> float:
        return math.sqrt(math.pi / (q * self.b))


@dataclass(frozen=True)
class Chirped:
    """base(x) * exp(i * lam * x^2)."""

    base: object
    lam: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.base(x) * np.exp(1j * self.lam * x * x)

    def lq_power(self, q: float) -> float:
        return self.base.lq_power(q)


@dataclass(frozen=True)
class Tabulated:
    """A kernel given directly by its grid samples."""

    grid: GridFunction


@dataclass(frozen=True)
class Discrete:
    """A kernel on Z/m indexed by group element (entry 0 is the identity)."""

    vector: tuple

    def __init__(self, vector):
        object.__setattr__(self, "vector", tuple(complex(v) for v in vector))


KernelSpec = Union[LaplaceHp, Gaussian, Chirped, Tabulated, Discrete]


@dataclass(frozen=True, eq=False)
class SampledKernel:
    """A kernel realized on a grid, with the L_q mass lost outside [-L, L).

    ``tail_mass`` is rho = ||k - k 1_[-L,L)||_q^q for the exponent ``q``
    (None when no exponent was requested or the kernel has no continuum
    extension).
    """

    grid: GridFunction
    q: float | None = None
    tail_mass: float | None = None
    spec: object = field(default=None)

    @property
    def truncation_bound(self) -> float | None:
        """rho^(1/q): by Young, the (p,r)-norm changes by at most this much."""
        if self.tail_mass is None or self.q is None:
            return None
        return self.tail_mass ** (1.0 / self.q)


def _modulus(spec) -> Callable[[float], float]:
    if isinstance(spec, Chirped):
        return _modulus(spec.base)
    return lambda x: float(abs(spec(np.array([x]))[0]))


def tail_mass(spec, q: float, L: float) -> float:
    """L_q^q mass of a continuum kernel outside [-L, L) by adaptive quadrature."""
    mod = _modulus(spec)

    def integrand(x):
        return mod(x) ** q

    opts = dict(epsrel=1e-10, epsabs=0.0, limit=400)
    left, _ = integrate.quad(integrand, -np.inf, -L, **opts)
    right, _ = integrate.quad(integrand, L, np.inf, **opts)
    return left + right


def sample_kernel(spec, N: int | None = None, L: float | None = None,
                  q: float | None = None) -> SampledKernel:
    """Realize a kernel spec on the grid with N nodes over [-L, L).

    For ``Discrete`` kernels the grid is Z/m itself (h = 1, L = m/2) and N, L
    may be omitted.  When ``q`` is given the truncated tail mass is estimated
    for continuum kernels.
    """
    if isinstance(spec, Discrete):
        vec = np.asarray(spec.vector, dtype=np.complex128)
        m = vec.size
        if N is not None and N != m:
            raise DomainError(f"discrete kernel has m={m}, requested N={N}")
        if L is not None and L != m / 2:
            raise DomainError(f"discrete kernel on Z/{m} needs L = {m / 2}, got {L}")
        grid = GridFunction(np.roll(vec, m // 2), m / 2)
        return SampledKernel(grid, q, 0.0 if q is not None else None, spec)
    if isinstance(spec, Tabulated):
        g = spec.grid
        if (N is not None and N != g.size) or (L is not None and L != g.half_length):
            raise DomainError("tabulated kernel grid does not match requested N, L")
        return SampledKernel(g, q, 0.0 if q is not None else None, spec)
    if N is None or L is None:
        raise DomainError("N and L are required to sample a continuum kernel")
    if not (L > 0):
        raise DomainError(f"L must be positive, got {L!r}")
    grid = GridFunction.from_function(spec, N, L)
    rho = tail_mass(spec, q, L) if q is not None else None
    return SampledKernel(grid, q, rho, spec)


def as_grid(k) -> GridFunction:
    return k.grid if isinstance(k, SampledKernel) else k


# -- serialization -----------------------------------------------------------


def sidecar_path(path: Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def grid_to_csv_text(f: GridFunction) -> str:
    lines = ["x,re,im"]
    for x, v in zip(f.x, f.values):
        lines.append(f"{x:.17g},{v.real:.17g},{v.imag:.17g}")
    return "\n".join(lines) + "\n"


def save_grid_function(f: GridFunction, path) -> None:
    """Write ``path`` (CSV x,re,im) and ``path + '.json'`` ({N, L})."""
    path = Path(path)
    atomic_write_text(path, grid_to_csv_text(f))
    meta = {"N": f.size, "L": f.half_length}
    atomic_write_text(sidecar_path(path), json.dumps(meta, sort_keys=True) + "\n")


def load_grid_function(path) -> GridFunction:
    path = Path(path)
    meta = json.loads(sidecar_path(path).read_text(encoding="utf-8"))
    rows = [ln for ln in path.read_text(encoding="utf-8").splitlines()
            if ln and not ln.startswith("#")]
    if rows[0].replace(" ", "") != "x,re,im":
        raise ValueError(f"{path}: expected header 'x,re,im', got {rows[0]!r}")
    data = np.array([[float(c) for c in ln.split(",")] for ln in rows[1:]])
    if data.shape[0] != int(meta["N"]):
        raise ValueError(f"{path}: {data.shape[0]} rows but sidecar says N={meta['N']}")
    return GridFunction(data[:, 1] + 1j * data[:, 2], float(meta["L"]))
