"""Weighted Sobolev scales on truncated Fourier series over the d-torus.

A function is stored by its Fourier coefficients ``c_k`` on the centred grid
``|k_i| <= N`` so that ``u(x) = sum_k c_k exp(i k.x)``.  With this convention a
single unit mode has L2 norm 1 and the Sobolev norm is the weighted l2 norm

    ||u||_s = ( sum_k <k>^{2s} |c_k|^2 )^{1/2},     <k> = (1 + |k|^2)^{1/2}.

The smoothing projector ``project(u, lam)`` keeps the modes with ``<k> <= lam``
(plain cutoff) or ``|eps k| <= lam`` (epsilon cutoff).  With the plain cutoff
the growth and approximation bounds hold with constants 1, and the
interpolation inequality holds with constant 1 because ``s -> log ||u||_s^2``
is convex.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "FrequencyGrid",
    "ScaleFunction",
    "ScaleConstants",
    "NormSpec",
    "ScaleDomainError",
    "GridMismatchError",
    "RatioReport",
    "norm",
    "weighted_norm",
    "project",
    "tail",
    "verify_growth",
    "verify_approx",
    "interpolation_check",
    "add",
    "scale",
    "product",
    "derivative",
    "multiplier",
    "conjugate",
    "single_mode",
    "random_function",
    "to_bytes",
    "from_bytes",
]


class ScaleDomainError(ValueError):
    """A regularity index or cutoff outside its admissible range."""


class GridMismatchError(ValueError):
    """Two functions live on incompatible grids."""


# ---------------------------------------------------------------------------
# grid and carrier
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FrequencyGrid:
    """Integer frequencies ``k`` with ``|k_i| <= N`` in ``d`` dimensions."""

    d: int
    N: int
    components: int = 1

    def __post_init__(self):
        if self.d < 1 or self.N < 0 or self.components < 1:
            raise ValueError(f"invalid grid d={self.d} N={self.N} components={self.components}")

    @property
    def width(self) -> int:
        return 2 * self.N + 1

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.components,) + (self.width,) * self.d

    @property
    def size(self) -> int:
        return self.components * self.width**self.d

    def axis_modes(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    def wavenumbers(self) -> list[np.ndarray]:
        """Per-axis integer wavenumbers broadcast to the spatial shape."""
        ks = self.axis_modes()
        return list(np.meshgrid(*([ks] * self.d), indexing="ij"))

    def k_squared(self) -> np.ndarray:
        """``|k|^2`` over the spatial shape (no component axis)."""
        return sum(k.astype(float) ** 2 for k in self.wavenumbers())

    def bracket(self) -> np.ndarray:
        """``<k> = (1 + |k|^2)^{1/2}`` over the spatial shape."""
        return np.sqrt(1.0 + self.k_squared())

    def max_bracket(self) -> float:
        return float(np.sqrt(1.0 + self.d * self.N**2))

    def with_components(self, components: int) -> "FrequencyGrid":
        return FrequencyGrid(self.d, self.N, components)


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ScaleFunction:
    """Immutable vector of Fourier coefficients on a :class:`FrequencyGrid`.

    ``coefficients`` has shape ``grid.shape`` = (components, 2N+1, ..., 2N+1),
    with frequency ``k`` stored at index ``k + N`` along each spatial axis.
    """

    grid: FrequencyGrid
    coefficients: np.ndarray
    epsilon: float | None = None
    real: bool = False

    def __post_init__(self):
        c = np.asarray(self.coefficients)
        if c.shape != self.grid.shape:
            if c.size == self.grid.size:
                c = c.reshape(self.grid.shape)
            else:
                raise GridMismatchError(f"coefficient shape {c.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "coefficients", _freeze(c))
        if self.epsilon is not None and not self.epsilon > 0:
            raise ValueError("epsilon weight must be positive")
        if self.real:
            mirrored = np.conj(_mirror(self.coefficients))
            scale_ = max(float(np.max(np.abs(self.coefficients), initial=0.0)), 1e-300)
            if np.max(np.abs(self.coefficients - mirrored), initial=0.0) > 1e-12 * scale_:
                raise ValueError("coefficients violate conjugate symmetry of a real function")

    # convenient constructors -------------------------------------------------
    @classmethod
    def zeros(cls, grid: FrequencyGrid, epsilon: float | None = None, real: bool = False) -> "ScaleFunction":
        return cls(grid, np.zeros(grid.shape, dtype=complex), epsilon, real)

    def like(self, coefficients: np.ndarray, real: bool | None = None) -> "ScaleFunction":
        return ScaleFunction(self.grid, coefficients, self.epsilon, self.real if real is None else real)

    def flat(self) -> np.ndarray:
        return self.coefficients.reshape(-1)

    # arithmetic sugar --------------------------------------------------------
    def __add__(self, other: "ScaleFunction") -> "ScaleFunction":
        return add(self, other)

    def __sub__(self, other: "ScaleFunction") -> "ScaleFunction":
        return add(self, other, -1.0)

    def __neg__(self) -> "ScaleFunction":
        return scale(self, -1.0)

    def __mul__(self, c) -> "ScaleFunction":
        if isinstance(c, ScaleFunction):
            return product(self, c)
        return scale(self, c)

    __rmul__ = __mul__

    def norm(self, s: float = 0.0, variant: str = "plain", epsilon: float | None = None) -> float:
        eps = epsilon if epsilon is not None else self.epsilon
        return norm(self, NormSpec(variant, s, eps))


def _mirror(c: np.ndarray) -> np.ndarray:
    """Coefficient array re-indexed by ``k -> -k`` on every spatial axis."""
    return c[(slice(None),) + (slice(None, None, -1),) * (c.ndim - 1)]


@dataclass(frozen=True)
class ScaleConstants:
    """Growth, approximation and interpolation constants of a scale."""

    A1: float
    A2: float = 1.0
    A3: float = 1.0
    S: float = np.inf

    def __post_init__(self):
        if min(self.A1, self.A2, self.A3) < 1.0:
            raise ValueError("scale constants must be >= 1")

    @classmethod
    def fourier(cls, S: float) -> "ScaleConstants":
        """Declared constants of the Fourier scale with ceiling ``S``."""
        return cls(A1=2.0 ** (S / 2.0), A2=1.0, A3=1.0, S=S)


_VARIANTS = ("plain_sobolev", "epsilon_sobolev", "time_banded")
_ALIASES = {"plain": "plain_sobolev", "epsilon": "epsilon_sobolev", "time": "time_banded"}


@dataclass(frozen=True)
class NormSpec:
    """Which weighted norm to evaluate.

    ``plain_sobolev`` uses the weight ``<k>^s``; ``epsilon_sobolev`` uses
    ``(1 + |eps k|^2)^{s/2}``; ``time_banded`` is the supremum over time samples
    of the epsilon norm.  ``ceiling`` is the scale ceiling ``S``.
    """

    variant: str = "plain_sobolev"
    s: float = 0.0
    epsilon: float | None = None
    ceiling: float = np.inf

    def __post_init__(self):
        variant = _ALIASES.get(self.variant, self.variant)
        if variant not in _VARIANTS:
            raise ValueError(f"unknown norm variant {self.variant!r}")
        object.__setattr__(self, "variant", variant)
        if not (0.0 <= self.s <= self.ceiling):
            raise ScaleDomainError(f"regularity index s={self.s} outside [0, {self.ceiling}]")
        if variant != "plain_sobolev" and not (self.epsilon is not None and self.epsilon > 0):
            raise ValueError(f"{variant} norm needs a positive epsilon")


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------


def weighted_norm(coefficients: np.ndarray, log_weight: np.ndarray) -> float:
    """``(sum |c|^2 exp(2 log_weight))^{1/2}`` computed without overflow.

    ``log_weight`` broadcasts against the trailing (spatial) axes of
    ``coefficients``.
    """
    mag = np.abs(coefficients)
    nz = mag > 0
    if not np.any(nz):
        return 0.0
    lw = np.broadcast_to(log_weight, mag.shape)
    logs = np.log(mag[nz]) + lw[nz]
    top = float(np.max(logs))
    return float(np.exp(top) * np.sqrt(np.sum(np.exp(2.0 * (logs - top)))))


def _log_weight(grid: FrequencyGrid, spec: NormSpec) -> np.ndarray:
    if spec.variant == "plain_sobolev":
        return 0.5 * spec.s * np.log1p(grid.k_squared())
    return 0.5 * spec.s * np.log1p(spec.epsilon**2 * grid.k_squared())


def norm(u: ScaleFunction | Sequence[ScaleFunction], spec: NormSpec) -> float:
    """Weighted l2 norm of ``u`` (sup over samples for ``time_banded``)."""
    if spec.variant == "time_banded":
        samples = [u] if isinstance(u, ScaleFunction) else list(u)
        inner = NormSpec("epsilon_sobolev", spec.s, spec.epsilon, spec.ceiling)
        return max((norm(x, inner) for x in samples), default=0.0)
    if not isinstance(u, ScaleFunction):
        raise TypeError("norm expects a ScaleFunction")
    return weighted_norm(u.coefficients, _log_weight(u.grid, spec))


# ---------------------------------------------------------------------------
# projectors
# ---------------------------------------------------------------------------


def cutoff_mask(grid: FrequencyGrid, lam: float, cutoff: str = "plain", epsilon: float | None = None,
                floor: bool = False) -> np.ndarray:
    """Boolean spatial mask of the modes kept by ``Pi(lam)``."""
    if not lam >= 1.0:
        raise ScaleDomainError(f"cutoff lambda={lam} must be >= 1")
    if floor:
        lam = float(np.floor(lam))
    if cutoff == "plain":
        return 1.0 + grid.k_squared() <= lam * lam
    if cutoff == "epsilon":
        if epsilon is None or not epsilon > 0:
            raise ValueError("epsilon cutoff needs a positive epsilon")
        return epsilon * epsilon * grid.k_squared() <= lam * lam
    raise ValueError(f"unknown cutoff {cutoff!r}")


def project(u: ScaleFunction, lam: float, cutoff: str = "plain", *, floor: bool = False,
            epsilon: float | None = None) -> ScaleFunction:
    """Zero every coefficient outside the cutoff ``lam``.

    ``floor=True`` replaces ``lam`` by ``floor(lam)``, giving the discrete
    projector family.
    """
    eps = epsilon if epsilon is not None else u.epsilon
    mask = cutoff_mask(u.grid, lam, cutoff, eps, floor)
    return u.like(np.where(mask, u.coefficients, 0.0))


def tail(u: ScaleFunction, lam: float, cutoff: str = "plain", **kw) -> ScaleFunction:
    """``(1 - Pi(lam)) u``."""
    return u - project(u, lam, cutoff, **kw)


# ---------------------------------------------------------------------------
# axiom checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RatioReport:
    ratio: float
    bound: float

    @property
    def ok(self) -> bool:
        return self.ratio <= self.bound * (1.0 + 1e-12)


def _plain(s: float, ceiling: float) -> NormSpec:
    return NormSpec("plain_sobolev", s, None, ceiling)


def verify_growth(u: ScaleFunction, s: float, t: float, lam: float,
                  constants: ScaleConstants | None = None) -> RatioReport:
    """Ratio ``||Pi(lam) u||_t / (lam^{(t-s)+} ||u||_s)`` against ``A1``."""
    c = constants or ScaleConstants.fourier(max(s, t))
    den = norm(u, _plain(s, c.S))
    if den == 0.0:
        return RatioReport(0.0, c.A1)
    num = norm(project(u, lam), _plain(t, c.S))
    return RatioReport(num / (lam ** max(t - s, 0.0) * den), c.A1)


def verify_approx(u: ScaleFunction, s: float, t: float, lam: float,
                  constants: ScaleConstants | None = None) -> RatioReport:
    """Ratio ``||(1 - Pi(lam)) u||_t lam^{s-t} / ||u||_s`` against ``A2``."""
    if not 0.0 <= t <= s:
        raise ScaleDomainError("approximation bound needs 0 <= t <= s")
    c = constants or ScaleConstants.fourier(s)
    den = norm(u, _plain(s, c.S))
    if den == 0.0:
        return RatioReport(0.0, c.A2)
    num = norm(tail(u, lam), _plain(t, c.S))
    return RatioReport(num * lam ** (s - t) / den, c.A2)


def interpolation_check(u: ScaleFunction, t1: float, s: float, t2: float, A3: float = 1.0,
                        rel_slack: float = 1e-10, variant: str = "plain_sobolev",
                        epsilon: float | None = None) -> bool:
    """``||u||_s <= A3 ||u||_{t1}^{(t2-s)/(t2-t1)} ||u||_{t2}^{(s-t1)/(t2-t1)}``."""
    if not (0.0 <= t1 <= s <= t2):
        raise ScaleDomainError("interpolation needs 0 <= t1 <= s <= t2")
    eps = epsilon if epsilon is not None else u.epsilon
    mid = norm(u, NormSpec(variant, s, eps))
    if t1 == t2:
        return True
    lo = norm(u, NormSpec(variant, t1, eps))
    hi = norm(u, NormSpec(variant, t2, eps))
    w = (s - t1) / (t2 - t1)
    if lo == 0.0 or hi == 0.0:
        return mid == 0.0
    rhs = A3 * np.exp((1.0 - w) * np.log(lo) + w * np.log(hi))
    return bool(mid <= rhs * (1.0 + rel_slack))


# ---------------------------------------------------------------------------
# arithmetic
# ---------------------------------------------------------------------------


def _check_same(u: ScaleFunction, w: ScaleFunction) -> None:
    if u.grid != w.grid:
        raise GridMismatchError(f"grid mismatch: {u.grid} vs {w.grid}")


def add(u: ScaleFunction, w: ScaleFunction, c: complex = 1.0) -> ScaleFunction:
    """``u + c w``."""
    _check_same(u, w)
    real = u.real and w.real and np.isreal(c)
    return u.like(u.coefficients + c * w.coefficients, real=real)


def scale(u: ScaleFunction, c: complex) -> ScaleFunction:
    return u.like(c * u.coefficients, real=u.real and bool(np.isreal(c)))


def conjugate(u: ScaleFunction) -> ScaleFunction:
    """Coefficients of the pointwise complex conjugate ``conj(u(x))``."""
    return u.like(np.conj(_mirror(u.coefficients)))


def _product_1d(a: np.ndarray, b: np.ndarray, N: int) -> np.ndarray:
    full = np.convolve(a, b)  # length 4N+1, frequency k at index k + 2N
    return full[N:3 * N + 1]


def _product_fft(a: np.ndarray, b: np.ndarray, N: int) -> np.ndarray:
    d = a.ndim
    width = 2 * N + 1
    m = int(np.ceil(1.5 * width)) + 1  # padded size: aliases avoid |k| <= N
    shape = (m,) * d

    def to_grid(c):
        buf = np.zeros(shape, dtype=complex)
        idx = np.arange(-N, N + 1) % m
        buf[np.ix_(*([idx] * d))] = c
        return np.fft.ifftn(buf) * m**d

    prod = to_grid(a) * to_grid(b)
    spec = np.fft.fftn(prod) / m**d
    idx = np.arange(-N, N + 1) % m
    return spec[np.ix_(*([idx] * d))]


def product(u: ScaleFunction, w: ScaleFunction) -> ScaleFunction:
    """Pointwise product truncated to the grid, free of aliasing.

    Component counts must match (componentwise product) or one side must be
    scalar-valued.  One-dimensional products use exact direct convolution so
    the error of every output mode is relative to its own size; higher
    dimensions use a zero-padded FFT (3/2 rule).
    """
    if u.grid.d != w.grid.d or u.grid.N != w.grid.N:
        raise GridMismatchError(f"grid mismatch: {u.grid} vs {w.grid}")
    cu, cw = u.coefficients, w.coefficients
    if cu.shape[0] != cw.shape[0]:
        if cu.shape[0] == 1:
            cu = np.repeat(cu, cw.shape[0], axis=0)
        elif cw.shape[0] == 1:
            cw = np.repeat(cw, cu.shape[0], axis=0)
        else:
            raise GridMismatchError("component counts differ")
    N = u.grid.N
    kernel = _product_1d if u.grid.d == 1 else _product_fft
    out = np.stack([kernel(a, b, N) for a, b in zip(cu, cw)])
    grid = u.grid.with_components(out.shape[0])
    real = u.real and w.real
    if real:
        out = 0.5 * (out + np.conj(_mirror(out)))
    return ScaleFunction(grid, out, u.epsilon if u.epsilon is not None else w.epsilon, real)


def derivative(u: ScaleFunction, axis: int = 0, order: int = 1) -> ScaleFunction:
    """Spatial derivative: multiplies coefficient ``k`` by ``(i k_axis)^order``."""
    k = u.grid.wavenumbers()[axis]
    return u.like(u.coefficients * (1j * k) ** order)


def multiplier(u: ScaleFunction, symbol: Callable[[list[np.ndarray]], np.ndarray] | np.ndarray) -> ScaleFunction:
    """Apply the Fourier multiplier ``k -> symbol(k)``.

    ``symbol`` is either an array broadcastable to the coefficient shape or a
    callable receiving the list of per-axis wavenumber arrays.
    """
    lam = symbol(u.grid.wavenumbers()) if callable(symbol) else np.asarray(symbol)
    return u.like(u.coefficients * lam, real=False)


# ---------------------------------------------------------------------------
# constructors used by tests and experiments
# ---------------------------------------------------------------------------


def single_mode(grid: FrequencyGrid, k: int | Iterable[int], amplitude: complex = 1.0,
                component: int = 0, epsilon: float | None = None) -> ScaleFunction:
    kk = (k,) if np.isscalar(k) else tuple(k)
    c = np.zeros(grid.shape, dtype=complex)
    c[(component,) + tuple(ki + grid.N for ki in kk)] = amplitude
    return ScaleFunction(grid, c, epsilon)


def random_function(grid: FrequencyGrid, rng: np.random.Generator, decay: float = 0.0,
                    real: bool = False, epsilon: float | None = None) -> ScaleFunction:
    """Gaussian coefficients damped by ``<k>^{-decay}``."""
    c = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    c = c * grid.bracket() ** (-decay)
    if real:
        c = 0.5 * (c + np.conj(_mirror(c)))
    return ScaleFunction(grid, c, epsilon, real)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

_MAGIC = b"TGSF"
_HEADER = struct.Struct("<4siiid?")


def to_bytes(u: ScaleFunction) -> bytes:
    """Header (d, N, components, eps, real) then interleaved re/im float64
    pairs in row-major frequency order."""
    eps = u.epsilon if u.epsilon is not None else -1.0
    head = _HEADER.pack(_MAGIC, u.grid.d, u.grid.N, u.grid.components, eps, u.real)
    body = np.empty(2 * u.grid.size, dtype="<f8")
    flat = u.coefficients.reshape(-1)
    body[0::2] = flat.real
    body[1::2] = flat.imag
    return head + body.tobytes()


def from_bytes(data: bytes) -> ScaleFunction:
    magic, d, N, comps, eps, real = _HEADER.unpack_from(data)
    if magic != _MAGIC:
        raise ValueError("not a serialized ScaleFunction")
    grid = FrequencyGrid(d, N, comps)
    body = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    if body.size != 2 * grid.size:
        raise ValueError("truncated ScaleFunction record")
    coeffs = (body[0::2] + 1j * body[1::2]).reshape(grid.shape)
    return ScaleFunction(grid, coeffs, None if eps < 0 else eps, bool(real))
