"""Mixed spectral lattice: Hermite functions on the confined axis, periodic
Fourier modes on each free axis.

The Hermite functions h_m (eigenfunctions of -d^2/dy^2 + y^2 with eigenvalue
2m+1) are sampled at Gauss-Hermite nodes; the weightless transform uses the
exp-compensated weights so that plain function values, not weighted ones, are
transformed.  Coefficients c[m, k] are amplitudes in the expansion

    f(y, z) = sum_{m, k} c[m, k] h_m(y) exp(i zeta_k . z)

with zeta_k = 2 pi k / L_z in FFT ordering and z sampled on a centered box
[-L/2, L/2).  Axis ordering is fixed: y is axis 0 (slowest), z axes follow
in order (fastest last), so each z-FFT works on contiguous lines.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import roots_hermite

from nlslab.model import ModelParams, validate

PHYSICAL = "physical"
COEFFICIENT = "coefficient"

FILE_MAGIC = b"NLSFLD01"

MIN_HERMITE_MODES = 8
MIN_Z_POINTS = 8


def hermite_values(modes: int, x: np.ndarray) -> np.ndarray:
    """Rows m = 0..modes-1 of h_m evaluated at x.

    h_0 = pi^{-1/4} exp(-x^2/2), h_{m} built by the stable normalized
    recurrence h_m = sqrt(2/m) x h_{m-1} - sqrt((m-1)/m) h_{m-2}.
    """
    x = np.asarray(x, dtype=np.float64)
    out = np.empty((modes, x.size), dtype=np.float64)
    out[0] = np.pi**-0.25 * np.exp(-(x**2) / 2.0)
    if modes > 1:
        out[1] = np.sqrt(2.0) * x * out[0]
    for m in range(2, modes):
        out[m] = np.sqrt(2.0 / m) * x * out[m - 1] - np.sqrt((m - 1.0) / m) * out[m - 2]
    return out


def weightless_hermite_rule(count: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Hermite nodes with exp-compensated weights w exp(x^2).

    The log form avoids overflow; where the raw weight underflows to zero
    (|x|^2 > ~709) the compensated weight is left at zero, which is harmless
    because every band-limited integrand underflows there first.
    """
    nodes, gh_weights = roots_hermite(count)
    with np.errstate(divide="ignore"):
        weights = np.exp(np.log(gh_weights) + nodes**2)
    return nodes, weights


@dataclass(frozen=True)
class Grid:
    """Immutable discretization: (hermite_modes, ((N_z, L_z), ...)).

    Derived arrays (nodes, weights, transform matrices, wavenumbers) are
    computed once at construction and shared; they are excluded from
    equality so grids compare by their defining integers and lengths.
    """

    hermite_modes: int
    z_axes: Tuple[Tuple[int, float], ...]
    nodes: np.ndarray = field(init=False, compare=False, repr=False)
    weights: np.ndarray = field(init=False, compare=False, repr=False)
    analysis: np.ndarray = field(init=False, compare=False, repr=False)
    synthesis: np.ndarray = field(init=False, compare=False, repr=False)
    wavenumbers: Tuple[np.ndarray, ...] = field(init=False, compare=False, repr=False)
    z_coords: Tuple[np.ndarray, ...] = field(init=False, compare=False, repr=False)
    _signs: np.ndarray = field(init=False, compare=False, repr=False)

    def __post_init__(self) -> None:
        m = self.hermite_modes
        if not isinstance(m, int) or m < MIN_HERMITE_MODES:
            raise ValueError(f"hermite_modes must be an integer >= {MIN_HERMITE_MODES}, got {m!r}")
        axes = tuple((int(n), float(length)) for n, length in self.z_axes)
        if not axes:
            raise ValueError("at least one free z-axis is required")
        for n, length in axes:
            if n < MIN_Z_POINTS or n & (n - 1) != 0:
                raise ValueError(f"z_points must be a power of two >= {MIN_Z_POINTS}, got {n}")
            if not length > 0:
                raise ValueError(f"z_length must be positive, got {length}")
        object.__setattr__(self, "z_axes", axes)

        nodes, weights = weightless_hermite_rule(m)
        synthesis = hermite_values(m, nodes)  # synthesis[m, i] = h_m(x_i)
        analysis = synthesis * weights  # quadrature against h_m
        wavenumbers = tuple(
            2.0 * np.pi * np.fft.fftfreq(n, d=length / n) for n, length in axes
        )
        z_coords = tuple(
            np.arange(n) * (length / n) - length / 2.0 for n, length in axes
        )
        signs = np.ones((1,) + tuple(n for n, _ in axes))
        for axis, (n, _) in enumerate(axes):
            k = np.rint(np.fft.fftfreq(n) * n).astype(np.int64)
            shape = [1] * (1 + len(axes))
            shape[1 + axis] = n
            signs = signs * (1.0 - 2.0 * (k & 1)).reshape(shape)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "analysis", analysis)
        object.__setattr__(self, "synthesis", synthesis)
        object.__setattr__(self, "wavenumbers", wavenumbers)
        object.__setattr__(self, "z_coords", z_coords)
        object.__setattr__(self, "_signs", signs)

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.hermite_modes,) + tuple(n for n, _ in self.z_axes)

    @property
    def free_dim(self) -> int:
        return len(self.z_axes)

    @property
    def z_axis_ids(self) -> Tuple[int, ...]:
        """Array axes carrying the free directions."""
        return tuple(range(1, 1 + len(self.z_axes)))

    @property
    def cell_volume(self) -> float:
        """Product of z grid spacings (quadrature cell in the free box)."""
        out = 1.0
        for n, length in self.z_axes:
            out *= length / n
        return out

    @property
    def box_volume(self) -> float:
        out = 1.0
        for _, length in self.z_axes:
            out *= length
        return out

    def centering_signs(self) -> np.ndarray:
        """(-1)^k per z-mode, the exact phase moving the box origin to -L/2."""
        return self._signs

    def z_mesh(self) -> Tuple[np.ndarray, ...]:
        """Broadcastable z coordinate arrays aligned with field axes 1..k."""
        k = len(self.z_axes)
        mesh = []
        for axis, coords in enumerate(self.z_coords):
            shape = [1] * (1 + k)
            shape[1 + axis] = coords.size
            mesh.append(coords.reshape(shape))
        return tuple(mesh)


@lru_cache(maxsize=32)
def linear_symbol(grid: Grid) -> np.ndarray:
    """Diagonal symbol of H = -Delta_y + |y|^2 - Delta_z in the mixed basis.

    Entry [m, k...] is (2m + 1) + |zeta_k|^2; every linear operation of the
    flow is a pointwise function of this array.
    """
    sym = np.zeros(grid.shape)
    sym += (2.0 * np.arange(grid.hermite_modes) + 1.0).reshape(
        (-1,) + (1,) * grid.free_dim
    )
    for axis, zeta in zip(grid.z_axis_ids, grid.wavenumbers):
        shape = [1] * len(grid.shape)
        shape[axis] = zeta.size
        sym = sym + (zeta**2).reshape(shape)
    return sym


@lru_cache(maxsize=16)
def dealiased_hermite_rule(grid: Grid, factor: int = 4) -> Tuple[np.ndarray, np.ndarray]:
    """Oversampled evaluation/analysis pair for pointwise powers of fields.

    Returns (values, weights): h_m sampled at factor * M Gauss-Hermite nodes
    together with the exp-compensated weights.  The base M-node rule is
    exact only to polynomial degree 2M - 1, while a pointwise power such as
    |u|^{2 sigma} u of an M-mode field carries degree (2 sigma + 2) M; on
    the base nodes that excess aliases back onto the band with O(1) weights
    and quietly deforms fixed points built from it.
    """
    nodes, weights = weightless_hermite_rule(factor * grid.hermite_modes)
    return hermite_values(grid.hermite_modes, nodes), weights


def _check_model_grid(params: ModelParams, grid: Grid) -> None:
    validate(params)
    if params.n != 1:
        raise ValueError("the lattice supports one confined direction (n = 1) only")
    if grid.free_dim != params.d - params.n:
        raise ValueError(
            f"grid has {grid.free_dim} free axes but d - n = {params.d - params.n}"
        )


class Field:
    """Complex double-precision state on the tensor lattice.

    data axis order is fixed: axis 0 is the Hermite index (or y node),
    axes 1.. are the z axes.  Construction rejects non-finite values.
    """

    __slots__ = ("params", "grid", "representation", "data")

    def __init__(
        self,
        params: ModelParams,
        grid: Grid,
        representation: str,
        data: np.ndarray,
        _copy: bool = True,
    ) -> None:
        _check_model_grid(params, grid)
        if representation not in (PHYSICAL, COEFFICIENT):
            raise ValueError(f"unknown representation {representation!r}")
        arr = np.array(data, dtype=np.complex128, order="C", copy=_copy)
        if arr.shape != grid.shape:
            raise ValueError(f"data shape {arr.shape} does not match grid {grid.shape}")
        if not np.all(np.isfinite(arr.view(np.float64))):
            raise ValueError("field data must be finite (no NaN/Inf)")
        self.params = params
        self.grid = grid
        self.representation = representation
        self.data = arr

    def with_data(self, data: np.ndarray, representation: Optional[str] = None) -> "Field":
        """New field on the same lattice, taking ownership of data."""
        return Field(
            self.params,
            self.grid,
            self.representation if representation is None else representation,
            data,
            _copy=False,
        )

    def copy(self) -> "Field":
        return Field(self.params, self.grid, self.representation, self.data, _copy=True)

    def __repr__(self) -> str:
        return (
            f"Field(d={self.params.d}, n={self.params.n}, "
            f"representation={self.representation!r}, shape={self.data.shape})"
        )


def to_coefficients(f: Field) -> Field:
    """Hermite transform along y, normalized FFT along each z-axis."""
    if f.representation != PHYSICAL:
        raise ValueError("to_coefficients expects a physical-space field")
    grid = f.grid
    g = np.tensordot(grid.analysis, f.data, axes=([1], [0]))
    points = 1
    for n, _ in grid.z_axes:
        points *= n
    c = np.fft.fftn(g, axes=grid.z_axis_ids) / points
    c *= grid.centering_signs()
    return f.with_data(c, COEFFICIENT)


def from_coefficients(c: Field) -> Field:
    """Inverse of to_coefficients."""
    if c.representation != COEFFICIENT:
        raise ValueError("from_coefficients expects a coefficient-space field")
    grid = c.grid
    points = 1
    for n, _ in grid.z_axes:
        points *= n
    ghat = c.data * grid.centering_signs() * points
    g = np.fft.ifftn(ghat, axes=grid.z_axis_ids)
    f = np.tensordot(grid.synthesis.T, g, axes=([1], [0]))
    return c.with_data(f, PHYSICAL)


def ensure_physical(f: Field) -> Field:
    return f if f.representation == PHYSICAL else from_coefficients(f)


def ensure_coefficients(f: Field) -> Field:
    return f if f.representation == COEFFICIENT else to_coefficients(f)


def _ladder_shift(c: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    """out[m] = lower[m] c[m-1] + upper[m] c[m+1] along axis 0."""
    out = np.zeros_like(c)
    shape = (-1,) + (1,) * (c.ndim - 1)
    out[1:] += lower[1:].reshape(shape) * c[:-1]
    out[:-1] += upper[:-1].reshape(shape) * c[1:]
    return out


def multiply_y(f: Field) -> Field:
    """Pointwise y multiplication via the Hermite ladder.

    (y f)_m = sqrt(m/2) c_{m-1} + sqrt((m+1)/2) c_{m+1}; the band-edge
    coupling of c_{M-1} into mode M is truncated, so accuracy requires a
    small spectral tail.
    """
    c = ensure_coefficients(f)
    m = np.arange(f.grid.hermite_modes, dtype=np.float64)
    lower = np.sqrt(m / 2.0)
    upper = np.sqrt((m + 1.0) / 2.0)
    out = c.with_data(_ladder_shift(c.data, lower, upper))
    return out if f.representation == COEFFICIENT else from_coefficients(out)


def gradient_y(f: Field) -> Field:
    """d/dy via the Hermite ladder: (f')_m = sqrt((m+1)/2) c_{m+1} - sqrt(m/2) c_{m-1}."""
    c = ensure_coefficients(f)
    m = np.arange(f.grid.hermite_modes, dtype=np.float64)
    lower = -np.sqrt(m / 2.0)
    upper = np.sqrt((m + 1.0) / 2.0)
    out = c.with_data(_ladder_shift(c.data, lower, upper))
    return out if f.representation == COEFFICIENT else from_coefficients(out)


def gradient_z(f: Field) -> Tuple[Field, ...]:
    """Spectral d/dz_a for each free axis, returned in axis order.

    The unpaired Nyquist mode is dropped from the multiplier: it has no
    conjugate partner, so keeping it would give real fields a spurious
    imaginary derivative (and a fake momentum) at the tail level.
    """
    c = ensure_coefficients(f)
    grid = f.grid
    out = []
    for axis, zeta in zip(grid.z_axis_ids, grid.wavenumbers):
        mult = 1j * zeta
        if zeta.size % 2 == 0:
            mult[zeta.size // 2] = 0.0
        shape = [1] * c.data.ndim
        shape[axis] = zeta.size
        d = c.with_data(c.data * mult.reshape(shape))
        out.append(d if f.representation == COEFFICIENT else from_coefficients(d))
    return tuple(out)


def spectral_tail(f: Field) -> float:
    """Fraction of squared-coefficient mass in the top 10% of any axis.

    The mask is the union over axes: Hermite index m >= 0.9 M_y, or
    |zeta| >= 0.9 of the axis Nyquist wavenumber.  Pure function of the
    field; 0.0 for the zero field.
    """
    c = ensure_coefficients(f)
    grid = f.grid
    power = np.abs(c.data) ** 2
    total = float(power.sum())
    if total == 0.0:
        return 0.0
    mask = np.zeros(grid.shape, dtype=bool)
    m_cut = int(np.ceil(0.9 * grid.hermite_modes))
    mask[m_cut:] = True
    for axis, zeta in zip(grid.z_axis_ids, grid.wavenumbers):
        cut = 0.9 * np.abs(zeta).max()
        shape = [1] * len(grid.shape)
        shape[axis] = zeta.size
        mask |= (np.abs(zeta) >= cut).reshape(shape)
    return float(power[mask].sum()) / total


def gaussian_field(
    params: ModelParams,
    grid: Grid,
    amplitude: complex = 1.0,
    width_y: float = 1.0,
    width_z: Union[float, Sequence[float]] = 1.0,
    offset_z: Union[float, Sequence[float]] = 0.0,
    phase_velocity: Union[float, Sequence[float]] = 0.0,
) -> Field:
    """Separable Gaussian amplitude * exp(-y^2/(2 wy^2)) * prod_a
    exp(-(z_a - o_a)^2/(2 wz_a^2) + i v_a z_a), in physical space."""
    k = grid.free_dim
    wz = np.broadcast_to(np.asarray(width_z, dtype=np.float64), (k,))
    oz = np.broadcast_to(np.asarray(offset_z, dtype=np.float64), (k,))
    vz = np.broadcast_to(np.asarray(phase_velocity, dtype=np.float64), (k,))
    y = grid.nodes.reshape((-1,) + (1,) * k)
    data = amplitude * np.exp(-(y**2) / (2.0 * width_y**2)) * np.ones(grid.shape, dtype=np.complex128)
    for mesh, w, o, v in zip(grid.z_mesh(), wz, oz, vz):
        data = data * np.exp(-((mesh - o) ** 2) / (2.0 * w**2) + 1j * v * mesh)
    return Field(params, grid, PHYSICAL, data, _copy=False)


def write_field(f: Field, path) -> None:
    """Serialize magic, length-prefixed JSON header, then raw '<c16' data."""
    header = {
        "d": f.params.d,
        "n": f.params.n,
        "sigma": f"{f.params.sigma.numerator}/{f.params.sigma.denominator}",
        "lambda": f.params.lam,
        "hermite_modes": f.grid.hermite_modes,
        "z_points": [n for n, _ in f.grid.z_axes],
        "z_length": [length for _, length in f.grid.z_axes],
        "representation": f.representation,
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(FILE_MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        fh.write(np.ascontiguousarray(f.data, dtype="<c16").tobytes(order="C"))


def read_field(path) -> Field:
    """Load a field written by write_field, rebuilding params and grid."""
    with open(path, "rb") as fh:
        magic = fh.read(len(FILE_MAGIC))
        if magic != FILE_MAGIC:
            raise ValueError(f"not a field file (bad magic {magic!r})")
        (length,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(length).decode("utf-8"))
        raw = fh.read()
    params = ModelParams(
        d=int(header["d"]),
        n=int(header["n"]),
        sigma=Fraction(header["sigma"]),
        lam=int(header["lambda"]),
    )
    grid = Grid(
        hermite_modes=int(header["hermite_modes"]),
        z_axes=tuple(zip(header["z_points"], header["z_length"])),
    )
    expected = int(np.prod(grid.shape))
    data = np.frombuffer(raw, dtype="<c16", count=expected).reshape(grid.shape)
    return Field(params, grid, header["representation"], data.astype(np.complex128))
