"""Periodic grid, spectral fields and operators on the unit torus [0, 1)^2.

Fourier coefficients use the forward-normalised real transform, so a constant
field ``1`` has zero-mode coefficient exactly ``1`` and the grid mean equals the
integral over the unit cell.  Arrays are indexed ``[..., i, j]`` with
``x1 = i / N`` along the first spatial axis and ``x2 = j / N`` along the second;
the half spectrum lives along the second axis.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

TWO_PI = 2.0 * np.pi

# leading component shape for each field rank
RANK_SHAPES = {
    "scalar": (),
    "vector": (2,),
    "tensor": (2, 2),
    "sym_tensor": (2, 2),
}


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform ``n_modes x n_modes`` grid on the unit torus."""

    n_modes: int

    def __post_init__(self):
        n = self.n_modes
        if not isinstance(n, (int, np.integer)) or n < 8 or n & (n - 1):
            raise ValueError(f"n_modes must be a power of two >= 8, got {n!r}")

    @property
    def spacing(self) -> float:
        return 1.0 / self.n_modes

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_modes, self.n_modes)

    @property
    def spec_shape(self) -> tuple[int, int]:
        return (self.n_modes, self.n_modes // 2 + 1)

    @property
    def cutoff(self) -> int:
        """Largest retained max-norm wave number under the 2/3 rule."""
        return self.n_modes // 3

    @cached_property
    def coords(self) -> np.ndarray:
        """Physical sample points, shape ``(2, N, N)``."""
        x = np.arange(self.n_modes) * self.spacing
        return np.array(np.meshgrid(x, x, indexing="ij"))

    @cached_property
    def kx(self) -> np.ndarray:
        """Integer wave numbers along the first axis, shape ``(N, 1)``."""
        return np.fft.fftfreq(self.n_modes, 1.0 / self.n_modes).astype(int)[:, None]

    @cached_property
    def ky(self) -> np.ndarray:
        """Integer wave numbers along the half-spectrum axis, shape ``(1, N/2+1)``."""
        return np.arange(self.n_modes // 2 + 1)[None, :]

    @cached_property
    def wavevector(self) -> np.ndarray:
        """Angular wave vector ``2*pi*k`` with Nyquist entries zeroed, shape ``(2, N, N/2+1)``."""
        nyq = self.n_modes // 2
        k1 = np.where(np.abs(self.kx) == nyq, 0, self.kx) * TWO_PI
        k2 = np.where(self.ky == nyq, 0, self.ky) * TWO_PI
        return np.array(np.broadcast_arrays(k1, k2), dtype=float)

    @cached_property
    def k2(self) -> np.ndarray:
        kv = self.wavevector
        return kv[0] ** 2 + kv[1] ** 2

    @cached_property
    def retained(self) -> np.ndarray:
        """Boolean mask of modes kept by the 2/3 rule."""
        m = self.cutoff
        return (np.abs(self.kx) <= m) & (np.abs(self.ky) <= m)

    @cached_property
    def hermitian_weight(self) -> np.ndarray:
        """Multiplicity of each stored coefficient in the full spectrum."""
        w = np.full(self.spec_shape, 2.0)
        w[:, 0] = 1.0
        w[:, -1] = 1.0
        return w

    def fft(self, a: np.ndarray) -> np.ndarray:
        return np.fft.rfft2(a, norm="forward")

    def ifft(self, a_hat: np.ndarray) -> np.ndarray:
        return np.fft.irfft2(a_hat, s=self.shape, norm="forward")

    def integrate(self, a: np.ndarray) -> np.ndarray | float:
        """Trapezoidal rule over the unit cell (the grid mean)."""
        return np.mean(a, axis=(-2, -1))

    def inner_hat(self, a_hat: np.ndarray, b_hat: np.ndarray) -> float:
        """``integral a . b`` from half-spectrum coefficients (Parseval)."""
        prod = np.real(a_hat * np.conj(b_hat)) * self.hermitian_weight
        return float(prod.sum())


@lru_cache(maxsize=32)
def get_grid(n_modes: int) -> PeriodicGrid:
    return PeriodicGrid(int(n_modes))


class SpectralField:
    """Real periodic field with lazily synchronised physical/spectral data.

    Parameters
    ----------
    grid : PeriodicGrid
    rank : {"scalar", "vector", "tensor", "sym_tensor"}
    values : array, optional
        Physical samples with shape ``RANK_SHAPES[rank] + grid.shape``.
    coeffs : array, optional
        Half-spectrum coefficients with shape ``RANK_SHAPES[rank] + grid.spec_shape``.
    mean_locked : bool
        Force the zero-frequency coefficient to exactly zero.
    """

    def __init__(self, grid, rank="scalar", values=None, coeffs=None, mean_locked=False):
        if rank not in RANK_SHAPES:
            raise ValueError(f"unknown rank {rank!r}")
        if values is None and coeffs is None:
            raise ValueError("need physical values or Fourier coefficients")
        self.grid = grid
        self.rank = rank
        self.mean_locked = bool(mean_locked)
        lead = RANK_SHAPES[rank]
        if values is not None:
            values = np.asarray(values, dtype=float)
            if values.shape != lead + grid.shape:
                raise ValueError(f"values shape {values.shape} != {lead + grid.shape}")
            if rank == "sym_tensor":
                off = 0.5 * (values[0, 1] + values[1, 0])
                values = values.copy()
                values[0, 1] = off
                values[1, 0] = off
        if coeffs is not None:
            coeffs = np.asarray(coeffs, dtype=complex)
            if coeffs.shape != lead + grid.spec_shape:
                raise ValueError(f"coeffs shape {coeffs.shape} != {lead + grid.spec_shape}")
            if rank == "sym_tensor":
                off = 0.5 * (coeffs[0, 1] + coeffs[1, 0])
                coeffs = coeffs.copy()
                coeffs[0, 1] = off
                coeffs[1, 0] = off
        if self.mean_locked:
            if coeffs is None:
                coeffs = grid.fft(values)
            coeffs = coeffs.copy()
            coeffs[..., 0, 0] = 0.0
            values = None
        self._values = values
        self._coeffs = coeffs

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            self._values = self.grid.ifft(self._coeffs)
        return self._values

    @property
    def coeffs(self) -> np.ndarray:
        if self._coeffs is None:
            self._coeffs = self.grid.fft(self._values)
        return self._coeffs

    @classmethod
    def from_function(cls, grid, func, rank="scalar", mean_locked=False):
        """Sample ``func(x1, x2)`` on the grid."""
        x1, x2 = grid.coords
        return cls(grid, rank, values=np.asarray(func(x1, x2), dtype=float), mean_locked=mean_locked)

    @classmethod
    def zeros(cls, grid, rank="scalar"):
        return cls(grid, rank, values=np.zeros(RANK_SHAPES[rank] + grid.shape))

    def with_values(self, values, rank=None):
        return SpectralField(self.grid, rank or self.rank, values=values)

    def __add__(self, other):
        return SpectralField(self.grid, self.rank, coeffs=self.coeffs + other.coeffs)

    def __sub__(self, other):
        return SpectralField(self.grid, self.rank, coeffs=self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return SpectralField(self.grid, self.rank, coeffs=self.coeffs * scalar,
                             mean_locked=self.mean_locked)

    __rmul__ = __mul__

    def magnitude(self) -> np.ndarray:
        """Pointwise Euclidean/Frobenius norm of the physical samples."""
        v = self.values
        lead = len(RANK_SHAPES[self.rank])
        if lead == 0:
            return np.abs(v)
        return np.sqrt(np.sum(v.reshape((-1,) + self.grid.shape) ** 2, axis=0))

    def l2_norm(self) -> float:
        return float(np.sqrt(self.grid.integrate(self.magnitude() ** 2)))

    def __repr__(self):
        return f"SpectralField(rank={self.rank!r}, n_modes={self.grid.n_modes})"


def transform(field: SpectralField, direction: str) -> SpectralField:
    """Populate the requested representation of ``field`` (idempotent)."""
    if direction == "to_spectral":
        field.coeffs
    elif direction == "to_physical":
        field.values
    else:
        raise ValueError(f"direction must be 'to_spectral' or 'to_physical', got {direction!r}")
    return field


def differentiate(field: SpectralField, op: str) -> SpectralField:
    """Exact spectral differentiation.

    ``grad`` maps scalar -> vector and vector -> tensor with ``G[i, j] = d v_i / d x_j``;
    ``sym_grad`` maps vector -> sym_tensor; ``div`` maps vector -> scalar and
    (sym_)tensor -> vector contracting the last index; ``laplacian`` keeps the rank.
    """
    g = field.grid
    kv = 1j * g.wavevector
    f = field.coeffs
    rank = field.rank
    if op == "grad":
        if rank == "scalar":
            return SpectralField(g, "vector", coeffs=kv * f, mean_locked=True)
        if rank == "vector":
            return SpectralField(g, "tensor", coeffs=f[:, None] * kv[None, :], mean_locked=True)
    elif op == "sym_grad":
        if rank == "vector":
            G = f[:, None] * kv[None, :]
            return SpectralField(g, "sym_tensor", coeffs=0.5 * (G + G.transpose(1, 0, 2, 3)),
                                 mean_locked=True)
    elif op == "div":
        if rank == "vector":
            return SpectralField(g, "scalar", coeffs=(kv * f).sum(axis=0), mean_locked=True)
        if rank in ("tensor", "sym_tensor"):
            return SpectralField(g, "vector", coeffs=(f * kv[None, :]).sum(axis=1), mean_locked=True)
    elif op == "laplacian":
        return SpectralField(g, rank, coeffs=-g.k2 * f, mean_locked=True)
    else:
        raise ValueError(f"unknown operator {op!r}")
    raise ValueError(f"operator {op!r} is not defined for rank {rank!r}")


def leray_symbol(grid: PeriodicGrid) -> np.ndarray:
    """Per-mode projector ``I - k k^T / |k|^2`` with the zero mode removed, shape ``(2, 2, N, N/2+1)``."""
    kv = grid.wavevector
    k2 = grid.k2
    safe = np.where(k2 > 0, k2, 1.0)
    P = np.eye(2)[:, :, None, None] - kv[:, None] * kv[None, :] / safe
    P[:, :, k2 == 0] = 0.0
    return P


def leray_project(field: SpectralField) -> SpectralField:
    """Orthogonal projection onto divergence-free, zero-mean vector fields."""
    if field.rank != "vector":
        raise ValueError("leray_project needs a vector field")
    P = leray_symbol(field.grid)
    return SpectralField(field.grid, "vector", coeffs=np.einsum("ijxy,jxy->ixy", P, field.coeffs),
                         mean_locked=True)


def dealias(field: SpectralField) -> SpectralField:
    """Zero every coefficient whose max-norm wave number exceeds ``n_modes // 3``."""
    g = field.grid
    return SpectralField(g, field.rank, coeffs=np.where(g.retained, field.coeffs, 0.0),
                         mean_locked=field.mean_locked)


def resample_coeffs(coeffs: np.ndarray, src: PeriodicGrid, dst: PeriodicGrid) -> np.ndarray:
    """Copy coefficients between grids by zero-padding or truncation.

    Nyquist lines of the smaller grid are dropped so real fields stay real.
    """
    m = min(src.n_modes, dst.n_modes) // 2
    lead = coeffs.shape[:-2]
    out = np.zeros(lead + dst.spec_shape, dtype=complex)
    out[..., :m, :m] = coeffs[..., :m, :m]
    out[..., -(m - 1):, :m] = coeffs[..., -(m - 1):, :m]
    return out


def resample(field: SpectralField, n_modes: int) -> SpectralField:
    """Spectral interpolation (or truncation) of ``field`` onto another grid."""
    dst = get_grid(n_modes)
    return SpectralField(dst, field.rank, coeffs=resample_coeffs(field.coeffs, field.grid, dst),
                         mean_locked=field.mean_locked)


def evaluate(field: SpectralField, points) -> np.ndarray:
    """Evaluate the trigonometric interpolant at arbitrary points, shape ``(m, 2)``.

    Returns ``(m,) + component shape``.
    """
    g = field.grid
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    nyq = g.n_modes // 2
    keep = (np.abs(g.kx) < nyq) & (g.ky < nyq)
    keep = np.broadcast_to(keep, g.spec_shape)
    k1 = np.broadcast_to(g.kx, g.spec_shape)[keep]
    k2 = np.broadcast_to(g.ky, g.spec_shape)[keep]
    w = g.hermitian_weight[keep]
    phase = np.exp(1j * TWO_PI * (np.outer(pts[:, 0], k1) + np.outer(pts[:, 1], k2)))
    lead = RANK_SHAPES[field.rank]
    c = field.coeffs.reshape((-1,) + g.spec_shape)[:, keep] * w
    vals = np.real(phase @ c.T)
    return vals.reshape((len(pts),) + lead)


@dataclass(frozen=True)
class StokesBasis:
    """Real divergence-free eigenfunctions of the periodic Stokes operator.

    Mode ``i`` is ``sqrt(2) * e_i * cos(2 pi k_i . x)`` (``kind == 0``) or the
    matching sine (``kind == 1``) with ``e_i = k_i^perp / |k_i|``; modes are
    ordered by eigenvalue, then ``(k1, k2)``, then cosine before sine.
    """

    grid: PeriodicGrid
    wavevectors: np.ndarray
    kinds: np.ndarray
    eigenvalues: np.ndarray
    directions: np.ndarray
    # scatter tables into the half spectrum
    _rows: np.ndarray
    _cols: np.ndarray
    _owner: np.ndarray
    _coef: np.ndarray

    def __len__(self):
        return len(self.kinds)

    def to_spectral(self, alpha) -> np.ndarray:
        """Half-spectrum coefficients of ``sum_i alpha_i w_i``, shape ``(2, N, N/2+1)``."""
        alpha = np.asarray(alpha, dtype=float)
        out = np.zeros((2,) + self.grid.spec_shape, dtype=complex)
        amp = alpha[self._owner] * self._coef
        for comp in range(2):
            np.add.at(out[comp], (self._rows, self._cols), amp * self.directions[self._owner, comp])
        return out

    def from_spectral(self, v_hat) -> np.ndarray:
        """Moments ``integral v . w_i`` for a vector field given by coefficients."""
        w = self.grid.hermitian_weight[self._rows, self._cols]
        d = self.directions[self._owner]
        vals = v_hat[0][self._rows, self._cols] * d[:, 0] + v_hat[1][self._rows, self._cols] * d[:, 1]
        contrib = w * np.real(vals * np.conj(self._coef))
        return np.bincount(self._owner, weights=contrib, minlength=len(self))

    def velocity(self, alpha) -> SpectralField:
        return SpectralField(self.grid, "vector", coeffs=self.to_spectral(alpha), mean_locked=True)

    def mode(self, i: int) -> SpectralField:
        e = np.zeros(len(self))
        e[i] = 1.0
        return self.velocity(e)


def available_stokes_modes(grid: PeriodicGrid) -> int:
    m = grid.cutoff
    return (2 * m + 1) ** 2 - 1


def stokes_basis(grid: PeriodicGrid, n: int | None = None) -> StokesBasis:
    """First ``n`` Stokes eigenfunctions inside the dealiased band (all of them if ``n`` is None)."""
    m = grid.cutoff
    avail = available_stokes_modes(grid)
    if n is None:
        n = avail
    if n < 1 or n > avail:
        raise ValueError(f"basis size {n} outside [1, {avail}] for n_modes={grid.n_modes}")
    reps = [(k1, k2) for k1 in range(-m, m + 1) for k2 in range(0, m + 1)
            if k2 > 0 or k1 > 0]
    reps.sort(key=lambda k: (k[0] ** 2 + k[1] ** 2, k[0], k[1]))
    entries = [(k, kind) for k in reps for kind in (0, 1)][:n]
    kvec = np.array([e[0] for e in entries], dtype=int)
    kinds = np.array([e[1] for e in entries], dtype=int)
    N = grid.n_modes
    rows = kvec[:, 0] % N
    cols = kvec[:, 1]
    eig = grid.k2[rows, cols].copy()
    perp = np.stack([-kvec[:, 1], kvec[:, 0]], axis=1).astype(float)
    perp /= np.linalg.norm(perp, axis=1)[:, None]

    h = np.sqrt(2.0) / 2.0
    coef_plus = np.where(kinds == 0, h + 0j, -1j * h)
    tab_r, tab_c, tab_o, tab_v = [rows], [cols], [np.arange(n)], [coef_plus]
    on_axis = kvec[:, 1] == 0
    # modes on the ky = 0 line also store their conjugate partner explicitly
    idx = np.nonzero(on_axis)[0]
    tab_r.append((-kvec[idx, 0]) % N)
    tab_c.append(np.zeros(len(idx), dtype=int))
    tab_o.append(idx)
    tab_v.append(np.conj(coef_plus[idx]))
    return StokesBasis(
        grid=grid, wavevectors=kvec, kinds=kinds, eigenvalues=eig, directions=perp,
        _rows=np.concatenate(tab_r), _cols=np.concatenate(tab_c),
        _owner=np.concatenate(tab_o), _coef=np.concatenate(tab_v),
    )


def convective_defect(v: SpectralField) -> tuple[float, float]:
    """Return ``(integral (v x v) : grad(lap v), scale)`` evaluated on a doubled grid.

    For divergence-free periodic fields in two dimensions the integral vanishes;
    ``scale`` is ``integral |v|^2 |grad(lap v)|`` so the ratio is a relative defect.
    """
    fine = resample(v, 2 * v.grid.n_modes)
    G = differentiate(differentiate(fine, "laplacian"), "grad").values
    vv = fine.values[:, None] * fine.values[None, :]
    value = float(fine.grid.integrate(np.sum(vv * G, axis=(0, 1))))
    gmag = np.sqrt(np.sum(G ** 2, axis=(0, 1)))
    scale = float(fine.grid.integrate(np.sum(fine.values ** 2, axis=0) * gmag))
    return value, scale


def random_solenoidal(grid: PeriodicGrid, rng, max_wavenumber: int = 4, decay: float = 1.0) -> SpectralField:
    """Random divergence-free, zero-mean trigonometric polynomial."""
    coeffs = np.zeros((2,) + grid.spec_shape, dtype=complex)
    band = (np.abs(grid.kx) <= max_wavenumber) & (grid.ky <= max_wavenumber)
    band = np.broadcast_to(band, grid.spec_shape)
    kk = np.sqrt(grid.k2) / (2 * np.pi)
    amp = np.where(band, (1.0 + kk) ** (-decay), 0.0)
    for comp in range(2):
        coeffs[comp] = amp * (rng.standard_normal(grid.spec_shape) + 1j * rng.standard_normal(grid.spec_shape))
    # the ky = 0 column must be Hermitian for a real field; round-trip enforces it
    raw = SpectralField(grid, "vector", coeffs=coeffs)
    real = SpectralField(grid, "vector", values=raw.values)
    return leray_project(real)


# -- field dump format ---------------------------------------------------------

def write_field(path, field: SpectralField) -> None:
    """Header ``rank n_modes component_count`` then one row-major block per component."""
    vals = field.values.reshape((-1,) + field.grid.shape)
    with open(path, "w") as fh:
        fh.write(f"{field.rank} {field.grid.n_modes} {vals.shape[0]}\n")
        for block in vals:
            np.savetxt(fh, block, fmt="%.17g")


def read_field(path) -> SpectralField:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 3:
            raise ValueError(f"{path}: malformed field header {header!r}")
        rank, n, ncomp = header[0], int(header[1]), int(header[2])
        data = np.loadtxt(fh, ndmin=2)
    grid = get_grid(n)
    lead = RANK_SHAPES.get(rank)
    if lead is None or int(np.prod(lead, dtype=int)) != ncomp:
        raise ValueError(f"{path}: rank {rank!r} inconsistent with {ncomp} components")
    if data.shape != (ncomp * n, n):
        raise ValueError(f"{path}: expected {ncomp * n}x{n} samples, got {data.shape}")
    return SpectralField(grid, rank, values=data.reshape(lead + grid.shape))
