"""Domain types, 1D grids, and the small discrete-calculus toolbox shared by all solvers.

Conventions used throughout the package:

* species 1 carries valence +1, species 2 carries valence -1,
* the potential satisfies ``phi(0) = -V`` and ``phi(L) = 0``,
* all types are plain immutable values; operations are pure functions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: Fixed valences of the two ionic species.
Z1 = 1.0
Z2 = -1.0


class ValidationError(ValueError):
    """Raised when a domain object is constructed from inconsistent data."""


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ValidationError(msg)


@dataclass(frozen=True)
class PhysParams:
    """Physical constants: diffusivities, permittivity, viscosity, force coupling."""

    d1: float
    d2: float
    eps: float
    nu: float
    coupling: float

    def __post_init__(self):
        for name in ("d1", "d2", "eps", "nu", "coupling"):
            _require(getattr(self, name) > 0.0, f"PhysParams.{name} must be > 0")

    @property
    def d_min(self) -> float:
        return min(self.d1, self.d2)


@dataclass(frozen=True)
class StripBC:
    """Constant boundary data on the strip: concentrations at the two walls,
    applied voltage, and channel width."""

    alpha1: float
    alpha2: float
    beta1: float
    beta2: float
    voltage: float
    length: float

    def __post_init__(self):
        for name in ("alpha1", "alpha2", "beta1", "beta2", "length"):
            _require(getattr(self, name) > 0.0, f"StripBC.{name} must be > 0")

    @property
    def gamma_lo(self) -> float:
        """Smallest boundary concentration."""
        return min(self.alpha1, self.alpha2, self.beta1, self.beta2)

    @property
    def gamma_hi(self) -> float:
        """Largest boundary concentration."""
        return max(self.alpha1, self.alpha2, self.beta1, self.beta2)


class Grid1D:
    """Strictly increasing nodes on [0, L], n >= 3."""

    __slots__ = ("nodes",)

    def __init__(self, nodes):
        nodes = np.asarray(nodes, dtype=float)
        _require(nodes.ndim == 1 and nodes.size >= 3, "Grid1D needs >= 3 nodes")
        _require(bool(np.all(np.diff(nodes) > 0)), "Grid1D nodes must be increasing")
        _require(nodes[0] == 0.0, "Grid1D must start at 0")
        object.__setattr__(self, "nodes", nodes)
        nodes.setflags(write=False)

    def __setattr__(self, *a):  # immutable value type
        raise AttributeError("Grid1D is immutable")

    @property
    def n(self) -> int:
        return self.nodes.size

    @property
    def length(self) -> float:
        return float(self.nodes[-1])

    def __eq__(self, other):
        return isinstance(other, Grid1D) and np.array_equal(self.nodes, other.nodes)

    def __hash__(self):
        return hash((self.nodes.size, self.nodes.tobytes()))

    def __repr__(self):
        return f"Grid1D(n={self.n}, L={self.length})"

    @classmethod
    def uniform(cls, n: int, length: float) -> "Grid1D":
        return cls(np.linspace(0.0, length, n))

    @classmethod
    def graded(cls, n: int, length: float, strength: float = 2.0) -> "Grid1D":
        """tanh-graded grid clustering nodes at both walls.

        ``strength`` controls the clustering; 0+ recovers a uniform grid.
        Useful when eps << L^2 produces thin boundary layers.
        """
        _require(strength > 0, "grading strength must be > 0")
        s = np.linspace(-1.0, 1.0, n)
        x = 0.5 * length * (1.0 + np.tanh(strength * s) / np.tanh(strength))
        x[0], x[-1] = 0.0, length
        return cls(x)


def integrate(field, grid: Grid1D) -> float:
    """Composite trapezoid quadrature of nodal values over the grid."""
    field = np.asarray(field, dtype=float)
    _require(field.shape == (grid.n,), "field length must equal grid size")
    return float(np.trapezoid(field, grid.nodes))


def cumulative_integral(field, grid: Grid1D) -> np.ndarray:
    """Running trapezoid integral from the left endpoint; result[0] = 0."""
    field = np.asarray(field, dtype=float)
    _require(field.shape == (grid.n,), "field length must equal grid size")
    seg = 0.5 * (field[1:] + field[:-1]) * np.diff(grid.nodes)
    return np.concatenate(([0.0], np.cumsum(seg)))


def gradient_1d(field, grid: Grid1D) -> np.ndarray:
    """Nodal derivative: centered second-order differences in the interior,
    one-sided second-order three-point formulas at the endpoints.

    Exact on quadratics for uniform grids and on affine fields always.
    """
    f = np.asarray(field, dtype=float)
    _require(f.shape == (grid.n,), "field length must equal grid size")
    x = grid.nodes
    h = np.diff(x)
    out = np.empty_like(f)

    hl, hr = h[:-1], h[1:]
    out[1:-1] = (
        -hr / (hl * (hl + hr)) * f[:-2]
        + (hr - hl) / (hl * hr) * f[1:-1]
        + hl / (hr * (hl + hr)) * f[2:]
    )
    # one-sided 3-point stencils
    h0, h1 = h[0], h[1]
    out[0] = (
        -(2 * h0 + h1) / (h0 * (h0 + h1)) * f[0]
        + (h0 + h1) / (h0 * h1) * f[1]
        - h0 / (h1 * (h0 + h1)) * f[2]
    )
    hm, hn = h[-2], h[-1]
    out[-1] = (
        hn / (hm * (hm + hn)) * f[-3]
        - (hm + hn) / (hm * hn) * f[-2]
        + (2 * hn + hm) / (hn * (hm + hn)) * f[-1]
    )
    return out


def entropy_density(s):
    """psi(s) = s log s - s + 1, evaluated in a cancellation-safe form near s = 1."""
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise ValidationError("entropy_density requires s > 0")
    w = s - 1.0
    small = np.abs(w) < 1e-4
    # series: psi(1+w) = w^2/2 - w^3/6 + w^4/12 - ...
    series = w * w * (0.5 + w * (-1.0 / 6.0 + w / 12.0))
    with np.errstate(invalid="ignore", divide="ignore"):
        direct = s * np.log(np.where(small, 1.0, s)) - w
    return np.where(small, series, direct)


def relative_entropy(f, g, grid: Grid1D) -> float:
    """Integral of g * psi(f/g) over the grid; >= 0, zero iff f == g nodewise."""
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if np.any(f <= 0) or np.any(g <= 0):
        raise ValidationError("relative_entropy requires strictly positive fields")
    return integrate(g * entropy_density(f / g), grid)


@dataclass(frozen=True)
class SteadyState1D:
    """Converged 1D steady profiles plus the two constant species currents."""

    grid: Grid1D
    c1: np.ndarray
    c2: np.ndarray
    phi: np.ndarray
    j1: float
    j2: float

    def __post_init__(self):
        n = self.grid.n
        for name in ("c1", "c2", "phi"):
            arr = np.asarray(getattr(self, name), dtype=float)
            _require(arr.shape == (n,), f"SteadyState1D.{name} has wrong length")
            object.__setattr__(self, name, arr)
        _require(bool(np.all(self.c1 > 0)) and bool(np.all(self.c2 > 0)),
                 "concentrations must be strictly positive")

    def slotboom(self) -> tuple[np.ndarray, np.ndarray]:
        """eta_i = c_i * exp(z_i * phi)."""
        return self.c1 * np.exp(Z1 * self.phi), self.c2 * np.exp(Z2 * self.phi)

    def chemical_potentials(self) -> tuple[np.ndarray, np.ndarray]:
        """mu_i = log c_i + z_i * phi; spatially constant exactly at equilibrium."""
        return np.log(self.c1) + Z1 * self.phi, np.log(self.c2) + Z2 * self.phi


@dataclass(frozen=True)
class StripState2D:
    """Cell-centered concentrations/potential and staggered (MAC) velocity on the
    periodic strip [0, L] x T.  ``ux`` lives on x-faces (nx+1, ny), ``uy`` on
    y-faces (nx, ny)."""

    length: float
    c1: np.ndarray
    c2: np.ndarray
    phi: np.ndarray
    ux: np.ndarray
    uy: np.ndarray
    pressure: np.ndarray
    time: float

    def __post_init__(self):
        c1 = np.asarray(self.c1, dtype=float)
        nx, ny = c1.shape
        shapes = {"c1": (nx, ny), "c2": (nx, ny), "phi": (nx, ny),
                  "ux": (nx + 1, ny), "uy": (nx, ny), "pressure": (nx, ny)}
        for name, shape in shapes.items():
            arr = np.asarray(getattr(self, name), dtype=float)
            _require(arr.shape == shape, f"StripState2D.{name} expected {shape}")
            object.__setattr__(self, name, arr)
        _require(self.length > 0, "length must be > 0")
        _require(bool(np.all(self.c1 >= 0)) and bool(np.all(self.c2 >= 0)),
                 "concentrations must be nonnegative")

    @property
    def nx(self) -> int:
        return self.c1.shape[0]

    @property
    def ny(self) -> int:
        return self.c1.shape[1]


@dataclass(frozen=True)
class CurveComponent:
    """One closed component of a parametric boundary: ordered samples of the
    position and the boundary traces (gamma1, gamma2, w)."""

    position: np.ndarray      # (m, 2)
    gamma1: np.ndarray
    gamma2: np.ndarray
    w: np.ndarray
    s: np.ndarray             # parameter values, strictly increasing

    def __post_init__(self):
        pos = np.asarray(self.position, dtype=float)
        _require(pos.ndim == 2 and pos.shape[1] == 2, "position must be (m, 2)")
        m = pos.shape[0]
        _require(m >= 16, "closed curve components need at least 16 samples")
        object.__setattr__(self, "position", pos)
        for name in ("gamma1", "gamma2", "w", "s"):
            arr = np.asarray(getattr(self, name), dtype=float)
            _require(arr.shape == (m,), f"CurveComponent.{name} has wrong length")
            object.__setattr__(self, name, arr)
        _require(bool(np.all(np.diff(self.s) > 0)), "parameter must be increasing")

    @property
    def m(self) -> int:
        return self.position.shape[0]


@dataclass(frozen=True)
class BoundaryCurve2D:
    """A closed boundary made of one or more closed components."""

    components: tuple[CurveComponent, ...]

    def __post_init__(self):
        _require(len(self.components) >= 1, "need at least one component")
        object.__setattr__(self, "components", tuple(self.components))
