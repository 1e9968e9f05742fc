"""Exact bookkeeping for Gaussian bosonic states on quadrature moments.

Conventions used throughout the package:

* quadratures x = a + a† and p = i(a† - a), interleaved as (x1, p1, ..., xM, pM);
* the vacuum state has zero displacement and identity covariance, so shot
  noise equals 1 in these units and coherent states keep sigma = identity;
* a coherent amplitude alpha displaces (x, p) by (2 Re alpha, 2 Im alpha).

Photon-number statistics are offered in the bright-field approximation,
where number fluctuations are projected onto the mean field,
Var(n) ~ d^T sigma d / 4 on the mode's quadrature pair.  For a coherent
state this reproduces Var(n) = <n> exactly.  Exact fourth-moment formulas
for dim states are deliberately out of scope.
"""

from dataclasses import InitVar, dataclass

import numpy as np
from numpy.typing import NDArray

from .errors import BrightLimitError

Array = NDArray[np.float64]

SYMMETRY_TOL = 1e-12
SYMPLECTIC_TOL = 1e-10


def symplectic_form(modes: int) -> Array:
    """Block-diagonal symplectic form Omega for the (x1, p1, ...) ordering."""
    if modes < 1:
        raise ValueError("need at least one mode")
    return np.kron(np.eye(modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


@dataclass(frozen=True, eq=False)
class GaussianState:
    """Displacement vector and covariance matrix of an M-mode state."""

    d: Array
    sigma: Array

    def __post_init__(self):
        d = np.atleast_1d(np.asarray(self.d, dtype=float))
        sigma = np.asarray(self.sigma, dtype=float)
        if d.ndim != 1 or d.size == 0 or d.size % 2 != 0:
            raise ValueError("displacement must be a vector of even length 2M")
        if sigma.shape != (d.size, d.size):
            raise ValueError("covariance shape does not match the displacement")
        if not np.allclose(sigma, sigma.T, rtol=0.0, atol=SYMMETRY_TOL):
            raise ValueError("covariance matrix is not symmetric")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "sigma", 0.5 * (sigma + sigma.T))

    @property
    def modes(self) -> int:
        return self.d.size // 2

    def mode_displacement(self, mode: int) -> Array:
        """(x, p) mean vector of one mode."""
        return self.d[2 * mode : 2 * mode + 2]

    def block(self, i: int, j: int) -> Array:
        """2x2 covariance block between modes i and j."""
        return self.sigma[2 * i : 2 * i + 2, 2 * j : 2 * j + 2]


@dataclass(frozen=True, eq=False)
class SymplecticOp:
    """Linear quadrature map; symplectic when it preserves Omega.

    ``check=False`` skips the symplectic-condition test so the same carrier
    can hold composite mean-field maps that include loss (those contract
    phase space and are not symplectic).
    """

    S: Array
    label: str = ""
    check: InitVar[bool] = True
    tol: InitVar[float] = SYMPLECTIC_TOL

    def __post_init__(self, check: bool, tol: float):
        S = np.asarray(self.S, dtype=float)
        if S.ndim != 2 or S.shape[0] != S.shape[1] or S.shape[0] % 2 != 0:
            raise ValueError("map must be a square 2M x 2M matrix")
        if check:
            omega = symplectic_form(S.shape[0] // 2)
            if not np.allclose(S @ omega @ S.T, omega, rtol=0.0, atol=tol):
                raise ValueError(f"matrix is not symplectic within {tol}")
        object.__setattr__(self, "S", S)

    @property
    def modes(self) -> int:
        return self.S.shape[0] // 2


@dataclass(frozen=True, eq=False)
class ChannelOp:
    """Pure-loss channel with one transmission per mode; eta = 1 is identity."""

    eta_per_mode: Array

    def __post_init__(self):
        eta = np.atleast_1d(np.asarray(self.eta_per_mode, dtype=float))
        if eta.ndim != 1 or eta.size == 0:
            raise ValueError("need one transmission per mode")
        if np.any(eta < 0.0) or np.any(eta > 1.0):
            raise ValueError("transmissions must lie in [0, 1]")
        object.__setattr__(self, "eta_per_mode", eta)

    @property
    def modes(self) -> int:
        return self.eta_per_mode.size


def vacuum_state(modes: int) -> GaussianState:
    """M-mode vacuum: d = 0, sigma = identity."""
    if modes < 1:
        raise ValueError("need at least one mode")
    return GaussianState(np.zeros(2 * modes), np.eye(2 * modes))


def coherent_state(alphas) -> GaussianState:
    """Coherent state with one complex amplitude per mode."""
    alphas = np.atleast_1d(np.asarray(alphas, dtype=complex))
    d = np.zeros(2 * alphas.size)
    d[0::2] = 2.0 * alphas.real
    d[1::2] = 2.0 * alphas.imag
    return GaussianState(d, np.eye(2 * alphas.size))


def two_mode_squeezer(r: float) -> SymplecticOp:
    """Two-mode squeezing map on modes (0, 1).

    Sign convention: x1 - x2 (and p1 + p2) are squeezed for r > 0,
        x1 -> x1 cosh r + x2 sinh r        p1 -> p1 cosh r - p2 sinh r
        x2 -> x2 cosh r + x1 sinh r        p2 -> p2 cosh r - p1 sinh r
    """
    r = float(r)
    if not np.isfinite(r):
        raise ValueError("squeezing parameter must be finite")
    c, s = np.cosh(r), np.sinh(r)
    S = np.array(
        [
            [c, 0.0, s, 0.0],
            [0.0, c, 0.0, -s],
            [s, 0.0, c, 0.0],
            [0.0, -s, 0.0, c],
        ]
    )
    return SymplecticOp(S, label=f"two_mode_squeezer(r={r!r})")


def compose(second: SymplecticOp, first: SymplecticOp) -> SymplecticOp:
    """Symplectic map equal to `first` followed by `second`."""
    if second.modes != first.modes:
        raise ValueError("mode counts do not match")
    return SymplecticOp(
        second.S @ first.S, label=f"{second.label or 'op'} after {first.label or 'op'}"
    )


def apply_symplectic(state: GaussianState, op: SymplecticOp) -> GaussianState:
    """Transform moments: d -> S d, sigma -> S sigma S^T."""
    if op.S.shape[0] != state.d.size:
        raise ValueError("operator and state dimensions do not match")
    return GaussianState(op.S @ state.d, op.S @ state.sigma @ op.S.T)


def apply_loss(state: GaussianState, channel: ChannelOp) -> GaussianState:
    """Mix each mode with vacuum on a beam splitter of transmission eta.

    d -> X d and sigma -> X sigma X + (I - X^2) with X = diag(sqrt(eta))
    expanded over the quadratures of each mode.
    """
    if channel.modes != state.modes:
        raise ValueError("channel and state mode counts do not match")
    x = np.repeat(np.sqrt(channel.eta_per_mode), 2)
    sigma = state.sigma * np.outer(x, x) + np.diag(1.0 - x * x)
    return GaussianState(x * state.d, sigma)


def mean_photon(state: GaussianState, mode: int) -> float:
    """Exact mean photon number of one mode."""
    d = state.mode_displacement(mode)
    block = state.block(mode, mode)
    return float((d @ d + np.trace(block) - 2.0) / 4.0)


def bright_mean_photon(state: GaussianState, mode: int) -> float:
    """Mean-field (stimulated) photon number |d|^2 / 4 of one mode.

    This is the photon count used consistently by the bright-limit number
    statistics; it differs from `mean_photon` only by the spontaneous
    occupation, which is negligible for bright seeds.
    """
    d = state.mode_displacement(mode)
    return float(d @ d / 4.0)


def _require_bright(state: GaussianState, mode: int) -> Array:
    d = state.mode_displacement(mode)
    if float(d @ d) == 0.0:
        raise BrightLimitError(
            f"bright-limit approximation invalid: mode {mode} has zero mean field"
        )
    return d


def number_variance_bright(state: GaussianState, mode: int) -> float:
    """Photon-number variance in the bright limit, d^T sigma d / 4."""
    d = _require_bright(state, mode)
    return float(d @ state.block(mode, mode) @ d / 4.0)


def number_covariance_bright(state: GaussianState, i: int, j: int) -> float:
    """Photon-number covariance of two bright modes, d_i^T sigma_ij d_j / 4."""
    di = _require_bright(state, i)
    dj = _require_bright(state, j)
    return float(di @ state.block(i, j) @ dj / 4.0)


def symplectic_eigenvalues(state: GaussianState) -> Array:
    """Symplectic spectrum of the covariance matrix (>= 1 for physical states)."""
    omega = symplectic_form(state.modes)
    eigs = np.sort(np.abs(np.linalg.eigvals(1j * omega @ state.sigma)))
    return eigs[::2].real
