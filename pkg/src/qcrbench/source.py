"""Distributed-loss model of a seeded four-wave-mixing two-mode squeezer.

The gain medium is treated as a stack of thin slices, each applying a small
two-mode squeezing step to (probe, conjugate) interleaved with a small
probe-only loss; the conjugate is assumed absorption-free.  The generated
state is the infinite-slice limit of this stack.  Three routes to that limit
live here:

* `layered_source`   - a finite stack of N slices (the discretized model);
* `converged_source` - doubles N until the output moments stop changing;
* `continuum_noises` - the exact N -> infinity limit in closed form, used
  for fast parameter scans and as a cross-check on the stack.

The model is parameterized by the total squeezing parameter ``s`` (sum of the
slice squeezing steps) and the total internal probe transmission ``T_a``
(product of the slice transmissions).  Normalized noises are shot-noise
units: Var(n)/<n> = 1 for a coherent beam.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError
from .gaussian import (
    GaussianState,
    SymplecticOp,
    bright_mean_photon,
    number_covariance_bright,
    number_variance_bright,
    two_mode_squeezer,
)

DEFAULT_SEED_PHOTONS = 1e6
MAX_LAYERS = 2**20


@dataclass(frozen=True)
class SourceParams:
    """Effective squeezing, internal probe transmission, and seed strength."""

    s: float
    T_a: float
    seed_photons: float | None = None
    seed_flux: float | None = None

    def __post_init__(self):
        if not (self.s >= 0.0 and np.isfinite(self.s)):
            raise ValueError("squeezing parameter s must be finite and >= 0")
        if not (0.0 < self.T_a <= 1.0):
            raise ValueError("internal transmission T_a must lie in (0, 1]")
        if self.seed_photons is not None and self.seed_flux is not None:
            raise ValueError("give either seed_photons or seed_flux, not both")
        for name in ("seed_photons", "seed_flux"):
            value = getattr(self, name)
            if value is not None and not (value >= 0.0 and np.isfinite(value)):
                raise ValueError(f"{name} must be finite and >= 0")

    def effective_seed_photons(self, measurement_time: float | None = None) -> float:
        """Probe seed photons per effective measurement window."""
        if self.seed_photons is not None:
            return float(self.seed_photons)
        if self.seed_flux is not None:
            if measurement_time is None:
                raise ValueError("seed_flux needs a measurement time to give photons")
            return float(self.seed_flux) * float(measurement_time)
        return DEFAULT_SEED_PHOTONS


@dataclass(frozen=True)
class SourceOutput:
    """Generated two-mode state plus the total mean-field map and gain."""

    state: GaussianState
    transfer: SymplecticOp
    layers_used: int
    gain: float


@dataclass(frozen=True)
class NoiseTriple:
    """Shot-noise-normalized intensity-difference, probe, and conjugate noises."""

    diff: float
    probe: float
    conj: float


def _probe_loss_diag(eta: float) -> np.ndarray:
    root = math.sqrt(eta)
    return np.diag([root, root, 1.0, 1.0])


def _layer_affine(params: SourceParams, layers: int, splitting: str):
    """One slice of the stack as an affine covariance map (L, C).

    The map acts as sigma -> L sigma L^T + C and d -> L d.  "plain" applies
    the squeezing step then the full slice loss; "strang" symmetrizes the
    loss around the squeezer, which converges as 1/N^2 instead of 1/N and is
    therefore the default for the doubling ladder.
    """
    step = two_mode_squeezer(params.s / layers).S
    eye = np.eye(4)
    if splitting == "plain":
        x = _probe_loss_diag(params.T_a ** (1.0 / layers))
        lin = x @ step
        add = eye - x @ x
    elif splitting == "strang":
        xh = _probe_loss_diag(params.T_a ** (1.0 / (2.0 * layers)))
        vac = eye - xh @ xh
        lin = xh @ step @ xh
        add = xh @ step @ vac @ step.T @ xh + vac
    else:
        raise ValueError(f"unknown splitting {splitting!r}")
    return lin, add


def _affine_power(lin: np.ndarray, add: np.ndarray, count: int):
    """Compose `count` copies of the affine map by binary exponentiation."""
    acc_l, acc_c = np.eye(4), np.zeros((4, 4))
    base_l, base_c = lin, add
    n = count
    while n:
        if n & 1:
            # apply the accumulated map first, then the current base block
            acc_l, acc_c = base_l @ acc_l, base_l @ acc_c @ base_l.T + base_c
        n >>= 1
        if n:
            base_l, base_c = base_l @ base_l, base_l @ base_c @ base_l.T + base_c
    return acc_l, acc_c


def _seed_state(params: SourceParams) -> tuple[np.ndarray, float]:
    photons = params.effective_seed_photons()
    alpha = math.sqrt(photons)
    d0 = np.array([2.0 * alpha, 0.0, 0.0, 0.0])
    return d0, photons


def layered_source(params: SourceParams, layers: int, splitting: str = "strang") -> SourceOutput:
    """Run a coherent probe seed and vacuum conjugate through N slices."""
    if layers < 1:
        raise ValueError("need at least one layer")
    lin, add = _layer_affine(params, layers, splitting)
    total_l, total_c = _affine_power(lin, add, layers)
    d0, photons = _seed_state(params)
    state = GaussianState(total_l @ d0, total_l @ total_l.T + total_c)
    out_photons = bright_mean_photon(state, 0)
    gain = out_photons / photons if photons > 0.0 else float("nan")
    transfer = SymplecticOp(total_l, label=f"layered_fwm(N={layers})", check=False)
    return SourceOutput(state=state, transfer=transfer, layers_used=layers, gain=gain)


def converged_source(
    params: SourceParams,
    rel_tol: float = 1e-9,
    max_layers: int = MAX_LAYERS,
    splitting: str = "strang",
) -> SourceOutput:
    """Double the slice count until all output moments change by < rel_tol.

    Changes are measured against the magnitude scale of each moment array
    (never below 1).  Returns the first output whose doubling is quiescent,
    so ``layers_used`` reports the coarsest converged stack.
    """
    if not rel_tol > 0.0:
        raise ValueError("rel_tol must be positive")
    previous = layered_source(params, 1, splitting)
    layers = 2
    while layers <= max_layers:
        current = layered_source(params, layers, splitting)
        d_scale = max(1.0, float(np.max(np.abs(current.state.d))))
        s_scale = max(1.0, float(np.max(np.abs(current.state.sigma))))
        d_close = float(np.max(np.abs(current.state.d - previous.state.d))) < rel_tol * d_scale
        s_close = (
            float(np.max(np.abs(current.state.sigma - previous.state.sigma)))
            < rel_tol * s_scale
        )
        if d_close and s_close:
            return previous
        previous = current
        layers *= 2
    raise ConvergenceError(
        f"layer doubling did not converge to rel_tol={rel_tol} within {max_layers} layers"
    )


def noise_triple(state: GaussianState, probe: int = 0, conj: int = 1) -> NoiseTriple:
    """Normalized noises of a bright two-mode state (bright-limit statistics)."""
    var_p = number_variance_bright(state, probe)
    var_c = number_variance_bright(state, conj)
    cov = number_covariance_bright(state, probe, conj)
    n_p = bright_mean_photon(state, probe)
    n_c = bright_mean_photon(state, conj)
    return NoiseTriple(
        diff=(var_p + var_c - 2.0 * cov) / (n_p + n_c),
        probe=var_p / n_p,
        conj=var_c / n_c,
    )


def _sinhc(x: np.ndarray) -> np.ndarray:
    """sinh(x)/x, stable at x = 0."""
    small = np.abs(x) < 1e-6
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 + x * x / 6.0, np.sinh(safe) / safe)


def _slice_dynamics(s, T_a):
    """Rates of the continuum slice dynamics in the amplitude (x) sector.

    The mean-field pair (x_probe, x_conj) evolves along the stack with the
    constant generator [[-g/2, s], [s, 0]], split as (-g/4) I + B with
    g = -ln(T_a); B has eigenvalue rate q = sqrt(16 s^2 + g^2) / 4, which
    sets every hyperbolic scale of the converged source.
    """
    s = np.asarray(s, dtype=float)
    ta = np.asarray(T_a, dtype=float)
    s, ta = np.broadcast_arrays(s, ta)
    if np.any(s < 0.0):
        raise ValueError("squeezing parameter s must be >= 0")
    if np.any(ta <= 0.0) or np.any(ta > 1.0):
        raise ValueError("internal transmission T_a must lie in (0, 1]")
    g = -np.log(ta)
    q = 0.25 * np.sqrt(16.0 * s * s + g * g)
    return s, g, q


def _propagator_column(s, g, q, z):
    """First column (probe response) of the x-sector propagator at depth z."""
    damp = np.exp(-0.25 * g * z)
    stretch = z * _sinhc(q * z)  # sinh(q z)/q
    return (
        damp * (np.cosh(q * z) - 0.25 * g * stretch),
        damp * (s * stretch),
    )


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)
_GL_NODES = 0.5 * (_GL_NODES + 1.0)
_GL_WEIGHTS = 0.5 * _GL_WEIGHTS


def continuum_noises(s, T_a) -> NoiseTriple:
    """Exact infinite-slice normalized noises; accepts scalar or array input.

    The x-sector covariance is sigma = M M^T + G with M the depth-1
    propagator and G the accumulated vacuum injected by the distributed probe
    loss; G is integrated by 64-node Gauss-Legendre quadrature, which is
    exact to machine precision for these smooth exponential integrands.
    """
    s, g, q = _slice_dynamics(s, T_a)
    m11, m21 = _propagator_column(s, g, q, 1.0)
    damp = np.exp(-0.25 * g)
    stretch = _sinhc(q)
    m22 = damp * (np.cosh(q) + 0.25 * g * stretch)
    g00 = np.zeros_like(m11)
    g01 = np.zeros_like(m11)
    g11 = np.zeros_like(m11)
    for node, weight in zip(_GL_NODES, _GL_WEIGHTS):
        c1, c2 = _propagator_column(s, g, q, node)
        g00 += weight * c1 * c1
        g01 += weight * c1 * c2
        g11 += weight * c2 * c2
    g00, g01, g11 = g * g00, g * g01, g * g11
    # sigma = M M^T + G with symmetric M (m12 = m21)
    s00 = m11 * m11 + m21 * m21 + g00
    s01 = m21 * (m11 + m22) + g01
    s11 = m21 * m21 + m22 * m22 + g11
    w_p = m11 * m11
    w_c = m21 * m21
    diff = (w_p * s00 + w_c * s11 - 2.0 * m11 * m21 * s01) / (w_p + w_c)
    return NoiseTriple(diff=diff, probe=s00, conj=s11)


def continuum_gain(s, T_a):
    """Exact infinite-slice probe photon gain <n_out>/<n_seed>."""
    s, g, q = _slice_dynamics(s, T_a)
    m11, _ = _propagator_column(s, g, q, 1.0)
    return m11 * m11


def analytic_noises(s: float, T_a: float, corrected_probe: bool = True) -> NoiseTriple:
    """Printed closed forms for the three normalized source noises.

    The probe formula is published with cos(xi/2), which goes negative and
    cannot be a noise; ``corrected_probe`` substitutes cosh(xi/2), which
    reproduces the lossless limit.  The intensity-difference form is
    evaluated exactly as printed: it disagrees with the slice model away
    from trivial limits (it tends to 3/4 instead of 0 at high squeezing),
    so the slice model is the authority and this one is kept for audits.
    """
    s = float(s)
    ta = float(T_a)
    if not (0.0 < ta <= 1.0):
        raise ValueError("internal transmission T_a must lie in (0, 1]")
    if s < 0.0:
        raise ValueError("squeezing parameter s must be >= 0")
    if s == 0.0:
        return NoiseTriple(diff=1.0, probe=1.0, conj=1.0)
    log_ta = math.log(ta)
    root_ta = math.sqrt(ta)
    xi = math.sqrt(16.0 * s * s + log_ta * log_ta)
    zeta = math.atanh(log_ta / xi)
    sh4 = math.sinh(0.25 * xi)
    ch_shift = math.cosh(0.5 * xi + zeta)
    diff = (
        1.0
        - 2.0 * s * sh4 * sh4 / (xi * ch_shift)
        - root_ta * s * log_ta * log_ta * sh4**4 / (2.0 * xi**3 * ch_shift)
    )
    half = math.cosh(0.5 * xi) if corrected_probe else math.cos(0.5 * xi)
    probe = (16.0 * s * s * (1.0 - root_ta * (1.0 - half)) + log_ta * log_ta) / (xi * xi)
    conj = (
        16.0 * s * s * root_ta / (xi * xi)
        - 1.0
        - 2.0
        * root_ta
        * ((8.0 * s * s - xi * xi) * math.cosh(0.5 * xi) + xi * log_ta * math.sinh(0.5 * xi))
        / (xi * xi)
    )
    return NoiseTriple(diff=diff, probe=probe, conj=conj)


def gain(params: SourceParams, rel_tol: float = 1e-9) -> float:
    """Probe photon gain of the converged source."""
    if params.effective_seed_photons() <= 0.0:
        raise ValueError("gain is undefined for a zero probe seed")
    return converged_source(params, rel_tol=rel_tol).gain


def squeezing_db(noise: float) -> float:
    """Normalized noise expressed in dB below shot noise."""
    if not noise > 0.0:
        raise ValueError("normalized noise must be positive")
    return -10.0 * math.log10(noise)
