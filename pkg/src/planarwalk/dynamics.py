"""Exact unitary evolution and walker observables.

Time evolution uses a full Hermitian eigendecomposition, so any time can be
reached without stepping error. Observables are reported against the
dimensionless time ``Jt``.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import LatticeError, NumericalGuardError
from .hamiltonian import HERMITICITY_TOL, HamiltonianMatrix, hermiticity_residual
from .lattice import Lattice, VertexId

NORM_TOL = 1e-10
BOUNDARY_DENSITY = 1e-4
DEFAULT_FIT_START = 0.5


@dataclass(frozen=True)
class WalkerState:
    amplitudes: np.ndarray
    time: float = 0.0

    @property
    def norm2(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)


def localized_state(lattice: Lattice, vertex) -> WalkerState:
    """Walker sitting on one vertex (a ``VertexId`` or a ``(j, k)`` pair)."""
    if not isinstance(vertex, VertexId):
        j, k = vertex
        vertex = lattice.vertex(int(j), int(k))
    if not (1 <= vertex.linear <= lattice.size):
        raise LatticeError(f"vertex {vertex} outside lattice")
    psi = np.zeros(lattice.size, dtype=complex)
    psi[vertex.position] = 1.0
    return WalkerState(psi, 0.0)


class Propagator:
    """``exp(-i H t)`` through ``H = U diag(lambda) U^dagger``."""

    def __init__(self, H):
        matrix = H.matrix if isinstance(H, HamiltonianMatrix) else np.asarray(H, dtype=complex)
        res = hermiticity_residual(matrix)
        if res > HERMITICITY_TOL:
            raise NumericalGuardError(f"Hamiltonian is not Hermitian (residual {res:.3e})")
        self.matrix = matrix
        self.J = H.J if isinstance(H, HamiltonianMatrix) else 1.0
        self.eigenvalues, self.eigenvectors = scipy.linalg.eigh(matrix)

    def reconstruction_residual(self) -> float:
        U = self.eigenvectors
        return float(np.max(np.abs((U * self.eigenvalues) @ U.conj().T - self.matrix)))

    def unitarity_residual(self) -> float:
        U = self.eigenvectors
        return float(np.max(np.abs(U.conj().T @ U - np.eye(len(U)))))

    def amplitudes(self, psi0, times) -> np.ndarray:
        """Evolved amplitudes, shape ``(len(times), N)``."""
        psi0 = psi0.amplitudes if isinstance(psi0, WalkerState) else np.asarray(psi0, dtype=complex)
        times = np.atleast_1d(np.asarray(times, dtype=float))
        c = self.eigenvectors.conj().T @ psi0
        phases = np.exp(-1j * np.outer(times, self.eigenvalues))
        out = (phases * c) @ self.eigenvectors.T
        # t = 0 returns the input exactly rather than its round trip through the eigenbasis
        out[times == 0] = psi0
        return out


def evolve(H, psi0, times) -> list[WalkerState]:
    """States ``exp(-i H t) psi0`` for each ``t`` in ``times`` (hbar = 1)."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(times < 0) or np.any(np.diff(times) < 0):
        raise ValueError("times must be non-negative and sorted")
    _check_normalized(psi0)
    prop = H if isinstance(H, Propagator) else Propagator(H)
    amps = prop.amplitudes(psi0, times)
    _check_norms(np.sum(np.abs(amps) ** 2, axis=1))
    return [WalkerState(a, float(t)) for a, t in zip(amps, times)]


def _check_normalized(psi0):
    amps = psi0.amplitudes if isinstance(psi0, WalkerState) else np.asarray(psi0)
    norm2 = float(np.sum(np.abs(amps) ** 2))
    if abs(norm2 - 1) > NORM_TOL:
        raise ValueError(f"initial state has squared norm {norm2:.12g}, expected 1")


def _check_norms(norms, ref=1.0):
    drift = float(np.max(np.abs(np.asarray(norms) - ref))) if len(norms) else 0.0
    if drift > NORM_TOL:
        raise NumericalGuardError(f"norm drift {drift:.3e} exceeds {NORM_TOL}")


def probability_density(state) -> np.ndarray:
    amps = state.amplitudes if isinstance(state, WalkerState) else np.asarray(state)
    return np.abs(amps) ** 2


def coordinate_variance(lattice: Lattice, density) -> tuple[float, float]:
    rho = np.asarray(density, dtype=float)
    x, y = lattice.x, lattice.y
    mx, my = rho @ x, rho @ y
    # centred second moments avoid cancellation for large coordinates
    sx = float(rho @ (x - mx) ** 2)
    sy = float(rho @ (y - my) ** 2)
    return sx, sy


def l1_coherence(state) -> float:
    """``sum_{m != n} |rho_mn|`` of the pure state, i.e. ``(sum |psi|)^2 - 1``."""
    amps = state.amplitudes if isinstance(state, WalkerState) else np.asarray(state)
    mags = np.abs(amps)
    return float(np.sum(mags) ** 2 - np.sum(mags**2))


@dataclass
class ObservableSeries:
    times: np.ndarray
    sigma_x2: np.ndarray
    sigma_y2: np.ndarray
    coherence: np.ndarray
    snapshots: dict = field(default_factory=dict)
    jt_boundary: float | None = None

    def component(self, name: str) -> np.ndarray:
        if name in ("sigma_x2", "x"):
            return self.sigma_x2
        if name in ("sigma_y2", "y"):
            return self.sigma_y2
        if name in ("sigma2", "mean"):
            return 0.5 * (self.sigma_x2 + self.sigma_y2)
        if name == "coherence":
            return self.coherence
        raise ValueError(f"unknown series component {name!r}")

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["Jt", "sigma_x2", "sigma_y2", "coherence"])
        for row in zip(self.times, self.sigma_x2, self.sigma_y2, self.coherence):
            writer.writerow([format(float(v), ".17g") for v in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ObservableSeries":
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["Jt", "sigma_x2", "sigma_y2", "coherence"]:
            raise ValueError(f"unexpected CSV header {header!r}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise ValueError(f"line {lineno}: expected 4 columns, got {len(row)}")
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise ValueError(f"line {lineno}: {exc}") from None
        if not rows:
            raise ValueError("CSV contains no samples")
        data = np.array(rows)
        return cls(data[:, 0], data[:, 1], data[:, 2], data[:, 3])

    def snapshots_json(self) -> str:
        items = [{"Jt": float(t), "rho": [float(v) for v in rho]} for t, rho in sorted(self.snapshots.items())]
        return json.dumps(items)


def time_grid(t_max: float = 6.0, n_steps: int = 121) -> np.ndarray:
    """Uniform samples of ``Jt`` over ``[0, t_max]`` (``n_steps`` points)."""
    if n_steps < 2 or not t_max > 0:
        raise ValueError("time grid needs t_max > 0 and at least 2 samples")
    return np.linspace(0.0, t_max, n_steps)


def simulate(
    lattice: Lattice,
    H,
    psi0,
    jt_grid,
    snapshot_times=(),
    propagator: Propagator | None = None,
) -> ObservableSeries:
    """Evolve ``psi0`` over a ``Jt`` grid and collect every observable."""
    jt_grid = np.asarray(jt_grid, dtype=float)
    _check_normalized(psi0)
    prop = propagator or Propagator(H)
    J = H.J if isinstance(H, HamiltonianMatrix) else prop.J
    amps = prop.amplitudes(psi0, jt_grid / J)
    rho = np.abs(amps) ** 2
    _check_norms(rho.sum(axis=1))

    x, y = lattice.x, lattice.y
    mx, my = rho @ x, rho @ y
    sx = np.einsum("tn,tn->t", rho, (x[None, :] - mx[:, None]) ** 2)
    sy = np.einsum("tn,tn->t", rho, (y[None, :] - my[:, None]) ** 2)
    mags = np.sqrt(rho)
    coh = mags.sum(axis=1) ** 2 - rho.sum(axis=1)

    snaps = {}
    if len(snapshot_times):
        step = jt_grid[1] - jt_grid[0] if len(jt_grid) > 1 else np.inf
        for t in snapshot_times:
            i = int(np.argmin(np.abs(jt_grid - t)))
            if abs(jt_grid[i] - t) > step / 2 + 1e-12:
                raise ValueError(f"snapshot Jt={t} outside the time grid")
            snaps[float(jt_grid[i])] = rho[i].copy()

    boundary = rho[:, lattice.boundary_mask] if lattice.boundary_mask.any() else np.zeros((len(jt_grid), 0))
    hit = np.flatnonzero(boundary.max(axis=1, initial=0.0) > BOUNDARY_DENSITY)
    jt_boundary = float(jt_grid[hit[0]]) if len(hit) else None
    return ObservableSeries(jt_grid, sx, sy, coh, snaps, jt_boundary)


@dataclass(frozen=True)
class FitResult:
    A: float
    p: float
    rms_residual: float
    window: tuple
    n_samples: int

    def to_dict(self) -> dict:
        return {
            "A": self.A,
            "p": self.p,
            "rms_residual": self.rms_residual,
            "window": list(self.window),
            "n_samples": self.n_samples,
        }


def default_fit_window(series: ObservableSeries) -> tuple[float, float]:
    upper = series.jt_boundary if series.jt_boundary is not None else float(series.times[-1])
    return DEFAULT_FIT_START, upper


def fit_power_law(series, component: str = "sigma2", window=None, min_samples: int = 8) -> FitResult:
    """Least-squares fit of ``log f = log A + p log(Jt)`` inside ``window``.

    ``series`` is an ``ObservableSeries`` or a ``(times, values)`` pair.
    """
    if isinstance(series, ObservableSeries):
        times, values = series.times, series.component(component)
        if window is None:
            window = default_fit_window(series)
    else:
        times, values = (np.asarray(v, dtype=float) for v in series)
        if window is None:
            window = (DEFAULT_FIT_START, float(times[-1]))
    lo, hi = float(window[0]), float(window[1])
    if not 0 < lo < hi:
        raise ValueError(f"fit window must satisfy 0 < lo < hi, got ({lo}, {hi})")
    mask = (times >= lo) & (times <= hi)
    if mask.sum() < min_samples:
        raise ValueError(f"fit window [{lo}, {hi}] holds {mask.sum()} samples, need {min_samples}")
    t, f = times[mask], values[mask]
    if np.any(f <= 0):
        raise ValueError("power-law fit needs strictly positive values in the window")
    X = np.column_stack([np.ones_like(t), np.log(t)])
    coef, *_ = np.linalg.lstsq(X, np.log(f), rcond=None)
    resid = np.log(f) - X @ coef
    return FitResult(float(np.exp(coef[0])), float(coef[1]), float(np.sqrt(np.mean(resid**2))), (lo, hi), int(mask.sum()))


def local_extrema(series, component: str = "sigma2") -> list[tuple[float, float, str]]:
    """Interior local maxima/minima from sign changes of the first difference."""
    if isinstance(series, ObservableSeries):
        times, values = series.times, series.component(component)
    else:
        times, values = (np.asarray(v, dtype=float) for v in series)
    if len(values) < 3:
        raise ValueError("need at least 3 samples")
    diff = np.sign(np.diff(values))
    out = []
    last_sign, last_idx = 0, 0
    for i, s in enumerate(diff):
        if s == 0:
            continue
        if last_sign and s != last_sign:
            # extremum sits after the previous non-flat step
            idx = last_idx + 1
            out.append((float(times[idx]), float(values[idx]), "max" if last_sign > 0 else "min"))
        last_sign, last_idx = s, i
    return out
