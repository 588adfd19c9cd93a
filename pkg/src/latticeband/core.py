"""Operator definition and overflow-safe wave propagation on a 1D lattice.

The operator acts on functions psi(n) of an integer site index through the
three-term recurrence

    (1/d^2 - u(n)) psi(n+1) =
        (2/d^2 + v(n) - E) psi(n) - (1/d^2 - u(n-1)) psi(n-1)

where d is the lattice step, v is the periodic on-site (local) potential and
u is the periodic coupling on the two diagonals adjacent to the main one.
Dividing through by the effective hopping h(n) = 1/d^2 - u(n) gives the
per-site step psi(n+1) = a(n) psi(n) + b(n) psi(n-1) with

    a(n) = (2/d^2 + v(n) - E) / h(n),      b(n) = -h(n-1) / h(n).

For u = 0 this is the familiar a = 2 + d^2 (v - E), b = -1.

Solutions in spectral gaps grow exponentially, so traces store a scaled value
s(n) together with a cumulative log-amplitude ell(n); the actual solution is
psi(n) = s(n) * exp(ell(n)). Consecutive sites between rescale events share
the same ell, which keeps neighbour ratios exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import HoppingDegenerateError

# |h(n)| below this counts as a decoupled chain.
HOPPING_EPSILON = 1e-9
# Working pair is rescaled once its magnitude leaves [1/RESCALE_LIMIT, RESCALE_LIMIT].
RESCALE_LIMIT = 1e6
# Every emitted trace satisfies the recurrence to this relative residual.
RESIDUAL_TOLERANCE = 1e-10


@dataclass(frozen=True)
class LatticeSpec:
    """Lattice step d > 0 (dimensionless length unit)."""

    delta: float = 1.0

    def __post_init__(self):
        if not self.delta > 0.0:
            raise ValueError(f"lattice step must be positive, got {self.delta}")

    @property
    def inv_step_sq(self) -> float:
        return 1.0 / (self.delta * self.delta)


@dataclass(frozen=True)
class PeriodicPotential:
    """Period-m potential pair: local values v and nonlocal couplings u.

    Site n reads v[n mod m] and u[n mod m]; the u(n-1) factor at n = 0 wraps
    to u[m-1].
    """

    v: tuple
    u: tuple

    def __post_init__(self):
        object.__setattr__(self, "v", tuple(float(x) for x in self.v))
        object.__setattr__(self, "u", tuple(float(x) for x in self.u))
        if len(self.v) < 1:
            raise ValueError("potential period must be at least 1")
        if len(self.v) != len(self.u):
            raise ValueError(
                f"v and u must have equal length, got {len(self.v)} and {len(self.u)}"
            )

    @property
    def m(self) -> int:
        return len(self.v)

    def v_at(self, n: int) -> float:
        return self.v[n % self.m]

    def u_at(self, n: int) -> float:
        return self.u[n % self.m]

    @classmethod
    def free(cls, m: int = 1) -> "PeriodicPotential":
        return cls(v=(0.0,) * m, u=(0.0,) * m)

    @classmethod
    def local(cls, v) -> "PeriodicPotential":
        v = tuple(v)
        return cls(v=v, u=(0.0,) * len(v))


@dataclass(frozen=True)
class StepCoefficients:
    """Per-site recurrence psi(n+1) = a psi(n) + b psi(n-1)."""

    a: float
    b: float


@dataclass(frozen=True)
class InitialCondition:
    """Values at two neighbouring sites; must not both vanish."""

    psi0: float
    psi1: float

    def __post_init__(self):
        if self.psi0 == 0.0 and self.psi1 == 0.0:
            raise ValueError("initial condition (0, 0) is the trivial solution")


@dataclass(frozen=True)
class SolutionTrace:
    """Sampled solution psi(n) = s(n) * exp(ell(n)) for n = 0..n_sites."""

    energy: float
    ic: InitialCondition
    n_sites: int
    s: np.ndarray
    ell: np.ndarray

    def __post_init__(self):
        if len(self.s) != self.n_sites + 1 or len(self.ell) != self.n_sites + 1:
            raise ValueError("trace arrays must have n_sites + 1 entries")
        self.s.flags.writeable = False
        self.ell.flags.writeable = False

    def log_abs(self) -> np.ndarray:
        """log |psi(n)| per site (-inf at exact zeros)."""
        with np.errstate(divide="ignore"):
            return np.log(np.abs(self.s)) + self.ell

    def reconstructed(self, clamp: float | None = None) -> np.ndarray:
        """psi values as plain floats, optionally clamped to +-clamp.

        Sites that never saw a rescale (ell = 0) come back bit-exact;
        magnitudes beyond the float range come out as +-inf unless a clamp
        is given.
        """
        with np.errstate(over="ignore"):
            out = self.s * np.exp(self.ell)
        if clamp is not None:
            over = self.log_abs() > math.log(clamp)
            out[over] = np.sign(self.s[over]) * clamp
        return out


def hopping(pot: PeriodicPotential, lat: LatticeSpec, n: int) -> float:
    """Effective hopping h(n) = 1/d^2 - u(n)."""
    return lat.inv_step_sq - pot.u_at(n)


def validate_potential(pot: PeriodicPotential, lat: LatticeSpec) -> None:
    """Reject potentials whose hopping degenerates or changes sign."""
    h = [hopping(pot, lat, n) for n in range(pot.m)]
    for n, hn in enumerate(h):
        if abs(hn) < HOPPING_EPSILON:
            raise HoppingDegenerateError(
                f"hopping degenerate at site phase {n}: |1/d^2 - u| = {abs(hn):.3g} "
                f"< {HOPPING_EPSILON:g}"
            )
    if any(hn * h[0] < 0.0 for hn in h[1:]):
        raise HoppingDegenerateError(
            "effective hopping changes sign across the period"
        )


def step_coefficients(
    pot: PeriodicPotential, lat: LatticeSpec, energy: float, n: int
) -> StepCoefficients:
    """Coefficients of the forward step at site n."""
    inv = lat.inv_step_sq
    hn = inv - pot.u_at(n)
    if abs(hn) < HOPPING_EPSILON:
        raise HoppingDegenerateError(
            f"hopping degenerate at site {n}: |1/d^2 - u(n)| = {abs(hn):.3g}"
        )
    a = (2.0 * inv + pot.v_at(n) - energy) / hn
    b = -(inv - pot.u_at(n - 1)) / hn
    return StepCoefficients(a=a, b=b)


def propagate(
    pot: PeriodicPotential,
    lat: LatticeSpec,
    energy: float,
    ic: InitialCondition,
    n_sites: int,
) -> SolutionTrace:
    """Run the recurrence from (psi(0), psi(1)) out to site n_sites.

    The working pair is renormalised whenever its magnitude leaves
    [1/RESCALE_LIMIT, RESCALE_LIMIT]; the log-amplitude array absorbs the
    factors so reconstruction is exact up to rounding.
    """
    if n_sites < 2:
        raise ValueError(f"n_sites must be at least 2, got {n_sites}")
    validate_potential(pot, lat)
    inv = lat.inv_step_sq
    m = pot.m
    h = [inv - pot.u[r] for r in range(m)]
    alpha = [(2.0 * inv + pot.v[r] - energy) / h[r] for r in range(m)]
    beta = [-h[(r - 1) % m] / h[r] for r in range(m)]

    s = np.empty(n_sites + 1)
    ell = np.empty(n_sites + 1)
    p_prev, p_cur = float(ic.psi0), float(ic.psi1)
    offset = 0.0
    s[0], ell[0] = p_prev, 0.0
    s[1], ell[1] = p_cur, 0.0
    for n in range(1, n_sites):
        r = n % m
        p_next = alpha[r] * p_cur + beta[r] * p_prev
        mx = max(abs(p_cur), abs(p_next))
        if mx > RESCALE_LIMIT or 0.0 < mx < 1.0 / RESCALE_LIMIT:
            p_cur /= mx
            p_next /= mx
            offset += math.log(mx)
        s[n + 1] = p_next
        ell[n + 1] = offset
        p_prev, p_cur = p_cur, p_next
    return SolutionTrace(energy=energy, ic=ic, n_sites=n_sites, s=s, ell=ell)


def stagger(trace: SolutionTrace, lat: LatticeSpec = LatticeSpec()) -> SolutionTrace:
    """Flip the sign of every other sample: s'(n) = (-1)^n s(n).

    For the free lattice this maps a solution at E to a solution at the
    mirrored energy 4/d^2 - E with initial condition (psi0, -psi1); applying
    it twice restores the original trace.
    """
    signs = np.where(np.arange(trace.n_sites + 1) % 2 == 0, 1.0, -1.0)
    return SolutionTrace(
        energy=4.0 * lat.inv_step_sq - trace.energy,
        ic=InitialCondition(trace.ic.psi0, -trace.ic.psi1),
        n_sites=trace.n_sites,
        s=trace.s * signs,
        ell=trace.ell.copy(),
    )


def recurrence_residual(
    trace: SolutionTrace, pot: PeriodicPotential, lat: LatticeSpec
) -> float:
    """Largest relative violation of the three-term recurrence.

    Each interior triple is brought to a common scale before differencing,
    so the check is meaningful even where |psi| spans hundreds of decades.
    """
    worst = 0.0
    for n in range(1, trace.n_sites):
        c = step_coefficients(pot, lat, trace.energy, n)
        top = max(trace.ell[n - 1], trace.ell[n], trace.ell[n + 1])
        w1 = trace.s[n - 1] * math.exp(trace.ell[n - 1] - top)
        w2 = trace.s[n] * math.exp(trace.ell[n] - top)
        w3 = trace.s[n + 1] * math.exp(trace.ell[n + 1] - top)
        denom = max(abs(w1), abs(w2), abs(w3))
        if denom == 0.0:
            continue
        res = abs(w3 - c.a * w2 - c.b * w1) / denom
        worst = max(worst, res)
    return worst
