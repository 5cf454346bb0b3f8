"""Trajectory integration.

``integrate_flow`` wraps scipy's RK45 for single trajectories (dense output
and events). ``integrate_batch`` is a vectorized Dormand-Prince 5(4) with an
independent step-size controller per trajectory, so hundreds of initial
conditions can be pushed through a polynomial field in one numpy loop; a
trajectory that escapes simply stops while the others continue.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

RTOL = 1e-10
ATOL = 1e-12
ESCAPE_NORM = 1e8


class EscapeError(RuntimeError):
    def __init__(self, time: float, state):
        super().__init__(f"trajectory escaped (|x| > {ESCAPE_NORM:g}) at t = {time:.6g}")
        self.time = time
        self.state = np.asarray(state)


def integrate_flow(system, x0, t: float, *, dense: bool = False, rtol: float = RTOL, atol: float = ATOL):
    """Flow ``x0`` for time ``t`` (negative ``t`` integrates backward).

    Returns the final state, or ``(state, OdeSolution)`` when ``dense`` is set.
    """
    x0 = np.asarray(x0, dtype=float)
    if t == 0:
        return (x0.copy(), None) if dense else x0.copy()

    def escape(_t, x):
        return ESCAPE_NORM - np.linalg.norm(x)

    escape.terminal = True
    sol = solve_ivp(
        lambda _t, x: system.rhs(x),
        (0.0, t),
        x0,
        method="RK45",
        rtol=rtol,
        atol=atol,
        dense_output=dense,
        events=escape,
    )
    if sol.status == 1 or (sol.status == -1 and np.linalg.norm(sol.y[:, -1]) > 1e3):
        raise EscapeError(sol.t[-1], sol.y[:, -1])
    if sol.status != 0:
        raise RuntimeError(f"integration failed: {sol.message}")
    xf = sol.y[:, -1]
    return (xf, sol.sol) if dense else xf


# Dormand-Prince 5(4) tableau
_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_E = np.array([71 / 57600, 0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])


@dataclass
class BatchResult:
    states: np.ndarray  # (M, K, N) at each checkpoint
    times: np.ndarray  # (K,)
    escaped: np.ndarray  # (M,) bool
    escape_time: np.ndarray  # (M,) inf when not escaped

    @property
    def final(self) -> np.ndarray:
        return self.states[:, -1, :]


def integrate_batch(
    system,
    x0,
    times,
    *,
    rtol: float = RTOL,
    atol: float = ATOL,
    escape_norm: float = ESCAPE_NORM,
    max_steps: int = 200000,
) -> BatchResult:
    """Integrate many initial conditions, recording states at ``times``.

    ``times`` is an increasing sequence of nonnegative checkpoints (a scalar is
    treated as a single final time). Escaped trajectories carry NaN states
    from their escape time onward.
    """
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    times = np.atleast_1d(np.asarray(times, dtype=float))
    m, n = x0.shape
    k = len(times)
    out = np.full((m, k, n), np.nan)
    escaped = np.zeros(m, dtype=bool)
    t_esc = np.full(m, np.inf)

    t = np.zeros(m)
    y = x0.copy()
    nxt = np.zeros(m, dtype=int)
    # checkpoints at t = 0
    at0 = times[0] <= 0
    if at0:
        out[:, 0, :] = y
        nxt[:] = 1
    active = nxt < k

    f = system.rhs(y)
    scale = atol + rtol * np.abs(y)
    d0 = np.sqrt(np.mean((y / scale) ** 2, axis=1))
    d1 = np.sqrt(np.mean((f / scale) ** 2, axis=1))
    h = np.where((d0 < 1e-5) | (d1 < 1e-5), 1e-6, 0.01 * d0 / np.maximum(d1, 1e-300))
    h = np.minimum(h, np.max(times) if np.max(times) > 0 else 1.0)

    for _ in range(max_steps):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        yi, ti, fi, hi = y[idx], t[idx], f[idx], h[idx]
        target = times[nxt[idx]]
        hit = ti + hi >= target
        hi = np.where(hit, target - ti, hi)
        ks = [fi]
        for stage in range(1, 7):
            ys = yi + hi[:, None] * sum(a * kk for a, kk in zip(_A[stage], ks))
            ks.append(system.rhs(ys))
        ynew = yi + hi[:, None] * sum(b * kk for b, kk in zip(_B, ks) if b != 0)
        err = hi[:, None] * sum(e * kk for e, kk in zip(_E, ks) if e != 0)
        sc = atol + rtol * np.maximum(np.abs(yi), np.abs(ynew))
        with np.errstate(invalid="ignore", over="ignore"):
            en = np.sqrt(np.mean((err / sc) ** 2, axis=1))
        bad = ~np.isfinite(en) | ~np.all(np.isfinite(ynew), axis=1)
        ok = (en <= 1.0) & ~bad
        with np.errstate(divide="ignore", over="ignore"):
            fac = np.where(en == 0, 5.0, 0.9 * en ** (-0.2))
        fac = np.clip(np.where(bad, 0.2, fac), 0.2, 5.0)
        fac = np.where(ok, fac, np.minimum(fac, 1.0))

        acc = idx[ok]
        y[acc] = ynew[ok]
        t[acc] = ti[ok] + hi[ok]
        f[acc] = ks[6][ok]  # FSAL
        h[idx] = np.where(hit & ok, h[idx], hi * fac)
        h[idx] = np.where(hit & ok, np.maximum(h[idx], 1e-12), h[idx])

        # escape / stall checks
        norms = np.linalg.norm(y[idx], axis=1)
        gone = (norms > escape_norm) | (h[idx] < 1e-14 * np.maximum(1.0, np.abs(t[idx])))
        gone_idx = idx[gone]
        escaped[gone_idx] = True
        t_esc[gone_idx] = t[gone_idx]
        active[gone_idx] = False

        reached = idx[hit & ok & ~gone]
        for j in reached:
            out[j, nxt[j], :] = y[j]
            nxt[j] += 1
            if nxt[j] >= k:
                active[j] = False
    else:
        raise RuntimeError("integrate_batch exceeded max_steps")
    return BatchResult(out, times, escaped, t_esc)
