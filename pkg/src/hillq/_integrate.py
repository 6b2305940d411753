"""Fixed-step eighth-order integration of Hill-type equations.

The second-order equation ``y'' + p(t) y = 0`` is advanced as a first-order
linear system in (y, y').  Because the right-hand side is linear in the
state, one time step is exactly a 2x2 matrix acting on the state, and that
matrix depends only on the samples of ``p`` at the stage times.  The stage
matrices are assembled vectorised across all steps at once; only the final
(inherently sequential) chain of 2x2 products runs in a Python loop.

The tableau is the classical 11-stage eighth-order explicit Runge-Kutta
scheme of Cooper and Verner with exact sqrt(21) coefficients.  A fixed step
keeps results deterministic and lines the samples up with the power-of-two
grids used by the spectral side of the package.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["NODES", "A", "WEIGHTS", "stage_times", "step_matrices", "solve_hill", "chain"]

_S = math.sqrt(21.0)

#: Stage abscissae c_i.
NODES = np.array(
    [
        0.0,
        1 / 2,
        1 / 2,
        (7 + _S) / 14,
        (7 + _S) / 14,
        1 / 2,
        (7 - _S) / 14,
        (7 - _S) / 14,
        1 / 2,
        (7 + _S) / 14,
        1.0,
    ]
)

_A_ENTRIES = {
    (1, 0): 1 / 2,
    (2, 0): 1 / 4,
    (2, 1): 1 / 4,
    (3, 0): 1 / 7,
    (3, 1): (-7 - 3 * _S) / 98,
    (3, 2): (21 + 5 * _S) / 49,
    (4, 0): (11 + _S) / 84,
    (4, 2): (18 + 4 * _S) / 63,
    (4, 3): (21 - _S) / 252,
    (5, 0): (5 + _S) / 48,
    (5, 2): (9 + _S) / 36,
    (5, 3): (-231 + 14 * _S) / 360,
    (5, 4): (63 - 7 * _S) / 80,
    (6, 0): (10 - _S) / 42,
    (6, 2): (-432 + 92 * _S) / 315,
    (6, 3): (633 - 145 * _S) / 90,
    (6, 4): (-504 + 115 * _S) / 70,
    (6, 5): (63 - 13 * _S) / 35,
    (7, 0): 1 / 14,
    (7, 4): (14 - 3 * _S) / 126,
    (7, 5): (13 - 3 * _S) / 63,
    (7, 6): 1 / 9,
    (8, 0): 1 / 32,
    (8, 4): (91 - 21 * _S) / 576,
    (8, 5): 11 / 72,
    (8, 6): (-385 - 75 * _S) / 1152,
    (8, 7): (63 + 13 * _S) / 128,
    (9, 0): 1 / 14,
    (9, 4): 1 / 9,
    (9, 5): (-733 - 147 * _S) / 2205,
    (9, 6): (515 + 111 * _S) / 504,
    (9, 7): (-51 - 11 * _S) / 56,
    (9, 8): (132 + 28 * _S) / 245,
    (10, 4): (-42 + 7 * _S) / 18,
    (10, 5): (-18 + 28 * _S) / 45,
    (10, 6): (-273 - 53 * _S) / 72,
    (10, 7): (301 + 53 * _S) / 72,
    (10, 8): (28 - 28 * _S) / 45,
    (10, 9): (49 - 7 * _S) / 18,
}

#: Strictly lower-triangular stage coupling matrix a_ij.
A = np.zeros((11, 11))
for (_i, _j), _v in _A_ENTRIES.items():
    A[_i, _j] = _v

#: Quadrature weights b_i.
WEIGHTS = np.array([1 / 20, 0, 0, 0, 0, 0, 0, 49 / 180, 16 / 45, 49 / 180, 1 / 20])


def stage_times(t0: float, h: float, nsteps: int) -> np.ndarray:
    """All stage abscissae, shape (nsteps, 11)."""
    return t0 + h * (np.arange(nsteps)[:, None] + NODES[None, :])


def step_matrices(p_at_stages: np.ndarray, h: float) -> np.ndarray:
    """Per-step 2x2 update matrices for ``y'' = -p(t) y``.

    Parameters
    ----------
    p_at_stages : ndarray, shape (nsteps, 11)
        Real samples of ``p`` at the stage times of every step.
    h : float
        Step size.

    Returns
    -------
    ndarray, shape (nsteps, 2, 2)
        Matrices S_n with (y, y')(t_{n+1}) = S_n (y, y')(t_n).
    """
    p_at_stages = np.asarray(p_at_stages, dtype=float)
    n = p_at_stages.shape[0]
    # Stage matrices M_i with k_i = M_i (y, v); M_i = A(t_i) B_i where
    # B_i = I + h sum_j a_ij M_j and A(t) = [[0, 1], [-p(t), 0]].
    m00 = np.empty((11, n))
    m01 = np.empty((11, n))
    m10 = np.empty((11, n))
    m11 = np.empty((11, n))
    for i in range(11):
        b00 = np.ones(n)
        b01 = np.zeros(n)
        b10 = np.zeros(n)
        b11 = np.ones(n)
        for j in range(i):
            a = A[i, j]
            if a != 0.0:
                ha = h * a
                b00 = b00 + ha * m00[j]
                b01 = b01 + ha * m01[j]
                b10 = b10 + ha * m10[j]
                b11 = b11 + ha * m11[j]
        p_i = p_at_stages[:, i]
        m00[i] = b10
        m01[i] = b11
        m10[i] = -p_i * b00
        m11[i] = -p_i * b01
    s00 = np.ones(n)
    s01 = np.zeros(n)
    s10 = np.zeros(n)
    s11 = np.ones(n)
    for i in range(11):
        w = WEIGHTS[i]
        if w != 0.0:
            hw = h * w
            s00 = s00 + hw * m00[i]
            s01 = s01 + hw * m01[i]
            s10 = s10 + hw * m10[i]
            s11 = s11 + hw * m11[i]
    out = np.empty((n, 2, 2))
    out[:, 0, 0] = s00
    out[:, 0, 1] = s01
    out[:, 1, 0] = s10
    out[:, 1, 1] = s11
    return out


def _propagate(S: np.ndarray, y0: complex, v0: complex):
    y = complex(y0)
    v = complex(v0)
    ys = [y]
    vs = [v]
    rows = zip(S[:, 0, 0].tolist(), S[:, 0, 1].tolist(), S[:, 1, 0].tolist(), S[:, 1, 1].tolist())
    for s00, s01, s10, s11 in rows:
        y, v = s00 * y + s01 * v, s10 * y + s11 * v
        ys.append(y)
        vs.append(v)
    return np.array(ys), np.array(vs)


def chain(S: np.ndarray) -> np.ndarray:
    """Ordered product ``S_{n-1} ... S_1 S_0`` (fundamental matrix)."""
    f00, f01, f10, f11 = 1.0, 0.0, 0.0, 1.0
    rows = zip(S[:, 0, 0].tolist(), S[:, 0, 1].tolist(), S[:, 1, 0].tolist(), S[:, 1, 1].tolist())
    for s00, s01, s10, s11 in rows:
        f00, f01, f10, f11 = (
            s00 * f00 + s01 * f10,
            s00 * f01 + s01 * f11,
            s10 * f00 + s11 * f10,
            s10 * f01 + s11 * f11,
        )
    return np.array([[f00, f01], [f10, f11]])


def solve_hill(p, t0: float, h: float, nsteps: int, y0: complex = 1.0 + 0j, v0: complex = 0j):
    """Integrate ``y'' + p(t) y = 0`` with ``nsteps`` fixed steps of size ``h``.

    Parameters
    ----------
    p : callable
        Maps an ndarray of times to real values (vectorised).
    y0, v0 : complex
        Initial value and derivative.  Complex initial data integrates the
        real system on real and imaginary parts simultaneously, so a single
        call with (1, i) carries the full fundamental system.

    Returns
    -------
    times, y, v : ndarray
        Sample times (nsteps+1,) and the complex trajectory at them.
    """
    ts = stage_times(t0, h, nsteps)
    pv = np.asarray(p(ts.ravel()), dtype=float).reshape(nsteps, 11)
    S = step_matrices(pv, h)
    ys, vs = _propagate(S, y0, v0)
    times = t0 + h * np.arange(nsteps + 1)
    return times, ys, vs
