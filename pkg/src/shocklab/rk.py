"""Three-stage strong-stability-preserving Runge-Kutta (SSP-RK3).

Fields use the Shu-Osher form
``y_k = A[k] * y_0 + B[k] * (y_{k-1} + dt * f(t + C[k] dt, y_{k-1}))``.
Scalars (the shift) use the equivalent increment form
``y_1 = y_0 + dt k_1``, ``y_2 = y_0 + dt (k_1 + k_2) / 4`` and
``y_0 + dt (k_1 + k_2 + 4 k_3) / 6``, which keeps a constant right-hand
side exact.  ``WEIGHTS`` are the Butcher weights of the three evaluations,
also used to integrate boundary fluxes consistently with the update.
"""
import math

A = (0.0, 0.75, 1.0 / 3.0)
B = (1.0, 0.25, 2.0 / 3.0)
C = (0.0, 1.0, 0.5)
WEIGHTS = (1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0)
ORDER = 3


def stage_input(y0, ks, dt):
    """Argument of the next evaluation given the increments so far."""
    n = len(ks)
    if n == 0:
        return y0
    if n == 1:
        return y0 + dt * ks[0]
    if n == 2:
        return y0 + dt * (ks[0] + ks[1]) / 4.0
    return y0 + dt * (ks[0] + ks[1] + 4.0 * ks[2]) / 6.0


def ssprk3_scalar(f, t, y, dt):
    """One step for a scalar ODE y' = f(t, y)."""
    ks = []
    for c in C:
        tk = t + c * dt
        fk = f(tk, stage_input(y, ks, dt))
        if not math.isfinite(fk):
            raise FloatingPointError(f"non-finite right-hand side {fk} at t={tk}")
        ks.append(fk)
    return stage_input(y, ks, dt)
