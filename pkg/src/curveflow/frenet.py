"""Moving frames along non-null curves under the index-1 metric.

The frame comes from Gram-Schmidt orthogonalization of the curve's
derivative vectors with the indefinite inner product.  Curvatures are
extracted two ways:

* ``FrenetData.curvatures`` uses the residual-norm ratios of the
  orthogonalization itself, k_i = |w_{i+1}| / (v |w_i|).  On jet-sampled
  curves these are exact to rounding, and everything downstream (flow
  synthesis, verification) consumes them.
* ``stencil_curvatures`` projects the stencil derivative of each frame
  vector onto its successor, k_i = e_i <dV_i/ds, V_{i+1}>.  This exercises
  the same operator the flow verifier uses and carries its second-order
  error; it is reported alongside the exact values.

If the curve lies in a hyperplane, the final orthogonalization residual
vanishes.  When that happens for exactly the last vector and the metric
complement of the partial frame is one-dimensional and non-null, the frame
is completed with the unique unit vector that makes the basis positively
oriented (and the last curvature is zero).  Any other breakdown raises
NonGenericCurveError.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curvekit import SampledCurve, d_ds
from .errors import NonGenericCurveError
from .minkowski import inner_many, metric_signs

GENERIC_RTOL = 1e-7


@dataclass(frozen=True)
class FrenetData:
    """Per-sample frame vectors, causal signs, and curvatures.

    ``frame[i]`` is the (N, n) grid of the (i+1)-th frame vector;
    ``signs[i]`` its constant causal sign; ``curvatures[i]`` the grid of
    the (i+1)-th curvature.
    """

    frame: np.ndarray  # (m, N, n)
    signs: np.ndarray  # (m,) of +-1
    curvatures: np.ndarray  # (m-1, N)
    completed_last: bool = False

    @property
    def num_vectors(self) -> int:
        return self.frame.shape[0]


def frenet_apparatus(c: SampledCurve, num_vectors: int | None = None) -> FrenetData:
    """Orthogonalize the curve's derivative vectors into a moving frame.

    ``num_vectors`` may be lowered below the ambient dimension for curves
    that are straight (or otherwise non-generic) in the trailing
    directions; by default the full frame is built.
    """
    n = c.n
    m = n if num_vectors is None else int(num_vectors)
    if not 1 <= m <= n:
        raise ValueError(f"num_vectors must be in [1, {n}], got {m}")
    if c.deriv_order < m:
        raise ValueError(f"curve carries derivatives up to order {c.deriv_order}, need {m}")

    N = c.samples
    frame = np.empty((m, N, n))
    signs = np.empty(m, dtype=int)
    resid_norms = np.empty((m, N))
    completed = False

    for i in range(1, m + 1):
        w = c.derivs[i].copy()
        for j in range(i - 1):
            w -= signs[j] * inner_many(w, frame[j])[:, None] * frame[j]
        q = inner_many(w, w)
        nw = np.sqrt(np.abs(q))
        scale = np.sqrt(np.einsum("ij,ij->i", c.derivs[i], c.derivs[i]))
        small = nw <= GENERIC_RTOL * np.maximum(1e-300, scale)
        if np.all(small) and i == m == n:
            frame[i - 1], signs[i - 1] = _complete_frame(frame[:i - 1], signs[:i - 1])
            resid_norms[i - 1] = 0.0
            completed = True
            break
        if np.any(small):
            k = int(np.argmax(small))
            raise NonGenericCurveError(
                f"orthogonalization residual {i} vanishes or is null at sample {k} "
                f"(|w|={nw[k]:.3e}); the curve is not generic in {n} dimensions",
                index=i,
                sample=k,
            )
        sgn = np.where(q > 0, 1, -1)
        if np.any(sgn != sgn[0]):
            k = int(np.argmax(sgn != sgn[0]))
            raise NonGenericCurveError(
                f"causal sign of frame vector {i} flips at sample {k}", index=i, sample=k
            )
        frame[i - 1] = w / nw[:, None]
        signs[i - 1] = int(sgn[0])
        resid_norms[i - 1] = nw

    if signs[0] != c.sign0:
        raise NonGenericCurveError(
            "tangent sign disagrees with the curve's causal character", index=1, sample=0
        )
    negatives = int(np.count_nonzero(signs == -1))
    if negatives > 1 or (m == n and negatives != 1):
        raise NonGenericCurveError(
            f"frame signature is not index-1 ({negatives} timelike vectors)", index=m, sample=0
        )

    # k_i = |w_{i+1}| / (v |w_i|), with v taken from the orthogonalization
    # data itself (|w_1|): on stencil-backed curves the common stencil bias
    # of the |w| factors then cancels instead of leaking into k.
    curvatures = np.empty((m - 1, N))
    for i in range(1, m):
        curvatures[i - 1] = resid_norms[i] / (resid_norms[0] * resid_norms[i - 1])
    if completed and m >= 2:
        curvatures[m - 2] = 0.0
    return FrenetData(frame=frame, signs=signs, curvatures=curvatures, completed_last=completed)


def _complete_frame(partial: np.ndarray, signs: np.ndarray):
    """Unit metric-orthogonal completion of an (n-1)-vector frame.

    Returns the completing grid of vectors and its causal sign; the sign of
    each vector is fixed by requiring a positively oriented basis.
    """
    m1, N, n = partial.shape
    g = metric_signs(n)
    rows = np.transpose(partial * g, (1, 0, 2))  # (N, n-1, n); <V_j, z> = row_j . z
    # Generalized cross product of the constraint rows (cofactor expansion).
    if n == 3:
        z = np.cross(rows[:, 0, :], rows[:, 1, :])
    else:
        z = np.empty((N, n))
        for k in range(n):
            minor = np.delete(rows, k, axis=2)
            z[:, k] = (-1.0) ** k * np.linalg.det(minor)
    q = inner_many(z, z)
    euclid = np.einsum("ij,ij->i", z, z)
    bad = np.abs(q) <= GENERIC_RTOL * np.maximum(1e-300, euclid)
    if np.any(bad):
        k = int(np.argmax(bad))
        raise NonGenericCurveError(
            f"orthogonal complement is null at sample {k}; no unit completion exists",
            index=n,
            sample=k,
        )
    z = z / np.sqrt(np.abs(q))[:, None]
    basis = np.concatenate([partial, z[None]], axis=0)  # (n, N, n)
    det = np.linalg.det(np.transpose(basis, (1, 0, 2)))
    z = np.where(det[:, None] < 0, -z, z)
    q0 = inner_many(z, z)
    sgn = np.where(q0 > 0, 1, -1)
    if np.any(sgn != sgn[0]):
        k = int(np.argmax(sgn != sgn[0]))
        raise NonGenericCurveError(
            f"causal sign of the completion flips at sample {k}", index=n, sample=k
        )
    return z, int(sgn[0])


def stencil_curvatures(c: SampledCurve, fd: FrenetData) -> np.ndarray:
    """Curvatures k_i = e_i <dV_i/ds, V_{i+1}> via the difference operator."""
    m = fd.num_vectors
    out = np.empty((m - 1, c.samples))
    for i in range(1, m):
        dv = d_ds(fd.frame[i - 1], c)
        out[i - 1] = fd.signs[i] * inner_many(dv, fd.frame[i])
    return out


def frenet_residuals(c: SampledCurve, fd: FrenetData) -> np.ndarray:
    """Per-sample Euclidean norms of dV_i/ds minus the frame-system RHS.

    RHS_1 = k_1 V_2; RHS_i = -e_{i-2} e_{i-1} k_{i-1} V_{i-1} + k_i V_{i+1}
    for 1 < i < m; RHS_m keeps only the first term.  Returns an (m, N)
    array.
    """
    m = fd.num_vectors
    k = fd.curvatures
    e = fd.signs
    V = fd.frame
    out = np.empty((m, c.samples))
    for i in range(1, m + 1):
        dv = d_ds(V[i - 1], c)
        rhs = np.zeros_like(dv)
        if i == 1:
            if m >= 2:
                rhs += k[0][:, None] * V[1]
        else:
            rhs -= (e[i - 2] * e[i - 1]) * k[i - 2][:, None] * V[i - 2]
            if i < m:
                rhs += k[i - 1][:, None] * V[i]
        out[i - 1] = np.sqrt(np.einsum("ij,ij->i", dv - rhs, dv - rhs))
    return out


def orthonormality_residual(fd: FrenetData) -> float:
    """max |<V_i, V_j> - e_{i-1} delta_ij| over samples and index pairs."""
    m = fd.num_vectors
    worst = 0.0
    for i in range(m):
        for j in range(i, m):
            g = inner_many(fd.frame[i], fd.frame[j])
            target = float(fd.signs[i]) if i == j else 0.0
            worst = max(worst, float(np.max(np.abs(g - target))))
    return worst
