"""Vectorised numpy face kernels (reference path, also the no-numba fallback).

Face convention: ``sides[f, p]`` is the length of the side opposite corner
``p`` of face ``f``. Angles use atan2 of a Heron-type area term so that
near-degenerate triangles keep full relative precision.
"""

from __future__ import annotations

import numpy as np

ACOSH_SLACK = 1e-12


def _sorted_slacks(sides):
    # a >= b >= c per row; Kahan-style ordering keeps the slack terms exact-ish
    s = np.sort(sides, axis=1)[:, ::-1]
    a, b, c = s[:, 0], s[:, 1], s[:, 2]
    return a, b, c


def degenerate_corner(sides: np.ndarray) -> np.ndarray:
    """Corner index opposite a side that is >= the sum of the others, else -1."""
    a, b, c = sides[:, 0], sides[:, 1], sides[:, 2]
    out = np.full(len(sides), -1, dtype=np.int64)
    out[c >= a + b] = 2
    out[b >= a + c] = 1
    out[a >= b + c] = 0
    return out


def _area_term(sides, hyperbolic):
    """2*Area (Euclidean) or sqrt of the Gram determinant (hyperbolic)."""
    a, b, c = _sorted_slacks(sides)
    d1 = a + (b + c)
    d2 = c - (a - b)
    d3 = c + (a - b)
    d4 = a + (b - c)
    if hyperbolic:
        prod = 4.0 * np.sinh(d1 / 2) * np.sinh(d2 / 2) * np.sinh(d3 / 2) * np.sinh(d4 / 2)
    else:
        prod = d1 * d2 * d3 * d4 / 4.0
    return np.sqrt(np.maximum(prod, 0.0))


def _cos_numerators(sides, hyperbolic):
    """Per corner: numerator of cos(theta_p) (the denominator is positive)."""
    out = np.empty_like(sides)
    for p in range(3):
        q, r = (p + 1) % 3, (p + 2) % 3
        if hyperbolic:
            out[:, p] = np.cosh(sides[:, q]) * np.cosh(sides[:, r]) - np.cosh(sides[:, p])
        else:
            out[:, p] = sides[:, q] ** 2 + sides[:, r] ** 2 - sides[:, p] ** 2
    return out


def face_angles(sides: np.ndarray, hyperbolic: bool):
    """Extended inner angles and the degenerate-corner marker for every face."""
    sides = np.asarray(sides, dtype=np.float64)
    corner = degenerate_corner(sides)
    area = _area_term(sides, hyperbolic)
    num = _cos_numerators(sides, hyperbolic)
    # Euclidean: tan = 4A / (b^2 + c^2 - a^2) = 2*H / num with H = 2A
    y = area if hyperbolic else 2.0 * area
    angles = np.arctan2(y[:, None], num)
    bad = corner >= 0
    if np.any(bad):
        angles[bad] = 0.0
        angles[bad, corner[bad]] = np.pi
    return angles, corner


def face_jacobians(sides: np.ndarray, dside_du: np.ndarray, hyperbolic: bool) -> np.ndarray:
    """d(theta_i, theta_j, theta_k)/d(u_i, u_j, u_k) per face; zero on degenerate faces."""
    sides = np.asarray(sides, dtype=np.float64)
    nf = len(sides)
    corner = degenerate_corner(sides)
    area = _area_term(sides, hyperbolic)
    ok = corner < 0
    denom = np.where(ok, area, 1.0)
    dtheta = np.zeros((nf, 3, 3))
    if hyperbolic:
        sh, ch = np.sinh(sides), np.cosh(sides)
    for p in range(3):
        q, r = (p + 1) % 3, (p + 2) % 3
        if hyperbolic:
            cos_p = (ch[:, q] * ch[:, r] - ch[:, p]) / (sh[:, q] * sh[:, r])
            dtheta[:, p, p] = sh[:, p] / denom
            dtheta[:, p, q] = -(ch[:, r] * sh[:, q] - cos_p * ch[:, q] * sh[:, r]) / denom
            dtheta[:, p, r] = -(ch[:, q] * sh[:, r] - cos_p * ch[:, r] * sh[:, q]) / denom
        else:
            h = denom  # 2*Area
            s = sides
            cos_p = (s[:, q] ** 2 + s[:, r] ** 2 - s[:, p] ** 2) / (2.0 * s[:, q] * s[:, r])
            dtheta[:, p, p] = s[:, p] / h
            dtheta[:, p, q] = -(s[:, q] - s[:, r] * cos_p) / h
            dtheta[:, p, r] = -(s[:, r] - s[:, q] * cos_p) / h
    jac = np.einsum("fpq,fqc->fpc", dtheta, dside_du)
    jac[~ok] = 0.0
    return jac


def scatter_vertices(faces: np.ndarray, values: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros(n)
    np.add.at(out, faces.ravel(), values.ravel())
    return out


def assemble_blocks(faces: np.ndarray, blocks: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros((n, n))
    rows = np.repeat(faces, 3, axis=1).ravel()
    cols = np.tile(faces, (1, 3)).ravel()
    np.add.at(out, (rows, cols), blocks.reshape(len(faces), 9).ravel())
    return out


def edge_lengths(ei, ej, eps, eta, f, hyperbolic: bool):
    """Edge lengths and the index of the first edge outside the formula's domain (-1 if none)."""
    fi, fj = f[ei], f[ej]
    if hyperbolic:
        root = np.sqrt((1.0 + eps[ei] * np.exp(2 * fi)) * (1.0 + eps[ej] * np.exp(2 * fj)))
        arg = root + eta * np.exp(fi + fj)
        bad = ~(arg >= 1.0 - ACOSH_SLACK)
        lengths = np.arccosh(np.maximum(arg, 1.0))
    else:
        d = fi - fj
        inner = eps[ei] * np.exp(d) + eps[ej] * np.exp(-d) + 2.0 * eta
        bad = ~(inner > 0)
        lengths = np.exp(0.5 * (fi + fj)) * np.sqrt(np.where(bad, np.nan, inner))
    first = int(np.argmax(bad)) if np.any(bad) else -1
    return lengths, first


def edge_length_derivatives(ei, ej, eps, eta, f, lengths, hyperbolic: bool):
    """``out[e, 0] = dl_e/df_i`` and ``out[e, 1] = dl_e/df_j``."""
    fi, fj = f[ei], f[ej]
    cross = eta * np.exp(fi + fj)
    ai = eps[ei] * np.exp(2 * fi)
    aj = eps[ej] * np.exp(2 * fj)
    out = np.empty((len(ei), 2))
    if hyperbolic:
        root = np.sqrt((1.0 + ai) * (1.0 + aj))
        sh = np.sinh(lengths)
        out[:, 0] = (ai * (1.0 + aj) / root + cross) / sh
        out[:, 1] = (aj * (1.0 + ai) / root + cross) / sh
    else:
        out[:, 0] = (ai + cross) / lengths
        out[:, 1] = (aj + cross) / lengths
    return out


def side_derivatives(faces, face_sides, side_endpoint, dl, dfu):
    """``[f, p, c]`` = d(side p)/d(u at corner c)."""
    nf = len(faces)
    out = np.zeros((nf, 3, 3))
    rows = np.arange(nf)
    for p in range(3):
        e = face_sides[:, p]
        for c in range(3):
            if c != p:
                out[:, p, c] = dl[e, side_endpoint[rows, p, c]] * dfu[faces[:, c]]
    return out
