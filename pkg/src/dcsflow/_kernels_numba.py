"""Loop kernels compiled with numba; results match ``_kernels_numpy`` to rounding."""

from __future__ import annotations

import math

import numpy as np
from numba import njit

ACOSH_SLACK = 1e-12


@njit(cache=True, error_model="numpy")
def _corner(a, b, c):
    if a >= b + c:
        return 0
    if b >= a + c:
        return 1
    if c >= a + b:
        return 2
    return -1


@njit(cache=True, error_model="numpy")
def _area_term(a, b, c, hyperbolic):
    # sort descending
    if a < b:
        a, b = b, a
    if b < c:
        b, c = c, b
    if a < b:
        a, b = b, a
    d1 = a + (b + c)
    d2 = c - (a - b)
    d3 = c + (a - b)
    d4 = a + (b - c)
    if hyperbolic:
        prod = 4.0 * math.sinh(0.5 * d1) * math.sinh(0.5 * d2) * math.sinh(0.5 * d3) * math.sinh(0.5 * d4)
    else:
        prod = d1 * d2 * d3 * d4 / 4.0
    if prod < 0.0:
        prod = 0.0
    return math.sqrt(prod)


@njit(cache=True, error_model="numpy")
def degenerate_corner(sides):
    nf = sides.shape[0]
    out = np.empty(nf, dtype=np.int64)
    for f in range(nf):
        out[f] = _corner(sides[f, 0], sides[f, 1], sides[f, 2])
    return out


@njit(cache=True, error_model="numpy")
def face_angles(sides, hyperbolic):
    nf = sides.shape[0]
    angles = np.empty((nf, 3))
    corner = np.empty(nf, dtype=np.int64)
    for f in range(nf):
        s0, s1, s2 = sides[f, 0], sides[f, 1], sides[f, 2]
        cf = _corner(s0, s1, s2)
        corner[f] = cf
        if cf >= 0:
            for p in range(3):
                angles[f, p] = 0.0
            angles[f, cf] = math.pi
            continue
        y = _area_term(s0, s1, s2, hyperbolic)
        if not hyperbolic:
            y = 2.0 * y
        for p in range(3):
            sp = sides[f, p]
            sq = sides[f, (p + 1) % 3]
            sr = sides[f, (p + 2) % 3]
            if hyperbolic:
                num = math.cosh(sq) * math.cosh(sr) - math.cosh(sp)
            else:
                num = sq * sq + sr * sr - sp * sp
            angles[f, p] = math.atan2(y, num)
    return angles, corner


@njit(cache=True, error_model="numpy")
def face_jacobians(sides, dside_du, hyperbolic):
    nf = sides.shape[0]
    jac = np.zeros((nf, 3, 3))
    dtheta = np.empty((3, 3))
    for f in range(nf):
        s0, s1, s2 = sides[f, 0], sides[f, 1], sides[f, 2]
        if _corner(s0, s1, s2) >= 0:
            continue
        h = _area_term(s0, s1, s2, hyperbolic)
        for p in range(3):
            q = (p + 1) % 3
            r = (p + 2) % 3
            sp, sq, sr = sides[f, p], sides[f, q], sides[f, r]
            if hyperbolic:
                shp, shq, shr = math.sinh(sp), math.sinh(sq), math.sinh(sr)
                chp, chq, chr_ = math.cosh(sp), math.cosh(sq), math.cosh(sr)
                cos_p = (chq * chr_ - chp) / (shq * shr)
                dtheta[p, p] = shp / h
                dtheta[p, q] = -(chr_ * shq - cos_p * chq * shr) / h
                dtheta[p, r] = -(chq * shr - cos_p * chr_ * shq) / h
            else:
                cos_p = (sq * sq + sr * sr - sp * sp) / (2.0 * sq * sr)
                dtheta[p, p] = sp / h
                dtheta[p, q] = -(sq - sr * cos_p) / h
                dtheta[p, r] = -(sr - sq * cos_p) / h
        for p in range(3):
            for c in range(3):
                acc = 0.0
                for q in range(3):
                    acc += dtheta[p, q] * dside_du[f, q, c]
                jac[f, p, c] = acc
    return jac


@njit(cache=True, error_model="numpy")
def scatter_vertices(faces, values, n):
    out = np.zeros(n)
    for f in range(faces.shape[0]):
        for p in range(3):
            out[faces[f, p]] += values[f, p]
    return out


@njit(cache=True, error_model="numpy")
def assemble_blocks(faces, blocks, n):
    out = np.zeros((n, n))
    for f in range(faces.shape[0]):
        for p in range(3):
            for c in range(3):
                out[faces[f, p], faces[f, c]] += blocks[f, p, c]
    return out


@njit(cache=True, error_model="numpy")
def edge_lengths(ei, ej, eps, eta, f, hyperbolic):
    ne = ei.shape[0]
    out = np.empty(ne)
    first = -1
    for e in range(ne):
        fi, fj = f[ei[e]], f[ej[e]]
        if hyperbolic:
            root = math.sqrt((1.0 + eps[ei[e]] * math.exp(2 * fi)) * (1.0 + eps[ej[e]] * math.exp(2 * fj)))
            arg = root + eta[e] * math.exp(fi + fj)
            if not arg >= 1.0 - ACOSH_SLACK:
                if first < 0:
                    first = e
            out[e] = math.acosh(max(arg, 1.0))
        else:
            d = fi - fj
            inner = eps[ei[e]] * math.exp(d) + eps[ej[e]] * math.exp(-d) + 2.0 * eta[e]
            if not inner > 0.0:
                if first < 0:
                    first = e
                out[e] = np.nan
            else:
                out[e] = math.exp(0.5 * (fi + fj)) * math.sqrt(inner)
    return out, first


@njit(cache=True, error_model="numpy")
def edge_length_derivatives(ei, ej, eps, eta, f, lengths, hyperbolic):
    ne = ei.shape[0]
    out = np.empty((ne, 2))
    for e in range(ne):
        fi, fj = f[ei[e]], f[ej[e]]
        cross = eta[e] * math.exp(fi + fj)
        ai = eps[ei[e]] * math.exp(2 * fi)
        aj = eps[ej[e]] * math.exp(2 * fj)
        if hyperbolic:
            root = math.sqrt((1.0 + ai) * (1.0 + aj))
            sh = math.sinh(lengths[e])
            out[e, 0] = (ai * (1.0 + aj) / root + cross) / sh
            out[e, 1] = (aj * (1.0 + ai) / root + cross) / sh
        else:
            out[e, 0] = (ai + cross) / lengths[e]
            out[e, 1] = (aj + cross) / lengths[e]
    return out


@njit(cache=True, error_model="numpy")
def side_derivatives(faces, face_sides, side_endpoint, dl, dfu):
    nf = faces.shape[0]
    out = np.zeros((nf, 3, 3))
    for f in range(nf):
        for p in range(3):
            e = face_sides[f, p]
            for c in range(3):
                if c != p:
                    out[f, p, c] = dl[e, side_endpoint[f, p, c]] * dfu[faces[f, c]]
    return out
