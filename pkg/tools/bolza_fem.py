"""Laplace-Beltrami eigenvalues of the Bolza surface by P2 finite elements.

Offline generator for ``src/magtrace/data/bolza_laplace.txt``.  The surface is
the regular hyperbolic octagon (interior angles pi/4) in the Poincare disk with
opposite sides glued.  The disk metric is conformal, so the stiffness matrix is
the Euclidean one and only the mass matrix carries the weight 4/(1-|w|^2)^2.
Elements are isoparametric P2 triangles whose mid-edge nodes sit at hyperbolic
midpoints; boundary nodes therefore lie exactly on the geodesic sides and are
matched across the side pairings.

Usage::

    python tools/bolza_fem.py --n-theta 40 --lambda-max 260 --out bolza.txt
"""
from __future__ import annotations

import argparse
import math
import sys
import time

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.spatial import cKDTree

R_IN = math.acosh(1.0 + math.sqrt(2.0))          # inradius of the octagon
PAIR_A = 1.0 + math.sqrt(2.0)
PAIR_B = math.sqrt(2.0 + 2.0 * math.sqrt(2.0))

# Dunavant degree-6 rule (12 points), weights normalised to sum 1.
_DUN = [
    (0.116786275726379, (0.501426509658179, 0.249286745170910, 0.249286745170910)),
    (0.050844906370207, (0.873821971016996, 0.063089014491502, 0.063089014491502)),
    (0.082851075618374, (0.053145049844817, 0.310352451033784, 0.636502499121399)),
]


def _quadrature():
    pts, wts = [], []
    for w, (a, b, c) in _DUN:
        perms = {(a, b, c), (b, c, a), (c, a, b), (a, c, b), (c, b, a), (b, a, c)}
        for p in sorted(perms):
            pts.append(p)
            wts.append(w)
    return np.array(pts), np.array(wts)


def _to_hyperboloid(w):
    r2 = np.abs(w) ** 2
    return (1 + r2) / (1 - r2), 2 * w / (1 - r2)


def _from_hyperboloid(t, x):
    return x / (1 + t)


def hyperbolic_midpoint(w1, w2):
    t1, x1 = _to_hyperboloid(w1)
    t2, x2 = _to_hyperboloid(w2)
    t, x = t1 + t2, x1 + x2
    s = np.sqrt(t * t - np.abs(x) ** 2)
    return _from_hyperboloid(t / s, x / s)


def fundamental_triangle(n_theta, n_sigma):
    """Polar grid on the triangle (centre, side midpoint, vertex)."""
    th = np.linspace(0.0, math.pi / 8, n_theta + 1)
    rho_max = np.arctanh(math.tanh(R_IN) / np.cos(th))
    pts = [0j]
    index = {}
    for i in range(1, n_sigma + 1):
        for j in range(n_theta + 1):
            rho = i / n_sigma * rho_max[j]
            index[i, j] = len(pts)
            pts.append(math.tanh(rho / 2) * np.exp(1j * th[j]))
    tris = []
    for j in range(n_theta):
        tris.append((0, index[1, j], index[1, j + 1]))
    for i in range(1, n_sigma):
        for j in range(n_theta):
            a, b = index[i, j], index[i, j + 1]
            c, d = index[i + 1, j], index[i + 1, j + 1]
            tris.append((a, c, d))
            tris.append((a, d, b))
    return np.array(pts), np.array(tris)


def octagon_mesh(n_theta, n_sigma):
    p0, t0 = fundamental_triangle(n_theta, n_sigma)
    allp, allt = [], []
    off = 0
    for k in range(8):
        rot = np.exp(1j * k * math.pi / 4)
        for mirror in (False, True):
            p = np.conj(p0) if mirror else p0
            t = t0[:, ::-1] if mirror else t0
            allp.append(p * rot)
            allt.append(t + off)
            off += len(p0)
    pts = np.concatenate(allp)
    tris = np.concatenate(allt)
    # merge coincident nodes on the mirror lines
    tree = cKDTree(np.c_[pts.real, pts.imag])
    pairs = tree.query_pairs(1e-11, output_type="ndarray")
    parent = np.arange(len(pts))
    for a, b in pairs:
        ra, rb = _find(parent, a), _find(parent, b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    roots = np.array([_find(parent, i) for i in range(len(pts))])
    uniq, inv = np.unique(roots, return_inverse=True)
    return pts[uniq], inv[tris]


def _find(parent, i):
    while parent[i] != i:
        parent[i] = parent[parent[i]]
        i = parent[i]
    return i


def p2_nodes(pts, tris):
    edges = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    edges.sort(axis=1)
    uedges, inv = np.unique(edges, axis=0, return_inverse=True)
    inv = inv.reshape(3, -1).T + len(pts)
    mids = hyperbolic_midpoint(pts[uedges[:, 0]], pts[uedges[:, 1]])
    nodes = np.concatenate([pts, mids])
    elems = np.c_[tris, inv]          # v0 v1 v2 m01 m12 m20
    return nodes, elems


def pairing_maps():
    """Disk Mobius maps g_k (k=0..3) and inverses as (alpha, beta) pairs."""
    maps = []
    for k in range(4):
        beta = PAIR_B * np.exp(1j * k * math.pi / 4)
        maps.append((PAIR_A, beta))
        maps.append((PAIR_A, -beta))
    return maps


def identify(nodes, tol=1e-8):
    tree = cKDTree(np.c_[nodes.real, nodes.imag])
    parent = np.arange(len(nodes))
    boundary = np.where(np.abs(nodes) > 0.5)[0]
    for alpha, beta in pairing_maps():
        w = nodes[boundary]
        img = (alpha * w + beta) / (np.conj(beta) * w + alpha)
        inside = np.abs(img) < 1
        d, j = tree.query(np.c_[img.real, img.imag])
        for a, b, ok, dist in zip(boundary, j, inside, d):
            if ok and dist < tol:
                ra, rb = _find(parent, a), _find(parent, b)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
    roots = np.array([_find(parent, i) for i in range(len(nodes))])
    _, dof = np.unique(roots, return_inverse=True)
    return dof


def _shape(bary):
    l1, l2, l3 = bary
    n = np.array([l1 * (2 * l1 - 1), l2 * (2 * l2 - 1), l3 * (2 * l3 - 1),
                  4 * l1 * l2, 4 * l2 * l3, 4 * l3 * l1])
    # derivatives w.r.t. (xi, eta) with l2 = xi, l3 = eta, l1 = 1 - xi - eta
    dl = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    dn = np.array([
        (4 * l1 - 1) * dl[0], (4 * l2 - 1) * dl[1], (4 * l3 - 1) * dl[2],
        4 * (l1 * dl[1] + l2 * dl[0]),
        4 * (l2 * dl[2] + l3 * dl[1]),
        4 * (l3 * dl[0] + l1 * dl[2]),
    ])
    return n, dn


def assemble(nodes, elems):
    qp, qw = _quadrature()
    xy = np.stack([nodes.real[elems], nodes.imag[elems]], axis=-1)  # (E, 6, 2)
    ne = len(elems)
    ke = np.zeros((ne, 6, 6))
    me = np.zeros((ne, 6, 6))
    area = 0.0
    for bary, w in zip(qp, qw):
        n, dn = _shape(bary)
        jac = np.einsum("eai,aj->eij", xy, dn)              # dx_i/dxi_j
        det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
        inv = np.empty_like(jac)
        inv[:, 0, 0] = jac[:, 1, 1] / det
        inv[:, 1, 1] = jac[:, 0, 0] / det
        inv[:, 0, 1] = -jac[:, 0, 1] / det
        inv[:, 1, 0] = -jac[:, 1, 0] / det
        grad = np.einsum("aj,eji->eai", dn, inv)
        x = np.einsum("eai,a->ei", xy, n)
        r2 = (x ** 2).sum(axis=1)
        rho = 4.0 / (1.0 - r2) ** 2
        vol = 0.5 * w * np.abs(det)
        ke += vol[:, None, None] * np.einsum("eai,ebi->eab", grad, grad)
        me += (vol * rho)[:, None, None] * np.outer(n, n)[None]
        area += float((vol * rho).sum())
    return ke, me, area


def global_matrices(n_theta, n_sigma):
    pts, tris = octagon_mesh(n_theta, n_sigma)
    nodes, elems = p2_nodes(pts, tris)
    dof = identify(nodes)
    ke, me, area = assemble(nodes, elems)
    g = dof[elems]
    rows = np.repeat(g, 6, axis=1).ravel()
    cols = np.tile(g, (1, 6)).ravel()
    n = dof.max() + 1
    K = sp.csr_matrix((ke.ravel(), (rows, cols)), shape=(n, n))
    M = sp.csr_matrix((me.ravel(), (rows, cols)), shape=(n, n))
    rot = rotation_permutation(nodes, dof)
    return K, M, rot, area


def rotation_permutation(nodes, dof):
    """DOF permutation induced by the rotation w -> exp(i pi/4) w."""
    tree = cKDTree(np.c_[nodes.real, nodes.imag])
    img = nodes * np.exp(1j * math.pi / 4)
    d, j = tree.query(np.c_[img.real, img.imag])
    if d.max() > 1e-9:
        raise RuntimeError("mesh is not invariant under the rotation")
    n = dof.max() + 1
    perm = np.full(n, -1)
    perm[dof] = dof[j]
    return perm


def symmetry_basis(rot, m):
    """Columns spanning functions with u(r w) = exp(i pi m / 4) u(w)."""
    n = len(rot)
    omega = np.exp(1j * math.pi * m / 4)
    seen = np.zeros(n, bool)
    rows, cols, vals = [], [], []
    col = 0
    for d in range(n):
        if seen[d]:
            continue
        orbit = [d]
        while True:
            nxt = rot[orbit[-1]]
            if nxt == d:
                break
            orbit.append(nxt)
        seen[orbit] = True
        period = len(orbit)
        # u(r^j w) = omega^j u(w); consistency needs omega^period == 1
        if abs(omega ** period - 1) > 1e-9:
            continue
        # the value at r^j(d) is omega^{-j} times the value at d
        coeff = omega ** (-np.arange(period))
        coeff /= math.sqrt(period)
        rows.extend(orbit)
        cols.extend([col] * period)
        vals.extend(coeff)
        col += 1
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, col))


def sector_eigenvalues(K, M, lam_max, batch=60):
    found = []
    sigma = -0.3
    while True:
        k = min(batch, K.shape[0] - 2)
        vals = np.sort(spla.eigsh(K, k=k, M=M, sigma=sigma, which="LM",
                                  return_eigenvectors=False).real)
        if vals[-1] >= lam_max or k < batch:
            found.extend(vals[vals > (found[-1] + 1e-12 if found else -np.inf)])
            break
        cut = vals[len(vals) * 3 // 4]
        new = vals[vals < cut]
        if found:
            new = new[new > found[-1] + 1e-12]
        found.extend(new)
        sigma = cut - 1e-8
    found = np.array(found)
    return found[found <= lam_max]


def bolza_eigenvalues(n_theta, sigma_ratio, lam_max, log=sys.stderr):
    t0 = time.time()
    K, M, rot, area = global_matrices(n_theta, int(round(sigma_ratio * n_theta)))
    print(f"n_theta={n_theta} dofs={K.shape[0]} area={area:.12f} "
          f"({time.time()-t0:.1f}s)", file=log)
    out = []
    for m in range(5):
        B = symmetry_basis(rot, m)
        Km = (B.conj().T @ K @ B).tocsc()
        Mm = (B.conj().T @ M @ B).tocsc()
        if m == 0 or m == 4:
            Km, Mm = Km.real, Mm.real
        vals = sector_eigenvalues(Km, Mm, lam_max)
        out.extend((v, m) for v in vals)
        print(f"  m={m}: {Km.shape[0]} dofs, {len(vals)} eigenvalues "
              f"({time.time()-t0:.1f}s)", file=log)
    return np.array(sorted(out))


def expand(sectors):
    """Full multiplicity list from (lambda, m) rows; m and 8-m coincide."""
    lam = []
    for v, m in sectors:
        lam.extend([v] * (1 if m in (0, 4) else 2))
    lam = np.sort(np.array(lam))
    lam[0] = max(lam[0], 0.0)
    return lam


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-theta", type=int, default=24)
    ap.add_argument("--sigma-ratio", type=float, default=1.6)
    ap.add_argument("--lambda-max", type=float, default=30.0)
    ap.add_argument("--out")
    args = ap.parse_args(argv)
    rows = bolza_eigenvalues(args.n_theta, args.sigma_ratio, args.lambda_max)
    lam = expand(rows)
    if args.out:
        np.savetxt(args.out, rows, fmt=["%.12f", "%d"])
    else:
        print("\n".join(f"{x:.10f}" for x in lam[:30]))


if __name__ == "__main__":
    main()
