"""Cocompact Fuchsian groups: ingestion, ball enumeration, conjugacy classes,
primitivity and the length spectrum.

Enumeration strategy
--------------------
1. A Dirichlet polygon centered at i is built from short words (halfplanes are
   linear in Klein coordinates). Its area is compared with 4 pi (g - 1); when
   they agree the polygon is the true fundamental domain and its covering
   radius rho is certified.
2. The orbit ball {gamma : d(i, gamma i) <= R} is enumerated exactly by a
   breadth-first search over the polygon's side pairings, expanding only
   elements with d(i, gamma i) <= R + rho.
3. Every class of length <= L has a representative whose axis passes within
   rho of i, hence with cosh d(i, h i) <= cosh^2 rho cosh L - sinh^2 rho.
4. Candidates are bucketed by trace; conjugacy inside a bucket is decided by
   conjugating with all ball elements of displacement <= 2 rho + L/2, which
   is a complete test.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.spatial import HalfspaceIntersection, cKDTree

from .errors import DataFormatError, DomainError, EnumerationError
from .geometry import DET_TOL, EPS, MoebiusElement

RELATION_TOL = 1e-8
TRACE_BUCKET_TOL = 1e-9
KEY_SCALE = 1e7
AREA_RTOL = 1e-6


@dataclass(frozen=True)
class GroupPresentation:
    genus: int
    generators: dict  # letter -> MoebiusElement, inverses under swapped case
    relation: Optional[str] = None
    source: str = ""

    @property
    def letters(self):
        return list(self.generators)

    def element(self, word: str) -> MoebiusElement:
        return evaluate_word(self, word)


@dataclass(frozen=True)
class ConjugacyClassRecord:
    word: str
    trace: float
    norm: float
    length: float
    primitive: bool = True
    power_of: Optional[tuple] = None  # (root word, k)

    def to_row(self):
        return [self.word, f"{self.trace:.17g}", f"{self.norm:.17g}",
                f"{self.length:.17g}", str(self.primitive).lower()]


class ClassList(list):
    """List of records plus the completeness verdict of the enumeration."""

    def __init__(self, records=(), completeness="best-effort", certificate=None):
        super().__init__(records)
        self.completeness = completeness
        self.certificate = certificate or {}

    @property
    def exhaustive(self) -> bool:
        return self.completeness == "exhaustive"

    def to_csv(self) -> str:
        lines = ["word,trace,norm,length,primitive"]
        lines += [",".join(r.to_row()) for r in self]
        return "\n".join(lines) + "\n"


# words ----------------------------------------------------------------------

def invert_word(word: str) -> str:
    return word[::-1].swapcase()


def free_reduce(word: str) -> str:
    out = []
    for ch in word:
        if out and out[-1] == ch.swapcase():
            out.pop()
        else:
            out.append(ch)
    return "".join(out)


def cyclic_reduce(word: str) -> str:
    w = free_reduce(word)
    while len(w) >= 2 and w[0] == w[-1].swapcase():
        w = w[1:-1]
    return w


def min_rotation(word: str) -> str:
    if not word:
        return word
    return min(word[i:] + word[:i] for i in range(len(word)))


def is_primitive(word: str):
    """(primitive, root, k); ``word`` should be cyclically reduced."""
    n = len(word)
    for p in range(1, n // 2 + 1):
        if n % p == 0 and word[:p] * (n // p) == word:
            return False, word[:p], n // p
    return True, word, 1


def evaluate_word(G: GroupPresentation, word: str) -> MoebiusElement:
    g = MoebiusElement.identity()
    for ch in word:
        if ch in G.generators:
            g = g @ G.generators[ch]
        elif ch.swapcase() in G.generators:
            g = g @ G.generators[ch.swapcase()].inverse()
        else:
            raise DomainError(f"unknown letter {ch!r}")
    return g


# norms ----------------------------------------------------------------------

def norm_of(h) -> float:
    """N(h) = ((|t| + sqrt(t^2 - 4)) / 2)^2 for a hyperbolic element."""
    t = abs(h.trace if isinstance(h, MoebiusElement) else float(np.trace(h)))
    if not t > 2:
        raise DomainError(f"non-hyperbolic element (|trace| = {t!r})")
    return ((t + math.sqrt(t * t - 4.0)) / 2.0) ** 2


def length_of(h) -> float:
    return math.log(norm_of(h))


# loading --------------------------------------------------------------------

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"


def parse_group(text: str, source: str = "<string>") -> GroupPresentation:
    genus = None
    gens = {}
    relation = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "genus" and len(parts) == 2 and parts[1].isdigit():
            genus = int(parts[1])
        elif parts[0] == "relation" and len(parts) == 2:
            relation = parts[1]
        elif (len(parts) == 5 and re.fullmatch(r"[a-z]", parts[0])
              and all(re.fullmatch(_NUM, p) for p in parts[1:])):
            if parts[0] in gens:
                raise DataFormatError(f"{source}:{lineno}: duplicate generator {parts[0]}")
            a, b, c, d = (float(p) for p in parts[1:])
            if abs(a * d - b * c - 1) > 1e-10:
                raise DataFormatError(f"{source}:{lineno}: determinant {a*d-b*c!r} != 1")
            gens[parts[0]] = MoebiusElement.from_entries(a, b, c, d)
        else:
            raise DataFormatError(f"{source}:{lineno}: cannot parse {raw!r}")
    if genus is None or genus < 2:
        raise DataFormatError(f"{source}: missing or invalid genus line")
    if not gens:
        raise DataFormatError(f"{source}: no generators")
    G = GroupPresentation(genus, gens, relation, source)
    for name, g in gens.items():
        if not abs(g.trace) > 2:
            raise DataFormatError(f"{source}: generator {name} is not hyperbolic")
    if relation is not None:
        if set(relation.lower()) - set(gens):
            raise DataFormatError(f"{source}: relation uses unknown letters")
        r = evaluate_word(G, relation).matrix
        res = min(np.abs(r - np.eye(2)).max(), np.abs(r + np.eye(2)).max())
        if res > RELATION_TOL:
            raise DataFormatError(f"{source}: relation residual {res:.3e} exceeds {RELATION_TOL}")
    return G


def load_group(path) -> GroupPresentation:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc
    return parse_group(text, str(path))


def relation_residual(G: GroupPresentation) -> float:
    r = evaluate_word(G, G.relation).matrix
    return float(min(np.abs(r - np.eye(2)).max(), np.abs(r + np.eye(2)).max()))


# vectorized PSL(2,R) helpers ------------------------------------------------

def _canon(m):
    """Canonical sign for a stack of matrices (n,2,2); the determinant is
    renormalized only where its drift exceeds the rounding floor."""
    ad, bc = m[:, 0, 0] * m[:, 1, 1], m[:, 0, 1] * m[:, 1, 0]
    det = ad - bc
    floor = np.maximum(DET_TOL, 1024 * EPS * (np.abs(ad) + np.abs(bc)))
    scale = np.where(np.abs(det - 1.0) > floor, np.sqrt(np.abs(det)), 1.0)
    m = m / scale[:, None, None]
    flat = m.reshape(len(m), 4)
    nz = np.abs(flat) > 0
    first = flat[np.arange(len(m)), nz.argmax(axis=1)]
    return m * np.where(first < 0, -1.0, 1.0)[:, None, None]


def _keys(m):
    return [tuple(r) for r in np.rint(m.reshape(len(m), 4) * KEY_SCALE).astype(np.int64)]


def _cosh_disp(m):
    return 0.5 * np.einsum("nij,nij->n", m, m)


def _hyperboloid(z):
    x, y = z.real, z.imag
    r2 = x * x + y * y
    return np.stack([(r2 + 1) / (2 * y), (r2 - 1) / (2 * y), x / y], axis=-1)


def _orbit_point(m):
    return (m[:, 0, 0] * 1j + m[:, 0, 1]) / (m[:, 1, 0] * 1j + m[:, 1, 1])


def _lorentz_cosh(p, q):
    return p[..., 0] * q[..., 0] - p[..., 1] * q[..., 1] - p[..., 2] * q[..., 2]


@dataclass
class _Ball:
    mats: np.ndarray
    parent: np.ndarray
    letter: np.ndarray
    complete: bool
    pairing_words: list = field(default_factory=list)

    def word(self, i: int) -> str:
        parts = []
        while i > 0:
            parts.append(self.pairing_words[self.letter[i]])
            i = self.parent[i]
        return free_reduce("".join(reversed(parts)))


def _bfs(pairings, words, keep_cosh, expand_cosh, max_len, lengths):
    """Ball of orbit points: expand elements with cosh d <= expand_cosh,
    keep those with cosh d <= keep_cosh (keep <= expand)."""
    P = np.array(pairings)
    mats = [np.eye(2)[None]]
    parent, letter, wlen = [np.array([-1])], [np.array([-1])], [np.array([0])]
    seen = {_keys(mats[0])[0]}
    frontier = np.array([0])
    base = 0
    all_m = mats[0]
    complete = True
    total = 1
    while len(frontier):
        fm = all_m[frontier]
        fl = np.concatenate(wlen)[frontier]
        prods = np.einsum("nij,pjk->npik", fm, P).reshape(-1, 2, 2)
        par = np.repeat(frontier, len(P))
        let = np.tile(np.arange(len(P)), len(frontier))
        nl = np.repeat(fl, len(P)) + np.tile(lengths, len(frontier))
        prods = _canon(prods)
        ch = _cosh_disp(prods)
        ok = ch <= expand_cosh
        if np.any(ok & (nl > max_len)):
            complete = False
        ok &= nl <= max_len
        prods, par, let, nl = prods[ok], par[ok], let[ok], nl[ok]
        new_idx = []
        for j, k in enumerate(_keys(prods)):
            if k not in seen:
                seen.add(k)
                new_idx.append(j)
        new_idx = np.array(new_idx, dtype=int)
        if not len(new_idx):
            break
        mats.append(prods[new_idx])
        parent.append(par[new_idx])
        letter.append(let[new_idx])
        wlen.append(nl[new_idx])
        all_m = np.concatenate(mats)
        frontier = np.arange(total, total + len(new_idx))
        total += len(new_idx)
    all_m = np.concatenate(mats)
    par = np.concatenate(parent)
    let = np.concatenate(letter)
    keep = _cosh_disp(all_m) <= keep_cosh
    # keep parent chains intact: retain full arrays, mark kept subset
    ball = _Ball(all_m, par, let, complete, list(words))
    ball.kept = np.flatnonzero(keep)
    return ball


def _generator_list(G: GroupPresentation):
    mats, words = [], []
    for name, g in G.generators.items():
        mats.append(g.matrix)
        words.append(name)
        mats.append(g.inverse().matrix)
        words.append(name.upper())
    return mats, words


@dataclass(frozen=True)
class DirichletPolygon:
    vertices: np.ndarray  # Klein-model coordinates, counterclockwise
    area: float
    covering_radius: float
    certified: bool
    side_pairings: tuple  # words of the face elements


def dirichlet_polygon(G: GroupPresentation, depth: int = 3) -> DirichletPolygon:
    """Dirichlet polygon at i from all elements of word length <= depth."""
    mats, words = _generator_list(G)
    ball = _bfs(mats, words, np.inf, np.inf, depth, np.ones(len(mats), int))
    m = ball.mats[1:]
    q = _hyperboloid(_orbit_point(m))
    # region {q_x u + q_y v <= q_t - 1}; scipy form A x + b <= 0
    hs = np.column_stack([q[:, 1], q[:, 2], -(q[:, 0] - 1.0)])
    hs /= np.linalg.norm(hs[:, :2], axis=1)[:, None]
    try:
        hi = HalfspaceIntersection(hs, np.zeros(2))
    except Exception as exc:  # qhull raises its own error type
        raise EnumerationError(f"Dirichlet polygon construction failed: {exc}") from exc
    v = hi.intersections
    if np.any(np.einsum("ij,ij->i", v, v) >= 1):
        return DirichletPolygon(v, math.inf, math.inf, False, ())
    order = np.argsort(np.arctan2(v[:, 1], v[:, 0]))
    v = v[order]
    # drop duplicate vertices (several halfplanes through one point)
    keep = np.r_[True, np.linalg.norm(np.diff(v, axis=0), axis=1) > 1e-10]
    v = v[keep]
    if np.linalg.norm(v[0] - v[-1]) <= 1e-10:
        v = v[:-1]
    hyp = np.column_stack([np.ones(len(v)), v]) / np.sqrt(1 - (v ** 2).sum(1))[:, None]
    n = len(v)
    angles = 0.0
    for k in range(n):
        p, a, b = hyp[k], hyp[k - 1], hyp[(k + 1) % n]
        ca, cb, cc = _lorentz_cosh(p, a), _lorentz_cosh(p, b), _lorentz_cosh(a, b)
        cosang = (ca * cb - cc) / math.sqrt((ca * ca - 1) * (cb * cb - 1))
        angles += math.acos(max(-1.0, min(1.0, cosang)))
    area = (n - 2) * math.pi - angles
    rho = float(np.max(np.arccosh(hyp[:, 0])))
    # faces: halfplanes tight at two polygon vertices
    resid = hs[:, :2] @ v.T + hs[:, 2:3]
    faces = np.flatnonzero((np.abs(resid) < 1e-9).sum(axis=1) >= 2)
    pairings = tuple(ball.word(i + 1) for i in faces)
    target = 4 * math.pi * (G.genus - 1)
    certified = abs(area - target) <= AREA_RTOL * target
    return DirichletPolygon(v, area, rho, certified, pairings)


def _certified_polygon(G, max_depth=6):
    poly = None
    for depth in range(1, max_depth + 1):
        try:
            poly = dirichlet_polygon(G, depth)
        except EnumerationError:
            continue
        if poly.certified:
            return poly
    return poly


def _axis_sinh2(m):
    """sinh^2 of the distance from i to the axis of each hyperbolic matrix."""
    t = np.abs(m[:, 0, 0] + m[:, 1, 1])
    cl = 0.5 * t * t - 1.0
    return (_cosh_disp(m) - cl) / (cl - 1.0)


def enumerate_classes(G: GroupPresentation, max_norm: float, max_word_length: int = 16,
                      include_powers: bool = False) -> ClassList:
    """Primitive hyperbolic conjugacy classes with N(h) <= max_norm.

    Returns a :class:`ClassList` sorted by norm; ``completeness`` is
    "exhaustive" only when the fundamental polygon was certified by its area
    and no ball element was cut off by ``max_word_length``.
    """
    if not max_norm > 1:
        raise DomainError("max_norm must exceed 1")
    L = math.log(max_norm)
    poly = _certified_polygon(G)
    gen_mats, gen_words = _generator_list(G)
    if poly is not None and poly.certified:
        rho = poly.covering_radius
        pw = list(poly.side_pairings)
        pm = [evaluate_word(G, w).matrix for w in pw]
        plen = np.array([len(w) for w in pw])
    else:
        rho = math.inf
        pw, pm, plen = gen_words, gen_mats, np.ones(len(gen_mats), int)
    slack = 1e-7
    if math.isfinite(rho):
        cR = math.cosh(rho) ** 2 * math.cosh(L) - math.sinh(rho) ** 2
        R = math.acosh(cR)
        conj_radius = 2 * rho + L / 2
        keep = max(R, conj_radius) + slack
        expand = keep + rho + slack
        ball = _bfs(pm, pw, math.cosh(keep), math.cosh(expand), max_word_length, plen)
        complete = ball.complete
    else:
        cR = math.inf
        conj_radius = math.inf
        ball = _bfs(pm, pw, np.inf, np.inf, max_word_length, plen)
        complete = False
    cert = {"covering_radius": rho, "polygon_area": None if poly is None else poly.area,
            "polygon_certified": bool(poly is not None and poly.certified),
            "ball_size": int(len(ball.mats)), "max_length": L,
            "frontier_exhausted": bool(ball.complete)}

    idx = ball.kept[1:] if ball.kept[0] == 0 else ball.kept
    idx = idx[idx != 0]
    m = ball.mats[idx]
    t = np.abs(m[:, 0, 0] + m[:, 1, 1])
    bad = t <= 2 + 1e-9
    if np.any(bad):
        j = idx[np.flatnonzero(bad)[0]]
        raise EnumerationError(f"non-hyperbolic nonidentity element {ball.word(j)!r} "
                               f"(|trace| = {t[bad][0]:.15g})")
    lengths = 2 * np.arccosh(t / 2)
    sel = lengths <= L + 1e-9
    if math.isfinite(rho):
        sel &= _axis_sinh2(m) <= math.sinh(rho) ** 2 * (1 + 1e-9) + 1e-12
    cand, cidx, ct, cl = m[sel], idx[sel], t[sel], lengths[sel]

    order = np.argsort(ct, kind="stable")
    cand, cidx, ct, cl = cand[order], cidx[order], ct[order], cl[order]
    conj_set = ball.mats[ball.kept]
    conj_cosh = _cosh_disp(conj_set)
    n = len(cand)
    label = -np.ones(n, int)
    classes = []
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and ct[stop] - ct[stop - 1] <= TRACE_BUCKET_TOL * max(1.0, ct[stop]):
            stop += 1
        bucket = np.arange(start, stop)
        flat = cand[bucket].reshape(-1, 4)
        tree = cKDTree(np.vstack([flat, -flat]))
        nb = len(bucket)
        for i in bucket:
            if label[i] >= 0:
                continue
            cid = len(classes)
            label[i] = cid
            members = [i]
            if nb > 1:
                lim = math.cosh(min(conj_radius, 1e300) + slack) if math.isfinite(conj_radius) else np.inf
                gset = conj_set[conj_cosh <= lim]
                ginv = np.stack([gset[:, 1, 1], -gset[:, 0, 1], -gset[:, 1, 0], gset[:, 0, 0]],
                                axis=-1).reshape(-1, 2, 2)
                conj = np.einsum("nij,jk,nkl->nil", gset, cand[i], ginv).reshape(-1, 4)
                scale = 1e-7 * max(1.0, np.abs(cand[i]).max())
                for hits in tree.query_ball_point(conj, scale):
                    for hpos in hits:
                        j = bucket[hpos % nb]
                        if label[j] < 0:
                            label[j] = cid
                            members.append(j)
            classes.append(members)
        start = stop

    lmin = float(cl.min()) if n else math.inf
    records_by_class = []
    for cid, members in enumerate(classes):
        rep = members[0]
        word = min((min_rotation(cyclic_reduce(ball.word(cidx[j]))) for j in members),
                   key=lambda w: (len(w), w))
        ell = float(cl[rep])
        root = None
        k = 2
        while ell / k >= lmin - 1e-9:
            target = 2 * math.cosh(ell / (2 * k))
            lo = np.searchsorted(ct, target * (1 - 1e-9))
            hi = np.searchsorted(ct, target * (1 + 1e-9))
            for j in range(lo, hi):
                pk = np.linalg.matrix_power(cand[j], k)
                tol = 1e-7 * max(1.0, np.abs(cand[rep]).max())
                if min(np.abs(pk - cand[rep]).max(), np.abs(pk + cand[rep]).max()) <= tol:
                    root = (int(label[j]), k)
                    break
            if root:
                break
            k += 1
        records_by_class.append((word, float(ct[rep]), ell, root))

    records = []
    for cid, (word, tr, ell, root) in enumerate(records_by_class):
        if root is None:
            records.append(ConjugacyClassRecord(word, tr, math.exp(ell), ell, True, None))
        elif include_powers:
            rword = records_by_class[root[0]][0]
            records.append(ConjugacyClassRecord(rword * root[1], tr, math.exp(ell), ell,
                                                False, (rword, root[1])))
    dropped = [r for r in records if len(r.word) > max_word_length]
    records = [r for r in records if len(r.word) <= max_word_length]
    records.sort(key=lambda r: (r.norm, r.word))
    if dropped:
        complete = False
    verdict = "exhaustive" if (complete and cert["polygon_certified"]) else "best-effort"
    cert["ball_radius"] = math.acosh(cR) if math.isfinite(cR) else math.inf
    return ClassList(records, verdict, cert)


def systole(G: GroupPresentation, guess_norm: float = 30.0) -> float:
    """Length of the shortest closed geodesic."""
    max_norm = guess_norm
    for _ in range(8):
        cl = enumerate_classes(G, max_norm)
        if len(cl):
            return cl[0].length
        max_norm *= max_norm
    raise EnumerationError("no hyperbolic classes found")
