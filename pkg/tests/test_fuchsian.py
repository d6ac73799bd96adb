import math
from collections import Counter

import numpy as np
import pytest

from magtrace import data_path
from magtrace.errors import DataFormatError, DomainError
from magtrace.fuchsian import (
    cyclic_reduce,
    dirichlet_polygon,
    enumerate_classes,
    evaluate_word,
    free_reduce,
    invert_word,
    is_primitive,
    length_of,
    load_group,
    min_rotation,
    norm_of,
    parse_group,
    relation_residual,
    systole,
)
from magtrace.geometry import moebius

from oracles import brute_force_lengths

SQ2 = math.sqrt(2)
# closed forms for the three shortest Bolza lengths: cosh(l/2) = 1+sqrt2, 3+2sqrt2, 5+3sqrt2
BOLZA_LENGTHS = [2 * math.acosh(1 + SQ2), 2 * math.acosh(3 + 2 * SQ2), 2 * math.acosh(5 + 3 * SQ2)]


@pytest.fixture(scope="module")
def bolza():
    return load_group(data_path("bolza.group"))


@pytest.fixture(scope="module")
def classes6(bolza):
    return enumerate_classes(bolza, math.exp(6.2), include_powers=True)


def test_bolza_loads(bolza):
    assert bolza.genus == 2
    assert sorted(bolza.letters) == ["a", "b", "c", "d"]
    assert relation_residual(bolza) <= 1e-10
    for g in bolza.generators.values():
        assert abs(g.trace) > 2
        assert abs(g.det - 1) <= 1e-14


def test_relation_word_is_identity(bolza):
    m = bolza.element(bolza.relation).matrix
    assert min(np.abs(m - np.eye(2)).max(), np.abs(m + np.eye(2)).max()) <= 1e-10


def _bolza_text():
    return data_path("bolza.group").read_text()


@pytest.mark.parametrize("mutate, match", [
    (lambda t: t.replace("genus 2", "genus x"), "cannot parse"),
    (lambda t: t.replace("genus 2\n", ""), "genus"),
    (lambda t: t.replace("relation aBcDAbCd", "relation aBcDAbCx"), "unknown letters"),
    (lambda t: t.replace("relation aBcDAbCd", "relation aBcDAbDc"), "residual"),
    (lambda t: t + "a 1 0 0 1\n", "duplicate"),
    (lambda t: t + "e 2 0 0 2\n", "determinant"),
    (lambda t: t + "e 1 1 0 1\n", "not hyperbolic"),
    (lambda t: t + "junk\n", "cannot parse"),
])
def test_parse_errors(mutate, match):
    with pytest.raises(DataFormatError, match=match):
        parse_group(mutate(_bolza_text()))


def test_perturbed_generator_breaks_relation():
    # rescale a by (1 + 1e-6): still unimodular, but the relation fails
    a, d = "0.216845335437475116722086333728", "4.61158178930871498088129111469"
    text = _bolza_text().replace(a, repr(float(a) * (1 + 1e-6)))
    text = text.replace(d, repr(float(d) / (1 + 1e-6)))
    with pytest.raises(DataFormatError, match="residual"):
        parse_group(text)


def test_missing_file(tmp_path):
    with pytest.raises(DataFormatError, match="cannot read"):
        load_group(tmp_path / "nope.group")


def test_unknown_letter(bolza):
    with pytest.raises(DomainError):
        evaluate_word(bolza, "abz")


def test_norm_examples():
    t = 3.0
    assert norm_of(moebius(2, 1, 1, 1)) == pytest.approx((7 + 3 * math.sqrt(5)) / 2, rel=1e-15)
    lam = 2.5
    h = moebius(lam, 0, 0, 1 / lam)
    assert norm_of(h) == pytest.approx(lam ** 2, rel=1e-14)
    assert length_of(h) == pytest.approx(2 * math.log(lam), rel=1e-14)
    assert norm_of(np.array([[t, 0.0], [0.0, 0.0]])) == pytest.approx((7 + 3 * math.sqrt(5)) / 2)
    for g in (moebius(1, 1, 0, 1), moebius(0, -1, 1, 0)):
        with pytest.raises(DomainError, match="non-hyperbolic"):
            norm_of(g)


def test_norm_of_powers(bolza):
    for w in ("a", "ab", "BDc", "aBcD"):
        h = bolza.element(w)
        for k in (2, 3):
            assert norm_of(bolza.element(w * k)) == pytest.approx(norm_of(h) ** k, rel=1e-10)


def test_norm_conjugation_invariant(bolza):
    rng = np.random.default_rng(4)
    letters = "abcdABCD"
    for _ in range(50):
        w = "".join(rng.choice(list(letters), 3))
        g = "".join(rng.choice(list(letters), 4))
        h = bolza.element(w)
        if abs(h.trace) <= 2:
            continue
        conj = bolza.element(g + w + invert_word(g))
        # rounding in g h g^-1 is about eps |g|^2 |h| per product
        bound = 64 * np.finfo(float).eps * (np.linalg.norm(bolza.element(g).matrix) ** 2
                                           * np.linalg.norm(h.matrix))
        assert abs(abs(conj.trace) - abs(h.trace)) <= bound
        assert norm_of(conj) == pytest.approx(norm_of(h), rel=1e-8)


def test_word_utilities():
    assert invert_word("aBc") == "CbA"
    assert free_reduce("abBAc") == "c"
    assert cyclic_reduce("aBcA") == "Bc"
    assert min_rotation("cab") == "abc"
    assert is_primitive("abab") == (False, "ab", 2)
    assert is_primitive("aab") == (True, "aab", 1)
    assert is_primitive("aaa") == (False, "a", 3)


def test_dirichlet_polygon(bolza):
    poly = dirichlet_polygon(bolza, 2)
    assert poly.certified
    assert poly.area == pytest.approx(4 * math.pi, rel=1e-8)
    assert len(poly.vertices) == 8
    # octagon circumradius
    assert poly.covering_radius == pytest.approx(math.acosh(3 + 2 * SQ2), rel=1e-10)
    assert len(poly.side_pairings) == 8


def test_systole_closed_form(bolza):
    assert systole(bolza) == pytest.approx(BOLZA_LENGTHS[0], rel=1e-10)


def test_enumeration_short(bolza):
    cl = enumerate_classes(bolza, math.exp(3.2))
    assert cl.exhaustive
    assert len(cl) == 24
    for r in cl:
        assert r.length == pytest.approx(BOLZA_LENGTHS[0], rel=1e-10)
        assert r.primitive


def test_enumeration_lengths_match_closed_forms(classes6):
    assert classes6.exhaustive
    prim = sorted({round(r.length, 9) for r in classes6 if r.primitive})
    assert prim == pytest.approx(BOLZA_LENGTHS, rel=1e-9)


def test_enumeration_matches_brute_force(bolza, classes6):
    # every length <= 6.2 seen among reduced words of length <= 7 appears in
    # the enumeration, and conversely
    bf = brute_force_lengths(bolza, 7)
    bf = np.unique(np.round(bf[bf <= 6.2], 8))
    ours = np.unique(np.round([r.length for r in classes6], 8))
    assert np.array_equal(bf, ours)


def test_record_consistency(bolza, classes6):
    for r in classes6:
        h = bolza.element(r.word)
        assert abs(abs(h.trace) - abs(r.trace)) <= 1e-9 * abs(r.trace)
        assert r.norm == pytest.approx(norm_of(h), rel=1e-9)
        assert r.length == pytest.approx(math.log(r.norm), rel=1e-12)
        assert 2 * math.cosh(r.length / 2) == pytest.approx(abs(r.trace), rel=1e-9)
    norms = [r.norm for r in classes6]
    assert norms == sorted(norms)


def test_powers(classes6):
    powers = [r for r in classes6 if not r.primitive]
    assert len(powers) == 24
    for r in powers:
        root, k = r.power_of
        assert k == 2
        assert r.length == pytest.approx(2 * BOLZA_LENGTHS[0], rel=1e-9)
    assert len([r for r in classes6 if r.primitive]) == 24 + 24 + 48


def test_classes_distinct(bolza, classes6):
    # no two listed words are cyclic rotations of each other, and every
    # class appears with its inverse class (so each length count is even)
    seen = set()
    for r in classes6:
        key = min_rotation(cyclic_reduce(r.word))
        assert key not in seen
        seen.add(key)
    counts = Counter(round(r.length, 8) for r in classes6)
    assert all(v % 2 == 0 for v in counts.values())


def test_enumeration_idempotent(bolza):
    a = enumerate_classes(bolza, math.exp(5.0))
    b = enumerate_classes(bolza, math.exp(5.0))
    assert [r.word for r in a] == [r.word for r in b]
    assert a.to_csv() == b.to_csv()
    assert a.to_csv().splitlines()[0] == "word,trace,norm,length,primitive"


def test_enumeration_below_systole_is_empty(bolza):
    cl = enumerate_classes(bolza, math.exp(0.5))
    assert len(cl) == 0 and cl.exhaustive


def test_word_length_cap_gives_best_effort(bolza):
    cl = enumerate_classes(bolza, math.exp(6.2), max_word_length=2)
    assert not cl.exhaustive
    assert all(len(r.word) <= 2 for r in cl)


def test_invalid_norm(bolza):
    with pytest.raises(DomainError):
        enumerate_classes(bolza, 1.0)
