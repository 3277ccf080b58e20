import json
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from bundlecoh import serialize
from bundlecoh.bundle import Bundle, total_sheaf, validate_bundle
from bundlecoh.fixtures import cube_bundle, i1_family, random_bundle, random_sheaf
from bundlecoh.poset import Poset, boolean_lattice, random_poset
from bundlecoh.sheaf import Sheaf, cohomology, constant_sheaf

DATA = Path(__file__).parent / "data"
FIXTURES = sorted(DATA.glob("*.json"))


def round_trip(text: str, strict=True) -> str:
    return serialize.dumps(serialize.to_document(serialize.loads(text, strict=strict)))


@pytest.mark.parametrize("path", FIXTURES, ids=lambda p: p.stem)
def test_shipped_fixtures_round_trip_byte_identical(path):
    text = path.read_text(encoding="utf-8")
    assert round_trip(text) == text


def test_fixture_set_is_not_empty():
    assert {"i1", "cube", "b2-chain2"} <= {p.stem for p in FIXTURES}


@given(st.integers(0, 10_000))
def test_random_bundles_round_trip(seed):
    xi = random_bundle(seed)
    text = serialize.dumps(serialize.to_document(xi))
    back = serialize.loads(text, strict=True)
    assert isinstance(back, Bundle) and validate_bundle(back) is None
    assert serialize.dumps(serialize.to_document(back)) == text
    assert [h.betti for h in cohomology(total_sheaf(back).sheaf)] == \
        [h.betti for h in cohomology(total_sheaf(xi).sheaf)]


def test_named_instances_round_trip():
    for _, xi in i1_family() + [("cube", cube_bundle())]:
        text = serialize.dumps(serialize.to_document(xi))
        assert round_trip(text) == text


def test_poset_and_sheaf_documents():
    P = boolean_lattice(3)
    back = serialize.loads(serialize.dumps(serialize.to_document(P)))
    assert isinstance(back, Poset) and back == P
    F = random_sheaf(random_poset(5, 0.5, 1), 1)
    back = serialize.loads(serialize.dumps(serialize.to_document(F)))
    assert isinstance(back, Sheaf) and back.dims == F.dims
    assert all(back.restrictions[c] == F.restrictions[c] for c in F.poset.covers)


def test_total_sheaf_document_names_pairs():
    doc = serialize.total_sheaf_document(total_sheaf(cube_bundle()))
    assert doc["kind"] == "sheaf"
    assert doc["poset"]["elements"][0] == "{}:*"
    serialize.from_document(doc)


def test_canonical_layout():
    text = serialize.dumps(serialize.to_document(constant_sheaf(boolean_lattice(1), 1)))
    doc = json.loads(text)
    assert list(doc) == ["format", "kind", "ring", "poset", "dims", "restrictions"]
    assert text.endswith("\n")
    assert serialize.digest(text) == serialize.digest(text)


def load_i1():
    return json.loads((DATA / "i1.json").read_text())


def test_missing_matrix_names_the_cover():
    doc = load_i1()
    doc["fibers"][0]["restrictions"] = []
    with pytest.raises(serialize.DocumentError, match=r"\['a', 'b'\]") as exc:
        serialize.from_document(doc)
    assert exc.value.path == "$.fibers[0].restrictions"
    doc = load_i1()
    doc["arrows"] = []
    with pytest.raises(serialize.DocumentError, match="missing arrow"):
        serialize.from_document(doc)


def test_non_canonical_scalars_per_strict_flag():
    doc = load_i1()
    doc["arrows"][0]["matrices"][0]["matrix"][0][0] = "2/2"
    text = serialize.dumps(doc)
    with pytest.raises(serialize.DocumentError, match="non-canonical"):
        serialize.loads(text, strict=True)
    normalized = serialize.dumps(serialize.to_document(serialize.loads(text)))
    assert normalized == (DATA / "i1.json").read_text()


@pytest.mark.parametrize("mutate, path", [
    (lambda d: d.update(format="other/9"), "$.format"),
    (lambda d: d.update(kind="tree"), "$.kind"),
    (lambda d: d["fibers"][0].update(dims=[1]), "$.fibers[0].dims"),
    (lambda d: d["base"].update(covers=[["0", "9"]]), "$.base"),
    (lambda d: d.update(ring="p-adic"), "$.ring"),
    (lambda d: d.update(extra=1), "$"),
])
def test_schema_errors_carry_paths(mutate, path):
    doc = load_i1()
    mutate(doc)
    with pytest.raises(serialize.DocumentError) as exc:
        serialize.from_document(doc)
    assert exc.value.path.startswith(path)


def test_malformed_json():
    with pytest.raises(serialize.DocumentError):
        serialize.loads("{not json")
    with pytest.raises(serialize.DocumentError):
        serialize.loads("[]")
