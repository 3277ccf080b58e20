"""Acceptance criteria 1-10, each with its time budget.

Every criterion builds a deterministic report dictionary; the test asserts
the verdict and the budget and prints one PASS/FAIL line.  Criterion 10
re-runs the whole suite with a different parallelism setting and compares
the serialized reports byte for byte.
"""

from __future__ import annotations

import random
import time
from math import comb

import pytest

from bundlecoh import serialize
from bundlecoh.bundle import restrict_bundle
from bundlecoh.decomp import admissible_witnesses, split_certificates, verify_main_theorem
from bundlecoh.fixtures import (
    constant_chain_bundle,
    i1_family,
    random_admissible_base,
    random_bundle,
    random_sheaf,
)
from bundlecoh.poset import (
    Poset,
    SubposetView,
    boolean_lattice,
    is_recursively_admissible,
    random_poset,
    with_bottom,
)
from bundlecoh.sheaf import cochain_complex, cohomology, constant_sheaf
from bundlecoh.spectral import build_bicomplex, convergence_check, e2_check, spectral_pages
from bundlecoh.traversal import lattice_paths, phi_chain_map
from oracles import natural_posets, oracle_recursively_admissible

SEED = 20240601
BUDGETS = {1: 60, 2: 10, 3: 120, 4: 300, 5: 300, 6: 600, 7: 600, 8: 600, 9: 120}


def _rng(tag: int) -> random.Random:
    return random.Random(SEED * 100 + tag)


# ---------------------------------------------------------------------------
# criteria as report builders


def crit1() -> dict:
    rng = _rng(1)
    sheaf_bad = []
    for k in range(200):
        P = random_poset(rng.randint(1, 8), rng.random(), rng)
        cx = cochain_complex(random_sheaf(P, rng, max_dim=3))
        if cx.check():
            sheaf_bad.append(k)
    bundle_bad = []
    for k in range(100):
        K = build_bicomplex(random_bundle(rng, max_base=4, max_fiber=4, max_dim=2))
        if K.identity_defects():
            bundle_bad.append(k)
    return {"sheaves": 200, "sheaf_failures": sheaf_bad, "bundles": 100, "bundle_failures": bundle_bad,
            "passed": not sheaf_bad and not bundle_bad}


def crit2() -> dict:
    rng = _rng(2)
    bad = []
    for k in range(50):
        P = with_bottom(random_poset(rng.randint(0, 7), rng.random(), rng), "min")
        a = rng.randint(1, 3)
        H = [h.betti for h in cohomology(constant_sheaf(P, a))]
        if H[0] != a or any(H[1:]):
            bad.append({"case": k, "a": a, "betti": H})
    return {"posets": 50, "failures": bad, "passed": not bad}


def crit3() -> dict:
    rng = _rng(3)
    bad = []
    for k in range(100):
        if phi_chain_map(random_bundle(rng)).defects():
            bad.append(k)
    return {"bundles": 100, "failures": bad, "passed": not bad}


def crit4_5() -> tuple[dict, dict]:
    rng = _rng(4)
    e2_bad, conv_bad = [], []
    sizes = []
    for k in range(50):
        base = random_admissible_base(rng.randint(1, 6), rng)
        xi = random_bundle(rng, base=base)
        sizes.append(len(base))
        pages = spectral_pages(build_bicomplex(xi))
        if not e2_check(xi, pages).passed:
            e2_bad.append(k)
        if not convergence_check(xi, pages).passed:
            conv_bad.append(k)
    return ({"bundles": 50, "base_sizes": sizes, "failures": e2_bad, "passed": not e2_bad},
            {"bundles": 50, "failures": conv_bad, "passed": not conv_bad})


def main_theorem_instances() -> list[tuple[str, object]]:
    out = []
    for n in range(4):
        for length in (1, 2, 3):
            out.append((f"const-B{n}-chain{length}", constant_chain_bundle(boolean_lattice(n), length, 1)))
    out += i1_family()
    rng = _rng(6)
    out += [(f"random-B2-{k}", random_bundle(rng, base=boolean_lattice(2))) for k in range(25)]
    return out


def _every_split(xi, cert) -> tuple[list, list]:
    """Alpha and LES verdicts on every admissible atom of every tree node."""
    ok, tree = is_recursively_admissible(xi.base)
    alpha, les = [], []
    by_node = {}

    def walk(node, rep):
        by_node[node.members] = rep
        if node.witness is not None:
            walk(node.up, rep["up"])
            walk(node.rest, rep["rest"])

    walk(tree, cert)
    for node in tree.nodes():
        view = SubposetView(xi.base, node.members)
        sub = restrict_bundle(xi, view)
        if sub.base.bottom() is None or len(sub.base) == 1:
            continue
        rep = by_node[node.members]
        for x in admissible_witnesses(sub.base):
            if node.witness is not None and view.members[x] == node.witness:
                checks = rep["checks"]
            else:
                checks = split_certificates(sub, x)
            where = [sub.base.names[z] for z in sub.base.elements], sub.base.names[x]
            alpha.append({"node": where[0], "x": where[1],
                          "alpha1": checks["alpha1"]["verdict"], "alpha2": checks["alpha2"]["verdict"]})
            les.append({"node": where[0], "x": where[1],
                        "total": checks["les_total"]["verdict"], "cochain": checks["les_cochain"]["verdict"]})
        if "alpha_const" in rep["checks"]:
            alpha.append({"node": [sub.base.names[z] for z in sub.base.elements], "x": None,
                          "alpha": rep["checks"]["alpha_const"]["verdict"]})
    return alpha, les


def crit6_7_8(jobs: int = 1) -> tuple[dict, dict, dict]:
    six, seven, eight = [], [], []
    for name, xi in main_theorem_instances():
        cert = verify_main_theorem(xi, jobs=jobs)
        six.append({"instance": name, "verdict": cert["verdict"],
                    "certificate_sha256": serialize.digest(serialize.dumps(cert))})
        alpha, les = _every_split(xi, cert)
        seven.append({"instance": name, "splits": alpha})
        eight.append({"instance": name, "splits": les})

    def all_pass(rows, keys):
        return all(s.get(k, "pass") == "pass" for r in rows for s in r["splits"] for k in keys)

    return ({"instances": six, "passed": all(r["verdict"] == "pass" for r in six)},
            {"instances": seven, "splits_checked": sum(len(r["splits"]) for r in seven),
             "passed": all_pass(seven, ("alpha1", "alpha2", "alpha"))},
            {"instances": eight, "splits_checked": sum(len(r["splits"]) for r in eight),
             "passed": all_pass(eight, ("total", "cochain"))})


def crit9() -> dict:
    disagree, count = [], 0
    for n in range(1, 6):
        for order in natural_posets(n):
            P = Poset.from_order(tuple(range(n)), [(u, v) for u, v in order if u != v])
            if is_recursively_admissible(P)[0] != oracle_recursively_admissible(frozenset(range(n)), order):
                disagree.append(sorted(P.covers))
            count += 1
    counts_ok = all(len(lattice_paths(p, q)) == comb(p + q, p) for p in range(6) for q in range(6))
    boolean_ok = all(is_recursively_admissible(boolean_lattice(n))[0] for n in range(1, 5))
    return {"posets": count, "disagreements": disagree, "traversal_counts": counts_ok,
            "boolean_lattices": boolean_ok, "passed": not disagree and counts_ok and boolean_ok}


def full_suite(jobs: int = 1) -> dict:
    rep = {1: crit1(), 2: crit2(), 3: crit3()}
    rep[4], rep[5] = crit4_5()
    rep[6], rep[7], rep[8] = crit6_7_8(jobs)
    rep[9] = crit9()
    return {str(k): v for k, v in rep.items()}


# ---------------------------------------------------------------------------
# tests


@pytest.fixture(scope="module")
def results():
    return {}


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def _line(capsys, n: int, ok: bool, secs: float, budget: float | None, detail: str = ""):
    within = budget is None or secs < budget
    status = "PASS" if ok and within else "FAIL"
    limit = f" / budget {budget}s" if budget is not None else ""
    with capsys.disabled():
        print(f"\n[acceptance] criterion {n}: {status} ({secs:.1f}s{limit}){' ' + detail if detail else ''}")
    return ok and within


def test_criterion_01_complex_well_formedness(results, capsys):
    rep, secs = _timed(crit1)
    results[1] = rep
    assert _line(capsys, 1, rep["passed"], secs, BUDGETS[1], "200 sheaves, 100 bicomplexes"), rep


def test_criterion_02_constant_sheaf_cohomology(results, capsys):
    rep, secs = _timed(crit2)
    results[2] = rep
    assert _line(capsys, 2, rep["passed"], secs, BUDGETS[2], "50 posets"), rep


def test_criterion_03_phi_chain_map(results, capsys):
    rep, secs = _timed(crit3)
    results[3] = rep
    assert _line(capsys, 3, rep["passed"], secs, BUDGETS[3], "100 bundles"), rep


def test_criterion_04_e2_identification(results, capsys):
    (e2, conv), secs = _timed(crit4_5)
    results[4], results[5] = e2, conv
    results["45_seconds"] = secs
    assert _line(capsys, 4, e2["passed"], secs, BUDGETS[4], "50 bundles, bases up to 6"), e2


def test_criterion_05_convergence(results, capsys):
    if 5 not in results:
        (results[4], results[5]), results["45_seconds"] = _timed(crit4_5)
    rep = results[5]
    assert _line(capsys, 5, rep["passed"], results["45_seconds"], BUDGETS[5], "same run as criterion 4"), rep


def _ensure_six(results):
    if 6 not in results:
        (results[6], results[7], results[8]), results["678_seconds"] = _timed(crit6_7_8)


def test_criterion_06_main_theorem(results, capsys):
    _ensure_six(results)
    rep = results[6]
    n = len(rep["instances"])
    assert _line(capsys, 6, rep["passed"], results["678_seconds"], BUDGETS[6], f"{n} instances"), \
        [r for r in rep["instances"] if r["verdict"] != "pass"]


def test_criterion_07_alpha_quasi_isomorphisms(results, capsys):
    _ensure_six(results)
    rep = results[7]
    assert _line(capsys, 7, rep["passed"], results["678_seconds"], BUDGETS[7],
                 f"{rep['splits_checked']} cone certificates, same run as criterion 6"), rep


def test_criterion_08_les_exactness(results, capsys):
    _ensure_six(results)
    rep = results[8]
    assert _line(capsys, 8, rep["passed"], results["678_seconds"], BUDGETS[8],
                 f"{rep['splits_checked']} splits, same run as criterion 6"), rep


def test_criterion_09_combinatorial_oracles(results, capsys):
    rep, secs = _timed(crit9)
    results[9] = rep
    assert _line(capsys, 9, rep["passed"], secs, BUDGETS[9], f"{rep['posets']} posets"), rep


def test_criterion_10_determinism(results, capsys):
    first = {str(k): results[k] for k in range(1, 10) if k in results}
    if len(first) < 9:
        first = full_suite(jobs=1)
    t0 = time.perf_counter()
    second = full_suite(jobs=2)
    secs = time.perf_counter() - t0
    a, b = serialize.dumps(first), serialize.dumps(second)
    ok = a == b
    assert _line(capsys, 10, ok, secs, None,
                 f"report sha256 {serialize.digest(a)[:16]} (jobs=1) vs {serialize.digest(b)[:16]} (jobs=2)")
