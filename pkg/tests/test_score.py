import json
import random
import string

import pytest

from divsample.corpus import Entity, EntityKind, Relation
from divsample.errors import DataError
from divsample.score import (
    keyword_precision,
    keyword_precision_many,
    linearise,
    load_gold,
    load_predictions,
    macro_average,
    parse_output,
    score,
)

from conftest import make_org


def chem(label, eid="C1"):
    return Entity(id=eid, label=label, kind=EntityKind.chemical)


def rel(org_label, chem_label):
    return Relation(
        Entity(id=f"O:{org_label}", label=org_label, kind=EntityKind.organism),
        Entity(id=f"C:{chem_label}", label=chem_label, kind=EntityKind.chemical),
    )


class TestLinearise:
    def test_order_preserved(self):
        text = linearise([rel("Isaria sinclairii", "myriocin"),
                          rel("Isaria sinclairii", "fingolimod")])
        assert text == ("Isaria sinclairii produces myriocin; "
                        "Isaria sinclairii produces fingolimod")

    def test_semicolon_in_label_rejected(self):
        with pytest.raises(DataError):
            linearise([rel("Organism; weird", "x")])

    def test_empty_is_empty_string(self):
        assert linearise([]) == ""


class TestParseOutput:
    def test_round_trip_identity(self):
        rels = [rel("Org A", "chem one"), rel("Org B", "chem two")]
        parsed = parse_output(linearise(rels))
        assert parsed.pairs == {("Org A", "chem one"), ("Org B", "chem two")}
        assert parsed.malformed == 0

    def test_malformed_clauses_tallied(self):
        parsed = parse_output("Org A produces x; no verb here; produces y;  ; B produces z")
        assert parsed.pairs == {("Org A", "x"), ("B", "z")}
        assert parsed.malformed == 2

    def test_first_verb_occurrence_splits(self):
        # a chemical label may itself contain the verb token
        parsed = parse_output("Org produces chem that produces effects")
        assert parsed.pairs == {("Org", "chem that produces effects")}

    def test_empty_text(self):
        parsed = parse_output("")
        assert parsed.pairs == set()
        assert parsed.malformed == 0

    def test_round_trip_fuzz(self):
        rng = random.Random(55)
        alphabet = string.ascii_letters + "  --"
        for _ in range(1000):
            n = rng.randint(1, 5)
            rels = []
            for _i in range(n):
                org = "".join(rng.choice(alphabet) for _ in range(rng.randint(3, 12))).strip("- ")
                ch = "".join(rng.choice(alphabet) for _ in range(rng.randint(3, 12))).strip("- ")
                if not org or not ch or "produces" in (org, ch):
                    continue
                rels.append(rel(org, ch))
            if not rels:
                continue
            parsed = parse_output(linearise(rels))
            expected = {(r.organism.label.strip(), r.chemical.label.strip()) for r in rels}
            assert parsed.pairs == expected
            assert parsed.malformed == 0


class TestScore:
    def test_gold_vs_gold_is_perfect(self):
        gold = {"d1": [("A", "x"), ("B", "y")], "d2": [("C", "z")]}
        report = score(gold, gold)
        assert (report.precision, report.recall, report.f1) == (1.0, 1.0, 1.0)
        assert report.false_positives == report.false_negatives == 0

    def test_micro_fixture_half(self):
        # 2 TP, 2 FP, 2 FN -> P = R = F1 = 0.5
        gold = {"d1": [("A", "x"), ("A", "y")], "d2": [("B", "z"), ("B", "w")]}
        pred = {"d1": [("A", "x"), ("A", "q")], "d2": [("B", "z"), ("B", "v")]}
        report = score(gold, pred)
        assert report.true_positives == 2
        assert report.false_positives == 2
        assert report.false_negatives == 2
        assert report.precision == report.recall == report.f1 == 0.5

    def test_missing_doc_counts_as_false_negatives(self):
        gold = {"d1": [("A", "x")], "d2": [("B", "y"), ("B", "z")]}
        report = score(gold, {"d1": [("A", "x")]})
        assert report.true_positives == 1
        assert report.false_negatives == 2
        assert report.recall == pytest.approx(1 / 3)

    def test_extra_doc_counts_as_false_positives(self):
        report = score({"d1": [("A", "x")]}, {"d1": [("A", "x")], "d9": [("Z", "q")]})
        assert report.false_positives == 1

    def test_role_swap_symmetry(self):
        gold = {"d1": [("A", "x"), ("A", "y")]}
        pred = {"d1": [("A", "x"), ("B", "z")]}
        forward = score(gold, pred)
        backward = score(pred, gold)
        assert forward.precision == backward.recall
        assert forward.recall == backward.precision
        assert forward.f1 == backward.f1

    def test_casefold_default_tolerates_case_and_spacing(self):
        gold = {"d1": [("Isaria sinclairii", "myriocin")]}
        pred = {"d1": [("isaria  SINCLAIRII", "Myriocin")]}
        assert score(gold, pred).f1 == 1.0

    def test_exact_mode_distinguishes(self):
        gold = {"d1": [("Isaria sinclairii", "myriocin")]}
        pred = {"d1": [("isaria sinclairii", "myriocin")]}
        assert score(gold, pred, matching="exact").f1 == 0.0
        assert score(gold, pred, matching="casefold").f1 == 1.0

    def test_unknown_matching_mode(self):
        with pytest.raises(DataError):
            score({"d": [("a", "b")]}, {"d": [("a", "b")]}, matching="fuzzy")

    def test_role_sensitivity(self):
        # pairs are ordered: swapping organism and chemical is a miss
        gold = {"d1": [("A", "x")]}
        pred = {"d1": [("x", "A")]}
        assert score(gold, pred).f1 == 0.0


class TestMacro:
    def test_macro_differs_from_micro(self):
        gold = {"d1": [("A", "x")], "d2": [("B", f"y{i}") for i in range(9)]}
        pred = {"d1": [("A", "x")], "d2": []}
        report = score(gold, pred)
        macro_p, macro_r, macro_f = macro_average(report)
        assert macro_r == pytest.approx(0.5)
        assert report.recall == pytest.approx(0.1)

    def test_empty_report(self):
        assert macro_average(score({}, {})) == (0.0, 0.0, 0.0)


class TestKeywordPrecision:
    def test_fixture_three_of_ten(self):
        predicted = [f"kw{i}" for i in range(10)]
        gold = ["kw0", "kw3", "kw7", "other"]
        assert keyword_precision(predicted, gold, k=10) == pytest.approx(0.30)

    def test_superset_gold_is_one(self):
        predicted = ["alpha", "beta"]
        gold = ["alpha", "beta", "gamma", "delta"]
        assert keyword_precision(predicted, gold, k=5) == 1.0

    def test_denominator_is_considered_not_k(self):
        # only 2 predictions with k=5: precision over the 2 considered
        assert keyword_precision(["hit", "miss"], ["hit"], k=5) == 0.5

    def test_casefold_matching(self):
        assert keyword_precision(["Sponge"], ["sponge"], k=1) == 1.0

    def test_empty_predictions(self):
        assert keyword_precision([], ["x"], k=3) == 0.0

    def test_bad_k(self):
        with pytest.raises(DataError):
            keyword_precision(["x"], ["x"], k=0)

    def test_many_aggregates_over_documents(self):
        docs = [
            (["a", "b"], ["a"]),        # 1/2
            (["c", "d", "e"], ["c", "d"]),  # 2/2 at k=2
        ]
        assert keyword_precision_many(docs, k=2) == pytest.approx(3 / 4)


class TestLoaders:
    def test_load_gold_mapping_shape(self, tmp_path):
        path = tmp_path / "gold.json"
        path.write_text(json.dumps({
            "d1": [{"organism": "A", "chemical": "x", "chemical_id": "C1"}],
        }), encoding="utf-8")
        assert load_gold(str(path)) == {"d1": {("A", "x")}}

    def test_load_gold_list_shape_with_pmid(self, tmp_path):
        path = tmp_path / "gold.json"
        path.write_text(json.dumps([
            {"pmid": 123, "relations": [{"head": "A", "tail": "x"}]},
        ]), encoding="utf-8")
        assert load_gold(str(path)) == {"123": {("A", "x")}}

    def test_load_gold_ignore_classes(self, tmp_path):
        path = tmp_path / "gold.json"
        path.write_text(json.dumps({
            "d1": [
                {"organism": "A", "chemical": "x"},
                {"organism": "A", "chemical": "meroterpenoids", "is_class": True},
            ],
        }), encoding="utf-8")
        assert load_gold(str(path), ignore_classes=True) == {"d1": {("A", "x")}}
        assert len(load_gold(str(path))["d1"]) == 2

    def test_load_gold_missing_field(self, tmp_path):
        path = tmp_path / "gold.json"
        path.write_text(json.dumps({"d1": [{"organism": "A"}]}), encoding="utf-8")
        with pytest.raises(DataError):
            load_gold(str(path))

    def test_load_predictions(self, tmp_path):
        path = tmp_path / "pred.jsonl"
        path.write_text(
            '{"doc_id": "d1", "output": "A produces x; junk"}\n'
            '{"doc_id": "d2", "output": "B produces y"}\n',
            encoding="utf-8",
        )
        pred, malformed = load_predictions(str(path))
        assert pred == {"d1": {("A", "x")}, "d2": {("B", "y")}}
        assert malformed == 1

    def test_load_predictions_duplicate_doc(self, tmp_path):
        path = tmp_path / "pred.jsonl"
        path.write_text(
            '{"doc_id": "d1", "output": ""}\n{"doc_id": "d1", "output": ""}\n',
            encoding="utf-8",
        )
        with pytest.raises(DataError, match="duplicate"):
            load_predictions(str(path))
