import pytest

from divsample.corpus import Document, Entity, EntityKind, Relation
from divsample.errors import DataError
from divsample.mention import detect_enumerations
from divsample.verbalise import (
    TransformationConfig,
    build_exclusion_list,
    build_instruction,
    derive_seed,
    filter_keywords,
    make_instructions,
    verbalise_findings,
)

from conftest import make_org


def chem(label, eid):
    return Entity(id=eid, label=label, kind=EntityKind.chemical)


def series_relations(stem="cystodione", letters="ABCD", org=1):
    organism = make_org(org)
    return [
        Relation(organism, chem(f"{stem} {letter}", f"C{letter}"))
        for letter in letters
    ]


IDENTITY = TransformationConfig(
    p_class_replace=0.0, p_contract=0.0, p_shuffle=0.0, p_number=0.0,
    p_direction=0.0, temperatures=frozenset({0.7}),
)


def with_probs(**kwargs):
    base = dict(
        p_class_replace=0.0, p_contract=0.0, p_shuffle=0.0, p_number=0.0,
        p_direction=0.0, temperatures=frozenset({0.7}), rng_seed=0,
    )
    base.update(kwargs)
    return TransformationConfig(**base)


class TestIdentityConfig:
    def test_plain_rendering(self):
        rels = series_relations(letters="AB")
        out = verbalise_findings(rels, cfg=IDENTITY)
        assert out.text == "Organism 1 produces cystodione A and cystodione B."
        assert out.expected_relations == rels
        assert out.applied == set()
        assert out.direction == "produces"
        assert out.temperature == 0.7

    def test_two_organisms_two_sentences(self):
        rels = [
            Relation(make_org(1), chem("alphanine", "C1")),
            Relation(make_org(2), chem("betanine", "C2")),
        ]
        out = verbalise_findings(rels, cfg=IDENTITY)
        assert out.text == "Organism 1 produces alphanine. Organism 2 produces betanine."

    def test_empty_relations_rejected(self):
        with pytest.raises(DataError):
            verbalise_findings([], cfg=IDENTITY)


class TestContraction:
    def test_series_contracts_but_expected_keeps_members(self):
        rels = series_relations(letters="ABCD")
        out = verbalise_findings(rels, cfg=with_probs(p_contract=1.0))
        assert "cystodiones A-D" in out.text
        assert "contract" in out.applied
        assert len(out.expected_relations) == 4
        assert [r.chemical.label for r in out.expected_relations] == [
            "cystodione A", "cystodione B", "cystodione C", "cystodione D",
        ]

    def test_pair_rendered_with_and(self):
        rels = series_relations(stem="wortmannin", letters="CD")
        out = verbalise_findings(rels, cfg=with_probs(p_contract=1.0))
        assert "wortmannins C and D" in out.text

    def test_numbering_appended(self):
        rels = series_relations(letters="ABC")
        out = verbalise_findings(rels, cfg=with_probs(p_contract=1.0, p_number=1.0))
        assert "cystodiones A-C (1-3)" in out.text
        assert {"contract", "number"} <= out.applied

    def test_contracted_surface_round_trips_through_detector(self):
        rels = series_relations(letters="ABCD")
        out = verbalise_findings(rels, cfg=with_probs(p_contract=1.0, p_number=1.0))
        patterns = detect_enumerations(out.text)
        members = {m for p in patterns for m in p.members}
        assert {r.chemical.label for r in out.expected_relations} <= members

    def test_s_ending_stem_left_verbatim(self):
        rels = series_relations(stem="fuscus", letters="AB")
        out = verbalise_findings(rels, cfg=with_probs(p_contract=1.0))
        assert "fuscus A and fuscus B" in out.text
        assert "contract" not in out.applied

    def test_non_series_labels_untouched(self):
        rels = [Relation(make_org(1), chem("fingolimod", "C1"))]
        out = verbalise_findings(rels, cfg=with_probs(p_contract=1.0))
        assert out.text == "Organism 1 produces fingolimod."


class TestClassReplacement:
    def class_map(self, rels):
        cls = Entity(id="CL1", label="meroterpenoids", kind=EntityKind.chemical_class)
        return {rel.chemical.id: cls for rel in rels}

    def test_group_replaced_by_single_class_relation(self):
        rels = series_relations(letters="ABC")
        out = verbalise_findings(rels, self.class_map(rels), with_probs(p_class_replace=1.0))
        assert out.text == "Organism 1 produces Three meroterpenoids."
        assert "class_replace" in out.applied
        assert len(out.expected_relations) == 1
        only = out.expected_relations[0]
        assert only.chemical.kind is EntityKind.chemical_class
        assert only.chemical.label == "meroterpenoids"

    def test_singleton_class_not_replaced(self):
        rels = series_relations(letters="A")
        out = verbalise_findings(rels, self.class_map(rels), with_probs(p_class_replace=1.0))
        assert out.text == "Organism 1 produces cystodione A."
        assert "class_replace" not in out.applied


class TestDirectionFlip:
    def test_flip_single(self):
        rels = [Relation(make_org(1), chem("fingolimod", "C1"))]
        out = verbalise_findings(rels, cfg=with_probs(p_direction=1.0))
        assert out.text == "fingolimod was isolated from Organism 1."
        assert out.direction == "isolated_from"

    def test_flip_plural_agreement(self):
        rels = series_relations(letters="AB")
        out = verbalise_findings(rels, cfg=with_probs(p_direction=1.0))
        assert "were isolated from Organism 1." in out.text

    def test_flip_contracted_series_is_plural(self):
        rels = series_relations(letters="ABC")
        out = verbalise_findings(rels, cfg=with_probs(p_direction=1.0, p_contract=1.0))
        assert out.text == "cystodiones A-C were isolated from Organism 1."


class TestInvariants:
    def cases(self):
        rels = series_relations(letters="ABCD") + [
            Relation(make_org(2), chem("otherol", "CX")),
            Relation(make_org(2), chem("otherol B", "CY")),
        ]
        for seed in range(60):
            yield rels, TransformationConfig(rng_seed=seed)

    def test_label_soundness(self):
        # every expected label (or its contracted series) appears in the text
        for rels, cfg in self.cases():
            out = verbalise_findings(rels, cfg=cfg)
            members = {m for p in detect_enumerations(out.text) for m in p.members}
            for rel in out.expected_relations:
                assert rel.chemical.label in out.text or rel.chemical.label in members
                assert rel.organism.label in out.text

    def test_conservation_without_class_map(self):
        for rels, cfg in self.cases():
            out = verbalise_findings(rels, cfg=cfg)
            assert sorted(id(r) for r in out.expected_relations) == sorted(id(r) for r in rels)

    def test_temperature_from_configured_set(self):
        for rels, cfg in self.cases():
            out = verbalise_findings(rels, cfg=cfg)
            assert out.temperature in cfg.temperatures

    def test_seeded_determinism(self):
        rels = series_relations(letters="ABCD")
        cfg = TransformationConfig(rng_seed=17)
        a = verbalise_findings(rels, cfg=cfg)
        b = verbalise_findings(rels, cfg=cfg)
        assert a.text == b.text
        assert a.applied == b.applied
        assert a.temperature == b.temperature
        assert [r.chemical.id for r in a.expected_relations] == [
            r.chemical.id for r in b.expected_relations
        ]

    def test_seeds_vary_output(self):
        rels = series_relations(letters="ABCD")
        texts = {
            verbalise_findings(rels, cfg=TransformationConfig(rng_seed=s)).text
            for s in range(30)
        }
        assert len(texts) > 1


class TestConfigValidation:
    def test_probability_out_of_range(self):
        with pytest.raises(DataError):
            TransformationConfig(p_contract=1.5)
        with pytest.raises(DataError):
            TransformationConfig(p_shuffle=-0.1)

    def test_empty_temperatures(self):
        with pytest.raises(DataError):
            TransformationConfig(temperatures=frozenset())


class TestKeywords:
    def test_exclusion_list_contents(self):
        org = Entity(id="O1", label="Isaria sinclairii",
                     synonyms=frozenset({"Cordyceps sinclairii"}), kind=EntityKind.organism)
        doc = Document("d1", "t", "a", "Fungi", [Relation(org, chem("myriocin", "C1"))])
        exclusion = build_exclusion_list(doc, annotations=["thermozymocidin"],
                                         synonyms={"C1": {"ISP-1"}})
        assert exclusion == {
            "isaria sinclairii", "cordyceps sinclairii", "myriocin",
            "isp-1", "thermozymocidin",
        }

    def test_filter_equal_containing_contained(self):
        exclusion = {"myriocin", "isaria sinclairii"}
        kept = filter_keywords(
            ["Myriocin", "myriocin analog", "Isaria", "immunosuppressant"],
            exclusion,
        )
        assert kept == ["immunosuppressant"]

    def test_filter_keeps_order(self):
        kept = filter_keywords(["beta", "alpha"], set())
        assert kept == ["beta", "alpha"]


class TestInstructions:
    def doc(self):
        return Document("d1", "Metabolites of Organism 1", "a", "Fungi",
                        series_relations(letters="AB"))

    def test_prompt_slots_filled(self):
        findings = verbalise_findings(self.doc().relations, cfg=IDENTITY)
        instr = build_instruction(self.doc(), ["sponge", "cytotoxicity"], findings)
        assert '"Metabolites of Organism 1"' in instr.prompt_text
        assert "sponge, cytotoxicity" in instr.prompt_text
        assert findings.text in instr.prompt_text
        assert instr.seed_doc_id == "d1"

    def test_brace_containing_title_is_literal(self):
        doc = Document("d1", "Study of {weird} title", "a", "Fungi",
                       series_relations(letters="AB"))
        findings = verbalise_findings(doc.relations, cfg=IDENTITY)
        instr = build_instruction(doc, [], findings)
        assert "{weird}" in instr.prompt_text

    def test_unknown_template_errors(self):
        findings = verbalise_findings(self.doc().relations, cfg=IDENTITY)
        with pytest.raises(DataError, match="no-such-template"):
            build_instruction(self.doc(), [], findings, template_id="no-such-template")

    def test_templates_dir_override(self, tmp_path):
        (tmp_path / "custom.txt").write_text(
            "T={title} K={keywords} F={findings}", encoding="utf-8")
        findings = verbalise_findings(self.doc().relations, cfg=IDENTITY)
        instr = build_instruction(self.doc(), ["kw"], findings,
                                  template_id="custom", templates_dir=str(tmp_path))
        assert instr.prompt_text.startswith("T=Metabolites of Organism 1 K=kw F=")

    def test_make_instructions_deterministic_and_distinct(self):
        cfg = TransformationConfig()
        a = make_instructions(self.doc(), ["kw"], cfg, m=10, root_seed=7)
        b = make_instructions(self.doc(), ["kw"], cfg, m=10, root_seed=7)
        assert [i.prompt_text for i in a] == [i.prompt_text for i in b]
        assert len(a) == 10
        # different per-instruction seeds give more than one realization
        assert len({i.findings.text for i in a}) > 1

    def test_root_seed_changes_output(self):
        cfg = TransformationConfig()
        a = make_instructions(self.doc(), ["kw"], cfg, m=10, root_seed=7)
        c = make_instructions(self.doc(), ["kw"], cfg, m=10, root_seed=8)
        assert [i.findings.text for i in a] != [i.findings.text for i in c]

    def test_no_relations_rejected(self):
        doc = Document("d1", "t", "a", "Fungi", [])
        with pytest.raises(DataError):
            make_instructions(doc, [], TransformationConfig(), m=1, root_seed=0)


class TestDeriveSeed:
    def test_stable_and_distinct(self):
        assert derive_seed(1, "d1", 0) == derive_seed(1, "d1", 0)
        assert derive_seed(1, "d1", 0) != derive_seed(1, "d1", 1)
        assert derive_seed(1, "d1", 0) != derive_seed(2, "d1", 0)

    def test_range(self):
        s = derive_seed(123, "doc", 4)
        assert 0 <= s < 2 ** 64
