import pytest

from sparqlkit.core import (
    CountAggregate,
    Filter,
    OptionalGroup,
    ParseError,
    PatternGroup,
    QueryForm,
    Style,
    SubGroup,
    Term,
    TripleBlock,
    TriplePattern,
    UnionGroup,
    UnsupportedFeature,
    expand_abbreviations,
    parse,
    serialize,
)

PAPER_QUERY = "select distinct ?ans where { ?ans wdt:P279 wd:Q25356}"


def test_paper_query_ast():
    ast = parse(PAPER_QUERY)
    assert ast.form is QueryForm.SELECT
    assert ast.distinct is True
    assert ast.projection == (Term.variable("ans"),)
    assert ast.where == PatternGroup(
        (
            TripleBlock(
                (TriplePattern(Term.variable("ans"), Term.pname("wdt:P279"), Term.pname("wd:Q25356")),)
            ),
        )
    )


def test_keywords_case_insensitive():
    assert parse(PAPER_QUERY) == parse(PAPER_QUERY.upper().replace("WDT:P279", "wdt:P279").replace("WD:Q25356", "wd:Q25356").replace("?ANS", "?ans"))


def test_empty_ask():
    ast = parse("ASK { }")
    assert ast.form is QueryForm.ASK
    assert ast.where == PatternGroup(())
    assert serialize(ast) == "ask where { }"


def test_canonical_serialization_paper_query():
    assert serialize(parse(PAPER_QUERY)) == "select distinct ?ans where { ?ans wdt:P279 wd:Q25356 }"


def test_compact_serialization_reparses(corpus):
    for q in corpus:
        ast = parse(q)
        assert parse(serialize(ast, Style.COMPACT)) == ast


def test_round_trip_over_corpus(corpus):
    for q in corpus:
        ast = parse(q)
        again = parse(serialize(ast))
        assert again == ast, q


def test_abbreviation_flags_retained_and_expandable():
    ast = parse("select ?x where { ?x wdt:P26 ?y ; wdt:P279 ?z }")
    block = ast.where.items[0]
    assert block.links == (".", ";")
    assert block.abbreviated
    expanded = expand_abbreviations(ast)
    assert serialize(expanded) == "select ?x where { ?x wdt:P26 ?y . ?x wdt:P279 ?z }"
    # round-trip of the abbreviated form keeps the abbreviation
    assert serialize(ast) == "select ?x where { ?x wdt:P26 ?y ; wdt:P279 ?z }"
    assert parse(serialize(ast)) == ast


def test_comma_abbreviation_shares_subject_and_predicate():
    expanded = expand_abbreviations(parse("select ?x where { ?x wdt:P26 ?y , ?z }"))
    block = expanded.where.items[0]
    assert [p.subject.text for p in block.patterns] == ["x", "x"]
    assert [p.predicate.text for p in block.patterns] == ["wdt:P26", "wdt:P26"]
    assert [p.object.text for p in block.patterns] == ["y", "z"]


def test_expand_is_identity_without_abbreviations():
    ast = parse("select ?x where { ?x wdt:P31 wd:Q5 . ?x wdt:P17 wd:Q183 }")
    assert expand_abbreviations(ast) == ast


def test_count_forms():
    bare = parse("select count ( ?x ) where { ?x wdt:P31 wd:Q146 }")
    assert bare.projection == (CountAggregate(Term.variable("x")),)
    aliased = parse("select ( count ( distinct ?uri ) as ?c ) where { ?uri wdt:P31 wd:Q146 }")
    assert aliased.projection == (
        CountAggregate(Term.variable("uri"), distinct=True, alias=Term.variable("c")),
    )


def test_union_nesting_structure():
    ast = parse("select ?a where { { ?a wdt:P1 ?b } union { ?a wdt:P2 ?c } union { ?a wdt:P3 ?d } }")
    union = ast.where.items[0]
    assert isinstance(union, UnionGroup)
    assert isinstance(union.left.items[0], UnionGroup)


def test_lone_braced_group_is_subgroup():
    ast = parse("select ?x where { { ?x wdt:P31 wd:Q515 } }")
    assert isinstance(ast.where.items[0], SubGroup)


def test_optional_and_filter_items():
    ast = parse(
        "select ?n where { ?n wdt:P1082 ?pop . optional { ?n wdt:P17 ?c } filter ( ?pop > 10 ) }"
    )
    kinds = [type(item) for item in ast.where.items]
    assert kinds == [TripleBlock, OptionalGroup, Filter]
    assert ast.where.items[2].tokens == ("(", "?pop", ">", "10", ")")


def test_filter_keywords_lowercased():
    a = parse('select ?x where { ?x rdfs:label ?l filter ( LANG ( ?l ) = "en" ) }')
    b = parse('select ?x where { ?x rdfs:label ?l filter ( lang ( ?l ) = "en" ) }')
    assert a == b


def test_variable_sigil_ignored_in_comparison():
    assert parse("select ?x where { ?x wdt:P31 wd:Q5 }") == parse(
        "select $x where { $x wdt:P31 wd:Q5 }"
    )


def test_prefix_declarations_discarded():
    with_prefix = parse(
        "PREFIX wd: <http://www.wikidata.org/entity/> select ?x where { ?x wdt:P31 wd:Q5 }"
    )
    assert with_prefix == parse("select ?x where { ?x wdt:P31 wd:Q5 }")


def test_literal_quote_normalization():
    a = parse("select ?x where { ?x wdt:P1448 'Berlin' }")
    b = parse('select ?x where { ?x wdt:P1448 "Berlin" }')
    assert a == b
    assert serialize(a) == 'select ?x where { ?x wdt:P1448 "Berlin" }'


def test_escaped_string_round_trip():
    q = 'select ?x where { ?x rdfs:label "a \\"quote\\" and \\\\ slash" }'
    ast = parse(q)
    assert parse(serialize(ast)) == ast


def test_solution_modifiers():
    ast = parse("select ?m where { ?m wdt:P577 ?d } order by desc ( ?d ) limit 20 offset 40")
    mods = ast.modifiers
    assert mods.order_by.direction == "desc"
    assert mods.order_by.key == Term.variable("d")
    assert (mods.limit, mods.offset) == (20, 40)


def test_parse_error_reports_token_index():
    with pytest.raises(ParseError) as err:
        parse("select ?x where { ?x wdt:P31 }")
    assert err.value.token_index >= 5


@pytest.mark.parametrize(
    "query,feature",
    [
        ("construct { ?x ?p ?o } where { ?x ?p ?o }", "CONSTRUCT"),
        ("select ?x where { ?x wdt:P31/wdt:P279 wd:Q5 }", "property path"),
        ("select ?x where { service <http://e> { ?x ?p ?o } }", "SERVICE"),
        ("select ?x where { ?x ?p ?o . bind ( 1 as ?x ) }", "BIND"),
        ("select ?x where { ?x ?p ?o } group by ?x", "GROUP"),
        ("select ?x where { ?x ?p ?o . filter exists { ?x ?p ?o } }", "FILTER EXISTS"),
        ("select ?x where { { select ?x where { ?x ?p ?o } } }", "subselect"),
        ("select ?x where { ?x a wd:Q5 }", "rdf:type shorthand 'a'"),
        ("select * where { ?x ?p ?o }", "SELECT *"),
    ],
)
def test_unsupported_features(query, feature):
    with pytest.raises(UnsupportedFeature) as err:
        parse(query)
    assert feature.lower() in str(err.value).lower()


def test_unbound_projection_rejected():
    with pytest.raises(ParseError, match="not bound"):
        parse("select ?y where { ?x wdt:P31 wd:Q5 }")


def test_filter_only_variable_counts_as_bound():
    # a variable appearing only inside FILTER is still "somewhere in where"
    parse("select ?x where { ?x wdt:P31 wd:Q5 filter ( ?x != wd:Q42 ) }")
