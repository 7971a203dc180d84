mod common;

use common::*;
use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ugparse::{BackboneSpec, BulcOptions, BulcParser, EngineConfig, EngineKind, Grammar, Parser};

/// Every engine configuration that must agree with the oracle.
fn all_engines(g: &Grammar, backbone: &BackboneSpec) -> Vec<(String, Parser)> {
    let config = EngineConfig {
        backbone: backbone.clone(),
        ..EngineConfig::default()
    };
    let mut out: Vec<(String, Parser)> = EngineKind::ALL
        .iter()
        .map(|&k| {
            (
                k.name().to_string(),
                Parser::new(k, g, &config).expect("backbone applies"),
            )
        })
        .collect();
    let expanded = BulcOptions {
        expand_kleene: true,
        ..BulcOptions::default()
    };
    out.push((
        "bulc-expanded".into(),
        Parser::Bulc(BulcParser::new(g, expanded)),
    ));
    out
}

fn check_against_oracle(
    g: &Grammar,
    engines: &[(String, Parser)],
    tokens: &[String],
    context: &str,
) {
    let expected: Vec<String> = oracle_trees(g, tokens).into_iter().collect();
    for (name, p) in engines {
        let outcome = p.parse(tokens).expect("tokens are in the lexicon");
        let count = p.parse_count(&outcome);
        assert_eq!(
            count,
            BigUint::from(expected.len()),
            "{name}: parse count for {:?}\n{context}",
            tokens.join(" ")
        );
        let trees = engine_trees(p, &outcome);
        assert_eq!(
            trees,
            expected,
            "{name}: trees for {:?}\n{context}",
            tokens.join(" ")
        );
    }
}

#[test]
fn random_grammars_agree_with_oracle_on_all_short_strings() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let mut ambiguous = 0usize;
    let mut parsed = 0usize;
    for k in 0..50 {
        let (g, rg) = random_grammar(&mut rng);
        let engines = all_engines(&g, &BackboneSpec::new());
        for tokens in all_strings(&rg.words, 6) {
            let n = oracle_trees(&g, &tokens).len();
            parsed += usize::from(n > 0);
            ambiguous += usize::from(n > 1);
            check_against_oracle(&g, &engines, &tokens, &format!("grammar {k}:\n{}", rg.text));
        }
    }
    // The family must actually exercise the engines.
    assert!(parsed > 1000, "only {parsed} strings have a parse");
    assert!(ambiguous > 100, "only {ambiguous} strings are ambiguous");
}

#[test]
fn catalan_counts_match_oracle_up_to_eight_tokens() {
    let g = Grammar::parse(COMPOUND_ONLY).unwrap();
    let engines = all_engines(&g, &BackboneSpec::new());
    for n in 1..=8 {
        let tokens = vec!["n".to_string(); n];
        assert_eq!(
            BigUint::from(oracle_trees(&g, &tokens).len()),
            catalan(n - 1)
        );
        check_against_oracle(&g, &engines, &tokens, "N -> N N");
    }
}

#[test]
fn desk_grammar_short_sentences_match_oracle() {
    let g = load_grammar("desk.grammar");
    let engines = all_engines(&g, &BackboneSpec::new());
    let mut checked = 0;
    for tokens in load_corpus("desk.corpus").iter().filter(|t| t.len() <= 8) {
        check_against_oracle(&g, &engines, tokens, "desk grammar");
        checked += 1;
    }
    assert!(checked >= 40);
}

#[test]
fn kleene_fixtures_match_oracle() {
    let g = load_grammar("desk.grammar");
    let engines = all_engines(&g, &BackboneSpec::new());
    for s in [
        "Kim , Sandy and Lee sleep",
        "Kim , Sandy , Lee and the dogs sleep",
        "the big old red dog barks",
        "the big dog , the small cat and Lee ran",
    ] {
        let tokens = words(s);
        assert!(!oracle_trees(&g, &tokens).is_empty(), "{s} should parse");
        check_against_oracle(&g, &engines, &tokens, s);
    }
}
