use proptest::prelude::*;
use serde::Deserialize;
use vi_probe_core::answer::{compliant_reply, parse_answer, Answer};

#[derive(Deserialize)]
struct Case {
    kind: String,
    text: String,
    expected: String,
}

fn corpus() -> Vec<Case> {
    serde_json::from_str(include_str!("fixtures/parser_corpus.json")).unwrap()
}

#[test]
fn corpus_classification() {
    let cases = corpus();
    assert_eq!(cases.len(), 50);
    for c in &cases {
        let got = parse_answer(&c.text).value.to_string();
        assert_eq!(got, c.expected, "{} case {:?}", c.kind, c.text);
    }
}

proptest! {
    #[test]
    fn parser_is_total(s in ".*") {
        let _ = parse_answer(&s);
    }

    #[test]
    fn compliant_round_trip(reasons in "[^<]*", bit in 0u8..2) {
        let parsed = parse_answer(&compliant_reply(&reasons, bit));
        prop_assert_eq!(parsed.value, Answer::from_bit(bit));
        prop_assert_eq!(parsed.reasons_text.unwrap(), reasons.trim());
    }
}
