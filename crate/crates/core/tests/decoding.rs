mod common;

use lirlab::decoder::{paragraph_to_query_eval, round_trip_eval, DecoderConfig, QueryDecoder};
use lirlab::{inner_product, Decoding, Embedding, Error, Query};
use serde_json::json;

use common::*;

fn first_gold_embedding() -> Embedding {
    let (data, lab) = fixture();
    let q = &data.queries[0];
    lab.doc_embedding(data.qrels.gold(&q.query_id).unwrap()).unwrap()
}

#[test]
fn decoding_contract_on_fixture_queries() {
    let (data, lab) = fixture();
    let vocab_scores: Vec<Embedding> =
        lab.decoder().vocabulary().tokens().iter().map(|t| lab.encode(t.as_str()).unwrap()).collect();
    for q in data.queries.iter().step_by(10) {
        let z = lab.encode(&q.text).unwrap();
        let dec = lab.decoder().decode(&z).unwrap();
        assert!((1..=12).contains(&dec.tokens.len()));
        let fresh = inner_product(&lab.encode(&dec.text).unwrap(), &z).unwrap();
        assert!((fresh - dec.reencode_similarity).abs() < 1e-6);
        let best_single = vocab_scores.iter().map(|v| inner_product(v, &z).unwrap()).fold(f64::MIN, f64::max);
        assert!(
            dec.reencode_similarity >= best_single - 1e-6,
            "{}: {} < {best_single}",
            q.text,
            dec.reencode_similarity
        );
        assert_eq!(dec, lab.decoder().decode(&z).unwrap());
    }
}

#[test]
fn wider_search_beats_greedy_on_round_trip() {
    let (data, lab) = fixture();
    let subset: Vec<Query> = data.queries.iter().step_by(5).cloned().collect();
    let beam = round_trip_eval(&subset, lab.encoder(), lab.decoder()).unwrap();
    let greedy = lab.decoder().with_config(DecoderConfig::greedy()).unwrap();
    let base = round_trip_eval(&subset, lab.encoder(), &greedy).unwrap();
    assert!(beam.mean_f1 > base.mean_f1);
    assert!(beam.mean_cosine > base.mean_cosine);
}

#[test]
fn decode_of_gold_paragraph_is_frozen() {
    let (_, lab) = fixture();
    let dec = lab.decoder().decode(&first_gold_embedding()).unwrap();
    check_frozen("decode_gold_q001.json", &json!({ "text": dec.text }));
}

#[test]
fn sampled_decodings_are_frozen() {
    let (_, lab) = fixture();
    let cfg = DecoderConfig { sample_temperature: 0.05, seed: 7, num_samples: 10, ..DecoderConfig::default() };
    let sampler = lab.decoder().with_config(cfg).unwrap();
    let z = first_gold_embedding();
    let a = sampler.decode_samples(&z).unwrap();
    assert_eq!(a, sampler.decode_samples(&z).unwrap());
    assert!(!a.is_empty() && a.len() <= 10);
    let texts: Vec<&str> = a.iter().map(|d| d.text.as_str()).collect();
    check_frozen("decode_samples_q001_seed7.json", &json!({ "texts": texts }));
}

#[test]
fn zero_temperature_ignores_seed() {
    let (_, lab) = fixture();
    let z = first_gold_embedding();
    let a = lab.decoder().with_config(DecoderConfig { seed: 1, num_samples: 3, ..DecoderConfig::default() }).unwrap();
    let b = lab.decoder().with_config(DecoderConfig { seed: 2, num_samples: 3, ..DecoderConfig::default() }).unwrap();
    let (sa, sb) = (a.decode_samples(&z).unwrap(), b.decode_samples(&z).unwrap());
    assert_eq!(sa.len(), 1);
    assert_eq!(sa, sb);
}

struct EchoDocs<'a>(&'a lirlab::Lab);

impl QueryDecoder for EchoDocs<'_> {
    fn decode(&self, z: &Embedding) -> lirlab::Result<Decoding> {
        let top = self.0.search(z, 1)?;
        let text = self.0.doc(&top.entries[0].doc_id)?.text.clone();
        Ok(Decoding { reencode_similarity: 1.0, tokens: lirlab::tokenize(&text), text })
    }
}

#[test]
fn paragraph_to_query_with_text_echo_is_perfect() {
    let (data, lab) = fixture();
    let got = paragraph_to_query_eval(&data.qrels, lab.docs(), lab.index(), lab.encoder(), &EchoDocs(lab), &[1, 3, 5])
        .unwrap();
    assert_eq!(got[&1], 1.0);
    assert_eq!(got[&5], 1.0);
}

#[test]
fn paragraph_to_query_unknown_gold() {
    let lab = small_lab(&["alpha beta", "gamma delta"]);
    let qrels = lirlab::corpus::parse_qrels("q1 0 missing 1\n").unwrap();
    let res = paragraph_to_query_eval(&qrels, lab.docs(), lab.index(), lab.encoder(), lab.decoder(), &[1]);
    assert!(matches!(res, Err(Error::UnknownDocId(_))));
}
