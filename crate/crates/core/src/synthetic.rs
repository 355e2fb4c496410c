//! Deterministic synthetic corpora with topical structure.
//!
//! Every document belongs to a topic and mixes stopwords, a few words from its
//! topic pool, some corpus-wide general words, and three entity words that
//! occur nowhere else (each written twice). Each query targets one document:
//!
//! * `easy`: one entity word of the gold plus one or two of its topic words;
//! * `medium`: gold topic and general words only, no entity word;
//! * `hard`: topic-pool and general words the gold does *not* contain, so the
//!   gold is lexically disjoint from its query.

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{write_corpus, write_qrels, write_queries, Document, Qrels, Query};
use crate::error::{Error, Result};
use crate::suggest::stopwords;

const ONSETS: [&str; 18] = ["b", "c", "d", "f", "g", "h", "j", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br"];
const VOWELS: [&str; 6] = ["a", "e", "i", "o", "u", "ai"];
const CODAS: [&str; 4] = ["n", "r", "s", "l"];
const GLUE: [&str; 10] = ["the", "of", "and", "in", "is", "to", "a", "for", "with", "on"];
const QUESTION_PREFIXES: [&str; 4] = ["what is the", "where is", "how to", "which"];

const TOPIC_POOL: usize = 16;
const TOPIC_WORDS_PER_DOC: usize = 5;
const GENERAL_WORDS: usize = 200;
const GENERAL_PER_DOC: usize = 3;
const ENTITIES_PER_DOC: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub docs: usize,
    pub queries: usize,
    pub docs_per_topic: usize,
    pub hard_fraction: f64,
    pub medium_fraction: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    /// 1000 documents, 200 queries.
    pub fn fixture() -> Self {
        Self { docs: 1000, queries: 200, docs_per_topic: 20, hard_fraction: 0.6, medium_fraction: 0.15, seed: 7 }
    }

    /// 500 documents, 200 queries.
    pub fn sample() -> Self {
        Self { docs: 500, queries: 200, docs_per_topic: 20, hard_fraction: 0.5, medium_fraction: 0.2, seed: 42 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub docs: Vec<Document>,
    pub queries: Vec<Query>,
    pub qrels: Qrels,
}

impl SyntheticCorpus {
    /// Writes `corpus.jsonl`, `queries.tsv` and `qrels.txt` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_corpus(&dir.join("corpus.jsonl"), &self.docs)?;
        write_queries(&dir.join("queries.tsv"), &self.queries)?;
        write_qrels(&dir.join("qrels.txt"), &self.qrels)?;
        Ok(())
    }
}

struct WordMint {
    rng: ChaCha8Rng,
    used: HashSet<String>,
}

impl WordMint {
    fn next(&mut self) -> String {
        loop {
            let syllables = self.rng.random_range(2..=3);
            let mut w = String::new();
            for _ in 0..syllables {
                w.push_str(ONSETS.choose(&mut self.rng).unwrap());
                w.push_str(VOWELS.choose(&mut self.rng).unwrap());
                if self.rng.random_bool(0.3) {
                    w.push_str(CODAS.choose(&mut self.rng).unwrap());
                }
            }
            if w.len() >= 4 && !stopwords::english().contains(&w) && self.used.insert(w.clone()) {
                return w;
            }
        }
    }

    fn many(&mut self, n: usize) -> Vec<String> {
        (0..n).map(|_| self.next()).collect()
    }
}

struct DocPlan {
    topic: usize,
    entities: Vec<String>,
    topic_words: Vec<String>,
    general: Vec<String>,
}

fn render(rng: &mut ChaCha8Rng, mut content: Vec<String>) -> String {
    content.shuffle(rng);
    let mut out: Vec<String> = Vec::new();
    for (i, w) in content.into_iter().enumerate() {
        if i % 2 == 0 {
            out.push(GLUE.choose(rng).unwrap().to_string());
        }
        out.push(w);
    }
    out.join(" ")
}

pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticCorpus> {
    if spec.docs == 0 || spec.docs_per_topic == 0 || spec.queries > spec.docs {
        return Err(Error::InvalidConfig("need docs >= queries >= 0 and docs_per_topic >= 1".into()));
    }
    if !(0.0..=1.0).contains(&(spec.hard_fraction + spec.medium_fraction)) {
        return Err(Error::InvalidConfig("query type fractions must sum to at most 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut mint = WordMint { rng: ChaCha8Rng::seed_from_u64(spec.seed ^ 0x5eed), used: HashSet::new() };
    let topics = spec.docs.div_ceil(spec.docs_per_topic);
    let pools: Vec<Vec<String>> = (0..topics).map(|_| mint.many(TOPIC_POOL)).collect();
    let general = mint.many(GENERAL_WORDS);

    let width = spec.docs.to_string().len().max(4);
    let mut plans = Vec::with_capacity(spec.docs);
    let mut docs = Vec::with_capacity(spec.docs);
    for i in 0..spec.docs {
        let topic = i % topics;
        let plan = DocPlan {
            topic,
            entities: mint.many(ENTITIES_PER_DOC),
            topic_words: pools[topic].choose_multiple(&mut rng, TOPIC_WORDS_PER_DOC).cloned().collect(),
            general: general.choose_multiple(&mut rng, GENERAL_PER_DOC).cloned().collect(),
        };
        let mut content: Vec<String> = plan.entities.iter().flat_map(|e| [e.clone(), e.clone()]).collect();
        content.extend(plan.topic_words.iter().cloned());
        content.extend(plan.general.iter().cloned());
        let text = render(&mut rng, content);
        let title = Some(format!("{} {}", plan.entities[0], plan.topic_words[0]));
        docs.push(Document { doc_id: format!("d{:0width$}", i + 1), text, title });
        plans.push(plan);
    }

    let mut gold_order: Vec<usize> = (0..spec.docs).collect();
    gold_order.shuffle(&mut rng);
    let n_hard = (spec.queries as f64 * spec.hard_fraction).round() as usize;
    let n_medium = (spec.queries as f64 * spec.medium_fraction).round() as usize;
    let qwidth = spec.queries.to_string().len().max(3);
    let mut queries = Vec::with_capacity(spec.queries);
    let mut qrels = Qrels::default();
    for (qi, &gold) in gold_order.iter().take(spec.queries).enumerate() {
        let plan = &plans[gold];
        let mut words: Vec<String> = if qi < n_hard {
            let own: BTreeSet<&String> = plan.topic_words.iter().chain(&plan.general).collect();
            let foreign: Vec<&String> = pools[plan.topic].iter().filter(|w| !own.contains(w)).collect();
            let mut w: Vec<String> = foreign.choose_multiple(&mut rng, 3).map(|s| (*s).clone()).collect();
            let other_general: Vec<&String> = general.iter().filter(|g| !own.contains(g)).collect();
            w.push((*other_general.choose(&mut rng).unwrap()).clone());
            w
        } else if qi < n_hard + n_medium {
            let mut w: Vec<String> = plan.topic_words.choose_multiple(&mut rng, 2).cloned().collect();
            w.push(plan.general.choose(&mut rng).unwrap().clone());
            w
        } else {
            let mut w = vec![plan.entities.choose(&mut rng).unwrap().clone()];
            let n_topic = rng.random_range(1..=2);
            w.extend(plan.topic_words.choose_multiple(&mut rng, n_topic).cloned());
            w
        };
        words.shuffle(&mut rng);
        let mut text = words.join(" ");
        if rng.random_bool(0.25) {
            text = format!("{} {text}", QUESTION_PREFIXES.choose(&mut rng).unwrap());
        }
        let query_id = format!("q{:0qwidth$}", qi + 1);
        qrels.insert(&query_id, &docs[gold].doc_id, 1);
        queries.push(Query::new(query_id, text));
    }
    queries.sort_by(|a, b| a.query_id.cmp(&b.query_id));
    Ok(SyntheticCorpus { docs, queries, qrels })
}
