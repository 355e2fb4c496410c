use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::BootstrapStats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRow {
    pub method: String,
    /// One entry per cutoff in `EvalReport::ks`.
    pub best_of_k: Vec<BootstrapStats>,
    pub self_bleu: Option<f64>,
    pub perplexity: Option<f64>,
    pub mean_suggestions: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub queries: usize,
    pub ks: Vec<usize>,
    pub bootstrap_resamples: usize,
    pub seed: u64,
    pub original: MethodRow,
    pub methods: Vec<MethodRow>,
}

pub type CsvRow = Vec<String>;

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map(|x| format!("{x:.digits$}")).unwrap_or_default()
}

impl EvalReport {
    pub fn rows(&self) -> impl Iterator<Item = &MethodRow> {
        std::iter::once(&self.original).chain(&self.methods)
    }

    /// Method x best-of-k table with bootstrap std, one row per method.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method");
        for k in &self.ks {
            write!(out, ",best@{k},std@{k},p2.5@{k},p97.5@{k}").unwrap();
        }
        out.push_str(",self_bleu,ppl,mean_suggestions\n");
        for row in self.rows() {
            out.push_str(&row.method);
            for s in &row.best_of_k {
                write!(out, ",{:.4},{:.4},{:.4},{:.4}", s.mean, s.std, s.p2_5, s.p97_5).unwrap();
            }
            writeln!(out, ",{},{},{:.2}", opt(row.self_bleu, 2), opt(row.perplexity, 2), row.mean_suggestions).unwrap();
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = format!("{:<14}", "method");
        for k in &self.ks {
            write!(out, " {:>16}", format!("best@{k}")).unwrap();
        }
        writeln!(out, " {:>10} {:>10}", "self-bleu", "ppl").unwrap();
        for row in self.rows() {
            write!(out, "{:<14}", row.method).unwrap();
            for s in &row.best_of_k {
                write!(out, " {:>16}", format!("{:.3} ± {:.3}", s.mean, s.std)).unwrap();
            }
            writeln!(out, " {:>10} {:>10}", opt(row.self_bleu, 2), opt(row.perplexity, 1)).unwrap();
        }
        out
    }

    /// Structural checks: cutoffs non-decreasing per method and never below
    /// the original-query mean.
    pub fn validate(&self) -> Result<(), String> {
        if self.ks.is_empty() {
            return Err("no cutoffs".into());
        }
        let base = self.original.best_of_k.first().map(|s| s.mean).unwrap_or(0.0);
        for row in self.rows() {
            if row.best_of_k.len() != self.ks.len() {
                return Err(format!("{}: expected {} cutoffs", row.method, self.ks.len()));
            }
            for w in row.best_of_k.windows(2) {
                if w[1].mean + 1e-12 < w[0].mean {
                    return Err(format!("{}: best-of-k decreases", row.method));
                }
            }
            if row.best_of_k.iter().any(|s| s.mean + 1e-12 < base || !(0.0..=1.0).contains(&s.mean)) {
                return Err(format!("{}: best-of-k below original or out of range", row.method));
            }
        }
        Ok(())
    }
}
