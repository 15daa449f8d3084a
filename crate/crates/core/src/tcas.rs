//! Token-class alignment similarity.
//!
//! Counts how patches of each true class spread over the tokens, turns every
//! token's row into a class distribution, and penalizes rows that are not
//! one-hot and pairs of rows that overlap:
//!
//! ```text
//! TCAS = 1/l1 * sum_i (1 - |R(i)|_2)^2 + 1/l1^2 * sum_{i != i'} (R(i) . R(i'))^2
//! ```
//!
//! Zero means every used token maps to exactly one class and no two tokens
//! share a class distribution direction. Tokens that no patch uses count as
//! a full miss in the first term.

use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ACCUMULATE_CHUNK: usize = 4096;

/// l1 x l2 token-by-class patch counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoOccurrence {
    pub l1: usize,
    pub l2: usize,
    pub counts: Vec<u64>,
}

impl CoOccurrence {
    pub fn zeros(l1: usize, l2: usize) -> Self {
        Self {
            l1,
            l2,
            counts: vec![0; l1 * l2],
        }
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let l2 = rows.first().map_or(0, |r| r.len());
        if let Some(i) = rows.iter().position(|r| r.len() != l2) {
            return Err(Error::validation(format!(
                "row {i} has a different class count"
            )));
        }
        Ok(Self {
            l1: rows.len(),
            l2,
            counts: rows.concat(),
        })
    }

    pub fn get(&self, token: usize, class: usize) -> u64 {
        self.counts[token * self.l2 + class]
    }

    pub fn row(&self, token: usize) -> &[u64] {
        &self.counts[token * self.l2..(token + 1) * self.l2]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// CSV with a header of class ids and one line of counts per token.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let header: Vec<String> = (0..self.l2).map(|j| j.to_string()).collect();
        writeln!(out, "{}", header.join(","))?;
        for i in 0..self.l1 {
            let line: Vec<String> = self.row(i).iter().map(|c| c.to_string()).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = match lines.next() {
            Some(line) => line.map_err(|e| Error::io("<csv>", e))?,
            None => {
                return Err(Error::format(
                    "co-occurrence csv",
                    "header",
                    "missing header row",
                ))
            }
        };
        let l2 = if header.trim().is_empty() {
            0
        } else {
            header.split(',').count()
        };
        for (j, field) in header.split(',').enumerate().take(l2) {
            if field.trim().parse::<usize>().ok() != Some(j) {
                return Err(Error::format(
                    "co-occurrence csv",
                    "header",
                    format!("expected class id {j}, found '{field}'"),
                ));
            }
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io("<csv>", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let row: Vec<u64> = line
                .split(',')
                .map(|f| f.trim().parse::<u64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::format("co-occurrence csv", "row", format!("row {i}: {e}")))?;
            if row.len() != l2 {
                return Err(Error::format(
                    "co-occurrence csv",
                    "row",
                    format!("row {i} has {} fields, header has {l2}", row.len()),
                ));
            }
            rows.push(row);
        }
        Ok(Self {
            l1: rows.len(),
            l2,
            counts: rows.concat(),
        })
    }
}

/// Count patches per (token, class). Both index slices must be aligned.
pub fn accumulate(tokens: &[u32], labels: &[u32], l1: usize, l2: usize) -> Result<CoOccurrence> {
    if tokens.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: tokens.len(),
            actual: labels.len(),
            context: "labels vs tokens",
        });
    }
    if let Some(i) = tokens.iter().position(|&t| t as usize >= l1) {
        return Err(Error::validation(format!(
            "token {} at position {i} is outside 0..{l1}",
            tokens[i]
        )));
    }
    if let Some(i) = labels.iter().position(|&c| c as usize >= l2) {
        return Err(Error::validation(format!(
            "label {} at position {i} is outside 0..{l2}",
            labels[i]
        )));
    }
    let counts = tokens
        .par_chunks(ACCUMULATE_CHUNK)
        .zip(labels.par_chunks(ACCUMULATE_CHUNK))
        .map(|(ts, ls)| {
            let mut local = vec![0u64; l1 * l2];
            for (&t, &c) in ts.iter().zip(ls) {
                local[t as usize * l2 + c as usize] += 1;
            }
            local
        })
        .reduce(
            || vec![0u64; l1 * l2],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    Ok(CoOccurrence { l1, l2, counts })
}

/// Row-normalized co-occurrence: each used token's class distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowNormalized {
    pub l1: usize,
    pub l2: usize,
    pub rows: Vec<f64>,
    /// Tokens with no patches; their rows are all zero.
    pub dead: Vec<bool>,
}

impl RowNormalized {
    /// Wraps a matrix of probability rows; all-zero rows are marked dead.
    pub fn from_rows(l1: usize, l2: usize, rows: Vec<f64>) -> Result<Self> {
        if rows.len() != l1 * l2 {
            return Err(Error::DimensionMismatch {
                expected: l1 * l2,
                actual: rows.len(),
                context: "row-normalized buffer",
            });
        }
        let dead = (0..l1)
            .map(|i| rows[i * l2..(i + 1) * l2].iter().all(|&v| v == 0.0))
            .collect();
        Ok(Self { l1, l2, rows, dead })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.l2..(i + 1) * self.l2]
    }

    pub fn dead_count(&self) -> usize {
        self.dead.iter().filter(|d| **d).count()
    }
}

/// Plain L1 normalization of every non-zero row.
pub fn normalize_rows(co: &CoOccurrence) -> RowNormalized {
    let mut rows = vec![0.0; co.l1 * co.l2];
    let mut dead = vec![false; co.l1];
    for i in 0..co.l1 {
        let sum: u64 = co.row(i).iter().sum();
        if sum == 0 {
            dead[i] = true;
            continue;
        }
        for (out, &c) in rows[i * co.l2..(i + 1) * co.l2].iter_mut().zip(co.row(i)) {
            *out = c as f64 / sum as f64;
        }
    }
    RowNormalized {
        l1: co.l1,
        l2: co.l2,
        rows,
        dead,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TcasScore {
    pub value: f64,
    pub term1: f64,
    pub term2: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub l1: usize,
    pub l2: usize,
    pub dead_rows: usize,
}

pub fn tcas(normalized: &RowNormalized) -> TcasScore {
    let l1 = normalized.l1;
    let lambda1 = if l1 > 0 { 1.0 / l1 as f64 } else { 0.0 };
    let lambda2 = lambda1 * lambda1;

    let norms: Vec<f64> = (0..l1)
        .map(|i| normalized.row(i).iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let miss: f64 = norms.iter().map(|n| (1.0 - n) * (1.0 - n)).sum();

    let mut overlap = 0.0;
    for i in 0..l1 {
        let ri = normalized.row(i);
        for j in (i + 1)..l1 {
            let dot: f64 = ri.iter().zip(normalized.row(j)).map(|(a, b)| a * b).sum();
            // (i, j) and (j, i)
            overlap += 2.0 * dot * dot;
        }
    }

    let term1 = lambda1 * miss;
    let term2 = lambda2 * overlap;
    TcasScore {
        value: term1 + term2,
        term1,
        term2,
        lambda1,
        lambda2,
        l1,
        l2: normalized.l2,
        dead_rows: normalized.dead_count(),
    }
}

/// accumulate, normalize, score.
pub fn tcas_from_tokens(tokens: &[u32], labels: &[u32], l1: usize, l2: usize) -> Result<TcasScore> {
    Ok(tcas(&normalize_rows(&accumulate(tokens, labels, l1, l2)?)))
}
