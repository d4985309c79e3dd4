//! Item embeddings: native TF-IDF and precomputed vectors loaded from disk.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Euclidean,
    Cosine,
}

impl Metric {
    #[inline]
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            Metric::Cosine => {
                if a == b {
                    return 0.0;
                }
                let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
                for (x, y) in a.iter().zip(b) {
                    dot += x * y;
                    na += x * x;
                    nb += y * y;
                }
                let denom = (na * nb).sqrt();
                if denom == 0.0 {
                    // Only reachable for centroids; item vectors are checked at construction.
                    return 1.0;
                }
                (1.0 - dot / denom).clamp(0.0, 2.0)
            }
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Euclidean => "euclidean",
            Metric::Cosine => "cosine",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Metric::Euclidean),
            "cosine" => Ok(Metric::Cosine),
            other => Err(Error::Config(format!("unknown metric `{other}`"))),
        }
    }
}

/// Dense row-major `|items| × dim` matrix, rows aligned to `item_ids`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMatrix {
    item_ids: Vec<String>,
    dim: usize,
    vectors: Vec<f64>,
    metric: Metric,
}

impl EmbeddingMatrix {
    pub fn new(item_ids: Vec<String>, dim: usize, vectors: Vec<f64>, metric: Metric) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidEmbedding("dimension must be positive".into()));
        }
        if vectors.len() != item_ids.len() * dim {
            return Err(Error::DimMismatch {
                expected: item_ids.len() * dim,
                found: vectors.len(),
            });
        }
        if let Some(pos) = vectors.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidEmbedding(format!(
                "non-finite entry for item `{}`",
                item_ids[pos / dim]
            )));
        }
        let m = EmbeddingMatrix {
            item_ids,
            dim,
            vectors,
            metric,
        };
        m.check_metric(metric)?;
        Ok(m)
    }

    fn check_metric(&self, metric: Metric) -> Result<()> {
        if metric == Metric::Cosine {
            if let Some(i) = (0..self.len()).find(|&i| self.row(i).iter().all(|v| *v == 0.0)) {
                return Err(Error::InvalidEmbedding(format!(
                    "zero vector for item `{}` under cosine metric",
                    self.item_ids[i]
                )));
            }
        }
        Ok(())
    }

    pub fn with_metric(mut self, metric: Metric) -> Result<Self> {
        self.check_metric(metric)?;
        self.metric = metric;
        Ok(self)
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn len(&self) -> usize {
        self.item_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.item_ids.is_empty()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.vectors
    }

    /// Distance between rows `i` and `j` under this matrix's metric.
    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.metric.distance(self.row(i), self.row(j))
    }

    /// Rows `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> EmbeddingMatrix {
        let mut vectors = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            vectors.extend_from_slice(self.row(i));
        }
        EmbeddingMatrix {
            item_ids: indices.iter().map(|&i| self.item_ids[i].clone()).collect(),
            dim: self.dim,
            vectors,
            metric: self.metric,
        }
    }

    /// Checks that rows line up with `ids` one-to-one.
    pub fn ensure_aligned(&self, ids: &[String]) -> Result<()> {
        if self.item_ids.len() != ids.len() {
            return Err(Error::Config(format!(
                "embedding has {} rows but {} items were expected",
                self.item_ids.len(),
                ids.len()
            )));
        }
        if let Some((a, _)) = self.item_ids.iter().zip(ids).find(|(a, b)| a != b) {
            return Err(Error::Config(format!("embedding row `{a}` out of catalog order")));
        }
        Ok(())
    }

    /// Serializes to the whitespace text format read by [`load_embeddings`].
    pub fn to_text(&self) -> String {
        let mut out = format!("dim={} metric={}\n", self.dim, self.metric);
        for i in 0..self.len() {
            out.push_str(&self.item_ids[i]);
            for v in self.row(i) {
                write!(out, " {v}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

pub fn pairwise_distance(e: &EmbeddingMatrix, i: usize, j: usize) -> Result<f64> {
    let n = e.len();
    if i >= n || j >= n {
        return Err(Error::Config(format!("index out of range ({i}, {j}) for {n} items")));
    }
    Ok(e.distance(i, j))
}

/// Lowercased alphanumeric runs.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

/// TF-IDF over item texts.
///
/// The vocabulary is the `vocab_size` terms with the highest document
/// frequency (ties broken lexicographically), and columns follow that rank
/// order. Weights are raw term count times `ln(N / (1 + df)) + 1` where `N`
/// is the number of items; rows are L2-normalized when `normalize` is set.
/// Items without text get a zero row.
pub fn tfidf_embed(catalog: &Catalog, vocab_size: usize, normalize: bool) -> Result<EmbeddingMatrix> {
    if vocab_size == 0 {
        return Err(Error::Config("vocab size must be positive".into()));
    }
    let n_docs = catalog.len();
    let docs: Vec<BTreeMap<String, usize>> = catalog
        .items
        .iter()
        .map(|item| {
            let mut tf = BTreeMap::new();
            for tok in tokenize(item.text.as_deref().unwrap_or("")) {
                *tf.entry(tok).or_insert(0) += 1;
            }
            tf
        })
        .collect();
    if docs.iter().all(BTreeMap::is_empty) {
        return Err(Error::EmptyCorpus);
    }
    for (item, tf) in catalog.items.iter().zip(&docs) {
        if tf.is_empty() {
            warn!("item `{}` has no text; embedding it as a zero vector", item.id);
        }
    }

    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for tf in &docs {
        for term in tf.keys() {
            *df.entry(term.as_str()).or_insert(0) += 1;
        }
    }
    let mut ranked: Vec<(&str, usize)> = df.into_iter().collect();
    // BTreeMap iteration is lexicographic, so a stable sort keeps that as the tie-break.
    ranked.sort_by_key(|&(_, n)| std::cmp::Reverse(n));
    ranked.truncate(vocab_size);
    let dim = ranked.len();
    let column: HashMap<&str, (usize, f64)> = ranked
        .iter()
        .enumerate()
        .map(|(c, &(term, df))| (term, (c, (n_docs as f64 / (1.0 + df as f64)).ln() + 1.0)))
        .collect();

    let mut vectors = vec![0.0; n_docs * dim];
    for (i, tf) in docs.iter().enumerate() {
        let row = &mut vectors[i * dim..(i + 1) * dim];
        for (term, &count) in tf {
            if let Some(&(c, idf)) = column.get(term.as_str()) {
                row[c] = count as f64 * idf;
            }
        }
        if normalize {
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|v| *v /= norm);
            }
        }
    }
    EmbeddingMatrix::new(catalog.item_ids(), dim, vectors, Metric::Euclidean)
}

pub fn load_embeddings(path: impl AsRef<Path>, catalog: &Catalog) -> Result<EmbeddingMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_embeddings(&text, catalog, &path.display().to_string())
}

/// Parses the `dim=<d> metric=<m>` header format and reorders rows to
/// catalog order. Ids not in the catalog are ignored.
pub fn parse_embeddings(text: &str, catalog: &Catalog, source: &str) -> Result<EmbeddingMatrix> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hline, header) = lines.next().ok_or_else(|| Error::parse(source, 1, "missing header"))?;
    let mut dim = None;
    let mut metric = Metric::Euclidean;
    for field in header.split_whitespace() {
        match field.split_once('=') {
            Some(("dim", v)) => {
                dim = Some(v.parse::<usize>().map_err(|e| Error::parse(source, hline, e.to_string()))?)
            }
            Some(("metric", v)) => metric = v.parse()?,
            _ => return Err(Error::parse(source, hline, format!("unexpected header field `{field}`"))),
        }
    }
    let dim = dim.ok_or_else(|| Error::parse(source, hline, "header lacks dim=<d>"))?;

    let mut rows: HashMap<&str, Vec<f64>> = HashMap::new();
    for (n, line) in lines {
        let mut fields = line.split_whitespace();
        let id = fields.next().expect("non-empty line");
        let values = fields
            .map(|f| f.parse::<f64>().map_err(|e| Error::parse(source, n, format!("`{f}`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if values.len() != dim {
            return Err(Error::DimMismatch {
                expected: dim,
                found: values.len(),
            });
        }
        if rows.insert(id, values).is_some() {
            return Err(Error::parse(source, n, format!("duplicate id `{id}`")));
        }
    }

    let mut vectors = Vec::with_capacity(catalog.len() * dim);
    for item in &catalog.items {
        let row = rows
            .get(item.id.as_str())
            .ok_or_else(|| Error::MissingItem(item.id.clone()))?;
        vectors.extend_from_slice(row);
    }
    EmbeddingMatrix::new(catalog.item_ids(), dim, vectors, metric)
}
