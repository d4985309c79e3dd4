//! Item catalogs and the label × item incidence structure.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Separator between the two halves of a composite (pair-category) label.
pub const PAIR_SEPARATOR: char = '×';

/// Separator between multiple values inside one CSV label cell.
pub const CSV_VALUE_SEPARATOR: char = '|';

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Label {
    pub category: String,
    pub value: String,
}

impl Label {
    pub fn new(category: impl Into<String>, value: impl Into<String>) -> Self {
        Label {
            category: category.into(),
            value: value.into(),
        }
    }

    pub fn is_composite(&self) -> bool {
        self.category.contains(PAIR_SEPARATOR)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.category, self.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub id: String,
    pub labels: BTreeSet<Label>,
    pub text: Option<String>,
}

impl Item {
    pub fn values<'a>(&'a self, category: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.labels
            .iter()
            .filter(move |l| l.category == category)
            .map(|l| l.value.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Catalog {
    pub items: Vec<Item>,
    pub categories: Vec<String>,
}

impl Catalog {
    /// Builds a catalog, rejecting duplicate ids and empty labels.
    pub fn new(items: Vec<Item>, categories: Vec<String>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(items.len());
        for item in &items {
            if !seen.insert(item.id.as_str()) {
                return Err(Error::DuplicateId(item.id.clone()));
            }
            if let Some(l) = item
                .labels
                .iter()
                .find(|l| l.category.is_empty() || l.value.is_empty())
            {
                return Err(Error::Config(format!("item `{}` has an empty label `{l}`", item.id)));
            }
        }
        Ok(Catalog { items, categories })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.items.iter().position(|it| it.id == id)
    }

    pub fn item_ids(&self) -> Vec<String> {
        self.items.iter().map(|it| it.id.clone()).collect()
    }

    /// Sub-catalog holding `indices` in the given order.
    pub fn subset(&self, indices: &[usize]) -> Catalog {
        Catalog {
            items: indices.iter().map(|&i| self.items[i].clone()).collect(),
            categories: self.categories.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CatalogFormat {
    Csv,
    Json,
}

impl CatalogFormat {
    /// Guesses the format from a file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => CatalogFormat::Json,
            _ => CatalogFormat::Csv,
        }
    }
}

impl FromStr for CatalogFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(CatalogFormat::Csv),
            "json" => Ok(CatalogFormat::Json),
            other => Err(Error::Config(format!("unknown catalog format `{other}`"))),
        }
    }
}

pub fn load_catalog(path: impl AsRef<Path>, format: CatalogFormat) -> Result<Catalog> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    match format {
        CatalogFormat::Csv => parse_csv(&bytes, &path.display().to_string()),
        CatalogFormat::Json => parse_json(&bytes, &path.display().to_string()),
    }
}

pub fn parse_csv(bytes: &[u8], source: &str) -> Result<Catalog> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let header = reader
        .headers()
        .map_err(|e| Error::parse(source, 1, e.to_string()))?
        .clone();
    if header.get(0) != Some("id") || header.get(1) != Some("text") {
        return Err(Error::parse(source, 1, "header must start with `id,text`"));
    }
    let categories: Vec<String> = header.iter().skip(2).map(str::to_owned).collect();
    if let Some(c) = categories.iter().find(|c| c.is_empty()) {
        return Err(Error::parse(source, 1, format!("empty category name `{c}`")));
    }

    let mut items = Vec::new();
    let mut seen = HashSet::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::parse(source, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != header.len() {
            return Err(Error::parse(
                source,
                line,
                format!("expected {} fields, found {}", header.len(), record.len()),
            ));
        }
        let id = record[0].to_owned();
        if id.is_empty() {
            return Err(Error::parse(source, line, "empty id"));
        }
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId(id));
        }
        let text = Some(record[1].to_owned()).filter(|t| !t.is_empty());
        let mut labels = BTreeSet::new();
        for (category, cell) in categories.iter().zip(record.iter().skip(2)) {
            for value in cell.split(CSV_VALUE_SEPARATOR).map(str::trim) {
                if !value.is_empty() {
                    labels.insert(Label::new(category.as_str(), value));
                }
            }
        }
        items.push(Item { id, labels, text });
    }
    Catalog::new(items, categories)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonItem {
    id: String,
    #[serde(default)]
    text: Option<String>,
    #[serde(default)]
    labels: BTreeMap<String, Vec<String>>,
}

/// JSON catalogs list categories in sorted order; objects carry no ordering.
pub fn parse_json(bytes: &[u8], source: &str) -> Result<Catalog> {
    let raw: Vec<JsonItem> = serde_json::from_slice(bytes)
        .map_err(|e| Error::parse(source, e.line(), e.to_string()))?;
    let mut categories = BTreeSet::new();
    let mut items = Vec::with_capacity(raw.len());
    for it in raw {
        if it.id.is_empty() {
            return Err(Error::Config("item with empty id".into()));
        }
        let mut labels = BTreeSet::new();
        for (category, values) in it.labels {
            for value in values {
                labels.insert(Label::new(category.as_str(), value.trim()));
            }
            categories.insert(category);
        }
        items.push(Item {
            id: it.id,
            labels,
            text: it.text.filter(|t| !t.is_empty()),
        });
    }
    Catalog::new(items, categories.into_iter().collect())
}

/// Boolean label × item coverage, stored column-wise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncidenceMatrix {
    /// Row labels, sorted by (category, value).
    pub labels: Vec<Label>,
    pub item_ids: Vec<String>,
    /// For each column, the sorted row indices it covers.
    pub columns: Vec<Vec<usize>>,
    /// Labels dropped because no column carries them.
    pub uncoverable: Vec<Label>,
}

impl IncidenceMatrix {
    /// Assembles a matrix from a label → covering-columns map. Rows without
    /// any column move to `uncoverable`.
    pub fn from_rows(
        rows: BTreeMap<Label, Vec<usize>>,
        item_ids: Vec<String>,
        mut uncoverable: Vec<Label>,
    ) -> Self {
        let mut labels = Vec::with_capacity(rows.len());
        let mut columns = vec![Vec::new(); item_ids.len()];
        for (label, cols) in rows {
            if cols.is_empty() {
                uncoverable.push(label);
                continue;
            }
            let r = labels.len();
            for c in cols {
                let col: &mut Vec<usize> = &mut columns[c];
                if col.last() != Some(&r) {
                    col.push(r);
                }
            }
            labels.push(label);
        }
        uncoverable.sort();
        uncoverable.dedup();
        IncidenceMatrix {
            labels,
            item_ids,
            columns,
            uncoverable,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_cols(&self) -> usize {
        self.item_ids.len()
    }

    pub fn covers(&self, row: usize, col: usize) -> bool {
        self.columns[col].binary_search(&row).is_ok()
    }

    pub fn column_index(&self, id: &str) -> Option<usize> {
        self.item_ids.iter().position(|x| x == id)
    }

    /// Dense `cover[row][col]` view.
    pub fn cover_matrix(&self) -> Vec<Vec<bool>> {
        let mut m = vec![vec![false; self.n_cols()]; self.n_rows()];
        for (c, rows) in self.columns.iter().enumerate() {
            for &r in rows {
                m[r][c] = true;
            }
        }
        m
    }

    pub fn row_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_rows()];
        for rows in &self.columns {
            for &r in rows {
                counts[r] += 1;
            }
        }
        counts
    }

    /// Number of distinct rows covered by the union of `cols`.
    pub fn union_count(&self, cols: impl IntoIterator<Item = usize>) -> usize {
        let mut hit = vec![false; self.n_rows()];
        let mut n = 0;
        for c in cols {
            for &r in &self.columns[c] {
                if !hit[r] {
                    hit[r] = true;
                    n += 1;
                }
            }
        }
        n
    }

    /// Keeps only `cols` (in the given order). Rows no kept column covers
    /// become uncoverable.
    pub fn restrict(&self, cols: &[usize]) -> IncidenceMatrix {
        let mut rows: BTreeMap<Label, Vec<usize>> =
            self.labels.iter().map(|l| (l.clone(), Vec::new())).collect();
        for (new_c, &c) in cols.iter().enumerate() {
            for &r in &self.columns[c] {
                rows.get_mut(&self.labels[r]).expect("row label").push(new_c);
            }
        }
        let item_ids = cols.iter().map(|&c| self.item_ids[c].clone()).collect();
        IncidenceMatrix::from_rows(rows, item_ids, self.uncoverable.clone())
    }

    pub fn report(&self) -> IncidenceReport {
        let counts = self.row_counts();
        IncidenceReport {
            rows: self
                .labels
                .iter()
                .zip(counts)
                .map(|(l, n)| RowReport {
                    label: l.to_string(),
                    items: n,
                })
                .collect(),
            item_ids: self.item_ids.clone(),
            uncoverable: self.uncoverable.iter().map(ToString::to_string).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowReport {
    pub label: String,
    pub items: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncidenceReport {
    pub rows: Vec<RowReport>,
    pub item_ids: Vec<String>,
    pub uncoverable: Vec<String>,
}

/// Composite category name for a pair of categories.
pub fn pair_category(a: &str, b: &str) -> String {
    format!("{a}{PAIR_SEPARATOR}{b}")
}

pub fn build_incidence(
    catalog: &Catalog,
    categories: &[String],
    pair_categories: &[(String, String)],
) -> Result<IncidenceMatrix> {
    let known = |c: &String| {
        if catalog.categories.contains(c) {
            Ok(())
        } else {
            Err(Error::UnknownCategory(c.clone()))
        }
    };
    for c in categories {
        known(c)?;
    }
    for (a, b) in pair_categories {
        known(a)?;
        known(b)?;
    }

    let mut rows: BTreeMap<Label, Vec<usize>> = BTreeMap::new();
    for (col, item) in catalog.items.iter().enumerate() {
        for label in item.labels.iter().filter(|l| categories.contains(&l.category)) {
            rows.entry(label.clone()).or_default().push(col);
        }
        for (a, b) in pair_categories {
            let category = pair_category(a, b);
            for v1 in item.values(a) {
                for v2 in item.values(b) {
                    if a == b && v1 >= v2 {
                        continue;
                    }
                    let label = Label::new(category.as_str(), format!("{v1}{PAIR_SEPARATOR}{v2}"));
                    let cols = rows.entry(label).or_default();
                    if cols.last() != Some(&col) {
                        cols.push(col);
                    }
                }
            }
        }
    }
    Ok(IncidenceMatrix::from_rows(rows, catalog.item_ids(), Vec::new()))
}

/// Parses `genre:language,genre:publisher` into category pairs.
pub fn parse_pairs(spec: &str) -> Result<Vec<(String, String)>> {
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|p| match p.split_once(':') {
            Some((a, b)) if !a.is_empty() && !b.is_empty() => Ok((a.to_owned(), b.to_owned())),
            _ => Err(Error::Config(format!("malformed category pair `{p}`"))),
        })
        .collect()
}
