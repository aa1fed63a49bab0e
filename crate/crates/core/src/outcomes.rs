//! The binary outcome matrix `Z` (question x pruned-head correctness) and
//! the analytics computed from it: head agreement, positive/negative head
//! sets, and accuracy gains over the unpruned baseline.
//!
//! CSV layout: `question_id[,subject][,base],L{layer}H{head},...`, one row
//! per question, cells `0`/`1`. The `base` column records the unpruned
//! model and is never treated as a head column.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SprintError};

/// One pruning configuration: head `head` of layer `layer`, column `j` of Z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeadId {
    pub j: usize,
    pub layer: usize,
    pub head: usize,
}

impl HeadId {
    pub fn column_name(&self) -> String {
        format!("L{}H{}", self.layer, self.head)
    }
}

/// Ordered list of the `L x H` prunable heads. The layer ids need not be
/// contiguous (e.g. layers 5, 10, 15), but every layer must carry the same
/// head ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<HeadId>", into = "Vec<HeadId>")]
pub struct HeadCatalog {
    entries: Vec<HeadId>,
    num_layers: usize,
    heads_per_layer: usize,
}

impl HeadCatalog {
    pub fn from_pairs(pairs: &[(usize, usize)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(SprintError::CatalogMismatch("catalog has no heads".into()));
        }
        let unique: BTreeSet<_> = pairs.iter().copied().collect();
        if unique.len() != pairs.len() {
            return Err(SprintError::CatalogMismatch("duplicate (layer, head) pair".into()));
        }
        let layers: BTreeSet<_> = pairs.iter().map(|p| p.0).collect();
        let heads: BTreeSet<_> = pairs.iter().map(|p| p.1).collect();
        if layers.len() * heads.len() != pairs.len() {
            return Err(SprintError::CatalogMismatch(format!(
                "{} entries do not form a {} layer x {} head grid",
                pairs.len(),
                layers.len(),
                heads.len()
            )));
        }
        Ok(Self {
            entries: pairs
                .iter()
                .enumerate()
                .map(|(j, &(layer, head))| HeadId { j, layer, head })
                .collect(),
            num_layers: layers.len(),
            heads_per_layer: heads.len(),
        })
    }

    /// Layer-major grid over the given layer ids and heads `0..heads`.
    pub fn grid(layers: &[usize], heads: usize) -> Result<Self> {
        let pairs: Vec<_> = layers
            .iter()
            .flat_map(|&l| (0..heads).map(move |h| (l, h)))
            .collect();
        Self::from_pairs(&pairs)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn num_layers(&self) -> usize {
        self.num_layers
    }

    pub fn heads_per_layer(&self) -> usize {
        self.heads_per_layer
    }

    pub fn entries(&self) -> &[HeadId] {
        &self.entries
    }

    pub fn get(&self, j: usize) -> Option<&HeadId> {
        self.entries.get(j)
    }

    pub fn column_names(&self) -> Vec<String> {
        self.entries.iter().map(HeadId::column_name).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.entries).expect("catalog serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| SprintError::io(path, e))?;
        let entries: Vec<HeadId> =
            serde_json::from_str(&text).map_err(|e| SprintError::parse(path.display().to_string(), e))?;
        Self::try_from(entries)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json() + "\n").map_err(|e| SprintError::io(path, e))
    }
}

impl TryFrom<Vec<HeadId>> for HeadCatalog {
    type Error = SprintError;

    fn try_from(entries: Vec<HeadId>) -> Result<Self> {
        for (pos, e) in entries.iter().enumerate() {
            if e.j != pos {
                return Err(SprintError::CatalogMismatch(format!(
                    "entry at position {pos} has j = {}",
                    e.j
                )));
            }
        }
        let pairs: Vec<_> = entries.iter().map(|e| (e.layer, e.head)).collect();
        Self::from_pairs(&pairs)
    }
}

impl From<HeadCatalog> for Vec<HeadId> {
    fn from(c: HeadCatalog) -> Self {
        c.entries
    }
}

fn parse_head_column(name: &str) -> Option<(usize, usize)> {
    let rest = name.strip_prefix('L')?;
    let (layer, head) = rest.split_once('H')?;
    Some((layer.parse().ok()?, head.parse().ok()?))
}

/// Binary accuracy matrix, `n` questions by `LH` pruned heads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeMatrix {
    z: Array2<u8>,
    question_ids: Vec<String>,
    subjects: Option<Vec<String>>,
    baseline: Option<Vec<u8>>,
}

impl OutcomeMatrix {
    pub fn new(
        z: Array2<u8>,
        question_ids: Vec<String>,
        subjects: Option<Vec<String>>,
        baseline: Option<Vec<u8>>,
    ) -> Result<Self> {
        let (n, lh) = z.dim();
        if n == 0 || lh == 0 {
            return Err(SprintError::Argument(format!(
                "outcome matrix must be non-empty, got {n} x {lh}"
            )));
        }
        if question_ids.len() != n {
            return Err(SprintError::Alignment(format!(
                "{} question ids for {n} rows",
                question_ids.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for (row, id) in question_ids.iter().enumerate() {
            if id.is_empty() {
                return Err(SprintError::MissingQuestionId(row));
            }
            if !seen.insert(id.as_str()) {
                return Err(SprintError::DuplicateQuestion(id.clone()));
            }
        }
        if let Some(((i, j), v)) = z.indexed_iter().find(|(_, &v)| v > 1) {
            return Err(SprintError::NonBinaryCell {
                row: i,
                column: format!("#{j}"),
                value: v.to_string(),
            });
        }
        if subjects.as_ref().is_some_and(|s| s.len() != n) {
            return Err(SprintError::Alignment("subject labels do not match row count".into()));
        }
        if let Some(b) = &baseline {
            if b.len() != n {
                return Err(SprintError::Alignment("baseline length does not match row count".into()));
            }
            if let Some((i, v)) = b.iter().enumerate().find(|(_, &v)| v > 1) {
                return Err(SprintError::NonBinaryCell {
                    row: i,
                    column: "base".into(),
                    value: v.to_string(),
                });
            }
        }
        Ok(Self {
            z,
            question_ids,
            subjects,
            baseline,
        })
    }

    /// Matrix with ids `q0, q1, ...` and no subjects or baseline.
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let n = rows.len();
        let lh = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != lh) {
            return Err(SprintError::Dimension("ragged outcome rows".into()));
        }
        let z = Array2::from_shape_fn((n, lh), |(i, j)| rows[i][j]);
        Self::new(z, (0..n).map(|i| format!("q{i}")).collect(), None, None)
    }

    pub fn n(&self) -> usize {
        self.z.nrows()
    }

    pub fn num_heads(&self) -> usize {
        self.z.ncols()
    }

    pub fn z(&self) -> &Array2<u8> {
        &self.z
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.z[[i, j]] == 1
    }

    pub fn row(&self, i: usize) -> Vec<u8> {
        self.z.row(i).to_vec()
    }

    pub fn question_ids(&self) -> &[String] {
        &self.question_ids
    }

    pub fn subjects(&self) -> Option<&[String]> {
        self.subjects.as_deref()
    }

    pub fn baseline(&self) -> Option<&[u8]> {
        self.baseline.as_deref()
    }

    pub fn with_subjects(mut self, subjects: Vec<String>) -> Result<Self> {
        if subjects.len() != self.n() {
            return Err(SprintError::Alignment("subject labels do not match row count".into()));
        }
        self.subjects = Some(subjects);
        Ok(self)
    }

    pub fn with_baseline(self, baseline: Vec<u8>) -> Result<Self> {
        Self::new(self.z, self.question_ids, self.subjects, Some(baseline))
    }

    /// True if at least one pruned head answers question `i` correctly.
    pub fn solvable(&self, i: usize) -> bool {
        self.z.row(i).iter().any(|&v| v == 1)
    }

    /// New matrix holding the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        if let Some(&bad) = rows.iter().find(|&&i| i >= self.n()) {
            return Err(SprintError::Argument(format!("row {bad} out of range")));
        }
        let z = Array2::from_shape_fn((rows.len(), self.num_heads()), |(r, j)| self.z[[rows[r], j]]);
        let pick = |v: &Vec<String>| rows.iter().map(|&i| v[i].clone()).collect();
        Self::new(
            z,
            pick(&self.question_ids),
            self.subjects.as_ref().map(pick),
            self.baseline.as_ref().map(|b| rows.iter().map(|&i| b[i]).collect()),
        )
    }

    /// Splits into rows `[0, at)` and `[at, n)`.
    pub fn split_at(&self, at: usize) -> Result<(Self, Self)> {
        let head: Vec<_> = (0..at.min(self.n())).collect();
        let tail: Vec<_> = (at..self.n()).collect();
        Ok((self.select_rows(&head)?, self.select_rows(&tail)?))
    }

    pub fn write_csv<W: Write>(&self, catalog: &HeadCatalog, writer: W) -> Result<()> {
        if catalog.len() != self.num_heads() {
            return Err(SprintError::CatalogMismatch(format!(
                "catalog has {} heads, matrix has {}",
                catalog.len(),
                self.num_heads()
            )));
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
        let mut header = vec!["question_id".to_string()];
        if self.subjects.is_some() {
            header.push("subject".into());
        }
        if self.baseline.is_some() {
            header.push("base".into());
        }
        header.extend(catalog.column_names());
        w.write_record(&header).map_err(|e| SprintError::parse("csv writer", e))?;
        for i in 0..self.n() {
            let mut rec = vec![self.question_ids[i].clone()];
            if let Some(s) = &self.subjects {
                rec.push(s[i].clone());
            }
            if let Some(b) = &self.baseline {
                rec.push(b[i].to_string());
            }
            rec.extend(self.z.row(i).iter().map(u8::to_string));
            w.write_record(&rec).map_err(|e| SprintError::parse("csv writer", e))?;
        }
        w.flush().map_err(|e| SprintError::io("csv writer", e))
    }

    pub fn save_csv(&self, catalog: &HeadCatalog, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| SprintError::io(path, e))?;
        self.write_csv(catalog, std::io::BufWriter::new(file))
    }
}

/// Reads an outcome CSV, deriving the head catalog from the header.
pub fn read_outcomes<R: Read>(reader: R, location: &str) -> Result<(OutcomeMatrix, HeadCatalog)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers().map_err(|e| SprintError::parse(location, e))?.clone();
    let mut cols = header.iter().enumerate().peekable();
    match cols.next() {
        Some((_, "question_id")) => {}
        other => {
            return Err(SprintError::parse(
                location,
                format!("first header column must be `question_id`, found {:?}", other.map(|c| c.1)),
            ))
        }
    }
    let has_subject = cols.next_if(|(_, c)| *c == "subject").is_some();
    let has_base = cols.next_if(|(_, c)| *c == "base").is_some();
    let mut pairs = Vec::new();
    let mut names = Vec::new();
    for (_, name) in cols {
        let pair = parse_head_column(name).ok_or_else(|| {
            SprintError::CatalogMismatch(format!("column {name:?} is not of the form L<layer>H<head>"))
        })?;
        pairs.push(pair);
        names.push(name.to_string());
    }
    let catalog = HeadCatalog::from_pairs(&pairs)?;
    let first_head_col = 1 + has_subject as usize + has_base as usize;

    let mut ids = Vec::new();
    let mut subjects = Vec::new();
    let mut baseline = Vec::new();
    let mut cells = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| SprintError::parse(format!("{location} row {row}"), e))?;
        if record.len() != header.len() {
            return Err(SprintError::parse(
                format!("{location} row {row}"),
                format!("{} fields, header has {}", record.len(), header.len()),
            ));
        }
        let bit = |value: &str, column: &str| match value.trim() {
            "0" => Ok(0u8),
            "1" => Ok(1u8),
            other => Err(SprintError::NonBinaryCell {
                row,
                column: column.to_string(),
                value: other.to_string(),
            }),
        };
        let id = record[0].trim();
        if id.is_empty() {
            return Err(SprintError::MissingQuestionId(row));
        }
        ids.push(id.to_string());
        if has_subject {
            subjects.push(record[1].to_string());
        }
        if has_base {
            baseline.push(bit(&record[first_head_col - 1], "base")?);
        }
        for (k, name) in names.iter().enumerate() {
            cells.push(bit(&record[first_head_col + k], name)?);
        }
    }
    if ids.is_empty() {
        return Err(SprintError::parse(location, "no question rows"));
    }
    let z = Array2::from_shape_vec((ids.len(), names.len()), cells).expect("cell count matches");
    let matrix = OutcomeMatrix::new(
        z,
        ids,
        has_subject.then_some(subjects),
        has_base.then_some(baseline),
    )?;
    Ok((matrix, catalog))
}

pub fn load_outcomes(path: impl AsRef<Path>) -> Result<(OutcomeMatrix, HeadCatalog)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| SprintError::io(path, e))?;
    read_outcomes(std::io::BufReader::new(file), &path.display().to_string())
}

/// Loads an outcome CSV and checks its header against a catalog file.
pub fn load_outcomes_with_catalog(path: impl AsRef<Path>, catalog: &HeadCatalog) -> Result<OutcomeMatrix> {
    let (z, from_header) = load_outcomes(path)?;
    if &from_header != catalog {
        return Err(SprintError::CatalogMismatch(format!(
            "header columns {:?} differ from catalog {:?}",
            from_header.column_names(),
            catalog.column_names()
        )));
    }
    Ok(z)
}

/// Pairwise head agreement `s_jk`, kept as integer counts over `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimilarityMatrix {
    agreements: Array2<u32>,
    n: u32,
}

impl SimilarityMatrix {
    pub fn size(&self) -> usize {
        self.agreements.nrows()
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Number of questions on which heads `j` and `k` agree.
    pub fn agreements(&self, j: usize, k: usize) -> u32 {
        self.agreements[[j, k]]
    }

    pub fn counts(&self) -> &Array2<u32> {
        &self.agreements
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.agreements[[j, k]] as f64 / self.n as f64
    }

    pub fn to_array(&self) -> Array2<f64> {
        self.agreements.mapv(|c| c as f64 / self.n as f64)
    }

    /// Reorders heads: entry `(a, b)` of the result is `(perm[a], perm[b])`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let m = perm.len();
        Self {
            agreements: Array2::from_shape_fn((m, m), |(a, b)| self.agreements[[perm[a], perm[b]]]),
            n: self.n,
        }
    }
}

pub fn similarity(z: &OutcomeMatrix) -> SimilarityMatrix {
    let m = z.num_heads();
    let mut agreements = Array2::<u32>::zeros((m, m));
    for j in 0..m {
        agreements[[j, j]] = z.n() as u32;
        let col_j = z.z.column(j);
        for k in (j + 1)..m {
            let count = col_j.iter().zip(z.z.column(k)).filter(|(a, b)| a == b).count() as u32;
            agreements[[j, k]] = count;
            agreements[[k, j]] = count;
        }
    }
    SimilarityMatrix {
        agreements,
        n: z.n() as u32,
    }
}

/// Positive and negative head sets for question `i`.
pub fn partition_sets(z: &OutcomeMatrix, i: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    if i >= z.n() {
        return Err(SprintError::Argument(format!("question index {i} out of range (n = {})", z.n())));
    }
    Ok((0..z.num_heads()).partition(|&j| z.get(i, j)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GroupBy {
    #[default]
    Subject,
    None,
}

/// Accuracy of every pruned head and of the baseline within one group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupGain {
    pub group: String,
    pub n: usize,
    pub baseline_correct: usize,
    pub head_correct: Vec<usize>,
    pub baseline_accuracy: f64,
    pub head_accuracy: Vec<f64>,
    /// Lowest-index head attaining the best accuracy.
    pub best_head: usize,
    pub best_accuracy: f64,
    /// Best pruned accuracy minus baseline accuracy.
    pub gain: f64,
}

impl GroupGain {
    /// Per-head accuracy minus baseline accuracy.
    pub fn head_gains(&self) -> Vec<f64> {
        self.head_correct
            .iter()
            .map(|&c| (c as f64 - self.baseline_correct as f64) / self.n as f64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainReport {
    pub groups: Vec<GroupGain>,
}

impl GainReport {
    pub fn group(&self, name: &str) -> Option<&GroupGain> {
        self.groups.iter().find(|g| g.group == name)
    }

    /// Summary table: `group,n,baseline_accuracy,best_layer,best_head,best_accuracy,gain`.
    pub fn summary_csv(&self, catalog: &HeadCatalog) -> String {
        let mut out = String::from("group,n,baseline_accuracy,best_layer,best_head,best_accuracy,gain\n");
        for g in &self.groups {
            let best = catalog.entries()[g.best_head];
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                csv_field(&g.group),
                g.n,
                g.baseline_accuracy,
                best.layer,
                best.head,
                g.best_accuracy,
                g.gain
            ));
        }
        out
    }

    /// One row per (group, head), ready for violin plots:
    /// `group,j,layer,head,accuracy,gain`.
    pub fn violin_csv(&self, catalog: &HeadCatalog) -> String {
        let mut out = String::from("group,j,layer,head,accuracy,gain\n");
        for g in &self.groups {
            for (entry, (acc, gain)) in catalog.entries().iter().zip(g.head_accuracy.iter().zip(g.head_gains())) {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    csv_field(&g.group),
                    entry.j,
                    entry.layer,
                    entry.head,
                    acc,
                    gain
                ));
            }
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub const ALL_GROUP: &str = "all";

pub fn gain_stats(z: &OutcomeMatrix, group_by: GroupBy) -> Result<GainReport> {
    let baseline = z.baseline().ok_or(SprintError::MissingBaseline)?;
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    match (group_by, z.subjects()) {
        (GroupBy::Subject, Some(subjects)) => {
            for (i, s) in subjects.iter().enumerate() {
                groups.entry(s.as_str()).or_default().push(i);
            }
        }
        _ => {
            groups.insert(ALL_GROUP, (0..z.n()).collect());
        }
    }
    let groups = groups
        .into_iter()
        .map(|(name, rows)| {
            let n = rows.len();
            let baseline_correct = rows.iter().filter(|&&i| baseline[i] == 1).count();
            let head_correct: Vec<usize> = (0..z.num_heads())
                .map(|j| rows.iter().filter(|&&i| z.get(i, j)).count())
                .collect();
            let (best_head, &best_count) = head_correct
                .iter()
                .enumerate()
                .rev()
                .max_by_key(|(_, &c)| c)
                .expect("at least one head");
            let frac = |c: usize| c as f64 / n as f64;
            GroupGain {
                group: name.to_string(),
                n,
                baseline_correct,
                baseline_accuracy: frac(baseline_correct),
                head_accuracy: head_correct.iter().map(|&c| frac(c)).collect(),
                head_correct,
                best_head,
                best_accuracy: frac(best_count),
                gain: (best_count as f64 - baseline_correct as f64) / n as f64,
            }
        })
        .collect();
    Ok(GainReport { groups })
}
