//! Language-by-variable trait tables and the boundary distributions built
//! from them.
//!
//! Tables come in two cell dialects. SSWL-style tables are strictly binary
//! (`1` expressed, `0` absent). LanGeLin-style tables are ternary with
//! unknowns: `1`, `-1`, `0` (undefined by entailment), `?` (unmapped).
//! Analysis keeps only variables that are fully `+`/`-` for the requested
//! languages and recodes `+` to bit 1, `-` to bit 0. Bit i1 belongs to the
//! first requested language and is the most significant bit of the pattern.

use crate::rational::{format_rational, is_nonnegative, parse_rational, Rat, RationalParseError};
use num_traits::{One, Zero};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

pub const MAX_PATTERN_LEAVES: usize = 16;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("row {row} has {actual} cells, expected {expected}")]
    RaggedRow { row: usize, expected: usize, actual: usize },
    #[error("unknown cell token `{token}` at row {row}, column {column}")]
    BadCell { row: usize, column: usize, token: String },
    #[error("duplicate language name `{0}`")]
    DuplicateLanguage(String),
    #[error("duplicate variable id `{0}`")]
    DuplicateVariable(String),
    #[error("table has no variables")]
    NoVariables,
    #[error("table has no language rows")]
    NoLanguages,
    #[error("unknown language `{0}`")]
    UnknownLanguage(String),
    #[error("cell for language `{language}`, variable `{variable}` is not binary (+/-)")]
    UnmappedCell { language: String, variable: String },
    #[error("pattern count total is zero")]
    EmptyCounts,
    #[error("too many languages: {0} exceeds {MAX_PATTERN_LEAVES}")]
    TooManyLanguages(usize),
    #[error("missing weight for variable `{0}`")]
    MissingWeight(String),
    #[error("weights must be nonnegative; `{variable}` has {value}")]
    NegativeWeight { variable: String, value: String },
    #[error("weight normalizer is zero")]
    ZeroNormalizer,
    #[error("negative entry {value} for pattern {pattern}")]
    NegativeEntry { pattern: String, value: String },
    #[error("distribution entries sum to {0}, expected 1")]
    NotNormalized(String),
    #[error("pattern `{0}` is malformed (want a fixed-width 0/1 string)")]
    BadPattern(String),
    #[error("rational parse error: {0}")]
    Rational(#[from] RationalParseError),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

/// Cell value of a trait table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellValue {
    Plus,
    Minus,
    Zero,
    Unknown,
}

/// How to read the `0` token: SSWL tables are strictly binary so `0` means
/// Minus; LanGeLin tables use `0` for undefined-by-entailment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellDialect {
    Sswl,
    Langelin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Tsv,
    Csv,
}

#[derive(Debug, Clone)]
pub struct TraitTable {
    languages: Vec<String>,
    variables: Vec<String>,
    /// Row-major: cells[lang][var]
    cells: Vec<Vec<CellValue>>,
}

/// Occurrence counts of leaf patterns; `total` equals the number of retained
/// variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternCounts {
    pub n_leaves: usize,
    pub counts: BTreeMap<u64, u64>,
    pub total: u64,
}

/// Exact-rational tensor over {0,1}^n leaf patterns. Zero entries are not
/// stored but are semantically present.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryDistribution {
    n_leaves: usize,
    entries: BTreeMap<u64, Rat>,
}

/// Per-variable weights w in [0,1] with their normalizer Z.
#[derive(Debug, Clone)]
pub struct VariableWeighting {
    weights: BTreeMap<String, Rat>,
}

impl TraitTable {
    pub fn new(
        languages: Vec<String>,
        variables: Vec<String>,
        cells: Vec<Vec<CellValue>>,
    ) -> Result<Self, DatasetError> {
        if variables.is_empty() {
            return Err(DatasetError::NoVariables);
        }
        if languages.is_empty() {
            return Err(DatasetError::NoLanguages);
        }
        let mut seen = std::collections::BTreeSet::new();
        for l in &languages {
            if !seen.insert(l.clone()) {
                return Err(DatasetError::DuplicateLanguage(l.clone()));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for v in &variables {
            if !seen.insert(v.clone()) {
                return Err(DatasetError::DuplicateVariable(v.clone()));
            }
        }
        for (i, row) in cells.iter().enumerate() {
            if row.len() != variables.len() {
                return Err(DatasetError::RaggedRow {
                    row: i + 2,
                    expected: variables.len(),
                    actual: row.len(),
                });
            }
        }
        if cells.len() != languages.len() {
            return Err(DatasetError::NoLanguages);
        }
        Ok(TraitTable { languages, variables, cells })
    }

    pub fn languages(&self) -> &[String] {
        &self.languages
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn cell(&self, language: usize, variable: usize) -> CellValue {
        self.cells[language][variable]
    }
}

fn parse_cell(token: &str, dialect: CellDialect) -> Option<CellValue> {
    match (token, dialect) {
        ("1", _) => Some(CellValue::Plus),
        ("-1", _) => Some(CellValue::Minus),
        ("0", CellDialect::Sswl) => Some(CellValue::Minus),
        ("0", CellDialect::Langelin) => Some(CellValue::Zero),
        ("?", _) => Some(CellValue::Unknown),
        _ => None,
    }
}

/// Load a table whose header row lists variable ids and whose first column
/// holds language names.
pub fn load_table(
    path: &Path,
    format: TableFormat,
    dialect: CellDialect,
) -> Result<TraitTable, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_table(&text, format, dialect)
}

pub fn parse_table(
    text: &str,
    format: TableFormat,
    dialect: CellDialect,
) -> Result<TraitTable, DatasetError> {
    let sep = match format {
        TableFormat::Tsv => '\t',
        TableFormat::Csv => ',',
    };
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let (_, header) = lines.next().ok_or(DatasetError::NoVariables)?;
    let mut header_cells = header.split(sep).map(str::trim);
    let _corner = header_cells.next();
    let variables: Vec<String> = header_cells.map(|s| s.to_string()).collect();
    if variables.is_empty() {
        return Err(DatasetError::NoVariables);
    }
    let mut languages = Vec::new();
    let mut cells = Vec::new();
    for (line_no, line) in lines {
        let mut fields = line.split(sep).map(str::trim);
        let language = fields.next().unwrap_or("").to_string();
        let tokens: Vec<&str> = fields.collect();
        if tokens.len() != variables.len() {
            return Err(DatasetError::RaggedRow {
                row: line_no + 1,
                expected: variables.len(),
                actual: tokens.len(),
            });
        }
        let mut row = Vec::with_capacity(tokens.len());
        for (col, token) in tokens.iter().enumerate() {
            let value = parse_cell(token, dialect).ok_or_else(|| DatasetError::BadCell {
                row: line_no + 1,
                column: col + 2,
                token: token.to_string(),
            })?;
            row.push(value);
        }
        languages.push(language);
        cells.push(row);
    }
    TraitTable::new(languages, variables, cells)
}

/// Restrict to the requested languages (in the requested order) and to the
/// variables that are Plus or Minus for every one of them.
pub fn completely_mapped(
    table: &TraitTable,
    languages: &[String],
) -> Result<TraitTable, DatasetError> {
    let mut rows = Vec::with_capacity(languages.len());
    for lang in languages {
        let i = table
            .languages
            .iter()
            .position(|l| l == lang)
            .ok_or_else(|| DatasetError::UnknownLanguage(lang.clone()))?;
        rows.push(i);
    }
    let keep: Vec<usize> = (0..table.variables.len())
        .filter(|&v| {
            rows.iter().all(|&r| {
                matches!(table.cells[r][v], CellValue::Plus | CellValue::Minus)
            })
        })
        .collect();
    if keep.is_empty() {
        // Preserved as an empty-variable error: downstream counting would be
        // meaningless, and callers treat it as a data warning.
        return Err(DatasetError::NoVariables);
    }
    let variables = keep.iter().map(|&v| table.variables[v].clone()).collect();
    let cells = rows
        .iter()
        .map(|&r| keep.iter().map(|&v| table.cells[r][v]).collect())
        .collect();
    TraitTable::new(languages.to_vec(), variables, cells)
}

/// Count leaf patterns of a fully mapped table; Plus becomes bit 1, Minus
/// bit 0, the first language the most significant bit.
pub fn count_patterns(table: &TraitTable) -> Result<PatternCounts, DatasetError> {
    let n = table.languages.len();
    if n > MAX_PATTERN_LEAVES {
        return Err(DatasetError::TooManyLanguages(n));
    }
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    for v in 0..table.variables.len() {
        let mut pattern = 0u64;
        for l in 0..n {
            let bit = match table.cells[l][v] {
                CellValue::Plus => 1u64,
                CellValue::Minus => 0u64,
                _ => {
                    return Err(DatasetError::UnmappedCell {
                        language: table.languages[l].clone(),
                        variable: table.variables[v].clone(),
                    })
                }
            };
            pattern = pattern << 1 | bit;
        }
        *counts.entry(pattern).or_insert(0) += 1;
    }
    Ok(PatternCounts { n_leaves: n, counts, total: table.variables.len() as u64 })
}

/// Empirical frequencies n_pattern / N as exact rationals.
pub fn boundary_distribution(counts: &PatternCounts) -> Result<BoundaryDistribution, DatasetError> {
    if counts.total == 0 {
        return Err(DatasetError::EmptyCounts);
    }
    let total = Rat::from_integer(counts.total.into());
    let entries = counts
        .counts
        .iter()
        .filter(|(_, &c)| c > 0)
        .map(|(&p, &c)| (p, Rat::from_integer(c.into()) / &total))
        .collect();
    Ok(BoundaryDistribution { n_leaves: counts.n_leaves, entries })
}

/// Weighted frequencies: each pattern's mass is the sum of the weights of
/// the variables exhibiting it, divided by the total weight Z.
pub fn weighted_boundary_distribution(
    table: &TraitTable,
    weighting: &VariableWeighting,
) -> Result<BoundaryDistribution, DatasetError> {
    let n = table.languages.len();
    if n > MAX_PATTERN_LEAVES {
        return Err(DatasetError::TooManyLanguages(n));
    }
    let mut mass: BTreeMap<u64, Rat> = BTreeMap::new();
    let mut normalizer = Rat::zero();
    for v in 0..table.variables.len() {
        let name = &table.variables[v];
        let weight = weighting
            .weights
            .get(name)
            .ok_or_else(|| DatasetError::MissingWeight(name.clone()))?;
        let mut pattern = 0u64;
        for l in 0..n {
            let bit = match table.cells[l][v] {
                CellValue::Plus => 1u64,
                CellValue::Minus => 0u64,
                _ => {
                    return Err(DatasetError::UnmappedCell {
                        language: table.languages[l].clone(),
                        variable: name.clone(),
                    })
                }
            };
            pattern = pattern << 1 | bit;
        }
        normalizer += weight;
        *mass.entry(pattern).or_insert_with(Rat::zero) += weight;
    }
    if normalizer.is_zero() {
        return Err(DatasetError::ZeroNormalizer);
    }
    let entries = mass
        .into_iter()
        .filter(|(_, m)| !m.is_zero())
        .map(|(p, m)| (p, m / &normalizer))
        .collect();
    Ok(BoundaryDistribution { n_leaves: n, entries })
}

impl BoundaryDistribution {
    /// Build from explicit entries; values must be nonnegative. The sum is
    /// not constrained (rescaled tensors are legal inputs downstream).
    pub fn from_entries(
        n_leaves: usize,
        entries: BTreeMap<u64, Rat>,
    ) -> Result<Self, DatasetError> {
        if n_leaves > MAX_PATTERN_LEAVES {
            return Err(DatasetError::TooManyLanguages(n_leaves));
        }
        for (p, v) in &entries {
            if !is_nonnegative(v) {
                return Err(DatasetError::NegativeEntry {
                    pattern: format_pattern(*p, n_leaves),
                    value: format_rational(v),
                });
            }
            if *p >> n_leaves != 0 {
                return Err(DatasetError::BadPattern(format!("{p:b}")));
            }
        }
        let entries = entries.into_iter().filter(|(_, v)| !v.is_zero()).collect();
        Ok(BoundaryDistribution { n_leaves, entries })
    }

    pub fn n_leaves(&self) -> usize {
        self.n_leaves
    }

    pub fn entries(&self) -> &BTreeMap<u64, Rat> {
        &self.entries
    }

    pub fn get(&self, pattern: u64) -> Rat {
        self.entries.get(&pattern).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn total_mass(&self) -> Rat {
        self.entries.values().fold(Rat::zero(), |a, b| a + b)
    }

    pub fn is_normalized(&self) -> bool {
        self.total_mass().is_one()
    }

    /// Rescale every entry by a positive rational (used to check that
    /// verdicts are scale-invariant).
    pub fn scaled(&self, factor: &Rat) -> BoundaryDistribution {
        let entries = self.entries.iter().map(|(&p, v)| (p, v * factor)).collect();
        BoundaryDistribution { n_leaves: self.n_leaves, entries }
    }

    /// Canonical text form: one `pattern<TAB>p/q` line per nonzero entry.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (&p, v) in &self.entries {
            writeln!(out, "{}\t{}", format_pattern(p, self.n_leaves), format_rational(v))
                .unwrap();
        }
        out
    }

    /// Parse the `to_tsv` form; `#` lines are comments. The entries must be
    /// a probability distribution (nonnegative, summing to exactly 1).
    pub fn parse_tsv(text: &str) -> Result<Self, DatasetError> {
        let mut n_leaves: Option<usize> = None;
        let mut entries = BTreeMap::new();
        for (line_no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (pattern_text, value_text) =
                line.split_once(['\t', ' ']).ok_or(DatasetError::Malformed {
                    line: line_no + 1,
                    message: "expected `pattern<TAB>value`".into(),
                })?;
            let pattern_text = pattern_text.trim();
            if pattern_text.is_empty() || !pattern_text.chars().all(|c| c == '0' || c == '1') {
                return Err(DatasetError::BadPattern(pattern_text.to_string()));
            }
            match n_leaves {
                None => n_leaves = Some(pattern_text.len()),
                Some(n) if n == pattern_text.len() => {}
                Some(_) => return Err(DatasetError::BadPattern(pattern_text.to_string())),
            }
            let pattern = u64::from_str_radix(pattern_text, 2)
                .map_err(|_| DatasetError::BadPattern(pattern_text.to_string()))?;
            let value = parse_rational(value_text.trim())?;
            entries.insert(pattern, value);
        }
        let n_leaves = n_leaves.ok_or(DatasetError::EmptyCounts)?;
        let dist = Self::from_entries(n_leaves, entries)?;
        if !dist.is_normalized() {
            return Err(DatasetError::NotNormalized(format_rational(&dist.total_mass())));
        }
        Ok(dist)
    }

    pub fn load(path: &Path) -> Result<Self, DatasetError> {
        let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse_tsv(&text)
    }

    /// SHA-256 of the canonical text form, as lowercase hex.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        hasher.update(self.to_tsv().as_bytes());
        let out = hasher.finalize();
        let mut hex = String::with_capacity(64);
        for byte in out {
            write!(hex, "{byte:02x}").unwrap();
        }
        hex
    }
}

impl PatternCounts {
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (&p, c) in &self.counts {
            writeln!(out, "{}\t{}", format_pattern(p, self.n_leaves), c).unwrap();
        }
        out
    }
}

pub fn format_pattern(pattern: u64, n_leaves: usize) -> String {
    format!("{pattern:0width$b}", width = n_leaves)
}

impl VariableWeighting {
    pub fn new(weights: BTreeMap<String, Rat>) -> Result<Self, DatasetError> {
        for (name, w) in &weights {
            if !is_nonnegative(w) {
                return Err(DatasetError::NegativeWeight {
                    variable: name.clone(),
                    value: format_rational(w),
                });
            }
        }
        Ok(VariableWeighting { weights })
    }

    pub fn uniform(variables: &[String]) -> Self {
        let weights = variables.iter().map(|v| (v.clone(), Rat::one())).collect();
        VariableWeighting { weights }
    }

    pub fn weights(&self) -> &BTreeMap<String, Rat> {
        &self.weights
    }

    /// Parse `variable<TAB>weight` lines; weights are rationals or decimals,
    /// read exactly.
    pub fn parse_tsv(text: &str) -> Result<Self, DatasetError> {
        let mut weights = BTreeMap::new();
        for (line_no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, value) = line.split_once('\t').ok_or(DatasetError::Malformed {
                line: line_no + 1,
                message: "expected `variable<TAB>weight`".into(),
            })?;
            weights.insert(name.trim().to_string(), parse_rational(value)?);
        }
        Self::new(weights)
    }

    pub fn load(path: &Path) -> Result<Self, DatasetError> {
        let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse_tsv(&text)
    }
}
