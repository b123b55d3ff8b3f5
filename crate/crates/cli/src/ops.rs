//! Command implementations: wiring between files, flags and the library.

use crate::{Command, DataArgs, DataDialect, DataFormat, OutputFormat, TreesCommand};
use anyhow::{anyhow, bail, Context, Result};
use phyloalg_core::dataset::{
    boundary_distribution, completely_mapped, count_patterns, load_table, BoundaryDistribution,
    CellDialect, TableFormat, VariableWeighting,
};
use phyloalg_core::flatten::{flatten, flattening_to_tsv, RatMatrix};
use phyloalg_core::invariants::minor_norms;
use phyloalg_core::markov::{
    boundary_map, load_model, sample_patterns, RNG_ALGORITHM,
};
use phyloalg_core::ranking::{rank, report_to_json, report_to_table, Criterion};
use phyloalg_core::rational::{format_decimal, format_rational};
use phyloalg_core::spectral::{singular_values_rat, spectral_result};
use phyloalg_core::tree::{
    ancient_pair_resolutions, dedup_by_topology, enumerate_unrooted_binary, graft,
    resolve_multifurcations, EdgeSplit, PhyloTree, TreeError,
};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Cap the worker pool from PHYLOALG_THREADS when set.
pub fn configure_threads() {
    if let Ok(value) = std::env::var("PHYLOALG_THREADS") {
        if let Ok(threads) = value.parse::<usize>() {
            if threads >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
            }
        }
    }
}

/// 2 for input validation problems, 3 for tree/data leaf mismatches.
pub fn exit_code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<phyloalg_core::ranking::RankingError>() {
            if matches!(e, phyloalg_core::ranking::RankingError::LeafMismatch) {
                return 3;
            }
        }
        if let Some(e) = cause.downcast_ref::<phyloalg_core::flatten::FlattenError>() {
            if matches!(e, phyloalg_core::flatten::FlattenError::LeafCountMismatch { .. }) {
                return 3;
            }
        }
        if let Some(e) = cause.downcast_ref::<TreeError>() {
            if matches!(
                e,
                TreeError::LeafSetMismatch | TreeError::LeafOrderMismatch { .. }
            ) {
                return 3;
            }
        }
    }
    2
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_languages(args: &DataArgs) -> Result<Option<Vec<String>>> {
    if let Some(list) = &args.languages {
        let names: Vec<String> =
            list.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
        if names.is_empty() {
            bail!("--languages is empty");
        }
        return Ok(Some(names));
    }
    if let Some(path) = &args.languages_file {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        let names: Vec<String> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_string)
            .collect();
        if names.is_empty() {
            bail!("{} lists no languages", path.display());
        }
        return Ok(Some(names));
    }
    Ok(None)
}

/// Resolve the data flags into a distribution plus its variable count when
/// it came from a counted table.
fn load_distribution(args: &DataArgs) -> Result<(BoundaryDistribution, Option<u64>)> {
    let languages = read_languages(args)?;
    match (&args.data, &args.distribution) {
        (Some(_), Some(_)) => bail!("--data and --distribution are mutually exclusive"),
        (None, None) => bail!("one of --data or --distribution is required"),
        (Some(path), None) => {
            if !path.exists() {
                bail!("data file {} does not exist", path.display());
            }
            let format = match args.data_format {
                DataFormat::Tsv => TableFormat::Tsv,
                DataFormat::Csv => TableFormat::Csv,
            };
            let dialect = match args.data_dialect {
                DataDialect::Sswl => CellDialect::Sswl,
                DataDialect::Langelin => CellDialect::Langelin,
            };
            let table = load_table(path, format, dialect)?;
            let languages = languages
                .ok_or_else(|| anyhow!("--languages (or --languages-file) is required with --data"))?;
            let mapped = completely_mapped(&table, &languages)?;
            let n_variables = mapped.variables().len() as u64;
            let dist = match &args.weights {
                Some(wpath) => {
                    if !wpath.exists() {
                        bail!("weights file {} does not exist", wpath.display());
                    }
                    let weighting = VariableWeighting::load(wpath)?;
                    phyloalg_core::dataset::weighted_boundary_distribution(&mapped, &weighting)?
                }
                None => boundary_distribution(&count_patterns(&mapped)?)?,
            };
            Ok((dist, Some(n_variables)))
        }
        (None, Some(path)) => {
            if !path.exists() {
                bail!("distribution file {} does not exist", path.display());
            }
            if args.weights.is_some() {
                bail!("--weights requires --data (weights apply to variables, not patterns)");
            }
            let dist = BoundaryDistribution::load(path)?;
            Ok((dist, None))
        }
    }
}

fn load_trees(path: &Path, languages: Option<&[String]>) -> Result<Vec<PhyloTree>> {
    if !path.exists() {
        bail!("tree file {} does not exist", path.display());
    }
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut trees = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tree = PhyloTree::parse_newick(line)
            .with_context(|| format!("{}:{}", path.display(), line_no + 1))?;
        let tree = match languages {
            Some(order) => tree.reindexed(order)?,
            None => tree,
        };
        trees.push(tree);
    }
    if trees.is_empty() {
        bail!("{} contains no trees", path.display());
    }
    Ok(trees)
}

/// A split side given as names (against the language order) or 0-based
/// indices.
fn parse_side(side: &str, languages: Option<&[String]>, n_leaves: usize) -> Result<EdgeSplit> {
    let mut indices = Vec::new();
    for token in side.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let index = match languages.and_then(|ls| ls.iter().position(|l| l == token)) {
            Some(i) => i,
            None => token
                .parse::<usize>()
                .map_err(|_| anyhow!("`{token}` is neither a known language nor an index"))?,
        };
        if index >= n_leaves {
            bail!("leaf index {index} out of range for {n_leaves} leaves");
        }
        indices.push(index);
    }
    if indices.is_empty() || indices.len() >= n_leaves {
        bail!("--side must name a proper nonempty subset of the leaves");
    }
    indices.sort_unstable();
    indices.dedup();
    Ok(EdgeSplit::from_indices(&indices, n_leaves))
}

fn parse_criteria(text: &str) -> Result<Vec<Criterion>> {
    let mut out = Vec::new();
    for token in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let c = Criterion::parse(token)
            .ok_or_else(|| anyhow!("unknown criterion `{token}` (want linf, l1, dist)"))?;
        if !out.contains(&c) {
            out.push(c);
        }
    }
    if out.is_empty() {
        bail!("no criteria requested");
    }
    Ok(out)
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Analyze { data, trees, criteria, conditional, format, out } => {
            let languages = read_languages(&data)?;
            let (dist, n_variables) = load_distribution(&data)?;
            let parsed = load_trees(&trees, languages.as_deref())?;
            // Multifurcating candidates stand for all their binary
            // resolutions; equivalent candidates collapse to one class.
            let mut binary = Vec::new();
            for tree in &parsed {
                binary.extend(resolve_multifurcations(tree));
            }
            let candidates = dedup_by_topology(&binary);
            let criteria = parse_criteria(&criteria)?;
            let report = rank(&dist, &candidates, &criteria, conditional, n_variables)?;
            let text = match format {
                OutputFormat::Json => {
                    format!("{:#}\n", report_to_json(&report))
                }
                OutputFormat::Table | OutputFormat::Tsv => report_to_table(&report),
            };
            emit(&out, &text)
        }
        Command::Flatten { data, side, out } => {
            let languages = read_languages(&data)?;
            let (dist, _) = load_distribution(&data)?;
            let split = parse_side(&side, languages.as_deref(), dist.n_leaves())?;
            let f = flatten(&dist, &split)?;
            let names: Vec<String> = languages.unwrap_or_else(|| {
                (0..dist.n_leaves()).map(|i| i.to_string()).collect()
            });
            emit(&out, &flattening_to_tsv(&f, &names))
        }
        Command::Invariants { data, matrix, side, format, out } => {
            let m = load_matrix_or_flattening(&data, &matrix, &side)?;
            let norms = minor_norms(&m);
            let text = match format {
                OutputFormat::Json => format!(
                    "{:#}\n",
                    serde_json::json!({
                        "linf": format_rational(&norms.linf),
                        "linf_decimal": format_decimal(&norms.linf),
                        "l1": format_rational(&norms.l1),
                        "l1_decimal": format_decimal(&norms.l1),
                        "minor_count": norms.minor_count,
                        "degenerate": norms.minor_count == 0,
                    })
                ),
                _ => {
                    let mut s = String::new();
                    writeln!(
                        s,
                        "linf\t{}\t{}",
                        format_rational(&norms.linf),
                        format_decimal(&norms.linf)
                    )?;
                    writeln!(
                        s,
                        "l1\t{}\t{}",
                        format_rational(&norms.l1),
                        format_decimal(&norms.l1)
                    )?;
                    writeln!(s, "minors\t{}", norms.minor_count)?;
                    if norms.minor_count == 0 {
                        writeln!(s, "note\tno 3x3 minors exist; zero score is not model fit")?;
                    }
                    s
                }
            };
            emit(&out, &text)
        }
        Command::Distance { data, matrix, side, rank: k, format, out } => {
            let m = load_matrix_or_flattening(&data, &matrix, &side)?;
            let floats = m.to_f64();
            let sigmas = singular_values_rat(&m)?;
            if k > m.rows().min(m.cols()) {
                bail!("--rank {k} exceeds min(rows, cols) = {}", m.rows().min(m.cols()));
            }
            let dist_sq: f64 = sigmas.iter().skip(k).map(|s| s * s).sum();
            let spectral = spectral_result(&floats)?;
            let text = match format {
                OutputFormat::Json => format!(
                    "{:#}\n",
                    serde_json::json!({
                        "singular_values": sigmas,
                        "rank": k,
                        "dist_sq": dist_sq,
                        "nonunique_minimizer": spectral.nonunique_minimizer,
                    })
                ),
                _ => {
                    let mut s = String::new();
                    let rendered: Vec<String> =
                        sigmas.iter().map(|x| format!("{x:.4e}")).collect();
                    writeln!(s, "sigma\t{}", rendered.join("\t"))?;
                    writeln!(s, "dist_sq[rank<={k}]\t{dist_sq:.4e}")?;
                    if spectral.nonunique_minimizer {
                        writeln!(s, "note\tnearest rank-2 matrix is not unique")?;
                    }
                    s
                }
            };
            emit(&out, &text)
        }
        Command::Simulate { model, samples, seed, out } => {
            if !model.exists() {
                bail!("model file {} does not exist", model.display());
            }
            let m = load_model(&model)?;
            let text = match samples {
                None => {
                    let dist = boundary_map(&m)?;
                    format!("# exact boundary distribution\n{}", dist.to_tsv())
                }
                Some(n) => {
                    let counts = sample_patterns(&m, n, seed)?;
                    format!(
                        "# sampled pattern counts (rng: {RNG_ALGORITHM}, seed: {seed}, samples: {n})\n{}",
                        counts.to_tsv()
                    )
                }
            };
            emit(&out, &text)
        }
        Command::Trees(tc) => run_trees(tc),
    }
}

fn load_matrix_or_flattening(
    data: &DataArgs,
    matrix: &Option<PathBuf>,
    side: &Option<String>,
) -> Result<RatMatrix> {
    match matrix {
        Some(path) => {
            if data.data.is_some() || data.distribution.is_some() {
                bail!("--matrix cannot be combined with --data/--distribution");
            }
            if !path.exists() {
                bail!("matrix file {} does not exist", path.display());
            }
            Ok(RatMatrix::load(path)?)
        }
        None => {
            let languages = read_languages(data)?;
            let (dist, _) = load_distribution(data)?;
            let side = side
                .as_deref()
                .ok_or_else(|| anyhow!("--side is required when scoring a distribution"))?;
            let split = parse_side(side, languages.as_deref(), dist.n_leaves())?;
            Ok(flatten(&dist, &split)?.matrix)
        }
    }
}

fn run_trees(command: TreesCommand) -> Result<()> {
    match command {
        TreesCommand::Resolve { trees, dedup, out } => {
            let parsed = load_trees(&trees, None)?;
            let mut resolved = Vec::new();
            for tree in &parsed {
                resolved.extend(resolve_multifurcations(tree));
            }
            let resolved = if dedup { dedup_by_topology(&resolved) } else { resolved };
            emit(&out, &newick_lines(&resolved))
        }
        TreesCommand::Enumerate { leaves, out } => {
            let names: Vec<String> = leaves
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect();
            let trees = enumerate_unrooted_binary(&names)?;
            emit(&out, &newick_lines(&trees))
        }
        TreesCommand::Graft { trees, at, out } => {
            let parsed = load_trees(&trees, None)?;
            if parsed.len() != 2 {
                bail!("graft needs exactly two trees, found {}", parsed.len());
            }
            let grafted = graft(&parsed[0], &parsed[1], &at)?;
            emit(&out, &newick_lines(std::slice::from_ref(&grafted)))
        }
        TreesCommand::AncientMove { trees, pair, out } => {
            let parsed = load_trees(&trees, None)?;
            if parsed.len() != 1 {
                bail!("ancient-move takes exactly one tree, found {}", parsed.len());
            }
            let names: Vec<&str> =
                pair.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
            if names.len() != 2 {
                bail!("--pair needs exactly two leaf names");
            }
            let moved = ancient_pair_resolutions(&parsed[0], (names[0], names[1]))?;
            emit(&out, &newick_lines(&moved))
        }
    }
}

fn newick_lines(trees: &[PhyloTree]) -> String {
    let mut out = String::new();
    for tree in trees {
        out.push_str(&tree.write_newick());
        out.push('\n');
    }
    out
}
