use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::Parser;
use dea_core::ccr::{ccr_all, ColumnScales};
use dea_core::madea::{madea_all, summarize, ActivityScores, AlphaMode, ScenarioSpec};
use dea_core::rank::{kendall_distance, rank_from_scores};
use dea_core::seqex::{seqex_run, MuChoice, SeqexConfig};
use dea_core::stats::{correlation_matrix, descriptive_stats};
use dea_core::{ColumnScaling, Dataset, SolverConfig};
use serde_json::{json, Value};

use crate::config::{load_dataset, ConfigError, RunConfig};
use crate::manifest::{hash_input, hash_output, strip_out, Manifest};
use crate::table::{csv_rows, Cell, Style, Table};
use crate::{Cli, Command, DataArgs, GlobalOpts, Scaling, Scenario};

struct Session<'a> {
    global: &'a GlobalOpts,
    out: PathBuf,
    style: Style,
    outputs: Vec<PathBuf>,
}

impl Session<'_> {
    fn solver(&self) -> SolverConfig {
        SolverConfig {
            column_scaling: match self.global.scaling {
                Scaling::ColumnMax => ColumnScaling::ColumnMax,
                Scaling::None => ColumnScaling::None,
            },
            ..SolverConfig::default().with_epsilon(self.global.epsilon)
        }
    }

    fn emit(&mut self, table: &Table, stem: &str) -> anyhow::Result<()> {
        let path = table.write(&self.out, stem, self.style)?;
        self.outputs.push(path);
        Ok(())
    }

    fn emit_json(&mut self, value: &impl serde::Serialize, name: &str) -> anyhow::Result<()> {
        let path = self.out.join(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        self.outputs.push(path);
        Ok(())
    }
}

pub fn run(cli: &Cli, raw_args: &[String]) -> anyhow::Result<()> {
    if let Command::Replay { manifest } = &cli.command {
        return replay(manifest, &cli.global.out);
    }
    let manifest = execute(cli, &cli.global.out, raw_args)?;
    let path = manifest.write(&cli.global.out)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn execute(cli: &Cli, out: &Path, raw_args: &[String]) -> anyhow::Result<Manifest> {
    let global = &cli.global;
    if !(global.epsilon > 0.0) {
        bail!("--epsilon must be positive, got {}", global.epsilon);
    }
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let mut session = Session {
        global,
        out: out.to_path_buf(),
        style: Style {
            format: global.format,
            paper: global.paper_style,
        },
        outputs: Vec::new(),
    };
    let mut inputs: Vec<PathBuf> = Vec::new();
    let mut mu = None;
    let name = match &cli.command {
        Command::Ccr(data) => {
            inputs.extend([data.data.clone(), data.config.clone()]);
            ccr(&mut session, data)?;
            "ccr".to_string()
        }
        Command::Madea {
            data,
            scenario,
            alpha,
            starts,
        } => {
            inputs.extend([data.data.clone(), data.config.clone()]);
            madea(&mut session, data, *scenario, *alpha, *starts)?;
            format!("madea_{}", scenario_label(*scenario))
        }
        Command::Seqex { data, mu: list, no_scale } => {
            inputs.extend([data.data.clone(), data.config.clone()]);
            mu = Some(seqex(&mut session, data, list, !no_scale)?);
            "seqex".to_string()
        }
        Command::Compare { baseline, files } => {
            inputs.extend(baseline.iter().chain(files).cloned());
            compare(&mut session, baseline, files)?;
            "compare".to_string()
        }
        Command::Report(data) => {
            inputs.extend([data.data.clone(), data.config.clone()]);
            report(&mut session, data)?;
            "report".to_string()
        }
        Command::Summarize { scores, prefix } => {
            inputs.push(scores.clone());
            summarize_table(&mut session, scores, prefix)?;
            "summarize".to_string()
        }
        Command::Replay { .. } => unreachable!("handled by run"),
    };
    Ok(Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: name,
        args: strip_out(raw_args),
        inputs: inputs.iter().map(|p| hash_input(p)).collect::<Result<_, _>>()?,
        seed: global.seed,
        epsilon: global.epsilon,
        column_scaling: format!("{:?}", session.solver().column_scaling),
        mu,
        outputs: session
            .outputs
            .iter()
            .map(|p| hash_output(out, p))
            .collect::<Result<_, _>>()?,
    })
}

fn load(data: &DataArgs) -> anyhow::Result<(RunConfig, Dataset)> {
    let config = RunConfig::load(&data.config)?;
    let dataset = load_dataset(&data.data, &config)?;
    Ok((config, dataset))
}

/// Weights as applied to the scaled data (the units the ε bound refers to);
/// raw-unit weights are far too small to survive six decimals.
fn scaled_weights(scales: &ColumnScales, input_weights: &[f64], output_weights: &[f64]) -> Vec<Cell> {
    let v = input_weights.iter().zip(&scales.inputs);
    let u = output_weights.iter().zip(&scales.outputs);
    v.chain(u).map(|(w, s)| Cell::Num(w * s)).collect()
}

fn ccr(session: &mut Session, data: &DataArgs) -> anyhow::Result<()> {
    let (_, ds) = load(data)?;
    let solver = session.solver();
    let results = ccr_all(&ds, &solver)?;
    let scales = ColumnScales::for_dataset(&ds, solver.column_scaling);
    let mut headers = vec!["id".to_string(), "score".to_string()];
    headers.extend(ds.input_names().iter().map(|n| format!("v_{n}")));
    headers.extend(ds.output_names().iter().map(|n| format!("u_{n}")));
    let mut table = Table::new(headers);
    for r in &results {
        let mut row = vec![Cell::Text(r.id.clone()), Cell::Score(r.score)];
        row.extend(scaled_weights(&scales, &r.input_weights, &r.output_weights));
        table.push(row);
    }
    session.emit(&table, "ccr_scores")
}

fn scenario_label(s: Scenario) -> &'static str {
    match s {
        Scenario::S1 => "s1",
        Scenario::S2 => "s2",
    }
}

fn madea(
    session: &mut Session,
    data: &DataArgs,
    scenario: Scenario,
    alpha: Option<f64>,
    starts: usize,
) -> anyhow::Result<()> {
    let (config, ds) = load(data)?;
    let structure = config.structure()?;
    let mut spec = match scenario {
        Scenario::S1 => ScenarioSpec::fixed_priorities(),
        Scenario::S2 => ScenarioSpec::endogenous_priorities(),
    };
    match (scenario, alpha) {
        (Scenario::S1, Some(a)) => spec.alpha = AlphaMode::Fixed(a),
        (Scenario::S2, Some(_)) => bail!("--alpha applies to scenario s1 only"),
        _ => {}
    }
    if let Some(bounds) = config.bounds() {
        spec.lambda_box = bounds.lambda.unwrap_or(spec.lambda_box);
        spec.beta_box = bounds.beta.unwrap_or(spec.beta_box);
    }
    spec.solver = session.solver();
    spec.starts = starts;
    spec.seed = session.global.seed;
    if let Err(e) = spec.validate() {
        return Err(ConfigError {
            path: config.path.clone(),
            message: e.to_string(),
        }
        .into());
    }
    let run = madea_all(&ds, &structure, &spec)?;
    let scales = ColumnScales::for_dataset(&ds, spec.solver.column_scaling);

    let mut headers: Vec<String> = ["id", "total", "teaching", "research", "alpha_teaching", "alpha_research"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    headers.extend(structure.shared_inputs.iter().map(|&j| format!("lambda_{}", ds.input_names()[j])));
    headers.extend(structure.split_outputs.iter().map(|&i| format!("beta_{}", ds.output_names()[i])));
    headers.extend(ds.input_names().iter().map(|n| format!("v_{n}")));
    headers.extend(ds.output_names().iter().map(|n| format!("u_{n}")));
    let mut table = Table::new(headers);
    for r in &run.results {
        let mut row = vec![
            Cell::Text(r.id.clone()),
            Cell::Score(r.total),
            Cell::Score(r.teaching),
            Cell::Score(r.research),
            Cell::Num(r.alpha_teaching),
            Cell::Num(r.alpha_research),
        ];
        row.extend(r.lambdas.iter().chain(&r.betas).map(|&v| Cell::Num(v)));
        row.extend(scaled_weights(&scales, &r.input_weights, &r.output_weights));
        table.push(row);
    }
    let label = scenario_label(scenario);
    session.emit(&table, &format!("madea_{label}_scores"))?;
    session.emit(&summary_table(&run.summary, true), &format!("madea_{label}_summary"))
}

fn summary_table(s: &dea_core::madea::MadeaSummary, with_alpha: bool) -> Table {
    let mut headers = vec!["statistic", "total", "teaching", "research"];
    if with_alpha {
        headers.push("alpha_teaching");
    }
    let mut table = Table::new(headers);
    let stats = [&s.total, &s.teaching, &s.research, &s.alpha_teaching];
    let width = if with_alpha { 4 } else { 3 };
    table.push(
        std::iter::once(Cell::Text("mean".into()))
            .chain(stats[..width].iter().map(|v| Cell::Num(v.mean)))
            .collect(),
    );
    table.push(
        std::iter::once(Cell::Text("std_dev".into()))
            .chain(stats[..width].iter().map(|v| Cell::Num(v.std_dev)))
            .collect(),
    );
    let mut counts = vec![
        Cell::Text("efficient_count".into()),
        Cell::Int(s.efficient_total),
        Cell::Int(s.efficient_teaching),
        Cell::Int(s.efficient_research),
    ];
    if with_alpha {
        counts.push(Cell::Empty);
    }
    table.push(counts);
    table
}

fn parse_mu_list(text: &str) -> anyhow::Result<Vec<MuChoice>> {
    text.split(',')
        .map(|item| {
            let item = item.trim();
            if item.eq_ignore_ascii_case("computed") {
                return Ok(MuChoice::Computed);
            }
            let v: f64 = item
                .parse()
                .with_context(|| format!("--mu: `{item}` is neither a number nor `computed`"))?;
            if !(0.0..=1.0).contains(&v) {
                bail!("--mu: {v} outside [0, 1]");
            }
            Ok(MuChoice::Supplied(v))
        })
        .collect()
}

fn seqex(session: &mut Session, data: &DataArgs, list: &str, scale: bool) -> anyhow::Result<Value> {
    let (_, ds) = load(data)?;
    let choices = parse_mu_list(list)?;
    let mut record = Vec::new();
    for mu in choices {
        let config = SeqexConfig {
            mu,
            scale_distances: scale,
            solver: session.solver(),
        };
        let result = seqex_run(&ds, &config)?;
        let label = match mu {
            MuChoice::Computed => "computed".to_string(),
            MuChoice::Supplied(v) => format!("mu{v}"),
        };
        let mut table = Table::new(["id", "score", "round"]);
        for s in &result.scores {
            table.push(vec![Cell::Text(s.id.clone()), Cell::Score(s.score), Cell::Int(s.round)]);
        }
        session.emit(&table, &format!("seqex_{label}_scores"))?;
        session.emit_json(&result.trace, &format!("seqex_{label}_trace.json"))?;
        record.push(match mu {
            MuChoice::Supplied(v) => json!({ "supplied": v }),
            MuChoice::Computed => json!({
                "computed": result.trace.rounds.iter().filter_map(|r| r.heterogeneity).map(|h| json!({
                    "mu": h.mu,
                    "mean_distance": h.mean_distance,
                    "max_distance": h.max_distance,
                })).collect::<Vec<_>>(),
                "formula": "mean(d) / max(d), d = distances to the barycenter",
                "scaled": scale,
            }),
        });
    }
    Ok(Value::Array(record))
}

fn label_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn compare(session: &mut Session, baseline: &[PathBuf], files: &[PathBuf]) -> anyhow::Result<()> {
    let columns: &[PathBuf] = if baseline.is_empty() { files } else { baseline };
    let rank = |p: &PathBuf| -> anyhow::Result<_> {
        let scores = crate::table::read_scores(p)?;
        rank_from_scores(&scores, true).with_context(|| p.display().to_string())
    };
    let col_ranks = columns.iter().map(rank).collect::<anyhow::Result<Vec<_>>>()?;
    let mut headers = vec!["method".to_string()];
    headers.extend(columns.iter().map(|p| label_of(p)));
    let mut table = Table::new(headers);
    for f in files {
        let r = rank(f)?;
        let mut row = vec![Cell::Text(label_of(f))];
        for (c, cr) in columns.iter().zip(&col_ranks) {
            let d = kendall_distance(&r, cr)
                .with_context(|| format!("{} vs {}", f.display(), c.display()))?;
            row.push(Cell::Num(d));
        }
        table.push(row);
    }
    session.emit(&table, "compare")
}

fn report(session: &mut Session, data: &DataArgs) -> anyhow::Result<()> {
    let (_, ds) = load(data)?;
    let mut stats = Table::new(["variable", "role", "mean", "std_dev", "max", "min"]);
    for (var, name) in ds.variable_names().iter().enumerate() {
        let s = descriptive_stats(&ds.column(var))?;
        let role = if var < ds.m() { "input" } else { "output" };
        stats.push(vec![
            Cell::Text(name.clone()),
            Cell::Text(role.into()),
            Cell::Num(s.mean),
            Cell::Num(s.std_dev),
            Cell::Num(s.max),
            Cell::Num(s.min),
        ]);
    }
    session.emit(&stats, "report_stats")?;
    let corr = correlation_matrix(&ds)?;
    let mut headers = vec!["variable".to_string()];
    headers.extend(corr.names.iter().cloned());
    let mut table = Table::new(headers);
    for (a, name) in corr.names.iter().enumerate() {
        let mut row = vec![Cell::Text(name.clone())];
        row.extend((0..corr.names.len()).map(|b| Cell::Num(corr.get(a, b))));
        table.push(row);
    }
    session.emit(&table, "report_correlations")
}

fn summarize_table(session: &mut Session, path: &Path, prefix: &str) -> anyhow::Result<()> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let (headers, rows) = csv_rows(&text).with_context(|| path.display().to_string())?;
    let col = |name: &str| headers.iter().position(|h| *h == format!("{prefix}{name}"));
    let need = |name: &str| col(name).with_context(|| format!("{}: no `{prefix}{name}` column", path.display()));
    let (t, te, re) = (need("total")?, need("teaching")?, need("research")?);
    let alpha = col("alpha_teaching");
    let num = |row: &[String], i: usize| -> anyhow::Result<f64> {
        row[i]
            .trim_end_matches('*')
            .parse()
            .with_context(|| format!("{}: bad number `{}`", path.display(), row[i]))
    };
    let scores = rows
        .iter()
        .map(|r| {
            Ok(ActivityScores {
                total: num(r, t)?,
                teaching: num(r, te)?,
                research: num(r, re)?,
                alpha_teaching: match alpha {
                    Some(a) => num(r, a)?,
                    None => 0.5,
                },
            })
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let summary = summarize(&scores)?;
    let stem = format!("{}_summary", label_of(path));
    session.emit(&summary_table(&summary, alpha.is_some()), &stem)
}

fn replay(manifest_path: &Path, out: &Path) -> anyhow::Result<()> {
    let original = Manifest::read(manifest_path)?;
    for input in &original.inputs {
        let now = hash_input(Path::new(&input.path))?;
        if now.sha256 != input.sha256 {
            bail!("input {} changed since the run", input.path);
        }
    }
    let argv = std::iter::once("dea".to_string()).chain(original.args.iter().cloned());
    let cli = Cli::try_parse_from(argv).context("manifest arguments no longer parse")?;
    if matches!(cli.command, Command::Replay { .. }) {
        bail!("a manifest cannot replay another manifest");
    }
    let rerun = execute(&cli, out, &original.args)?;
    let mut mismatched = Vec::new();
    for (a, b) in original.outputs.iter().zip(&rerun.outputs) {
        if a != b {
            mismatched.push(a.path.clone());
        }
    }
    if original.outputs.len() != rerun.outputs.len() {
        bail!(
            "output count differs: {} recorded, {} produced",
            original.outputs.len(),
            rerun.outputs.len()
        );
    }
    if !mismatched.is_empty() {
        bail!("outputs differ: {}", mismatched.join(", "));
    }
    let path = rerun.write(out)?;
    if rerun != original {
        bail!("manifest {} differs from the original", path.display());
    }
    println!("replay ok: {} outputs identical", rerun.outputs.len());
    Ok(())
}
