use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serieslab::error::Error;
use serieslab::io::{read_json, write_json, write_permutation_csv, write_trace_compact, write_trace_csv_stream, Envelope, Format, RunConfig, TraceData, COMPACT_THRESHOLD};
use serieslab::rational::{fmt_rational, parse_rational, Rational};
use serieslab::rs_seq::{almost_splits, audit_rs, oscillation_from_witness, totally_splits, RSSequence, SplitOutcome};
use serieslab::series::{partial_sums, DivergenceVerdict, Series};
use serieslab::sets::IndexSet;
use serieslab::stochastic::{
    divergence_frequency, divergence_frequency_f64, flip, inf_experiment, k_block_of, kspace_series, variance_experiment,
    variance_experiment_f64, KPoint,
};
use serieslab::transforms::{p_from_set, parse_pipeline, shuffle};
use serieslab::witnesses::{
    blocks_base_pow, find_milestones_with, generic_oscillator, one_one_sequence_with_base, quarter_oscillation_check,
    BlockPartition, MilestoneMode, MilestoneRule, Milestones, OscillatorResult,
};

use crate::{Cli, Command, Failure, Global, KspaceCmd, McCmd, RsCmd, WitnessCmd};

type Outcome = Result<(), Failure>;

/// Milestones together with the specs needed to rebuild and re-verify them.
#[derive(Serialize, Deserialize)]
pub struct MilestoneFile {
    pub series_spec: String,
    pub set_spec: String,
    pub milestones: Milestones,
}

#[derive(Serialize, Deserialize)]
pub struct OscillatorFile {
    pub series_spec: String,
    pub result: OscillatorResult,
    /// `(n, S_n)` at each member of the constructed set.
    pub trace: Vec<(u64, f64)>,
}

#[derive(Serialize, Deserialize)]
pub struct QuarterFile {
    pub series_spec: String,
    pub set_spec: String,
    pub verdict: DivergenceVerdict,
}

#[derive(Serialize, Deserialize)]
pub struct BlocksFile {
    pub series_spec: String,
    pub partition: BlockPartition,
}

#[derive(Serialize, Deserialize)]
pub struct SequenceFile {
    pub series_spec: String,
    pub sequence: RSSequence,
}

#[derive(Serialize)]
struct SplitFile<'a> {
    d: &'a str,
    kind: &'a str,
    outcome: &'a SplitOutcome,
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    input: String,
    kind: &'a str,
    verified: bool,
}

#[derive(Serialize)]
struct MapTable {
    map: String,
    values: Vec<u64>,
}

#[derive(Serialize)]
struct KspaceReport {
    samples: u64,
    depth: u64,
    set: String,
    checked_sums: u64,
    bound_violations: u64,
    flip_violations: u64,
}

fn config(g: &Global, command: String) -> RunConfig {
    RunConfig {
        command,
        horizon: g.horizon,
        tol: g.tol.clone(),
        seed: g.seed,
        format: g.format,
        scan_bound: g.scan_bound,
        base: g.base.clone(),
        ..RunConfig::default()
    }
}

fn output(g: &Global) -> Result<Box<dyn Write>, Failure> {
    Ok(match &g.out {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn series(spec: &str) -> Result<Series, Failure> {
    Ok(spec.parse::<Series>()?)
}

fn set(spec: &str) -> Result<IndexSet, Failure> {
    Ok(spec.parse::<IndexSet>()?.with_label(spec))
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    Ok(BufReader::new(File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?))
}

fn report<T: Serialize>(g: &Global, cfg: &RunConfig, kind: &str, payload: &T) -> Outcome {
    let mut w = output(g)?;
    write_json(&mut w, kind, cfg, payload)?;
    w.flush()?;
    Ok(())
}

pub fn run(cli: &Cli, argv: String) -> Outcome {
    let g = &cli.global;
    let cfg = config(g, argv);
    match &cli.command {
        Command::Trace { series: s, set: a } => {
            let a_set = a.as_deref().map(set).transpose()?;
            trace(g, &cfg, &series(s)?, a_set.as_ref())
        }
        Command::Transform { series: s, pipeline, map, set: a } => {
            if let Some(spec) = map {
                return tabulate_map(g, &cfg, spec);
            }
            let mut b = series(s)?;
            let spec = pipeline.as_deref().unwrap_or("");
            for stage in parse_pipeline(spec)? {
                b = stage.apply(&b, g.horizon)?;
            }
            let b = b.with_name(format!("{s} | {spec}"));
            let a_set = a.as_deref().map(set).transpose()?;
            trace(g, &cfg, &b, a_set.as_ref())
        }
        Command::Witness(w) => witness(g, &cfg, w),
        Command::Rs(r) => rs(g, &cfg, r),
        Command::Mc(m) => mc(g, &cfg, m),
        Command::Kspace(k) => kspace(g, &cfg, k),
    }
}

fn trace(g: &Global, cfg: &RunConfig, s: &Series, a: Option<&IndexSet>) -> Outcome {
    if g.horizon == 0 {
        return Err(Error::EmptyHorizon.into());
    }
    let mut w = output(g)?;
    match g.format {
        Format::Csv if g.horizon > COMPACT_THRESHOLD => {
            write_trace_compact(&mut w, s, a, g.horizon, cfg)?;
        }
        Format::Csv => write_trace_csv_stream(&mut w, s, a, g.horizon, cfg)?,
        Format::Json => write_json(&mut w, "trace", cfg, &TraceData::from(&partial_sums(s, g.horizon, a)?))?,
    }
    w.flush()?;
    Ok(())
}

fn tabulate_map(g: &Global, cfg: &RunConfig, spec: &str) -> Outcome {
    let bad = || Error::Parse(format!("expected shuffle(A;B) or p_set(A;B), got `{spec}`"));
    let (name, rest) = spec.split_once('(').ok_or_else(bad)?;
    let (x, y) = rest.strip_suffix(')').and_then(|r| r.split_once(';')).ok_or_else(bad)?;
    let (x, y) = (set(x.trim())?, set(y.trim())?);
    let f = match name.trim() {
        "shuffle" => shuffle(&x, &y, g.horizon)?.to_injection(),
        "p_set" => p_from_set(&x, &y, g.horizon)?,
        _ => return Err(bad().into()),
    };
    let mut w = output(g)?;
    match g.format {
        Format::Csv => write_permutation_csv(&mut w, &f, g.horizon, cfg)?,
        Format::Json => write_json(&mut w, "map", cfg, &MapTable { map: f.label().to_string(), values: f.table(g.horizon)? })?,
    }
    w.flush()?;
    Ok(())
}

fn targets(spec: &str) -> Result<Vec<Rational>, Failure> {
    Ok(spec.split(',').map(str::trim).filter(|t| !t.is_empty()).map(parse_rational).collect::<Result<Vec<_>, _>>()?)
}

fn witness(g: &Global, cfg: &RunConfig, cmd: &WitnessCmd) -> Outcome {
    match cmd {
        WitnessCmd::Milestones { series: s, set: a, mode, c, count, rule } => {
            let mode = match (mode.as_str(), c) {
                ("plus", _) => MilestoneMode::ToPlusInfinity,
                ("minus", _) => MilestoneMode::ToMinusInfinity,
                ("osc", Some(c)) => MilestoneMode::Oscillation { c: c.clone() },
                ("osc", None) => return Err(Error::Parse("--mode osc needs --c".into()).into()),
                (m, _) => return Err(Error::Parse(format!("unknown mode `{m}` (plus|minus|osc)")).into()),
            };
            let rule = match rule.as_str() {
                "greedy" => MilestoneRule::Greedy,
                "strengthened" => MilestoneRule::Strengthened,
                "dominating" => MilestoneRule::Dominating,
                r => return Err(Error::Parse(format!("unknown rule `{r}`")).into()),
            };
            let ms = find_milestones_with(&series(s)?, &set(a)?, mode, *count, g.horizon, rule)?;
            let shortfall = ms.shortfall();
            let file = MilestoneFile { series_spec: s.clone(), set_spec: a.clone(), milestones: ms };
            report(g, cfg, "milestones", &file)?;
            if shortfall > 0 {
                return Err(Failure::Shortfall(format!("{shortfall} of {count} milestones missing below {}", g.horizon)));
            }
            Ok(())
        }
        WitnessCmd::Oscillator { series: s, targets: t } => {
            let a = series(s)?;
            let res = generic_oscillator(&a, &targets(t)?, g.horizon)?;
            let trace = res.float_trace(&a)?;
            let shortfall = res.shortfall();
            report(g, cfg, "oscillator", &OscillatorFile { series_spec: s.clone(), result: res, trace })?;
            if shortfall > 0 {
                return Err(Failure::Shortfall(format!("{shortfall} targets not reached below {}", g.horizon)));
            }
            Ok(())
        }
        WitnessCmd::Quarter { series: s, set: d, excursions } => {
            let verdict = quarter_oscillation_check(&series(s)?, &set(d)?, *excursions, g.horizon)?;
            let osc = verdict.is_oscillation();
            report(g, cfg, "quarter", &QuarterFile { series_spec: s.clone(), set_spec: d.clone(), verdict })?;
            if !osc {
                return Err(Failure::Shortfall(format!("fewer than {excursions} excursions past ±1/4 below {}", g.horizon)));
            }
            Ok(())
        }
        WitnessCmd::Blocks { series: s, count } => {
            let partition = blocks_base_pow(&series(s)?, &g.base, *count, g.scan_bound)?;
            report(g, cfg, "blocks", &BlocksFile { series_spec: s.clone(), partition })
        }
        WitnessCmd::Verify { input } => verify(g, cfg, input),
    }
}

fn verify(g: &Global, cfg: &RunConfig, input: &Path) -> Outcome {
    let raw: Envelope<serde_json::Value> = read_json(open(input)?)?;
    let payload = raw.payload;
    let ok = match raw.kind.as_str() {
        "milestones" => {
            let f: MilestoneFile = serde_json::from_value(payload).map_err(Error::from)?;
            f.milestones.verify(&series(&f.series_spec)?, &set(&f.set_spec)?)?
        }
        "oscillator" => {
            let f: OscillatorFile = serde_json::from_value(payload).map_err(Error::from)?;
            let a = series(&f.series_spec)?;
            // floats survive JSON only to within rounding
            let fresh = f.result.float_trace(&a)?;
            f.result.verify(&a)?
                && fresh.len() == f.trace.len()
                && fresh.iter().zip(&f.trace).all(|(x, y)| x.0 == y.0 && (x.1 - y.1).abs() <= 1e-12)
        }
        "quarter" => {
            let f: QuarterFile = serde_json::from_value(payload).map_err(Error::from)?;
            f.verdict.verify(&series(&f.series_spec)?, Some(&set(&f.set_spec)?))?
        }
        "blocks" => {
            let f: BlocksFile = serde_json::from_value(payload).map_err(Error::from)?;
            f.partition.verify(&series(&f.series_spec)?)?
        }
        k => return Err(Error::Parse(format!("cannot verify documents of kind `{k}`")).into()),
    };
    let r = VerifyReport { input: input.display().to_string(), kind: &raw.kind, verified: ok };
    report(g, cfg, "verify", &r)?;
    if !ok {
        return Err(Failure::Rejected(format!("certificates in {} do not re-verify", input.display())));
    }
    Ok(())
}

fn read_sequence(input: &Path) -> Result<SequenceFile, Failure> {
    Ok(read_json::<_, SequenceFile>(open(input)?)?.payload)
}

/// `D` for splitting: a set spec, or `B` for the union of the blocks' `B_k`.
fn split_set(spec: &str, seq: &RSSequence) -> Result<IndexSet, Failure> {
    if spec == "B" {
        return Ok(seq.union_of_b().with_label("B"));
    }
    set(spec)
}

fn rs(g: &Global, cfg: &RunConfig, cmd: &RsCmd) -> Outcome {
    match cmd {
        RsCmd::Build { series: s, pairs } => {
            let sequence = one_one_sequence_with_base(&series(s)?, &g.base, *pairs, g.scan_bound)?;
            report(g, cfg, "rs_sequence", &SequenceFile { series_spec: s.clone(), sequence })
        }
        RsCmd::Audit { input, tail_start } => {
            let f = read_sequence(input)?;
            let audit = audit_rs(&f.sequence, &g.tol, *tail_start)?;
            let mut w = output(g)?;
            match g.format {
                Format::Json => write_json(&mut w, "rs_audit", cfg, &audit)?,
                Format::Csv => {
                    writeln!(w, "# schema: {}", serieslab::io::SCHEMA)?;
                    writeln!(w, "# config: {}", serde_json::to_string(cfg).map_err(Error::from)?)?;
                    writeln!(w, "k,b_deviation,complement_deviation,ok")?;
                    for r in &audit.rows {
                        writeln!(w, "{},{},{},{}", r.k, fmt_rational(&r.b_deviation), fmt_rational(&r.complement_deviation), if r.ok { "pass" } else { "fail" })?;
                    }
                }
            }
            w.flush()?;
            if !audit.passes() {
                return Err(Failure::Rejected(format!("blocks {:?} exceed tolerance {}", audit.failing, fmt_rational(&g.tol))));
            }
            Ok(())
        }
        RsCmd::Split { input, d, kind, min_blocks } => {
            let f = read_sequence(input)?;
            let dset = split_set(d, &f.sequence)?;
            let outcome = match kind.as_str() {
                "almost" => almost_splits(&dset, &f.sequence, &g.tol, *min_blocks)?,
                "total" => totally_splits(&dset, &f.sequence, *min_blocks)?,
                k => return Err(Error::Parse(format!("unknown split kind `{k}` (almost|total)")).into()),
            };
            report(g, cfg, "split", &SplitFile { d, kind, outcome: &outcome })?;
            if outcome.witness().is_none() {
                return Err(Failure::Shortfall(format!("fewer than {min_blocks} qualifying blocks")));
            }
            Ok(())
        }
        RsCmd::Oscillate { input, d, min_blocks } => {
            let f = read_sequence(input)?;
            let dset = split_set(d, &f.sequence)?;
            let outcome = almost_splits(&dset, &f.sequence, &g.tol, *min_blocks)?;
            let w = outcome
                .witness()
                .ok_or_else(|| Failure::Shortfall(format!("fewer than {min_blocks} almost-split blocks")))?;
            let res = oscillation_from_witness(&series(&f.series_spec)?, &f.sequence, &dset, w)?;
            let holds = res.checks.iter().all(|c| c.holds()) && res.verdict.is_oscillation();
            report(g, cfg, "witness_oscillation", &res)?;
            if !holds {
                return Err(Failure::Rejected("block inequalities or verdict failed".into()));
            }
            Ok(())
        }
    }
}

/// `1/√n` coefficients on `A ∩ [1, m]`, zero elsewhere.
fn sqrt_coeffs(a: &IndexSet, m: u64) -> Vec<f64> {
    a.bitmap_upto(m)[1..].iter().enumerate().map(|(i, &on)| if on { 1.0 / ((i + 1) as f64).sqrt() } else { 0.0 }).collect()
}

fn mc(g: &Global, cfg: &RunConfig, cmd: &McCmd) -> Outcome {
    match cmd {
        McCmd::Rademacher { cn, set: a, trials, escape } => {
            let a = set(a)?;
            let r = if cn == "sqrt" {
                let esc = serieslab::rational::to_f64(escape);
                divergence_frequency_f64(&sqrt_coeffs(&a, g.horizon), *trials, esc, g.seed)?
            } else {
                divergence_frequency(&series(cn)?, &a, *trials, g.horizon, escape, g.seed)?
            };
            report(g, cfg, "divergence_frequency", &r)
        }
        McCmd::Variance { cn, set: a, m, trials } => {
            let a = set(a)?;
            let r = if cn == "sqrt" {
                variance_experiment_f64(&sqrt_coeffs(&a, *m), *trials, g.seed)?
            } else {
                variance_experiment(&series(cn)?, &a, *m, *trials, g.seed)?
            };
            report(g, cfg, "variance", &r)
        }
    }
}

fn kspace(g: &Global, cfg: &RunConfig, cmd: &KspaceCmd) -> Outcome {
    match cmd {
        KspaceCmd::Sample { depth, samples, set: a } => {
            let a_set = set(a)?;
            let mut rep = KspaceReport {
                samples: *samples,
                depth: *depth,
                set: a.clone(),
                checked_sums: 0,
                bound_violations: 0,
                flip_violations: 0,
            };
            for i in 0..*samples {
                let x = KPoint::sample(g.seed.wrapping_add(i), *depth);
                let h = x.horizon();
                let full = partial_sums(&kspace_series(&x), h, None)?;
                let (s, fs) = (
                    partial_sums(&kspace_series(&x), h, Some(&a_set))?,
                    partial_sums(&kspace_series(&flip(&x)), h, Some(&a_set))?,
                );
                for m in 1..=h {
                    let k = k_block_of(m)?;
                    let bound = Rational::from(1) / Rational::from(k);
                    rep.bound_violations += u64::from(serieslab::rational::abs(full.sum(m)) > bound);
                    rep.flip_violations += u64::from(fs.sum(m) != &-s.sum(m).clone());
                    rep.checked_sums += 1;
                }
            }
            let bad = rep.bound_violations + rep.flip_violations;
            report(g, cfg, "kspace_sample", &rep)?;
            if bad > 0 {
                return Err(Failure::Rejected(format!("{bad} exact violations")));
            }
            Ok(())
        }
        KspaceCmd::Inf { set: a, samples, depth, threshold } => {
            let r = inf_experiment(&set(a)?, *samples, *depth, threshold, g.seed)?;
            report(g, cfg, "inf_experiment", &r)
        }
    }
}
