//! `lab` — batch interface to the predictor laboratory.
//!
//! Subcommand grammar: `lab group|predict|verify|diffeo|equiv <action>`.
//! Exit codes: 0 all-pass, 1 verification failure or inconclusive
//! certification, 2 usage or input error. The environment variable
//! `LAB_SEED` overrides any `--seed` flag. Reports are machine-first JSON
//! on stdout; human-facing notes and wall times go to stderr.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use lab_core::bump::BumpFunction;
use lab_core::family::{blocking_demo, explore_equivalence, family_witness, FamilyF};
use lab_core::glue::{
    assemble_diffeo, certify_lipschitz, certify_smooth_at_target, default_scales,
};
use lab_core::homeo::{
    archimedean_witness, commutator, holder_compare, parse_compact, to_compact,
    ArchimedeanResult, FixedPointReport, GroupElement,
};
use lab_core::predictor::{monotone_embedding_holds, Predictor};
use lab_core::step::{Alphabet, HoledFunction, PastFunction, StepFunction};
use lab_core::suite::{
    amalgamation_suite, anonymity_suite, archimedean_suite, badset_suite, commutator_suite,
    holder_suite, weak_mutation_suite, welldefined_suite, SuiteConfig, SuiteReport,
};
use lab_core::Rational;
use serde_json::{json, Value};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "lab", version, about = "predictor laboratory batch interface")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Exact algebra on group elements.
    Group {
        #[command(subcommand)]
        action: GroupAction,
    },
    /// Run the predictor on a past or holed function.
    Predict(PredictArgs),
    /// Randomized verification suites and direct verifications.
    Verify {
        #[command(subcommand)]
        action: VerifyAction,
    },
    /// Build, certify, and export assembled diffeomorphisms.
    Diffeo {
        #[command(subcommand)]
        action: DiffeoAction,
    },
    /// Explore the equivalence relation generated by a family.
    Equiv {
        #[command(subcommand)]
        action: EquivAction,
    },
}

#[derive(Subcommand)]
enum GroupAction {
    /// g o h.
    Compose(TwoElements),
    /// Inverse of g.
    Invert(OneElement),
    /// g o h o g^-1 o h^-1.
    Commutator(TwoElements),
    /// Fixed-point report of g.
    Fixed(OneElement),
    /// One-point order comparison at x0.
    Holder {
        #[arg(long)]
        g: String,
        #[arg(long)]
        h: String,
        #[arg(long, allow_hyphen_values = true)]
        x0: String,
        /// Suppress the one-point caveat (the family is known to act freely).
        #[arg(long)]
        assume_free: bool,
    },
    /// Least n with psi(x0) < phi^n(x0).
    Archimedean {
        #[arg(long)]
        phi: String,
        #[arg(long)]
        psi: String,
        #[arg(long, allow_hyphen_values = true)]
        x0: String,
        #[arg(long, default_value_t = 1000)]
        max_n: u32,
    },
}

#[derive(Args)]
struct OneElement {
    #[arg(long)]
    g: String,
    /// Force JSON output even when a compact form exists.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct TwoElements {
    #[arg(long)]
    g: String,
    #[arg(long)]
    h: String,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct PredictArgs {
    /// Past function JSON: {"breakpoints":[...],"values":[...],"cutoff":"p/q"}.
    #[arg(long, conflicts_with_all = ["weak", "op"])]
    past: Option<String>,
    /// Holed function JSON: {"breakpoints":[...],"values":[...],"hole":"p/q"}.
    #[arg(long, conflicts_with = "op")]
    weak: Option<String>,
    /// Operation envelope: {"op":"predict",...} or {"op":"badset",...}.
    #[arg(long)]
    op: Option<String>,
    /// Alphabet size for state validation.
    #[arg(long, default_value_t = 4)]
    states: usize,
    /// Session alphabet: comma-separated names or {"alphabet":[...]} JSON.
    #[arg(long)]
    alphabet: Option<String>,
}

#[derive(Args, Clone)]
struct SuiteArgs {
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    states: usize,
    /// Session alphabet: comma-separated names or {"alphabet":[...]} JSON.
    #[arg(long)]
    alphabet: Option<String>,
}

#[derive(Subcommand)]
enum VerifyAction {
    /// Predictions are invariant under precomposition.
    Anonymity(SuiteArgs),
    /// Witness independence of the prediction.
    Welldef(SuiteArgs),
    /// Commutators of affine pairs have slope exactly one.
    Commutator(SuiteArgs),
    /// One-point order coherence across basepoints.
    Holder(SuiteArgs),
    /// Archimedean witness bound on shift triples.
    Archimedean(SuiteArgs),
    /// Certified bad sets: either one total function or a randomized suite.
    Badset {
        #[command(flatten)]
        suite: SuiteArgs,
        /// Total step function JSON; runs the single-function evaluation.
        #[arg(long)]
        total: Option<String>,
        /// Probe list JSON (defaults to the canonical per-segment probes).
        #[arg(long, requires = "total")]
        probes: Option<String>,
    },
    /// Weak predictions ignore mutations above the hole.
    Weak(SuiteArgs),
    /// Invariance promotion scenarios, including the negative control.
    Promotion,
    /// Orbit anonymity of the amalgamated predictor.
    Amalgamate(SuiteArgs),
}

#[derive(Args, Clone)]
struct TargetArgs {
    /// Target point "w,z" with rational coordinates.
    #[arg(long, allow_hyphen_values = true)]
    target: String,
    #[arg(long, default_value_t = 20)]
    depth: usize,
}

#[derive(Subcommand)]
enum DiffeoAction {
    /// Assemble the map and export JSON plus a CSV curve.
    Build {
        #[command(flatten)]
        target: TargetArgs,
        #[arg(long, default_value = "assembly.json")]
        out_json: PathBuf,
        #[arg(long, default_value = "curve.csv")]
        out_csv: PathBuf,
        /// Number of CSV probe intervals.
        #[arg(long, default_value_t = 2000)]
        probes: usize,
    },
    /// Finite-difference smoothness certification at the target.
    #[command(visible_alias = "certify")]
    CertifySmooth {
        #[command(flatten)]
        target: TargetArgs,
        #[arg(long, default_value_t = 4)]
        orders: usize,
        /// Write the report JSON here as well as to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Derivative sup bounds over all pieces, with tail decrease verified.
    CertifyLipschitz {
        #[command(flatten)]
        target: TargetArgs,
        #[arg(long, default_value_t = 5)]
        orders: usize,
    },
    /// Identify the family member agreeing with the map at a point.
    Witness {
        #[command(flatten)]
        target: TargetArgs,
        #[arg(long, allow_hyphen_values = true)]
        point: String,
    },
    /// Full blocking certificate through (x, y).
    #[command(visible_alias = "blocking")]
    BlockingDemo {
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        #[arg(long, allow_hyphen_values = true)]
        y: String,
        #[arg(long, default_value_t = 20)]
        depth: usize,
        /// Sample count for the witness sweep.
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum EquivAction {
    /// Union-find over sampled points seeded by exact member evaluations.
    Explore {
        /// Family JSON file: {"members":[...]}.
        #[arg(long)]
        family: PathBuf,
        /// Points JSON file: ["p/q", ...].
        #[arg(long)]
        points: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn parse_rational(s: &str) -> Result<Rational> {
    s.trim()
        .parse()
        .map_err(|e| anyhow!("bad rational literal {s:?}: {e}"))
}

fn parse_element(s: &str) -> Result<GroupElement> {
    let s = s.trim();
    let element: GroupElement = if s.starts_with('{') {
        serde_json::from_str(s).with_context(|| format!("bad element JSON {s:?}"))?
    } else {
        parse_compact(s).ok_or_else(|| anyhow!("bad compact element {s:?}"))?
    };
    element.validate().map_err(|e| anyhow!("{e}"))?;
    Ok(element)
}

fn parse_target(s: &str) -> Result<(Rational, Rational)> {
    let (w, z) = s
        .split_once(',')
        .ok_or_else(|| anyhow!("target must be \"w,z\""))?;
    Ok((parse_rational(w)?, parse_rational(z)?))
}

fn print_element(g: &GroupElement, force_json: bool) -> Result<()> {
    if !force_json {
        if let Some(compact) = to_compact(g) {
            println!("{compact}");
            return Ok(());
        }
    }
    println!("{}", serde_json::to_string(g)?);
    Ok(())
}

fn seed_override(seed: u64) -> u64 {
    match std::env::var("LAB_SEED") {
        Ok(v) => v.parse().unwrap_or(seed),
        Err(_) => seed,
    }
}

fn resolve_alphabet(spec: Option<&str>, states: usize) -> Result<Alphabet> {
    match spec {
        Some(s) if s.trim_start().starts_with('{') => {
            serde_json::from_str(s).with_context(|| "bad alphabet JSON")
        }
        Some(s) => {
            let names: Vec<String> = s.split(',').map(|n| n.trim().to_string()).collect();
            Alphabet::new(names).map_err(|e| anyhow!("{e}"))
        }
        None => Ok(Alphabet::of_size(states.max(2))),
    }
}

fn suite_config(args: &SuiteArgs) -> Result<SuiteConfig> {
    let alphabet = resolve_alphabet(args.alphabet.as_deref(), args.states)?;
    Ok(SuiteConfig {
        seed: seed_override(args.seed),
        trials: args.trials,
        alphabet_size: alphabet.len(),
    })
}

/// Prints the suite report and applies the exit-code contract.
fn finish_suite(report: SuiteReport, started: Instant) -> Result<ExitCode> {
    let elapsed = started.elapsed().as_millis();
    eprintln!(
        "suite {}: {} trials, {} failures, {} ms",
        report.suite,
        report.trials,
        report.failures.len(),
        elapsed
    );
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Group { action } => run_group(action),
        Cmd::Predict(args) => run_predict(args),
        Cmd::Verify { action } => run_verify(action),
        Cmd::Diffeo { action } => run_diffeo(action),
        Cmd::Equiv { action } => run_equiv(action),
    }
}

fn run_group(action: GroupAction) -> Result<ExitCode> {
    match action {
        GroupAction::Compose(args) => {
            let g = parse_element(&args.g)?;
            let h = parse_element(&args.h)?;
            let composed = g.compose(&h).map_err(|e| anyhow!("{e}"))?;
            print_element(&composed, args.json)?;
        }
        GroupAction::Invert(args) => {
            let g = parse_element(&args.g)?;
            print_element(&g.invert(), args.json)?;
        }
        GroupAction::Commutator(args) => {
            let g = parse_element(&args.g)?;
            let h = parse_element(&args.h)?;
            let c = commutator(&g, &h).map_err(|e| anyhow!("{e}"))?;
            print_element(&c, args.json)?;
        }
        GroupAction::Fixed(args) => {
            let g = parse_element(&args.g)?;
            match g.fixed_points() {
                FixedPointReport::None => println!("none"),
                FixedPointReport::IdentityEverywhere => println!("identity-everywhere"),
                report => println!("{}", serde_json::to_string(&report)?),
            }
        }
        GroupAction::Holder {
            g,
            h,
            x0,
            assume_free,
        } => {
            let g = parse_element(&g)?;
            let h = parse_element(&h)?;
            let x0 = parse_rational(&x0)?;
            let order = holder_compare(&g, &h, &x0).map_err(|e| anyhow!("{e}"))?;
            if !assume_free {
                eprintln!(
                    "note: one-point comparison at x0 = {x0}; the answer equals the full order \
                     only for families verified to act freely"
                );
            }
            println!("{order:?}");
        }
        GroupAction::Archimedean {
            phi,
            psi,
            x0,
            max_n,
        } => {
            let phi = parse_element(&phi)?;
            let psi = parse_element(&psi)?;
            let x0 = parse_rational(&x0)?;
            match archimedean_witness(&phi, &psi, &x0, max_n).map_err(|e| anyhow!("{e}"))? {
                ArchimedeanResult::Found(n) => println!("{n}"),
                ArchimedeanResult::Exhausted => {
                    println!("exhausted");
                    return Ok(ExitCode::from(1));
                }
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run_predict(args: PredictArgs) -> Result<ExitCode> {
    let predictor = Predictor::new(resolve_alphabet(args.alphabet.as_deref(), args.states)?);
    if let Some(op) = &args.op {
        let envelope: Value =
            serde_json::from_str(op).with_context(|| "bad operation envelope JSON")?;
        let op_name = envelope
            .get("op")
            .and_then(Value::as_str)
            .ok_or_else(|| anyhow!("envelope missing \"op\""))?;
        match op_name {
            "predict" => {
                let past: PastFunction = serde_json::from_value(
                    envelope
                        .get("past")
                        .cloned()
                        .ok_or_else(|| anyhow!("predict envelope missing \"past\""))?,
                )?;
                let state = predictor.predict(&past).map_err(|e| anyhow!("{e}"))?;
                println!("{}", json!({ "state": state }));
            }
            "badset" => {
                let total: StepFunction = serde_json::from_value(
                    envelope
                        .get("total")
                        .cloned()
                        .ok_or_else(|| anyhow!("badset envelope missing \"total\""))?,
                )?;
                let probes: Vec<Rational> = match envelope.get("probes") {
                    Some(v) => serde_json::from_value(v.clone())?,
                    None => predictor.default_probes(&total),
                };
                let bad = predictor
                    .bad_set(&total, &probes)
                    .map_err(|e| anyhow!("{e}"))?;
                println!(
                    "{}",
                    json!({ "certified": bad.certified, "ok_probes": bad.sampled_ok.len() })
                );
            }
            other => bail!("unknown op {other:?}"),
        }
        return Ok(ExitCode::SUCCESS);
    }
    if let Some(weak) = &args.weak {
        let holed: HoledFunction =
            serde_json::from_str(weak).with_context(|| "bad holed-function JSON")?;
        let state = predictor.predict_weak(&holed).map_err(|e| anyhow!("{e}"))?;
        println!("{}", json!({ "state": state }));
        return Ok(ExitCode::SUCCESS);
    }
    let past = args
        .past
        .as_deref()
        .ok_or_else(|| anyhow!("one of --past, --weak, --op is required"))?;
    let past: PastFunction =
        serde_json::from_str(past).with_context(|| "bad past-function JSON")?;
    let state = predictor.predict(&past).map_err(|e| anyhow!("{e}"))?;
    println!("{}", json!({ "state": state }));
    Ok(ExitCode::SUCCESS)
}

fn run_verify(action: VerifyAction) -> Result<ExitCode> {
    let started = Instant::now();
    match action {
        VerifyAction::Anonymity(args) => {
            finish_suite(anonymity_suite(&suite_config(&args)?), started)
        }
        VerifyAction::Welldef(args) => {
            finish_suite(welldefined_suite(&suite_config(&args)?), started)
        }
        VerifyAction::Commutator(args) => {
            finish_suite(commutator_suite(&suite_config(&args)?), started)
        }
        VerifyAction::Holder(args) => finish_suite(holder_suite(&suite_config(&args)?), started),
        VerifyAction::Archimedean(args) => {
            finish_suite(archimedean_suite(&suite_config(&args)?), started)
        }
        VerifyAction::Weak(args) => {
            finish_suite(weak_mutation_suite(&suite_config(&args)?), started)
        }
        VerifyAction::Amalgamate(args) => {
            finish_suite(amalgamation_suite(&suite_config(&args)?), started)
        }
        VerifyAction::Badset {
            suite,
            total,
            probes,
        } => match total {
            Some(total) => {
                let predictor =
                    Predictor::new(resolve_alphabet(suite.alphabet.as_deref(), suite.states)?);
                let total: StepFunction =
                    serde_json::from_str(&total).with_context(|| "bad total-function JSON")?;
                let probes: Vec<Rational> = match probes {
                    Some(p) => serde_json::from_str(&p).with_context(|| "bad probes JSON")?,
                    None => predictor.default_probes(&total),
                };
                let bad = predictor
                    .bad_set(&total, &probes)
                    .map_err(|e| anyhow!("{e}"))?;
                let monotone = monotone_embedding_holds(&total, &bad);
                println!(
                    "{}",
                    json!({ "certified": bad.certified, "ok_probes": bad.sampled_ok.len() })
                );
                let inside = bad
                    .certified
                    .iter()
                    .all(|t| total.breakpoints().contains(t));
                Ok(if inside && monotone {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(1)
                })
            }
            None => finish_suite(badset_suite(&suite_config(&suite)?), started),
        },
        VerifyAction::Promotion => run_promotion(started),
    }
}

/// Fixed promotion scenarios: a constant function, a lazily extended
/// invariant past, and the engineered hypothesis violation.
fn run_promotion(started: Instant) -> Result<ExitCode> {
    use lab_core::predictor::{invariant_extension, promotion_check, PromotionOutcome};
    let shift = GroupElement::affine(1, 1);
    let scale = GroupElement::affine(3, 2);
    let cutoff = Rational::zero();
    let samples: Vec<Rational> = (-6..=6).map(|i| Rational::new(i, 2)).collect();
    let mut entries = Vec::new();
    let mut all_ok = true;

    let constant = StepFunction::constant(0);
    let r1 = promotion_check(&constant, &scale, &shift, &cutoff, &samples)
        .map_err(|e| anyhow!("{e}"))?;
    all_ok &= r1 == PromotionOutcome::Ok;
    entries.push(json!({"scenario": "constant", "outcome": format!("{r1:?}"), "expect": "Ok"}));

    let ext = invariant_extension(
        PastFunction::constant(2, Rational::zero()),
        shift.clone(),
        1,
    )
    .map_err(|e| anyhow!("{e}"))?;
    let r2 = promotion_check(&ext, &GroupElement::affine(1, 5), &shift, &cutoff, &samples)
        .map_err(|e| anyhow!("{e}"))?;
    all_ok &= r2 == PromotionOutcome::Ok;
    entries.push(
        json!({"scenario": "lazy-extension", "outcome": format!("{r2:?}"), "expect": "Ok"}),
    );

    let broken = StepFunction::new(vec![Rational::zero()], vec![0, 1]).unwrap();
    let r3 = promotion_check(
        &broken,
        &GroupElement::affine(1, 5),
        &shift,
        &cutoff,
        &samples,
    )
    .map_err(|e| anyhow!("{e}"))?;
    let is_hypothesis_error = matches!(r3, PromotionOutcome::HypothesisError { .. });
    all_ok &= is_hypothesis_error;
    entries.push(json!({
        "scenario": "negative-control",
        "outcome": format!("{r3:?}"),
        "expect": "HypothesisError"
    }));

    eprintln!(
        "promotion scenarios: 3 run, {} ms",
        started.elapsed().as_millis()
    );
    println!(
        "{}",
        serde_json::to_string_pretty(
            &json!({"suite": "promotion", "entries": entries, "passed": all_ok})
        )?
    );
    Ok(if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn run_diffeo(action: DiffeoAction) -> Result<ExitCode> {
    let bump = BumpFunction::new();
    match action {
        DiffeoAction::Build {
            target,
            out_json,
            out_csv,
            probes,
        } => {
            let point = parse_target(&target.target)?;
            let assembly = assemble_diffeo(&point, target.depth);
            std::fs::write(&out_json, serde_json::to_string_pretty(&assembly)?)
                .with_context(|| format!("writing {}", out_json.display()))?;
            let grid = assembly.probe_grid(probes);
            let csv = assembly
                .csv_curve(&bump, &grid)
                .map_err(|e| anyhow!("{e}"))?;
            std::fs::write(&out_csv, csv)
                .with_context(|| format!("writing {}", out_csv.display()))?;
            println!(
                "{}",
                json!({
                    "target": [point.0.to_string(), point.1.to_string()],
                    "depth": target.depth,
                    "residual": assembly.residual().to_string(),
                    "assembly": out_json.display().to_string(),
                    "curve": out_csv.display().to_string(),
                })
            );
            Ok(ExitCode::SUCCESS)
        }
        DiffeoAction::CertifySmooth {
            target,
            orders,
            out,
        } => {
            let point = parse_target(&target.target)?;
            let assembly = assemble_diffeo(&point, target.depth);
            let scales = match default_scales(&assembly) {
                Ok(scales) => scales,
                Err(e) => {
                    // Too shallow for the certification scales: inconclusive,
                    // not a usage error.
                    println!(
                        "{}",
                        json!({
                            "conclusive": false,
                            "suggestion": format!("{e}; rebuild with a larger depth"),
                            "orders": [],
                            "passed": false,
                        })
                    );
                    eprintln!("inconclusive: {e}; rebuild with a larger depth");
                    return Ok(ExitCode::from(1));
                }
            };
            let report = certify_smooth_at_target(&assembly, &bump, orders, &scales);
            let rendered = serde_json::to_string_pretty(&report)?;
            if let Some(path) = out {
                std::fs::write(&path, &rendered)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            println!("{rendered}");
            if !report.conclusive {
                eprintln!(
                    "inconclusive: {}",
                    report.suggestion.as_deref().unwrap_or("(no suggestion)")
                );
                return Ok(ExitCode::from(1));
            }
            Ok(if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        DiffeoAction::CertifyLipschitz { target, orders } => {
            let point = parse_target(&target.target)?;
            let assembly = assemble_diffeo(&point, target.depth);
            let report =
                certify_lipschitz(&assembly, &bump, orders).map_err(|e| anyhow!("{e}"))?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        DiffeoAction::Witness { target, point } => {
            let t = parse_target(&target.target)?;
            let assembly = assemble_diffeo(&t, target.depth);
            let z = parse_rational(&point)?;
            let outcome = family_witness(&assembly, &bump, &z).map_err(|e| anyhow!("{e}"))?;
            println!("{}", serde_json::to_string_pretty(&outcome)?);
            Ok(ExitCode::SUCCESS)
        }
        DiffeoAction::BlockingDemo {
            x,
            y,
            depth,
            samples,
            out,
        } => {
            let x = parse_rational(&x)?;
            let y = parse_rational(&y)?;
            // Symmetric rational sample around the hole.
            let span = Rational::integer(6);
            let lo = &x - &span;
            let width = &Rational::integer(2) * &span;
            let sample: Vec<Rational> = (0..=samples)
                .map(|i| &lo + &(&width * &Rational::new(i as i64, samples as i64)))
                .collect();
            let cert =
                blocking_demo(&x, &y, depth, &sample, &bump).map_err(|e| anyhow!("{e}"))?;
            let rendered = serde_json::to_string_pretty(&cert)?;
            if let Some(path) = out {
                std::fs::write(&path, &rendered)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            println!("{rendered}");
            Ok(if cert.all_witnesses_succeeded {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}

fn run_equiv(action: EquivAction) -> Result<ExitCode> {
    match action {
        EquivAction::Explore {
            family,
            points,
            out,
        } => {
            let family: FamilyF = serde_json::from_str(
                &std::fs::read_to_string(&family)
                    .with_context(|| format!("reading {}", family.display()))?,
            )
            .with_context(|| "bad family JSON")?;
            family.validate().map_err(|e| anyhow!("invalid family: {e}"))?;
            let points: Vec<Rational> = serde_json::from_str(
                &std::fs::read_to_string(&points)
                    .with_context(|| format!("reading {}", points.display()))?,
            )
            .with_context(|| "bad points JSON")?;
            let mut explorer = explore_equivalence(&family, &points);
            let classes = explorer.classes();
            let mut rendered_classes = Vec::new();
            for class in &classes {
                let mut witnesses = Vec::new();
                for member in class.iter().skip(1) {
                    let path = explorer
                        .witness_path(&class[0], member)
                        .ok_or_else(|| anyhow!("missing witness path inside a class"))?;
                    let replayed = explorer.replay(&family, &path);
                    witnesses.push(json!({
                        "to": member.to_string(),
                        "path": path,
                        "replayed": replayed,
                    }));
                }
                rendered_classes.push(json!({
                    "representative": class[0].to_string(),
                    "points": class.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
                    "witnesses": witnesses,
                }));
            }
            let report = json!({
                "points": points.len(),
                "classes": rendered_classes,
            });
            let rendered = serde_json::to_string_pretty(&report)?;
            if let Some(path) = out {
                std::fs::write(&path, &rendered)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            println!("{rendered}");
            Ok(ExitCode::SUCCESS)
        }
    }
}
