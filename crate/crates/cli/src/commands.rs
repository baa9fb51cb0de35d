use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{anyhow, Context};
use serde::Deserialize;
use serde_json::{json, Value};

use sts_core::amalgam::{indep, merge_al1, merge_al25, merge_family, IndepVerdict, MergeLimits};
use sts_core::closure::{closure_k_capped, has_infinite_orbit, Formula, OrbitVerdict};
use sts_core::completion::{complete_with, free_truncation, CompletionOptions};
use sts_core::generic::{check_delta, generic_build, isolating_formula, qf_equiv_m, DeltaInstance};
use sts_core::io::{parse_file, to_json, to_json_file, SystemFile};
use sts_core::witnesses::{doyen_search, sma1_audit, sma1_build, tp2_array, verify_tp2};
use sts_core::{Budget, Error, FreeUniverse, PartialSts, Term};

use crate::{Cli, Command, EquivArgs, MergeKind};

pub struct Outcome {
    pub code: u8,
    pub command: &'static str,
    pub verdict: String,
    pub result: Value,
    pub error: Option<String>,
}

impl Outcome {
    fn ok(command: &'static str, verdict: impl Into<String>, result: Value) -> Self {
        Self {
            code: 0,
            command,
            verdict: verdict.into(),
            result,
            error: None,
        }
    }

    fn negative(command: &'static str, verdict: impl Into<String>, result: Value) -> Self {
        Self {
            code: 1,
            ..Self::ok(command, verdict, result)
        }
    }

    pub fn document(&self) -> Value {
        json!({
            "command": self.command,
            "exit_code": self.code,
            "verdict": self.verdict,
            "result": self.result,
            "error": self.error,
        })
    }
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::BudgetExceeded
        | Error::NoCompletionWithinBound(_)
        | Error::Timeout
        | Error::DepthExceeded(_)
        | Error::SizeBudgetExceeded(_)
        | Error::Overflow(_) => 1,
        Error::CompatibilityCheckFailed(_) | Error::VerificationFailed(_) | Error::AuditFailed { .. } => 3,
        _ => 2,
    }
}

fn verdict_for(code: u8) -> &'static str {
    match code {
        1 => "negative",
        3 => "verification-failed",
        _ => "invalid-input",
    }
}

fn name_of(c: &Command) -> &'static str {
    match c {
        Command::Validate { .. } => "validate",
        Command::Complete { .. } => "complete",
        Command::FreeStep { .. } => "free-step",
        Command::Closure { .. } => "closure",
        Command::Normalize { .. } => "normalize",
        Command::Einf { .. } => "einf",
        Command::DeltaCheck { .. } => "delta-check",
        Command::Generic { .. } => "generic",
        Command::Merge { .. } => "merge",
        Command::Indep { .. } => "indep",
        Command::Tp2 { .. } => "tp2",
        Command::Sma1 { .. } => "sma1",
        Command::Doyen { .. } => "doyen",
        Command::Isolate { .. } => "isolate",
        Command::Equiv(_) => "equiv",
    }
}

pub fn run(cli: &Cli) -> Outcome {
    let command = name_of(&cli.command);
    if cli.threads == 0 {
        eprintln!("error: --threads must be at least 1");
        return failure(command, 2, "--threads must be at least 1".into());
    }
    match dispatch(&cli.command) {
        Ok(o) => o,
        Err(e) => {
            let code = e.downcast_ref::<Error>().map_or(2, exit_code);
            eprintln!("error: {e:#}");
            failure(command, code, format!("{e:#}"))
        }
    }
}

fn failure(command: &'static str, code: u8, message: String) -> Outcome {
    Outcome {
        code,
        command,
        verdict: verdict_for(code).into(),
        result: Value::Null,
        error: Some(message),
    }
}

fn read_text(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn read_system(path: &Path) -> anyhow::Result<PartialSts> {
    Ok(parse_file(&read_text(path)?)?.into_system()?)
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

/// Writes the system to `out`, or prints it when there is no `out`.
fn emit_system(s: &PartialSts, out: Option<&Path>) -> anyhow::Result<()> {
    let text = to_json(s);
    match out {
        Some(p) => write_text(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty()).map(String::from).collect()
}

fn parse_terms<S: AsRef<str>>(u: &mut FreeUniverse, items: &[S]) -> anyhow::Result<Vec<Term>> {
    items.iter().map(|t| Ok(u.parse(t.as_ref())?)).collect()
}

fn env_budget() -> Option<Duration> {
    std::env::var("STS_BUDGET_MS").ok()?.parse().ok().map(Duration::from_millis)
}

fn shape(s: &PartialSts) -> Value {
    json!({ "points": s.len(), "blocks": s.blocks().len(), "total": s.is_total() })
}

fn dispatch(command: &Command) -> anyhow::Result<Outcome> {
    let name = name_of(command);
    match command {
        Command::Validate { file } => {
            let s = read_system(file)?;
            let kind = if s.is_total() { "total" } else { "partial" };
            println!("valid {kind} system: {} points, {} blocks", s.len(), s.blocks().len());
            Ok(Outcome::ok(name, "valid", shape(&s)))
        }
        Command::Complete { file, max_order, seed, out } => {
            let s = read_system(file)?;
            let mut opts = CompletionOptions::new(*max_order, *seed);
            opts.deadline = env_budget().map(|d| std::time::Instant::now() + d);
            let t = complete_with(&s, &opts)?;
            if out.is_some() {
                println!("completed to order {}", t.len());
            }
            emit_system(&t, out.as_deref())?;
            Ok(Outcome::ok(name, "completed", shape(&t)))
        }
        Command::FreeStep { file, depth, out } => {
            let s = read_system(file)?;
            let t = free_truncation(&s, *depth);
            if out.is_some() {
                println!("{} points after {depth} free steps", t.len());
            }
            emit_system(&t, out.as_deref())?;
            Ok(Outcome::ok(name, "done", shape(&t)))
        }
        Command::Closure { base, gens, k, budget } => {
            let mut u = FreeUniverse::new(read_system(base)?);
            let gens = parse_terms(&mut u, &split_list(gens))?;
            let elems = closure_k_capped(&mut u, &gens, *k, *budget)?;
            let mut by_rank: BTreeMap<u32, Vec<String>> = BTreeMap::new();
            for &t in &elems {
                by_rank.entry(u.rank(t)).or_default().push(u.display(t));
            }
            for (r, ts) in &by_rank {
                println!("rank {r}: {}", ts.join(" "));
            }
            println!("size {}", elems.len());
            Ok(Outcome::ok(name, "done", json!({ "size": elems.len(), "by_rank": by_rank })))
        }
        Command::Normalize { base, term } => {
            let mut u = FreeUniverse::new(read_system(base)?);
            let nf = u.normalize_text(term)?;
            println!("{nf}");
            Ok(Outcome::ok(name, "done", json!({ "normal_form": nf })))
        }
        Command::Einf { base, phi, depth, k } => {
            let u = FreeUniverse::new(read_system(base)?);
            let formula = Formula::parse_in(phi, &u)?;
            let report = has_infinite_orbit(&formula, &u, *depth, *k)?;
            let verdict = match report.verdict {
                OrbitVerdict::Infinite => "infinite",
                OrbitVerdict::Finite => "finite",
                OrbitVerdict::Unknown => "unknown",
            };
            println!("{verdict}");
            let witness = report.witness.as_ref().map(|w| w.render());
            if let Some(w) = &witness {
                for (v, t) in w {
                    println!("  {v} = {t}");
                }
            }
            if let Some(sol) = &report.forced_solution {
                println!("  forced solution: {sol}");
            }
            let result = json!({
                "k": report.k,
                "certified": report.certified,
                "witness": witness,
                "forced_solution": report.forced_solution,
            });
            Ok(if report.verdict == OrbitVerdict::Infinite {
                Outcome::ok(name, verdict, result)
            } else {
                Outcome::negative(name, verdict, result)
            })
        }
        Command::DeltaCheck { model, instance, nodes } => {
            let m = read_system(model)?;
            let file = parse_file(&read_text(instance)?)?;
            let inner = file
                .inner
                .clone()
                .ok_or_else(|| Error::Format("instance file lacks \"inner\"".into()))?;
            let inst = DeltaInstance::from_names(file.into_system()?, &inner)?;
            let check = check_delta(&m, &inst, &mut Budget::nodes(*nodes))?;
            let result = json!({
                "assignments_checked": check.assignments_checked,
                "counterexample": check.counterexample,
            });
            if check.holds {
                println!("holds ({} assignments)", check.assignments_checked);
                Ok(Outcome::ok(name, "holds", result))
            } else {
                println!("fails");
                for (x, y) in check.counterexample.iter().flatten() {
                    println!("  {x} -> {y}");
                }
                Ok(Outcome::negative(name, "fails", result))
            }
        }
        Command::Generic { seed_file, stages, bound, rng, out_prefix } => {
            let s = read_system(seed_file)?;
            let (chain, logs) = generic_build(&s, *stages, *bound, *rng)?;
            for log in &logs {
                println!("stage {}: order {}, repaired {}", log.stage, log.order, log.repaired);
            }
            if let Some(p) = out_prefix {
                for (i, stage) in chain.iter().enumerate() {
                    write_text(Path::new(&format!("{p}{i}.json")), &to_json(stage))?;
                }
            }
            let orders: Vec<usize> = chain.iter().map(PartialSts::len).collect();
            Ok(Outcome::ok(name, "built", json!({ "orders": orders })))
        }
        Command::Merge { kind, config, cap, depth, out } => merge(*kind, config, *cap, *depth, out.as_deref()),
        Command::Indep { base, a, b, c, depth } => {
            let mut u = FreeUniverse::new(read_system(base)?);
            let a = parse_terms(&mut u, &split_list(a))?;
            let b = parse_terms(&mut u, &split_list(b))?;
            let c = parse_terms(&mut u, &split_list(c))?;
            let r = indep(&mut u, &a, &b, &c, *depth);
            let (verdict, reason) = match &r.verdict {
                IndepVerdict::Independent => ("independent", None),
                IndepVerdict::Dependent(why) => ("dependent", Some(why.clone())),
                IndepVerdict::Unknown => ("unknown", None),
            };
            println!("{verdict} (levels {}, exhausted {})", r.levels, r.exhausted);
            if let Some(why) = &reason {
                println!("  {why}");
            }
            let result = json!({ "levels": r.levels, "exhausted": r.exhausted, "reason": reason });
            Ok(if r.verdict == IndepVerdict::Independent {
                Outcome::ok(name, verdict, result)
            } else {
                Outcome::negative(name, verdict, result)
            })
        }
        Command::Tp2 { rows, cols, verify_depth, out } => {
            let array = tp2_array(*rows, *cols)?;
            println!("{} points, {} blocks", array.system.len(), array.system.blocks().len());
            let mut result = shape(&array.system);
            if let Some(d) = verify_depth {
                let r = verify_tp2(&array, *d)?;
                println!(
                    "verified: {} paths, {} rows inconsistent, {} candidates to rank {}",
                    r.paths_checked,
                    r.derivations.len(),
                    r.candidates_checked,
                    r.brute_force_depth
                );
                for steps in &r.derivations {
                    println!("  {}", steps.join(" => "));
                }
                result["paths_checked"] = json!(r.paths_checked);
                result["derivations"] = json!(r.derivations);
                result["candidates_checked"] = json!(r.candidates_checked);
            }
            if let Some(p) = out {
                write_text(p, &to_json(&array.system))?;
                let labels = serde_json::to_string_pretty(&array.labels.families())? + "\n";
                write_text(&sidecar(p), &labels)?;
            }
            Ok(Outcome::ok(name, "built", result))
        }
        Command::Sma1 { family, prefix, out_prefix } => {
            let family: Vec<PartialSts> = family.iter().map(|p| read_system(p)).collect::<anyhow::Result<_>>()?;
            let chain = sma1_build(&family, *prefix, None)?;
            let audit = sma1_audit(&chain)?;
            for (i, (log, subs)) in chain.logs.iter().zip(&audit.subsystems).enumerate() {
                println!(
                    "stage {}: member {}, k {}, {} saturation rounds, {} sub-STSs",
                    i + 1,
                    log.member,
                    log.k,
                    log.iterations,
                    subs
                );
            }
            if let Some(p) = out_prefix {
                for (i, stage) in chain.stages.iter().enumerate() {
                    write_text(Path::new(&format!("{p}{i}.json")), &to_json(stage))?;
                }
            }
            let orders: Vec<usize> = chain.stages.iter().map(PartialSts::len).collect();
            println!("orders {orders:?}; audit passed");
            Ok(Outcome::ok(name, "audited", json!({ "orders": orders, "subsystems": audit.subsystems })))
        }
        Command::Doyen { order, budget, seed, out } => {
            let budget = budget
                .map(Duration::from_secs_f64)
                .or_else(env_budget)
                .unwrap_or(Duration::from_secs(120));
            let s = doyen_search(*order, budget, *seed)?;
            if out.is_some() {
                println!("found STS({}) without proper sub-STSs", s.len());
            }
            emit_system(&s, out.as_deref())?;
            Ok(Outcome::ok(name, "found", shape(&s)))
        }
        Command::Isolate { model, tuple } => {
            let m = read_system(model)?;
            let iso = isolating_formula(&split_list(tuple), &m)?;
            let (free, ex) = iso.formula.variables.split_at(iso.free);
            println!("free: {}", free.join(", "));
            println!("exists: {}", ex.join(", "));
            println!("{}", iso.formula);
            Ok(Outcome::ok(
                name,
                "done",
                json!({
                    "formula": iso.formula.to_string(),
                    "free": free,
                    "existential": ex,
                    "points": iso.points,
                }),
            ))
        }
        Command::Equiv(args) => equiv(args),
    }
}

fn sidecar(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".labels.json");
    PathBuf::from(s)
}

fn equiv(args: &EquivArgs) -> anyhow::Result<Outcome> {
    let s1 = read_system(&args.model)?;
    let s2 = match &args.model2 {
        Some(p) => read_system(p)?,
        None => s1.clone(),
    };
    let (mut u1, mut u2) = (FreeUniverse::new(s1), FreeUniverse::new(s2));
    let t1 = parse_terms(&mut u1, &split_list(&args.t1))?;
    let t2 = parse_terms(&mut u2, &split_list(&args.t2))?;
    let same = qf_equiv_m(&mut u1, &t1, &mut u2, &t2, args.m);
    let verdict = if same { "equivalent" } else { "inequivalent" };
    println!("{verdict} at rank {}", args.m);
    let result = json!({ "m": args.m });
    Ok(if same {
        Outcome::ok("equiv", verdict, result)
    } else {
        Outcome::negative("equiv", verdict, result)
    })
}

#[derive(Deserialize)]
#[serde(untagged)]
enum BaseSpec {
    Path(String),
    Inline(SystemFile),
}

#[derive(Deserialize)]
struct FamilyPair {
    a: Vec<String>,
    b: Vec<String>,
}

/// Merge configuration: a base system (inline or a path relative to the
/// config file) and term lists. `a1`/`b1` may be given as a `map` applied
/// to `a0`/`b0`.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MergeConfig {
    base: BaseSpec,
    a0: Option<Vec<String>>,
    b0: Option<Vec<String>>,
    a1: Option<Vec<String>>,
    b1: Option<Vec<String>>,
    map: Option<BTreeMap<String, String>>,
    family: Option<Vec<FamilyPair>>,
}

fn mapped(map: &Option<BTreeMap<String, String>>, xs: &[String], what: &str) -> anyhow::Result<Vec<String>> {
    let map = map.as_ref().ok_or_else(|| Error::Format(format!("config needs `{what}` or `map`")))?;
    xs.iter()
        .map(|x| {
            map.get(x)
                .cloned()
                .ok_or_else(|| anyhow!(Error::Format(format!("`map` has no image for `{x}`"))))
        })
        .collect()
}

fn merge(kind: MergeKind, config: &Path, cap: usize, depth: usize, out: Option<&Path>) -> anyhow::Result<Outcome> {
    let cfg: MergeConfig =
        serde_json::from_str(&read_text(config)?).map_err(|e| Error::Format(e.to_string()))?;
    let base = match cfg.base {
        BaseSpec::Inline(f) => f.into_system()?,
        BaseSpec::Path(p) => read_system(&config.parent().unwrap_or(Path::new(".")).join(p))?,
    };
    let mut u = FreeUniverse::new(base);
    let limits = MergeLimits { cap, depth };
    let merged = match kind {
        MergeKind::Al1 | MergeKind::Al25 => {
            let need = |v: &Option<Vec<String>>, what: &str| {
                v.clone().ok_or_else(|| Error::Format(format!("config needs `{what}`")))
            };
            let (a0, b0) = (need(&cfg.a0, "a0")?, need(&cfg.b0, "b0")?);
            let a1 = match &cfg.a1 {
                Some(v) => v.clone(),
                None => mapped(&cfg.map, &a0, "a1")?,
            };
            let b1 = match &cfg.b1 {
                Some(v) => v.clone(),
                None => mapped(&cfg.map, &b0, "b1")?,
            };
            let [a0, b0, a1, b1] = [a0, b0, a1, b1].map(|v| parse_terms(&mut u, &v));
            let (a0, b0, a1, b1) = (a0?, b0?, a1?, b1?);
            if kind == MergeKind::Al1 {
                merge_al1(&mut u, &a0, &b0, &a1, &b1, limits)?
            } else {
                merge_al25(&mut u, &a0, &b0, &a1, &b1, limits)?
            }
        }
        MergeKind::Family => {
            let family = cfg.family.ok_or_else(|| Error::Format("config needs `family`".into()))?;
            let mut pairs = Vec::new();
            for p in &family {
                pairs.push((parse_terms(&mut u, &p.a)?, parse_terms(&mut u, &p.b)?));
            }
            merge_family(&mut u, &pairs, limits)?
        }
    };
    let a = merged.a_names();
    let b: Vec<Vec<String>> = merged
        .b
        .iter()
        .map(|bi| bi.iter().map(|&t| merged.universe.display(t)).collect())
        .collect();
    println!(
        "merged: fresh |A| {}, |W| {}, |U_i| {:?}; certified at rank {}",
        merged.fresh_a, merged.fresh_w, merged.fresh_u, merged.certified_depth
    );
    println!("A = {}", a.join(" "));
    for (i, bi) in b.iter().enumerate() {
        println!("B{i} = {}", bi.join(" "));
    }
    if let Some(p) = out {
        write_text(p, &to_json_file(&SystemFile::from_system(&merged.system)))?;
    }
    Ok(Outcome::ok(
        "merge",
        "certified",
        json!({
            "a": a,
            "b": b,
            "fresh_a": merged.fresh_a,
            "fresh_w": merged.fresh_w,
            "fresh_u": merged.fresh_u,
            "certified_depth": merged.certified_depth,
            "base_points": merged.system.len(),
        }),
    ))
}
