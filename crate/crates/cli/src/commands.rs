use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use qmcover::code::{CodeRecord, Claims, NamedPartition, ParityCheckMatrix, Partition, RecordMeta, Status};
use qmcover::construct::{self, CodeNode, ConstructionSpec, Variant};
use qmcover::search::{self, SearchConfig, Strategy};
use qmcover::seeds;
use qmcover::tables::{self, Bound};
use qmcover::verify;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::Config;
use crate::error::CliError;
use crate::registry::{Lock, Registry, ENV_ROOT};
use crate::{
    Cli, Command, ConstructArgs, ExportArgs, ExportFormat, FamilyArgs, ImportArgs, SearchArgs, SeedCmd, StrategyArg,
    TableFormat, TablesArgs, VerifyArgs, VerifyMode,
};

struct Ctx {
    reg: Registry,
    cfg: Config,
    json: bool,
}

impl Ctx {
    fn say(&self, text: &str, value: serde_json::Value) {
        if self.json {
            println!("{}", serde_json::to_string(&value).expect("serializable"));
        } else {
            println!("{text}");
        }
    }
}

/// One line of a record's verification log.
#[derive(Debug, Serialize)]
struct LogEntry<'a> {
    check: &'a str,
    mode: &'a str,
    verdict: &'a str,
    details: serde_json::Value,
}

/// The self-contained document written by `export --format json`.
#[derive(Debug, Serialize, Deserialize)]
struct ExportDoc {
    meta: RecordMeta,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    matrix: Option<String>,
    #[serde(default)]
    partitions: BTreeMap<String, String>,
}

pub fn run(cli: &Cli) -> Result<ExitCode, CliError> {
    let root = cli
        .registry
        .clone()
        .or_else(|| std::env::var_os(ENV_ROOT).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("registry"));
    let needs_registry = !matches!(cli.command, Command::Tables(_) | Command::Bound { .. } | Command::Delta { .. })
        && !matches!(cli.command, Command::Seed(SeedCmd::List));
    let reg = if needs_registry { Registry::open(&root)? } else { Registry::open(&std::env::temp_dir())? };
    let cfg_path = cli.config.clone().or_else(|| Some(root.join("qmcover.toml")).filter(|p| p.is_file()));
    let cfg = match cfg_path {
        Some(p) => Config::load(&p)?,
        None => Config::default(),
    };
    let mut ctx = Ctx { reg, cfg, json: cli.json };
    match &cli.command {
        Command::Seed(cmd) => seed(&mut ctx, cmd),
        Command::Construct(a) => construct_cmd(&mut ctx, a),
        Command::Verify(a) => verify_cmd(&mut ctx, a),
        Command::SearchPartition(a) => search_cmd(&mut ctx, a),
        Command::Tables(a) => tables_cmd(&ctx, a),
        Command::Family(a) => family_cmd(&mut ctx, a),
        Command::Export(a) => export_cmd(&mut ctx, a),
        Command::Import(a) => import_cmd(&mut ctx, a),
        Command::List => {
            let names = ctx.reg.names()?;
            ctx.say(&names.join("\n"), json!(names));
            Ok(ExitCode::SUCCESS)
        }
        Command::Log { name } => {
            if !ctx.reg.contains(name) {
                return Err(CliError::UnknownRecord(name.clone()));
            }
            for line in ctx.reg.read_log(name)? {
                println!("{line}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Bound { name, r } => {
            let b: Bound = name.parse().map_err(CliError::Usage)?;
            let n = tables::eval_bound(b, *r)?;
            ctx.say(&n.to_string(), json!({ "bound": b.to_string(), "r": r, "n": n }));
            Ok(ExitCode::SUCCESS)
        }
        Command::Delta { r, radius } => {
            let d = tables::delta(*r, *radius)?;
            ctx.say(&d.to_string(), json!({ "r": r, "R": radius, "delta": d }));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn verdict_code(pass: bool) -> ExitCode {
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn ensure_seed(ctx: &mut Ctx, name: &str, lock: &Lock) -> Result<(), CliError> {
    if !ctx.reg.contains(name) {
        if let Some(rec) = seeds::seed_by_name(name) {
            ctx.reg.store(&rec, lock, false)?;
        }
    }
    Ok(())
}

fn seed(ctx: &mut Ctx, cmd: &SeedCmd) -> Result<ExitCode, CliError> {
    match cmd {
        SeedCmd::List => {
            ctx.say(&seeds::SEED_NAMES.join("\n"), json!(seeds::SEED_NAMES));
            Ok(ExitCode::SUCCESS)
        }
        SeedCmd::Add { names, all } => {
            let lock = ctx.reg.lock()?;
            let list: Vec<String> = if *all { seeds::SEED_NAMES.iter().map(|s| s.to_string()).collect() } else { names.clone() };
            if list.is_empty() {
                return Err(CliError::Usage("name a seed or pass --all".into()));
            }
            for name in &list {
                let rec = seeds::seed_by_name(name).ok_or_else(|| CliError::UnknownRecord(name.clone()))?;
                ctx.reg.store(&rec, &lock, false)?;
            }
            ctx.say(&format!("added {}", list.join(", ")), json!({ "added": list }));
            Ok(ExitCode::SUCCESS)
        }
        SeedCmd::Verify { name } => {
            let lock = ctx.reg.lock()?;
            if seeds::seed_by_name(name).is_none() && !ctx.reg.contains(name) {
                return Err(CliError::UnknownRecord(name.clone()));
            }
            ensure_seed(ctx, name, &lock)?;
            let mut rec = ctx.reg.load(name)?;
            let h = rec.matrix.clone().ok_or_else(|| CliError::Registry(format!("{name} has no matrix")))?;
            let budget = ctx.cfg.budget(false);
            let cov = verify::covering_radius_exhaustive(&h, rec.claims.radius, &budget, true)?;
            let radius_ok = cov.radius == Some(rec.claims.radius);
            let mut pass = radius_ok;
            let mut details = json!({ "radius": cov.radius, "layers": cov.layers });
            let mut text = format!("{name}: R={:?} (claimed {})", cov.radius, rec.claims.radius);
            if let Some(d) = rec.claims.min_distance {
                let rep = verify::min_distance_upto(&h, d, &budget)?;
                pass &= rep.d == Some(d);
                let w: Vec<usize> = rep.witness.iter().map(|i| i + 1).collect();
                text += &format!(", d={:?} witness {w:?}", rep.d);
                details["d"] = json!(rep.d);
                details["d_witness"] = json!(w);
            }
            let mut parts = Vec::new();
            for np in &rec.partitions {
                let rep = verify::verify_partition(&h, &np.partition, &budget, true)?;
                pass &= rep.valid;
                text += &format!(", {} ({} subsets) {}", np.name, rep.subsets, if rep.valid { "valid" } else { "INVALID" });
                parts.push(json!({ "name": np.name, "subsets": rep.subsets, "ell": rep.ell, "valid": rep.valid, "witness": rep.witness }));
            }
            details["partitions"] = json!(parts);
            if radius_ok {
                rec.status.insert("radius".into(), Status::Exhaustive);
            }
            let verdict = if pass { "PASS" } else { "FAIL" };
            let entry = LogEntry { check: "seed-verify", mode: "exhaustive", verdict, details: details.clone() };
            ctx.reg.log_verification(&rec, &entry, &lock)?;
            ctx.say(&format!("{verdict} {text}"), json!({ "record": name, "verdict": verdict, "details": details }));
            Ok(verdict_code(pass))
        }
    }
}

fn spec_from_args(ctx: &Ctx, a: &ConstructArgs) -> Result<ConstructionSpec, CliError> {
    let variant: Variant = a.variant.parse().map_err(|e: construct::ConstructError| CliError::Usage(e.to_string()))?;
    let mut spec = ConstructionSpec::new(variant, &a.start, &a.partition, a.m);
    if let Some(inner) = &a.inner {
        spec = spec.with_inner(inner, &a.inner_partition);
    }
    spec.poly = a.poly.or_else(|| ctx.cfg.poly_for(a.m));
    spec.indicators = a.indicators.clone();
    spec.star_subset = a.star_subset;
    Ok(spec)
}

/// Builds a spec from registry records and stores the result.
fn build_and_store(ctx: &mut Ctx, name: &str, spec: &ConstructionSpec, max_listed: u64, lock: &Lock) -> Result<Arc<construct::QmCode>, CliError> {
    ensure_seed(ctx, &spec.start, lock)?;
    let start = ctx.reg.node(&spec.start)?;
    let inner = match &spec.inner {
        Some(i) => {
            ensure_seed(ctx, i, lock)?;
            Some(ctx.reg.node(i)?)
        }
        None => None,
    };
    let code = Arc::new(construct::construct(name, spec, start, inner)?);
    let rec = construct::to_record(&code, max_listed)?;
    ctx.reg.store(&rec, lock, false)?;
    Ok(code)
}

fn describe(code: &dyn CodeNode) -> (String, serde_json::Value) {
    let parts: Vec<_> = code.partitions().iter().map(|p| json!({ "name": p.name, "ell": p.ell, "subsets": p.count })).collect();
    let dens = qmcover::code::density(code.n(), code.r(), code.radius()).to_decimal(5);
    let list: Vec<String> = code.partitions().iter().map(|p| format!("{}:{}(ell={})", p.name, p.count, p.ell)).collect();
    (
        format!("{}: [{}, {}] R={} density {dens}; partitions {}", code.name(), code.n(), code.n() - code.r() as u64, code.radius(), list.join(" ")),
        json!({ "name": code.name(), "r": code.r(), "n": code.n(), "R": code.radius(), "density": dens, "partitions": parts }),
    )
}

fn construct_cmd(ctx: &mut Ctx, a: &ConstructArgs) -> Result<ExitCode, CliError> {
    let spec = spec_from_args(ctx, a)?;
    let name = a.out.clone().unwrap_or_else(|| format!("{}-{}-m{}", spec.variant, spec.start, spec.m));
    let lock = ctx.reg.lock()?;
    let code = build_and_store(ctx, &name, &spec, a.max_listed, &lock)?;
    let (text, value) = describe(code.as_ref());
    ctx.say(&text, value);
    Ok(ExitCode::SUCCESS)
}

struct VerifyOutcome {
    pass: bool,
    text: String,
    details: serde_json::Value,
}

fn exhaustive_check(ctx: &Ctx, node: &dyn CodeNode, heavy: bool, partitions: bool) -> Result<VerifyOutcome, CliError> {
    let h = node.matrix().ok_or_else(|| CliError::Usage(format!("{} is too long for an exhaustive check", node.name())))?;
    let budget = ctx.cfg.budget(heavy);
    let t = Instant::now();
    let cov = verify::covering_radius_exhaustive(&h, node.radius(), &budget, true)?;
    let mut pass = cov.radius == Some(node.radius());
    let mut text = format!("R={:?} (claimed {}) in {:.1?}", cov.radius, node.radius(), t.elapsed());
    let mut parts = Vec::new();
    if partitions {
        for (k, info) in node.partitions().iter().enumerate() {
            let Some(p) = node.partition(k) else { continue };
            match verify::verify_partition(&h, &p, &budget, true) {
                Ok(rep) => {
                    pass &= rep.valid;
                    text += &format!(", {} {}", info.name, if rep.valid { "valid" } else { "INVALID" });
                    parts.push(json!({ "name": info.name, "subsets": rep.subsets, "ell": rep.ell, "valid": rep.valid, "witness": rep.witness }));
                }
                Err(e) => {
                    text += &format!(", {} skipped ({e})", info.name);
                    parts.push(json!({ "name": info.name, "skipped": e.to_string() }));
                }
            }
        }
    }
    let details = json!({ "radius": cov.radius, "witness": cov.witness, "layers": cov.layers, "partitions": parts });
    Ok(VerifyOutcome { pass, text, details })
}

fn sampled_check(node: &dyn CodeNode, trials: u64, seed: u64, partitions: bool) -> VerifyOutcome {
    let mut pass = true;
    let mut text = String::new();
    let mut runs = Vec::new();
    let mut which: Vec<Option<usize>> = vec![None];
    if partitions {
        which.extend((0..node.partitions().len()).map(Some));
    }
    for k in which {
        let rep = verify::decoder_sample_verify(node, k, trials, seed, true);
        pass &= rep.passed();
        let label = k.map_or("unconstrained".to_string(), |k| node.partitions()[k].name.clone());
        text += &format!("{label}: {} trials, {} failures; ", rep.trials, rep.failures);
        runs.push(json!({ "partition": label, "trials": rep.trials, "seed": seed, "failures": rep.failures, "cases": rep.cases, "examples": rep.examples }));
    }
    VerifyOutcome { pass, text: text.trim_end_matches("; ").to_string(), details: json!({ "runs": runs }) }
}

/// Work and bitmap size of an exhaustive radius check.
fn exhaustive_cost(ctx: &Ctx, node: &dyn CodeNode) -> (u128, u64) {
    let (_, work) = verify::plan_layers(node.r(), node.n(), node.radius(), &ctx.cfg.budget(true));
    let bytes = if node.r() >= 3 { 1u64 << (node.r() - 3) } else { 1 };
    (work, bytes)
}

fn verify_cmd(ctx: &mut Ctx, a: &VerifyArgs) -> Result<ExitCode, CliError> {
    let lock = ctx.reg.lock()?;
    let node = ctx.reg.node(&a.name)?;
    let mut rec = ctx.reg.load(&a.name)?;
    let (work, bytes) = exhaustive_cost(ctx, node.as_ref());
    let heavy_cost = work > ctx.cfg.budget.heavy_work as u128 || bytes > ctx.cfg.budget.heavy_bitmap_mib << 20;
    let listable = node.n() <= 1 << 24;
    let estimate = format!("estimated {work} column operations and a {} MiB bitmap", bytes >> 20);
    let mode = match a.mode {
        VerifyMode::Sample => VerifyMode::Sample,
        VerifyMode::Exhaustive if !listable => return Err(CliError::Usage(format!("{} is too long to list", a.name))),
        VerifyMode::Exhaustive if heavy_cost && !a.heavy => return Err(CliError::Heavy(estimate)),
        VerifyMode::Exhaustive => VerifyMode::Exhaustive,
        VerifyMode::Auto if listable && (!heavy_cost || a.heavy) => VerifyMode::Exhaustive,
        VerifyMode::Auto => VerifyMode::Sample,
    };
    if heavy_cost && mode == VerifyMode::Exhaustive && !ctx.json {
        eprintln!("heavy run: {estimate}");
    }
    let trials = a.trials.unwrap_or(ctx.cfg.sample.trials);
    let seed = a.seed.unwrap_or(ctx.cfg.sample.seed);
    let (out, mode_name) = match mode {
        VerifyMode::Exhaustive => (exhaustive_check(ctx, node.as_ref(), a.heavy, !a.no_partitions)?, "exhaustive"),
        _ => (sampled_check(node.as_ref(), trials, seed, !a.no_partitions), "sampled"),
    };
    if out.pass {
        let status = if mode == VerifyMode::Exhaustive { Status::Exhaustive } else { Status::DecoderSampled { trials } };
        rec.status.insert("radius".into(), status);
    }
    let verdict = if out.pass { "PASS" } else { "FAIL" };
    let entry = LogEntry { check: "verify", mode: mode_name, verdict, details: out.details.clone() };
    ctx.reg.log_verification(&rec, &entry, &lock)?;
    ctx.say(
        &format!("{verdict} {} ({mode_name}): {}", a.name, out.text),
        json!({ "record": a.name, "mode": mode_name, "verdict": verdict, "details": out.details }),
    );
    Ok(verdict_code(out.pass))
}

fn read_matrix(ctx: &mut Ctx, input: &str) -> Result<ParityCheckMatrix, CliError> {
    let path = Path::new(input);
    if path.is_file() {
        return Ok(ParityCheckMatrix::parse_hex(&std::fs::read_to_string(path)?)?);
    }
    let rec = ctx.reg.load(input)?;
    match rec.matrix {
        Some(m) => Ok(m),
        None => ctx.reg.node(input)?.matrix().ok_or_else(|| CliError::Usage(format!("{input} is too long to list"))),
    }
}

fn search_cmd(ctx: &mut Ctx, a: &SearchArgs) -> Result<ExitCode, CliError> {
    let h = read_matrix(ctx, &a.input)?;
    let mut cfg = SearchConfig::new(a.radius, a.ell, a.max_subsets);
    cfg.budget = Duration::from_secs(a.budget);
    cfg.seed = a.seed;
    cfg.strategy = match a.strategy {
        StrategyArg::Greedy => Strategy::GreedyMerge,
        StrategyArg::Anneal => Strategy::Annealing,
    };
    let out = search::search_partition(&h, &cfg)?;
    let text = out.partition.emit();
    if let Some(path) = &a.out {
        std::fs::write(path, &text)?;
    }
    if let (Some(rec_name), Some(pname)) = (&a.attach, &a.save_as) {
        let lock = ctx.reg.lock()?;
        let mut rec = ctx.reg.load(rec_name)?;
        if rec.matrix.as_ref() != Some(&h) {
            return Err(CliError::Usage(format!("{rec_name} does not hold the searched matrix")));
        }
        rec.add_partition(pname, out.partition.clone())?;
        ctx.reg.store(&rec, &lock, true)?;
    }
    ctx.say(
        &format!("{text}# {} subsets, {:?}, {} attempts, {:.2?}", out.partition.len(), out.strategy, out.attempts, out.elapsed),
        json!({ "subsets": out.partition.len(), "strategy": out.strategy, "attempts": out.attempts, "partition": text }),
    );
    Ok(ExitCode::SUCCESS)
}

fn tables_cmd(ctx: &Ctx, a: &TablesArgs) -> Result<ExitCode, CliError> {
    let rows = tables::render_table(a.radius, a.rmin, a.rmax)?;
    let format = if ctx.json { TableFormat::Json } else { a.format };
    let text = tables::format_rows(
        &rows,
        match format {
            TableFormat::Text => "text",
            TableFormat::Csv => "csv",
            TableFormat::Json => "json",
        },
    )?;
    print!("{text}");
    if !text.ends_with('\n') {
        println!();
    }
    Ok(ExitCode::SUCCESS)
}

fn family_cmd(ctx: &mut Ctx, a: &FamilyArgs) -> Result<ExitCode, CliError> {
    let steps = tables::generate_family(a.radius, a.rmax);
    let lock = if a.construct || a.verify_upto.is_some() { Some(ctx.reg.lock()?) } else { None };
    let mut all_pass = true;
    let mut rows = Vec::new();
    for step in &steps {
        let mut line = format!(
            "{:<8} r={:<3} n={:<12} {} start={} m={}{} {:?}",
            step.name,
            step.r,
            step.expected_n,
            step.spec.variant,
            step.spec.start,
            step.spec.m,
            step.spec.inner.as_ref().map(|i| format!(" inner={i}")).unwrap_or_default(),
            step.role
        );
        let mut value = json!({ "step": step });
        if let Some(lock) = &lock {
            if step.needs_import && !ctx.reg.contains(&step.spec.start) {
                line += " parameter-only (start code must be imported)";
                value["built"] = json!(false);
                println_or_collect(ctx, &line, value, &mut rows);
                continue;
            }
            if a.construct || ctx.reg.contains(&step.name) {
                let code = if ctx.reg.contains(&step.name) {
                    ctx.reg.node(&step.name)?
                } else {
                    build_and_store(ctx, &step.name, &step.spec, 1 << 20, lock)?
                };
                if code.n() != step.expected_n {
                    return Err(CliError::Failed(format!("{} has n={}, expected {}", step.name, code.n(), step.expected_n)));
                }
                value["built"] = json!(true);
                let check = match a.verify_upto {
                    Some(limit) if step.r <= limit => Some((exhaustive_check(ctx, code.as_ref(), false, true)?, "exhaustive")),
                    Some(_) | None => a.trials.map(|t| (sampled_check(code.as_ref(), t, ctx.cfg.sample.seed, true), "sampled")),
                };
                if let Some((out, mode)) = check {
                    let verdict = if out.pass { "PASS" } else { "FAIL" };
                    all_pass &= out.pass;
                    let mut rec = ctx.reg.load(&step.name)?;
                    if out.pass {
                        let status = if mode == "exhaustive" { Status::Exhaustive } else { Status::DecoderSampled { trials: a.trials.unwrap_or(0) } };
                        rec.status.insert("radius".into(), status);
                    }
                    let entry = LogEntry { check: "family", mode, verdict, details: out.details.clone() };
                    ctx.reg.log_verification(&rec, &entry, lock)?;
                    line += &format!(" {verdict} ({mode}: {})", out.text);
                    value["verdict"] = json!(verdict);
                }
            }
        }
        println_or_collect(ctx, &line, value, &mut rows);
    }
    if ctx.json {
        println!("{}", serde_json::to_string(&rows)?);
    }
    Ok(verdict_code(all_pass))
}

fn println_or_collect(ctx: &Ctx, line: &str, value: serde_json::Value, rows: &mut Vec<serde_json::Value>) {
    if ctx.json {
        rows.push(value);
    } else {
        println!("{line}");
    }
}

/// Leading columns forming the identity, top row first.
fn identity_prefix_len(h: &ParityCheckMatrix) -> usize {
    let r = h.r();
    (0..r as usize).take_while(|&i| i < h.n() && h.col(i) == 1u64 << (r as usize - 1 - i)).count()
}

fn export_doc(rec: &CodeRecord) -> ExportDoc {
    let partitions = rec.partitions.iter().map(|p| (p.name.clone(), p.partition.emit())).collect();
    ExportDoc { meta: rec.meta(), matrix: rec.matrix.as_ref().map(|m| m.emit_hex()), partitions }
}

fn export_cmd(ctx: &mut Ctx, a: &ExportArgs) -> Result<ExitCode, CliError> {
    let rec = ctx.reg.load(&a.name)?;
    let matrix = || -> Result<ParityCheckMatrix, CliError> {
        rec.matrix.clone().ok_or_else(|| CliError::Usage(format!("{} has no stored matrix", a.name)))
    };
    let text = match a.format {
        ExportFormat::Hex => matrix()?.emit_hex(),
        ExportFormat::Tokens => {
            let h = matrix()?;
            h.token_list(identity_prefix_len(&h)) + "\n"
        }
        ExportFormat::Json => serde_json::to_string_pretty(&export_doc(&rec))? + "\n",
    };
    match &a.out {
        Some(path) => std::fs::write(path, &text)?,
        None => print!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn import_cmd(ctx: &mut Ctx, a: &ImportArgs) -> Result<ExitCode, CliError> {
    let rec = if let Some(path) = &a.from {
        let doc: ExportDoc = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        let matrix = doc.matrix.as_deref().map(ParityCheckMatrix::parse_hex).transpose()?;
        let mut partitions = Vec::new();
        for summary in &doc.meta.partitions {
            if let Some(text) = doc.partitions.get(&summary.name) {
                partitions.push(NamedPartition { name: summary.name.clone(), partition: Partition::parse(text)? });
            }
        }
        let mut meta = doc.meta;
        meta.name = a.name.clone();
        CodeRecord::from_meta(meta, matrix, partitions)?
    } else {
        let path = a.matrix.as_ref().ok_or_else(|| CliError::Usage("pass --matrix or --from".into()))?;
        let radius = a.radius.ok_or_else(|| CliError::Usage("--R is required with --matrix".into()))?;
        let claims = Claims { radius, min_distance: a.d, ell: a.ell };
        let mut parts = Vec::new();
        for p in &a.partitions {
            let (pname, file) = p.split_once('=').ok_or_else(|| CliError::Usage(format!("--partition {p}: expected name=file")))?;
            parts.push((pname.to_string(), std::fs::read_to_string(file)?));
        }
        seeds::import_external(&a.name, &std::fs::read_to_string(path)?, claims, &parts, &a.source)?
    };
    if a.check {
        let h = rec.matrix.clone().ok_or_else(|| CliError::Usage("nothing to check without a matrix".into()))?;
        let cov = verify::covering_radius_exhaustive(&h, rec.claims.radius, &ctx.cfg.budget(false), true)?;
        if cov.radius != Some(rec.claims.radius) {
            return Err(CliError::Failed(format!("claimed R={} but the exhaustive check gives {:?}", rec.claims.radius, cov.radius)));
        }
    }
    let lock = ctx.reg.lock()?;
    ctx.reg.store(&rec, &lock, false)?;
    ctx.say(&format!("imported {} [{}, {}]", rec.name, rec.n, rec.n - rec.r as u64), json!({ "imported": rec.name, "n": rec.n, "r": rec.r }));
    Ok(ExitCode::SUCCESS)
}
