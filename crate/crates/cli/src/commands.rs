use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use relucov::analysis::{
    apply_oracle, enumerate_patterns, run_lattice_battery, safety_coverage, AdversarialStats,
    BatteryConfig, EdgeKind, OracleConfig, PatternStatus, DEFAULT_PATTERN_LIMIT,
};
use relucov::coverage::{
    compute_bounds, coverage, multisection_coverage, neuron_boundary_coverage, neuron_coverage,
    top_m_coverage, CoverageReport, CoveringMethod, NeuronBounds, Norm, TestSuite, ValueFunction,
};
use relucov::features::{
    enumerate_random_feature_pairs, enumerate_singleton_pairs, enumerate_top_weight_pairs,
    FeaturePairSet,
};
use relucov::generation::{generate_suite, Engine, GenerationConfig, GradientInit};
use relucov::io::load_dataset;
use relucov::network::{load_network, ActivationTrace, Network};
use serde::Serialize;

use crate::config::{Problems, RunConfig};
use crate::error::CliError;

/// Identifies the run in every file it writes.
struct Stamp {
    hash: String,
    seed: u64,
}

impl Stamp {
    fn new(cfg: &RunConfig, command: &str) -> Self {
        Stamp {
            hash: cfg.hash(command),
            seed: cfg.seed(),
        }
    }

    fn fields(&self) -> [(&'static str, String); 2] {
        [
            ("config_hash", self.hash.clone()),
            ("seed", self.seed.to_string()),
        ]
    }

    /// `body` as a JSON object with the stamp added.
    fn json<T: Serialize>(&self, body: &T) -> String {
        let mut value = serde_json::to_value(body).expect("outputs serialize");
        let map = value.as_object_mut().expect("outputs are objects");
        map.insert("config_hash".into(), self.hash.clone().into());
        map.insert("seed".into(), self.seed.into());
        let mut s = serde_json::to_string_pretty(&value).expect("outputs serialize");
        s.push('\n');
        s
    }

    fn csv_header(&self) -> String {
        format!("# config_hash={} seed={}\n", self.hash, self.seed)
    }
}

fn summary(fields: &[(&str, String)]) {
    let line: Vec<String> = fields.iter().map(|(k, v)| format!("{k}={v}")).collect();
    println!("{}", line.join(" "));
}

fn opt_num(v: Option<f64>) -> String {
    v.map_or_else(|| "na".to_string(), |x| x.to_string())
}

fn output_dir(cfg: &RunConfig) -> Result<Option<PathBuf>, CliError> {
    match &cfg.output_dir {
        None => Ok(None),
        Some(d) => {
            fs::create_dir_all(d).map_err(|e| {
                CliError::Input(format!(
                    "cannot create output directory {}: {e}",
                    d.display()
                ))
            })?;
            Ok(Some(d.clone()))
        }
    }
}

fn write_file(dir: &Path, name: &str, contents: &[u8]) -> Result<(), CliError> {
    fs::write(dir.join(name), contents)
        .map_err(|e| CliError::Internal(format!("writing {name}: {e}")))
}

fn write_report(
    dir: &Path,
    stamp: &Stamp,
    report: &CoverageReport,
    extra: serde_json::Value,
) -> Result<(), CliError> {
    let mut body = serde_json::json!({ "report": report });
    if let (Some(b), serde_json::Value::Object(e)) = (body.as_object_mut(), extra) {
        b.extend(e);
    }
    write_file(dir, "report.json", stamp.json(&body).as_bytes())?;
    let mut csv = stamp.csv_header().into_bytes();
    report
        .write_csv(&mut csv)
        .map_err(|e| CliError::Internal(e.to_string()))?;
    write_file(dir, "report.csv", &csv)
}

fn write_curve(dir: &Path, stamp: &Stamp, stats: &AdversarialStats) -> Result<(), CliError> {
    let mut csv = stamp.csv_header().into_bytes();
    stats
        .write_curve_csv(&mut csv)
        .map_err(|e| CliError::Internal(e.to_string()))?;
    write_file(dir, "ae_curve.csv", &csv)
}

fn parse_vector(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| format!("{v:?} is not a number"))
        })
        .collect()
}

/// Numbers for the trace table: exact values are kept short, noise below
/// 1e-12 is shown as zero.
fn short(v: f64) -> String {
    if v.abs() < 1e-12 {
        return "0".into();
    }
    let s = format!("{v:.10}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

fn trace_row(index: usize, t: &ActivationTrace) -> String {
    let join = |v: &[f64]| v.iter().map(|x| short(*x)).collect::<Vec<_>>().join(",");
    let mut row = format!("row={} x={}", index + 1, join(t.input()));
    for k in 2..t.depth() {
        let (u, v) = (t.pre_layer(k), t.post_layer(k));
        for i in 0..u.len() {
            row.push_str(&format!(
                " n_{k}_{}={}[{}]",
                i + 1,
                short(u[i]),
                short(v[i])
            ));
        }
    }
    let signs: String = t
        .pattern()
        .iter()
        .map(|s| if s.as_i8() > 0 { '+' } else { '-' })
        .collect();
    row.push_str(&format!(
        " out={} label={} signs={signs}",
        join(t.output()),
        t.label()
    ));
    row
}

pub fn eval(cfg: &RunConfig) -> Result<(), CliError> {
    let mut p = Problems::default();
    let net_path = p.file("net", &cfg.net);
    let input = match (&cfg.input, &cfg.dataset) {
        (Some(_), Some(_)) | (None, None) => {
            p.push("give exactly one of --input and --dataset");
            None
        }
        (Some(s), None) => p.take("--input", parse_vector(s)).map(|x| vec![x]),
        (None, Some(_)) => None,
    };
    let dataset = p.optional_file("dataset", &cfg.dataset);
    p.finish()?;
    let stamp = Stamp::new(cfg, "eval");
    let net = load_network(&net_path.expect("validated"))?;
    let inputs = match input {
        Some(x) => x,
        None => load_dataset(&dataset.expect("validated"))?,
    };
    let traces = inputs
        .iter()
        .map(|x| net.evaluate(x))
        .collect::<Result<Vec<_>, _>>()?;
    let out = io::stdout();
    let mut out = BufWriter::new(out.lock());
    for (i, t) in traces.iter().enumerate() {
        writeln!(out, "{}", trace_row(i, t))?;
    }
    out.flush()?;
    if let Some(dir) = output_dir(cfg)? {
        write_file(
            &dir,
            "traces.json",
            stamp
                .json(&serde_json::json!({ "traces": traces }))
                .as_bytes(),
        )?;
    }
    Ok(())
}

const PAIR_CRITERIA: [&str; 4] = ["ss", "vs", "sv", "vv"];
const NODE_CRITERIA: [&str; 5] = ["nc", "nbc", "tknc", "kmnc", "s"];

fn value_function(
    p: &mut Problems,
    flag: &str,
    value: &Option<String>,
    default: &str,
) -> Option<ValueFunction> {
    let s = value.as_deref().unwrap_or(default);
    let g = p.take(&format!("--{flag}"), s.parse::<ValueFunction>())?;
    p.take(&format!("--{flag}"), g.validate_params()).map(|_| g)
}

/// The covering method named by `criterion`. VS and SV default to a ratio
/// of 2, VV to a ratio of 5 on both sides.
fn covering_method(p: &mut Problems, criterion: &str, cfg: &RunConfig) -> Option<CoveringMethod> {
    match criterion {
        "ss" => Some(CoveringMethod::SignSign),
        "vs" => value_function(p, "g", &cfg.g, "ratio:2").map(|g| CoveringMethod::ValueSign { g }),
        "sv" => value_function(p, "g", &cfg.g, "ratio:2").map(|g| CoveringMethod::SignValue { g }),
        "vv" => {
            let g1 = value_function(p, "g1", &cfg.g1, "ratio:5");
            let g2 = value_function(p, "g2", &cfg.g2, "ratio:5");
            Some(CoveringMethod::ValueValue { g1: g1?, g2: g2? })
        }
        _ => None,
    }
}

enum PairStrategy {
    File(PathBuf),
    Singleton,
    Top(usize),
    Random { omega: f64, count: usize },
}

fn pair_strategy(p: &mut Problems, cfg: &RunConfig) -> Option<PairStrategy> {
    if let Some(path) = &cfg.pairs_file {
        return p
            .optional_file("pairs-file", &Some(path.clone()))
            .map(PairStrategy::File);
    }
    let spec = cfg.pairs.as_deref().unwrap_or("singleton");
    let parts: Vec<&str> = spec.split(':').collect();
    let bad =
        || format!("--pairs {spec:?}: expected singleton, top:<kappa> or random:<omega>:<count>");
    match parts.as_slice() {
        ["singleton"] => Some(PairStrategy::Singleton),
        ["top", k] => match k.parse::<usize>() {
            Ok(k) if k >= 1 => Some(PairStrategy::Top(k)),
            _ => {
                p.push(bad());
                None
            }
        },
        ["random", w, c] => match (w.parse::<f64>(), c.parse::<usize>()) {
            (Ok(omega), Ok(count)) if omega > 0.0 && omega <= 1.0 && count >= 1 => {
                Some(PairStrategy::Random { omega, count })
            }
            _ => {
                p.push(bad());
                None
            }
        },
        _ => {
            p.push(bad());
            None
        }
    }
}

fn build_pairs(
    net: &Network,
    strategy: &PairStrategy,
    cfg: &RunConfig,
) -> Result<FeaturePairSet, CliError> {
    let outputs = cfg.output_decisions.unwrap_or(false);
    let pairs = match strategy {
        PairStrategy::File(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
            let set = FeaturePairSet::from_json(&text)?;
            set.validate(net, outputs)?;
            set
        }
        PairStrategy::Singleton => enumerate_singleton_pairs(net, outputs),
        PairStrategy::Top(k) => enumerate_top_weight_pairs(net, *k, outputs),
        PairStrategy::Random { omega, count } => {
            enumerate_random_feature_pairs(net, *omega, *count, cfg.seed(), outputs)?
        }
    };
    if pairs.is_empty() {
        return Err(CliError::config(format!(
            "the feature pair set is empty (the network has {} hidden layer(s))",
            net.hidden_layers().len()
        )));
    }
    Ok(pairs)
}

fn oracle(p: &mut Problems, cfg: &RunConfig) -> Option<OracleConfig> {
    let b = cfg.oracle_b?;
    let norm = p.take(
        "--oracle-p",
        cfg.oracle_p.as_deref().unwrap_or("inf").parse::<Norm>(),
    )?;
    p.take("--oracle-b", OracleConfig::new(norm, b))
}

fn bounds(net: &Network, reference: Option<&PathBuf>) -> Result<Option<NeuronBounds>, CliError> {
    match reference {
        None => Ok(None),
        Some(path) => Ok(Some(compute_bounds(
            net,
            &TestSuite::new(load_dataset(path)?),
        )?)),
    }
}

fn check_dims(net: &Network, inputs: &[Vec<f64>], what: &str) -> Result<(), CliError> {
    match inputs.iter().position(|x| x.len() != net.input_dim()) {
        Some(i) => Err(CliError::Input(format!(
            "{what} row {} has {} values, the network expects {}",
            i + 1,
            inputs[i].len(),
            net.input_dim()
        ))),
        None => Ok(()),
    }
}

pub fn coverage_cmd(cfg: &RunConfig) -> Result<(), CliError> {
    let mut p = Problems::default();
    let net_path = p.file("net", &cfg.net);
    let dataset = p.file("dataset", &cfg.dataset);
    let reference = p.optional_file("reference", &cfg.reference);
    let criterion = cfg
        .criterion
        .as_deref()
        .unwrap_or("ss")
        .to_ascii_lowercase();
    let mut method = None;
    let mut strategy = None;
    if PAIR_CRITERIA.contains(&criterion.as_str()) {
        method = covering_method(&mut p, &criterion, cfg);
        strategy = pair_strategy(&mut p, cfg);
        if method.as_ref().is_some_and(|m| m.needs_bounds()) && cfg.reference.is_none() {
            p.push(format!(
                "--reference is required: the value functions of {criterion} use neuron bounds"
            ));
        }
    } else if NODE_CRITERIA.contains(&criterion.as_str()) {
        if matches!(criterion.as_str(), "nbc" | "kmnc") && cfg.reference.is_none() {
            p.push(format!("--reference is required for {criterion}"));
        }
        if cfg.m == Some(0) {
            p.push("--m must be at least 1");
        }
    } else {
        p.push(format!(
            "--criterion {criterion:?}: expected one of ss, vs, sv, vv, nc, nbc, tknc, kmnc, s"
        ));
    }
    let oracle = oracle(&mut p, cfg);
    p.finish()?;

    let stamp = Stamp::new(cfg, "coverage");
    let net = load_network(&net_path.expect("validated"))?;
    let inputs = load_dataset(&dataset.expect("validated"))?;
    check_dims(&net, &inputs, "dataset")?;
    let suite = TestSuite::new(inputs);
    let bounds = bounds(&net, reference.as_ref())?;

    let mut report = match criterion.as_str() {
        "nc" => neuron_coverage(&net, &suite)?,
        "nbc" => neuron_boundary_coverage(&net, &suite, bounds.as_ref().expect("validated"))?,
        "tknc" => top_m_coverage(&net, &suite, cfg.m.unwrap_or(1))?,
        "kmnc" => multisection_coverage(
            &net,
            &suite,
            bounds.as_ref().expect("validated"),
            cfg.m.unwrap_or(2),
            cfg.section_fraction.unwrap_or(false),
        )?,
        "s" => {
            let patterns =
                enumerate_patterns(&net, cfg.pattern_limit.unwrap_or(DEFAULT_PATTERN_LIMIT))?;
            safety_coverage(&net, &suite, &patterns)?
        }
        _ => {
            let pairs = build_pairs(&net, strategy.as_ref().expect("validated"), cfg)?;
            coverage(
                &net,
                &pairs,
                &suite,
                method.as_ref().expect("validated"),
                bounds.as_ref(),
            )?
        }
    };
    let stats = match &oracle {
        Some(o) => Some(apply_oracle(&net, &mut report, &suite, o)?),
        None => None,
    };
    if let Some(dir) = output_dir(cfg)? {
        write_report(
            &dir,
            &stamp,
            &report,
            serde_json::json!({ "config": cfg_for_output(cfg), "adversarial": stats }),
        )?;
        if let Some(s) = &stats {
            write_curve(&dir, &stamp, s)?;
        }
    }
    let mut fields = vec![
        ("criterion", report.criterion.clone()),
        ("covered", report.covered.to_string()),
        ("total", report.total.to_string()),
        ("metric", report.metric.to_string()),
        ("ae", opt_num(report.adversarial_fraction)),
    ];
    fields.extend(stamp.fields());
    summary(&fields);
    Ok(())
}

/// The configuration as recorded inside report files.
fn cfg_for_output(cfg: &RunConfig) -> RunConfig {
    RunConfig {
        workers: None,
        output_dir: None,
        ..cfg.clone()
    }
}

fn generation_config(p: &mut Problems, cfg: &RunConfig) -> Option<GenerationConfig> {
    let defaults = GenerationConfig::default();
    let engine = match cfg.engine.as_deref().unwrap_or("lp") {
        "lp" => Some(Engine::Lp),
        "gradient" => Some(Engine::Gradient),
        other => {
            p.push(format!("--engine {other:?}: expected lp or gradient"));
            None
        }
    };
    let init = match cfg.init.as_deref().unwrap_or("fgsm") {
        "fgsm" => Some(GradientInit::Fgsm),
        "uniform" => Some(GradientInit::Uniform),
        other => {
            p.push(format!("--init {other:?}: expected fgsm or uniform"));
            None
        }
    };
    let config = GenerationConfig {
        engine: engine?,
        init: init?,
        max_steps: cfg.budget.unwrap_or(defaults.max_steps),
        max_seeds: cfg.max_seeds.or(defaults.max_seeds),
        epsilon0: cfg.epsilon0.unwrap_or(defaults.epsilon0),
        delta: cfg.delta.unwrap_or(defaults.delta),
        max_lp_iterations: cfg.max_lp_iterations.unwrap_or(defaults.max_lp_iterations),
        seed: cfg.seed(),
        corpus_pairs: cfg.corpus_pairs.unwrap_or(defaults.corpus_pairs),
    };
    p.take("generation", config.validate()).map(|_| config)
}

/// The suite as `{"config_hash", "seed", "inputs"}` with one vector per
/// line. Floats use their shortest round-trip form, so identical runs
/// produce identical bytes.
fn suite_json(stamp: &Stamp, inputs: &[Vec<f64>]) -> String {
    let mut s = format!(
        "{{\n  \"config_hash\": \"{}\",\n  \"seed\": {},\n  \"inputs\": [\n",
        stamp.hash, stamp.seed
    );
    for (i, x) in inputs.iter().enumerate() {
        let sep = if i + 1 == inputs.len() { "" } else { "," };
        s.push_str(&format!(
            "    {}{sep}\n",
            serde_json::to_string(x).expect("finite floats serialize")
        ));
    }
    s.push_str("  ]\n}\n");
    s
}

pub fn gen(cfg: &RunConfig) -> Result<(), CliError> {
    let mut p = Problems::default();
    let net_path = p.file("net", &cfg.net);
    let corpus_path = p.file("corpus", &cfg.corpus);
    let reference = p.optional_file("reference", &cfg.reference);
    let criterion = cfg
        .criterion
        .as_deref()
        .unwrap_or("ss")
        .to_ascii_lowercase();
    let method = if PAIR_CRITERIA.contains(&criterion.as_str()) {
        covering_method(&mut p, &criterion, cfg)
    } else {
        p.push(format!(
            "--criterion {criterion:?}: generation supports ss, vs, sv and vv"
        ));
        None
    };
    if method.as_ref().is_some_and(|m| m.needs_bounds()) && cfg.reference.is_none() {
        p.push(format!(
            "--reference is required: the value functions of {criterion} use neuron bounds"
        ));
    }
    let strategy = pair_strategy(&mut p, cfg);
    let gen_config = generation_config(&mut p, cfg);
    if let (Some(m), Some(g)) = (&method, &gen_config) {
        if g.engine == Engine::Lp {
            p.take("--engine lp", relucov::generation::lp_compatible(m));
        }
    }
    let oracle = oracle(&mut p, cfg);
    p.finish()?;
    let (method, gen_config) = (method.expect("validated"), gen_config.expect("validated"));

    let stamp = Stamp::new(cfg, "gen");
    let net = load_network(&net_path.expect("validated"))?;
    let corpus = load_dataset(&corpus_path.expect("validated"))?;
    check_dims(&net, &corpus, "corpus")?;
    let bounds = bounds(&net, reference.as_ref())?;
    let pairs = build_pairs(&net, strategy.as_ref().expect("validated"), cfg)?;

    let mut generated =
        generate_suite(&net, &pairs, &method, &corpus, &gen_config, bounds.as_ref())?;
    let stats = match &oracle {
        Some(o) => Some(apply_oracle(
            &net,
            &mut generated.report,
            &generated.suite,
            o,
        )?),
        None => None,
    };
    let report = &generated.report;
    let count = |outcome: &str| {
        generated
            .outcomes
            .iter()
            .filter(|o| o.outcome == outcome)
            .count()
    };
    let from_corpus = generated
        .provenance
        .iter()
        .filter(|p| p.source == "corpus")
        .count();
    let uncovered: Vec<String> = report
        .uncovered()
        .map(|i| pairs.pairs()[i].to_string())
        .collect();

    if let Some(dir) = output_dir(cfg)? {
        write_file(
            &dir,
            "suite.json",
            suite_json(&stamp, generated.suite.inputs()).as_bytes(),
        )?;
        let prov = serde_json::json!({ "provenance": generated.provenance, "outcomes": generated.outcomes });
        write_file(&dir, "provenance.json", stamp.json(&prov).as_bytes())?;
        write_report(
            &dir,
            &stamp,
            report,
            serde_json::json!({ "config": cfg_for_output(cfg), "adversarial": stats, "uncovered": uncovered }),
        )?;
        if let Some(s) = &stats {
            write_curve(&dir, &stamp, s)?;
        }
    }
    for pair in &uncovered {
        eprintln!("uncovered pair={}", pair.replace(' ', ""));
    }
    let mut fields = vec![
        ("criterion", report.criterion.clone()),
        ("engine", gen_config.engine.to_string()),
        ("pairs", pairs.len().to_string()),
        ("found", count("found").to_string()),
        ("skipped", count("skipped").to_string()),
        ("exhausted", count("exhausted").to_string()),
        ("corpus_inputs", from_corpus.to_string()),
        ("suite_size", generated.suite.len().to_string()),
        ("covered", report.covered.to_string()),
        ("total", report.total.to_string()),
        ("metric", report.metric.to_string()),
        ("ae", opt_num(report.adversarial_fraction)),
    ];
    fields.extend(stamp.fields());
    summary(&fields);
    Ok(())
}

fn parse_edges(p: &mut Problems, spec: Option<&str>) -> Option<Vec<EdgeKind>> {
    match spec.unwrap_or("all") {
        "all" => Some(EdgeKind::ALL.to_vec()),
        list => {
            let edges: Vec<Option<EdgeKind>> = list
                .split(',')
                .map(|e| p.take("--edges", e.trim().parse::<EdgeKind>()))
                .collect();
            edges.into_iter().collect()
        }
    }
}

pub fn lattice(cfg: &RunConfig) -> Result<(), CliError> {
    let mut p = Problems::default();
    let edges = parse_edges(&mut p, cfg.edges.as_deref());
    let d = BatteryConfig::default();
    let battery = BatteryConfig {
        nets: cfg.nets.unwrap_or(d.nets),
        suites: cfg.suites.unwrap_or(d.suites),
        seed: cfg.seed(),
        sections: cfg.sections.unwrap_or(d.sections),
        top: cfg.top.unwrap_or(d.top),
        pattern_limit: cfg.pattern_limit.unwrap_or(d.pattern_limit),
        max_suite_size: cfg.max_suite_size.unwrap_or(d.max_suite_size),
        reference_size: cfg.reference_size.unwrap_or(d.reference_size),
    };
    for (flag, v) in [
        ("nets", battery.nets),
        ("suites", battery.suites),
        ("top", battery.top),
    ] {
        if v == 0 {
            p.push(format!("--{flag} must be at least 1"));
        }
    }
    if battery.sections < 2 {
        p.push("--sections must be at least 2");
    }
    if battery.pattern_limit > 20 {
        p.push("--pattern-limit above 20 would enumerate millions of patterns per network");
    }
    p.finish()?;
    let edges = edges.expect("validated");

    let stamp = Stamp::new(cfg, "lattice");
    let verdicts = run_lattice_battery(&edges, &battery)?;
    if let Some(dir) = output_dir(cfg)? {
        let body = serde_json::json!({ "battery": battery, "verdicts": verdicts });
        write_file(&dir, "lattice.json", stamp.json(&body).as_bytes())?;
    }
    for v in &verdicts {
        summary(&[
            ("edge", v.edge.clone()),
            ("passed", v.passed().to_string()),
            ("nets", v.nets.to_string()),
            ("skipped_nets", v.skipped_nets.to_string()),
            ("suites", v.suites.to_string()),
            ("non_vacuous", v.non_vacuous.to_string()),
        ]);
    }
    let failed: Vec<&str> = verdicts
        .iter()
        .filter(|v| !v.passed())
        .map(|v| v.edge.as_str())
        .collect();
    let mut fields = vec![
        ("edges", verdicts.len().to_string()),
        ("failed", failed.len().to_string()),
    ];
    fields.extend(stamp.fields());
    summary(&fields);
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Property(format!(
            "edges without a clean verdict: {}",
            failed.join(", ")
        )))
    }
}

pub fn patterns(cfg: &RunConfig) -> Result<(), CliError> {
    let mut p = Problems::default();
    let net_path = p.file("net", &cfg.net);
    let dataset = p.optional_file("dataset", &cfg.dataset);
    let limit = cfg.pattern_limit.unwrap_or(DEFAULT_PATTERN_LIMIT);
    if limit > 24 {
        p.push(format!(
            "--pattern-limit {limit} exceeds the hard cap of 24 hidden nodes"
        ));
    }
    p.finish()?;

    let stamp = Stamp::new(cfg, "patterns");
    let net = load_network(&net_path.expect("validated"))?;
    let set = enumerate_patterns(&net, limit)?;
    let safety = match &dataset {
        Some(path) => {
            let inputs = load_dataset(path)?;
            check_dims(&net, &inputs, "dataset")?;
            Some(safety_coverage(&net, &TestSuite::new(inputs), &set)?)
        }
        None => None,
    };
    if let Some(dir) = output_dir(cfg)? {
        let body = serde_json::json!({ "patterns": set, "safety": safety });
        write_file(&dir, "patterns.json", stamp.json(&body).as_bytes())?;
    }
    let count = |s: PatternStatus| set.entries.iter().filter(|e| e.status == s).count();
    let mut fields = vec![
        ("hidden", set.hidden.to_string()),
        ("patterns", set.entries.len().to_string()),
        ("feasible", count(PatternStatus::Feasible).to_string()),
        ("unverified", count(PatternStatus::Unverified).to_string()),
        ("infeasible", count(PatternStatus::Infeasible).to_string()),
        ("unknown", count(PatternStatus::Unknown).to_string()),
        ("safety", opt_num(safety.as_ref().map(|r| r.metric))),
    ];
    fields.extend(stamp.fields());
    summary(&fields);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use relucov::network::fixtures::small_net;

    #[test]
    fn table_row_matches_hand_values() {
        let t = small_net().evaluate(&[0.1, 0.0]).unwrap();
        let row = trace_row(0, &t);
        assert!(
            row.starts_with("row=1 x=0.1,0 n_2_1=0.4[0.4] n_2_2=0[0] n_2_3=-0.1[0]"),
            "{row}"
        );
        assert!(row.ends_with("out=0.8,1.2 label=2 signs=++-++-"), "{row}");
    }

    #[test]
    fn pair_strategies_parse() {
        let parse = |s: &str| {
            let mut p = Problems::default();
            let cfg = RunConfig {
                pairs: Some(s.into()),
                ..Default::default()
            };
            let r = pair_strategy(&mut p, &cfg);
            (r.is_some(), p.finish().is_ok())
        };
        assert_eq!(parse("singleton"), (true, true));
        assert_eq!(parse("top:2"), (true, true));
        assert_eq!(parse("random:0.5:3"), (true, true));
        assert_eq!(parse("random:1.5:3"), (false, false));
        assert_eq!(parse("top"), (false, false));
    }

    #[test]
    fn short_numbers() {
        assert_eq!(short(0.1 + 0.2), "0.3");
        assert_eq!(short(-1e-15), "0");
        assert_eq!(short(12.0), "12");
    }
}
