use std::fs;
use std::path::Path;

use consensus_reliab::math::binomial;
use consensus_reliab::sim::{
    simulate_consensus_trials, simulate_raft_latency, summarize_trace, FailureSource, Horizon,
    SimConfig,
};
use consensus_reliab::{
    db_to_linear, equal_split_allocation, exact_reliability, exact_reliability_iid,
    iid_first_order_failure, joint_reliability, joint_vector, multi_instance_reliability,
    node_only_reliability, optimize_power_seeded, overall_joint_failure_rate_iid,
    power_series_failure, queuing_latency, reliability_gain, tolerance_gain,
    tree_decomposed_failure, validate_structure, Builtin, ClusterParams, Error, Family,
    LatencyParams, MultiInstanceMode, NForm, PowerAllocation, ProtocolStructure,
    ReliabilityResult, WirelessScenario,
};
use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{CliError, CliResult};
use crate::grid::Grid;
use crate::output::{Cell, Format, Table};
use crate::{
    ApproxArgs, ApproxMethod, AttemptLatency, Cli, ClusterArgs, Command, ExactMethod, GainsArgs,
    LatencyArgs, MultiMode, OptimizeArgs, ReliabilityArgs, SimConsensusArgs, SimLatencyArgs,
    SimulateCommand, SweepArgs,
};

pub fn dispatch(cli: &Cli) -> CliResult<String> {
    let table = match &cli.command {
        Command::Reliability(a) => reliability(a)?,
        Command::Approx(a) => approx(a)?,
        Command::Gains(a) => gains(a)?,
        Command::Latency(a) => latency(a)?,
        Command::Optimize(a) => optimize(a, cli.seed)?,
        Command::Simulate(SimulateCommand::Consensus(a)) => simulate_consensus(a, cli.seed)?,
        Command::Simulate(SimulateCommand::Latency(a)) => {
            return simulate_latency(a, cli.seed, cli.format)
        }
        Command::Sweep(a) => sweep(a)?,
    };
    Ok(table.render(cli.format))
}

fn read_input(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::input_file(path, e))
}

struct Target {
    name: String,
    structure: ProtocolStructure,
    family: Option<Family>,
}

fn targets(protocol: Option<&str>, file: Option<&Path>) -> CliResult<Vec<Target>> {
    let builtin = |b: Builtin| Target {
        name: b.name().to_string(),
        structure: b.structure(),
        family: Some(b.family()),
    };
    match (protocol, file) {
        (_, Some(path)) => {
            let structure = ProtocolStructure::from_json(&read_input(path)?)?;
            Ok(vec![Target {
                name: structure.name.clone(),
                structure,
                family: None,
            }])
        }
        (Some("all"), None) => Ok(Builtin::CLASSIC.into_iter().map(builtin).collect()),
        (Some(name), None) => Ok(vec![builtin(name.parse::<Builtin>()?)]),
        (None, None) => Err(CliError::usage("one of --protocol or --protocol-file is required")),
    }
}

fn success_prob(
    label: &str,
    success: Option<f64>,
    failure: Option<f64>,
) -> CliResult<Option<f64>> {
    match (success, failure) {
        (Some(_), Some(_)) => Err(CliError::usage(format!(
            "give only one of --{label} and --{label}-fail"
        ))),
        (Some(p), None) => Ok(Some(p)),
        (None, Some(q)) => Ok(Some(1.0 - q)),
        (None, None) => Ok(None),
    }
}

fn resolve_f(f: Option<usize>, family: Option<Family>, n: usize) -> CliResult<usize> {
    match (f, family) {
        (Some(f), _) => Ok(f),
        (None, Some(fam)) => Ok(fam.default_f(n)),
        (None, None) => Err(CliError::usage("--f is required for a protocol file")),
    }
}

impl ClusterArgs {
    fn targets(&self) -> CliResult<Vec<Target>> {
        targets(self.protocol.as_deref(), self.protocol_file.as_deref())
    }

    /// Uniform success probabilities, if given on the command line.
    fn iid_probs(&self) -> CliResult<Option<(f64, f64)>> {
        let node = success_prob("p-node", self.p_node, self.p_node_fail)?;
        let link = success_prob("p-link", self.p_link, self.p_link_fail)?;
        match (node, link) {
            (Some(p_n), Some(p_l)) => Ok(Some((p_n, p_l))),
            (None, None) => Ok(None),
            _ => Err(CliError::usage(
                "node and link probabilities must both be given",
            )),
        }
    }

    fn cluster(&self, target: &Target) -> CliResult<ClusterParams> {
        if let Some(path) = &self.params {
            let params = ClusterParams::from_json(&read_input(path)?)?;
            if self.n.is_some_and(|n| n != params.n) || self.f.is_some_and(|f| f != params.f) {
                return Err(CliError::usage("--n/--f disagree with the parameter file"));
            }
            return Ok(params);
        }
        let n = self
            .n
            .ok_or_else(|| CliError::usage("--n is required without --params"))?;
        let f = resolve_f(self.f, target.family, n)?;
        let (p_n, p_l) = self.iid_probs()?.ok_or_else(|| {
            CliError::usage("give --p-node or --p-node-fail and --p-link or --p-link-fail")
        })?;
        let params = ClusterParams::iid(n, f, p_n, p_l);
        params.validate()?;
        Ok(params)
    }
}

fn iid_of(params: &ClusterParams) -> CliResult<(f64, f64)> {
    params.as_iid().ok_or_else(|| {
        Error::InvalidParams("this method needs uniform node and link probabilities".to_string())
            .into()
    })
}

fn warn_outside_regime(name: &str, r: &ReliabilityResult) {
    if r.outside_regime {
        eprintln!(
            "{}",
            serde_json::json!({
                "warning": "OUTSIDE_REGIME",
                "message": format!("{name}: thresholds fall outside the quorum regime"),
            })
        );
    }
}

fn reliability(a: &ReliabilityArgs) -> CliResult<Table> {
    if let Some(w) = a.instances {
        let mut table = Table::new(&["protocol", "n", "f", "mode", "instances", "p_c", "p_f"]);
        let mode = match a.multi_mode {
            MultiMode::Exact => MultiInstanceMode::Exact,
            MultiMode::Approx => MultiInstanceMode::Approx,
        };
        for t in a.cluster.targets()? {
            let params = a.cluster.cluster(&t)?;
            let p_c = multi_instance_reliability(&t.structure, &params, w, mode)?;
            let mode_name = match mode {
                MultiInstanceMode::Exact => "exact",
                MultiInstanceMode::Approx => "approx",
            };
            table.push(vec![
                t.name.into(),
                params.n.into(),
                params.f.into(),
                mode_name.into(),
                w.into(),
                p_c.into(),
                (1.0 - p_c).into(),
            ]);
        }
        return Ok(table);
    }
    let mut table = Table::new(&["protocol", "n", "f", "method", "p_c", "p_f"]);
    for t in a.cluster.targets()? {
        let params = a.cluster.cluster(&t)?;
        let (r, label) = match a.method {
            ExactMethod::Exact => (exact_reliability(&t.structure, &params)?, "exact"),
            ExactMethod::ExactIid => {
                let (p_n, p_l) = iid_of(&params)?;
                let r = exact_reliability_iid(&t.structure, params.n, params.f, p_n, p_l)?;
                (r, "exact-iid")
            }
            ExactMethod::NodeOnly => (node_only_reliability(&t.structure, &params)?, "node-only"),
        };
        warn_outside_regime(&t.name, &r);
        table.push(vec![
            t.name.into(),
            params.n.into(),
            params.f.into(),
            label.into(),
            r.p_c.into(),
            r.p_f.into(),
        ]);
    }
    Ok(table)
}

fn approx(a: &ApproxArgs) -> CliResult<Table> {
    let mut table = Table::new(&["protocol", "n", "f", "method", "p_c", "p_f", "clamped"]);
    for t in a.cluster.targets()? {
        let params = a.cluster.cluster(&t)?;
        let (n, f) = (params.n, params.f);
        let (label, p_f, clamped) = match a.method {
            ApproxMethod::Joint => {
                let r = joint_reliability(&t.structure, &params)?;
                ("joint", r.p_f, r.clamped)
            }
            ApproxMethod::PowerSeries => {
                let jf = joint_vector(&t.structure, &params)?;
                let s = power_series_failure(&jf, n, f, a.t_max.unwrap_or(n))?;
                ("power-series", s.p_f, s.clamped)
            }
            ApproxMethod::Tree => {
                let r = tree_decomposed_failure(&t.structure, &params)?;
                warn_outside_regime(&t.name, &r);
                ("tree", r.p_f, r.clamped)
            }
            ApproxMethod::IidFirstOrder => {
                let p_jfr = match a.p_jfr {
                    Some(p) => p,
                    None => {
                        let (p_n, p_l) = iid_of(&params)?;
                        overall_joint_failure_rate_iid(&t.structure, n, f, p_n, p_l)?.value
                    }
                };
                let raw = binomial(n, f + 1) * p_jfr.powi(f as i32 + 1);
                ("iid-first-order", iid_first_order_failure(n, f, p_jfr), raw > 1.0)
            }
        };
        table.push(vec![
            t.name.into(),
            n.into(),
            f.into(),
            label.into(),
            (1.0 - p_f).into(),
            p_f.into(),
            clamped.into(),
        ]);
    }
    Ok(table)
}

fn gains(a: &GainsArgs) -> CliResult<Table> {
    let mut table = Table::new(&[
        "kind",
        "family",
        "n_form",
        "n",
        "f",
        "p_jfr",
        "slope",
        "intercept",
        "delta_f",
        "offset",
        "log10_pf",
        "log10_pf_without_delta",
    ]);
    let only: Option<Family> = a.family.as_deref().map(str::parse).transpose()?;
    let c = &a.cluster;
    let n = c.n.ok_or_else(|| CliError::usage("--n is required"))?;
    let target = match (&c.protocol, &c.protocol_file) {
        (None, None) => None,
        _ => {
            let mut ts = c.targets()?;
            if ts.len() != 1 {
                return Err(CliError::usage("gains takes a single protocol"));
            }
            ts.pop()
        }
    };
    let family = only.or(target.as_ref().and_then(|t| t.family));
    let f = match (c.f, family) {
        (Some(f), _) => f,
        (None, Some(fam)) => fam.default_f(n),
        (None, None) => return Err(CliError::usage("--f is required")),
    };
    let p_jfr = match (a.p_jfr, &target) {
        (Some(p), _) => Some(p),
        (None, Some(t)) => {
            let (p_n, p_l) = c.iid_probs()?.ok_or_else(|| {
                CliError::usage("give --p-jfr or node and link probabilities")
            })?;
            Some(overall_joint_failure_rate_iid(&t.structure, n, f, p_n, p_l)?.value)
        }
        (None, None) => None,
    };
    let rel = reliability_gain(n, f)?;
    let predicted = p_jfr.map(|p| rel.predict(p.log10()));
    table.push(vec![
        "reliability".into(),
        Cell::Empty,
        Cell::Empty,
        n.into(),
        f.into(),
        p_jfr.into(),
        rel.slope.into(),
        rel.intercept.into(),
        rel.delta_f.into(),
        rel.offset.into(),
        predicted.into(),
        predicted.into(),
    ]);
    let families = match family {
        Some(fam) => vec![fam],
        None => vec![Family::Cft, Family::Bft],
    };
    for fam in families {
        let Some(form) = NForm::classify(fam, n, f) else {
            if only.is_some() {
                return Err(Error::InvalidCase(format!(
                    "n = {n}, f = {f} is not a tolerance case for {fam:?}"
                ))
                .into());
            }
            continue;
        };
        let Some(p) = p_jfr else {
            continue;
        };
        let g = tolerance_gain(fam, form, f, p)?;
        table.push(vec![
            "tolerance".into(),
            family_name(fam).into(),
            form_name(form).into(),
            n.into(),
            f.into(),
            p.into(),
            g.slope.into(),
            g.intercept.into(),
            g.delta_f.into(),
            g.offset.into(),
            g.predicted_log_pf.into(),
            g.predicted_log_pf_without_delta.into(),
        ]);
    }
    Ok(table)
}

fn family_name(f: Family) -> &'static str {
    match f {
        Family::Cft => "cft",
        Family::Bft => "bft",
    }
}

fn form_name(form: NForm) -> &'static str {
    match form {
        NForm::TwoF => "2f",
        NForm::TwoFPlusOne => "2f+1",
        NForm::ThreeF => "3f",
        NForm::ThreeFPlusOne => "3f+1",
        NForm::ThreeFPlusTwo => "3f+2",
    }
}

impl AttemptLatency {
    /// `(l_c, timeout)` in seconds.
    fn resolve(&self) -> CliResult<(f64, f64)> {
        let l_c = match (self.l_c, self.link_latency) {
            (Some(l), None) => l,
            (None, Some(link)) => 2.0 * link,
            _ => return Err(CliError::usage("give exactly one of --l-c and --link-latency")),
        };
        Ok((l_c, self.timeout.unwrap_or(l_c)))
    }
}

fn latency(a: &LatencyArgs) -> CliResult<Table> {
    let (l_c, timeout) = a.attempt.resolve()?;
    let mut table = Table::new(&[
        "l_c",
        "timeout",
        "p_f",
        "arrival_rate",
        "utilization",
        "e_transmission",
        "e_queuing",
        "e_serve",
        "var_serve",
        "total",
    ]);
    for &rate in &a.arrival.0 {
        for &p_f in &a.pf.0 {
            let params = LatencyParams {
                l_timeout: timeout,
                ..LatencyParams::new(l_c, p_f, rate)
            };
            let r = queuing_latency(&params)?;
            table.push(vec![
                l_c.into(),
                timeout.into(),
                p_f.into(),
                rate.into(),
                r.utilization.into(),
                r.e_transmission.into(),
                r.e_queuing.into(),
                r.e_serve.into(),
                r.var_serve.into(),
                r.total().into(),
            ]);
        }
    }
    Ok(table)
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum PerNode {
    One(f64),
    Each(Vec<f64>),
}

impl PerNode {
    fn expand(&self, n: usize) -> Vec<f64> {
        match self {
            PerNode::One(v) => vec![*v; n],
            PerNode::Each(v) => v.clone(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    n: usize,
    f: usize,
    gamma_th_db: f64,
    p_noise_w: PerNode,
    gain_db: PerNode,
    p_total_w: f64,
}

impl ScenarioFile {
    fn scenario(&self) -> WirelessScenario {
        WirelessScenario {
            n: self.n,
            f: self.f,
            gamma_th: db_to_linear(self.gamma_th_db),
            p_noise: self.p_noise_w.expand(self.n),
            gain: self.gain_db.expand(self.n).into_iter().map(db_to_linear).collect(),
            p_total: self.p_total_w,
        }
    }
}

fn optimize(a: &OptimizeArgs, seed: u64) -> CliResult<Table> {
    let file: ScenarioFile = serde_json::from_str(&read_input(&a.scenario)?)
        .map_err(|e| Error::Parse(format!("{}: {e}", a.scenario.display())))?;
    let base = file.scenario();
    let budgets = a.p_total.as_ref().map_or(vec![base.p_total], |g| g.0.clone());
    let mut table = Table::new(&[
        "allocation",
        "p_total",
        "node",
        "p_tr",
        "loss",
        "joint_failure",
        "p_f",
    ]);
    let mut push = |label: &str, s: &WirelessScenario, alloc: &PowerAllocation| {
        for i in 0..s.n {
            table.push(vec![
                label.into(),
                s.p_total.into(),
                i.into(),
                alloc.p_tr[i].into(),
                alloc.loss[i].into(),
                alloc.joint_failure[i].into(),
                alloc.p_f.into(),
            ]);
        }
    };
    for p_total in budgets {
        let s = WirelessScenario {
            p_total,
            ..base.clone()
        };
        let equal = equal_split_allocation(&s)?;
        let best = optimize_power_seeded(&s, seed)?;
        push("equal", &s, &equal);
        push("optimized", &s, &best);
    }
    Ok(table)
}

fn simulate_consensus(a: &SimConsensusArgs, seed: u64) -> CliResult<Table> {
    let mut table = Table::new(&[
        "protocol",
        "n",
        "f",
        "trials",
        "successes",
        "p_c",
        "p_f",
        "std_err",
    ]);
    for t in a.cluster.targets()? {
        let params = a.cluster.cluster(&t)?;
        let est = simulate_consensus_trials(&t.structure, &params, a.trials, seed)?;
        table.push(vec![
            t.name.into(),
            params.n.into(),
            params.f.into(),
            est.trials.into(),
            est.successes.into(),
            est.p_c.into(),
            est.p_f().into(),
            est.std_err.into(),
        ]);
    }
    Ok(table)
}

fn simulate_latency(a: &SimLatencyArgs, seed: u64, format: Format) -> CliResult<String> {
    let (l_c, l_timeout) = a.attempt.resolve()?;
    let source = match a.pf {
        Some(p) => FailureSource::Fixed(p),
        None => {
            let mut ts = a.cluster.targets()?;
            if ts.len() != 1 {
                return Err(CliError::usage("simulate latency takes a single protocol"));
            }
            let t = ts.pop().expect("one target");
            let params = a.cluster.cluster(&t)?;
            validate_structure(&t.structure, params.n, params.f)?;
            FailureSource::Consensus {
                structure: t.structure,
                params,
            }
        }
    };
    let horizon = match (a.instances, a.duration) {
        (Some(k), None) => Horizon::Instances(k),
        (None, Some(d)) => Horizon::Duration(d),
        _ => return Err(CliError::usage("give exactly one of --instances and --duration")),
    };
    let cfg = SimConfig {
        arrival_rate: a.arrival,
        horizon,
        l_c,
        l_timeout,
        source,
        seed,
    };
    let trace = simulate_raft_latency(&cfg)?;
    match format {
        Format::Csv => Ok(trace.to_csv()),
        Format::Json => {
            let summary = summarize_trace(&trace)?;
            let value = serde_json::json!({ "summary": summary, "records": trace.records });
            let mut s = serde_json::to_string_pretty(&value).expect("trace serializes");
            s.push('\n');
            Ok(s)
        }
    }
}

fn sweep(a: &SweepArgs) -> CliResult<Table> {
    let protocol = a.protocol_file.is_none().then_some(a.protocol.as_str());
    let targets = targets(protocol, a.protocol_file.as_deref())?;
    let ns: Vec<usize> = a
        .n
        .0
        .iter()
        .map(|&v| {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(CliError::usage(format!("--n value {v} is not a positive integer")))
            }
        })
        .collect::<CliResult<_>>()?;
    let grid_success = |label: &str, s: &Option<Grid>, q: &Option<Grid>| -> CliResult<Vec<f64>> {
        match (s, q) {
            (Some(g), None) => Ok(g.0.clone()),
            (None, Some(g)) => Ok(g.0.iter().map(|q| 1.0 - q).collect()),
            _ => Err(CliError::usage(format!(
                "give exactly one of --{label} and --{label}-fail"
            ))),
        }
    };
    let p_nodes = grid_success("p-node", &a.p_node, &a.p_node_fail)?;
    let p_links = grid_success("p-link", &a.p_link, &a.p_link_fail)?;

    let mut points = Vec::new();
    for (ti, t) in targets.iter().enumerate() {
        for &n in &ns {
            let f = resolve_f(a.f, t.family, n)?;
            for &p_n in &p_nodes {
                for &p_l in &p_links {
                    points.push((ti, n, f, p_n, p_l));
                }
            }
        }
    }
    let rows: Vec<Vec<Cell>> = points
        .par_iter()
        .map(|&(ti, n, f, p_n, p_l)| {
            let t = &targets[ti];
            let exact = exact_reliability_iid(&t.structure, n, f, p_n, p_l)?;
            let params = ClusterParams::iid(n, f, p_n, p_l);
            let tree = tree_decomposed_failure(&t.structure, &params)?;
            let p_jfr = overall_joint_failure_rate_iid(&t.structure, n, f, p_n, p_l)?.value;
            Ok(vec![
                t.name.clone().into(),
                n.into(),
                f.into(),
                (1.0 - p_n).into(),
                (1.0 - p_l).into(),
                p_jfr.into(),
                exact.p_f.into(),
                tree.p_f.into(),
                iid_first_order_failure(n, f, p_jfr).into(),
            ])
        })
        .collect::<Result<_, Error>>()?;
    let mut table = Table::new(&[
        "protocol",
        "n",
        "f",
        "p_node_fail",
        "p_link_fail",
        "p_jfr",
        "exact",
        "tree_approx",
        "iid_first_order",
    ]);
    for row in rows {
        table.push(row);
    }
    Ok(table)
}
