//! Batch experiment runner behind the `qsmp` binary: parses a JSON
//! config naming one experiment, executes it deterministically from a
//! master seed, and renders a JSON report.
//!
//! Reports are byte-identical for identical (config, seed) pairs, so
//! nothing time- or host-dependent goes into them; wall-clock timing
//! is the caller's to print. Every trial draws from its own counter
//! stream `(experiment domain, trial index)`, so trial order and
//! parallelism cannot perturb results.

use std::fs;

use anyhow::{bail, Context, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use qsmp_core::bits::BitString;
use qsmp_core::discrimination::{check_lemma_bound, random_instance, LEMMA_CSV_HEADER};
use qsmp_core::f_protocol::{exact_accept_probability, f_sampling_protocol};
use qsmp_core::mhm::{mhm_entangled_protocol, sample_transcripts};
use qsmp_core::problems::{
    edge_disjoint_matchings, sample_f_hard_x, sample_uniform_d1, subm_dims, FCoordinate,
    FInstance, MhmInstance,
};
use qsmp_core::protocol::enumerate::{subm_finite_problem, ENUMERATION_GUARD_LOG2};
use qsmp_core::protocol::best_deterministic_smp;
use qsmp_core::quantum::{epr_state, teleport_qubit, Register, StateVector};
use qsmp_core::rng::stream_rng;
use qsmp_core::yao::{compile_to_qsmp, discretize_message, equality_demo_protocol, precision_bits};

/// The experiments the binary can run, in listing order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    MhmExact,
    MhmSampled,
    YaoCompile,
    Gen2Discretize,
    TeleportCheck,
    FProtocol,
    LemmaKSweep,
    FactYEnumerate,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::MhmExact,
        Experiment::MhmSampled,
        Experiment::YaoCompile,
        Experiment::Gen2Discretize,
        Experiment::TeleportCheck,
        Experiment::FProtocol,
        Experiment::LemmaKSweep,
        Experiment::FactYEnumerate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::MhmExact => "mhm_exact",
            Experiment::MhmSampled => "mhm_sampled",
            Experiment::YaoCompile => "yao_compile",
            Experiment::Gen2Discretize => "gen2_discretize",
            Experiment::TeleportCheck => "teleport_check",
            Experiment::FProtocol => "f_protocol",
            Experiment::LemmaKSweep => "lemma_k_sweep",
            Experiment::FactYEnumerate => "fact_y_enumerate",
        }
    }

    /// What a passing run certifies, echoed verbatim in the report.
    pub fn claim(self) -> &'static str {
        match self {
            Experiment::MhmExact => {
                "the entangled matching protocol assigns probability 2/n to every valid \
                 triple and no mass to anything else"
            }
            Experiment::MhmSampled => {
                "every sampled transcript decodes to an answer bit equal to the joint \
                 string's parity across the named edge"
            }
            Experiment::YaoCompile => {
                "the compiled fingerprint protocol decides every input correctly with \
                 probability at least 1 - delta"
            }
            Experiment::Gen2Discretize => {
                "replacing the message state by its rounded classical description moves \
                 no complete-measurement outcome probability by more than epsilon"
            }
            Experiment::TeleportCheck => {
                "one qubit crosses a classical channel at fidelity one for exactly two \
                 classical bits"
            }
            Experiment::FProtocol => {
                "the drawn-index sampler never accepts a negative instance and accepts \
                 positives with probability at least 1 - 2^-t"
            }
            Experiment::LemmaKSweep => {
                "conclusive zero-error parity discrimination lies between ab and 4ab on \
                 every sampled instance"
            }
            Experiment::FactYEnumerate => {
                "the exhaustive deterministic search's witness replays to its reported \
                 success mass, which is monotone in the message budget"
            }
        }
    }

    // One counter-stream domain per experiment.
    fn domain(self) -> u64 {
        match self {
            Experiment::MhmExact => 0xE1,
            Experiment::MhmSampled => 0xE2,
            Experiment::YaoCompile => 0xE3,
            Experiment::Gen2Discretize => 0xE4,
            Experiment::TeleportCheck => 0xE5,
            Experiment::FProtocol => 0xE6,
            Experiment::LemmaKSweep => 0xE7,
            Experiment::FactYEnumerate => 0xE8,
        }
    }
}

/// One run request: the experiment, its parameters, the master seed,
/// and where the report goes. `parameters` omitted or null means the
/// experiment's defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
    #[serde(default)]
    pub parameters: Value,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Config> {
        serde_json::from_str(text).context("config does not match the expected schema")
    }
}

/// One named verdict inside a report.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, pass: bool, detail: String) -> Check {
        Check { name, pass, detail }
    }
}

/// The rendered result of one experiment. Serialization is stable:
/// fixed field order, sorted object keys inside `measured`.
#[derive(Debug, Serialize)]
pub struct Report {
    pub experiment: &'static str,
    pub claim: &'static str,
    pub seed: u64,
    pub parameters: Value,
    pub measured: Value,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl Report {
    fn assemble(
        experiment: Experiment,
        seed: u64,
        parameters: Value,
        measured: Value,
        checks: Vec<Check>,
    ) -> Report {
        let pass = checks.iter().all(|c| c.pass);
        Report {
            experiment: experiment.name(),
            claim: experiment.claim(),
            seed,
            parameters,
            measured,
            checks,
            pass,
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }
}

/// Runs the configured experiment. Any error is a configuration or
/// environment problem; failed checks are not errors but a report
/// with `pass: false`.
pub fn run(config: &Config) -> Result<Report> {
    let seed = config.seed;
    match config.experiment {
        Experiment::MhmExact => run_mhm_exact(seed, params(config)?),
        Experiment::MhmSampled => run_mhm_sampled(seed, params(config)?),
        Experiment::YaoCompile => run_yao_compile(seed, params(config)?),
        Experiment::Gen2Discretize => run_gen2_discretize(seed, params(config)?),
        Experiment::TeleportCheck => run_teleport_check(seed, params(config)?),
        Experiment::FProtocol => run_f_protocol(seed, params(config)?),
        Experiment::LemmaKSweep => run_lemma_k_sweep(seed, params(config)?),
        Experiment::FactYEnumerate => run_fact_y_enumerate(seed, params(config)?),
    }
}

fn params<P: Default + for<'de> Deserialize<'de>>(config: &Config) -> Result<P> {
    if config.parameters.is_null() {
        return Ok(P::default());
    }
    serde_json::from_value(config.parameters.clone()).with_context(|| {
        format!("invalid parameters for experiment `{}`", config.experiment.name())
    })
}

fn to_value<P: Serialize>(p: &P) -> Value {
    serde_json::to_value(p).expect("parameters serialize")
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct MhmExactParams {
    n: usize,
    trials_per_matching: u64,
}

impl Default for MhmExactParams {
    fn default() -> Self {
        MhmExactParams { n: 4, trials_per_matching: 100 }
    }
}

fn run_mhm_exact(seed: u64, p: MhmExactParams) -> Result<Report> {
    let protocol = mhm_entangled_protocol(p.n)?;
    let family = edge_disjoint_matchings(p.n)?;
    let want = 2.0 / p.n as f64;
    let mut worst_valid = 0.0f64;
    let mut worst_stray = 0.0f64;
    let mut runs = 0u64;
    for (mi, matching) in family.iter().enumerate() {
        for trial in 0..p.trials_per_matching {
            let index = mi as u64 * p.trials_per_matching + trial;
            let mut rng = stream_rng(seed, Experiment::MhmExact.domain(), index);
            let instance = MhmInstance::new(
                BitString::random(p.n, &mut rng),
                BitString::random(p.n, &mut rng),
                matching.clone(),
            )?;
            let (dist, _) = protocol.run_exact(&instance)?;
            let valid: Vec<String> =
                instance.valid_outputs().iter().map(|t| t.to_string()).collect();
            for label in &valid {
                worst_valid = worst_valid.max((dist.probability(label) - want).abs());
            }
            for (label, mass) in dist.iter() {
                if !valid.iter().any(|v| v == label) {
                    worst_stray = worst_stray.max(mass);
                }
            }
            runs += 1;
        }
    }
    let checks = vec![
        Check::new(
            "valid_triples_carry_two_over_n",
            worst_valid <= 1e-9,
            format!("worst deviation {worst_valid:.3e} over {runs} exact runs"),
        ),
        Check::new(
            "invalid_outputs_carry_no_mass",
            worst_stray <= 1e-12,
            format!("worst stray mass {worst_stray:.3e}"),
        ),
    ];
    let measured = json!({
        "n": p.n,
        "matchings": family.len(),
        "exact_runs": runs,
        "per_triple_probability": want,
        "worst_valid_deviation": worst_valid,
        "worst_invalid_mass": worst_stray,
    });
    Ok(Report::assemble(Experiment::MhmExact, seed, to_value(&p), measured, checks))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct MhmSampledParams {
    n: usize,
    instances: u64,
    trials_per_instance: usize,
}

impl Default for MhmSampledParams {
    fn default() -> Self {
        MhmSampledParams { n: 8, instances: 10, trials_per_instance: 1000 }
    }
}

fn run_mhm_sampled(seed: u64, p: MhmSampledParams) -> Result<Report> {
    let mut violations = 0u64;
    let mut total = 0u64;
    for i in 0..p.instances {
        let mut rng = stream_rng(seed, Experiment::MhmSampled.domain(), i);
        let instance = sample_uniform_d1(p.n, &mut rng)?;
        let transcripts = sample_transcripts(&instance, p.trials_per_instance, seed ^ i)?;
        for t in &transcripts {
            if !t.identity_holds(&instance)? {
                violations += 1;
            }
        }
        total += transcripts.len() as u64;
    }
    let checks = vec![Check::new(
        "transcript_identity_zero_violations",
        violations == 0,
        format!("{violations} violations in {total} transcripts"),
    )];
    let measured = json!({
        "n": p.n,
        "instances": p.instances,
        "transcripts": total,
        "violations": violations,
    });
    Ok(Report::assemble(Experiment::MhmSampled, seed, to_value(&p), measured, checks))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct YaoCompileParams {
    delta: f64,
}

impl Default for YaoCompileParams {
    fn default() -> Self {
        YaoCompileParams { delta: 0.1 }
    }
}

fn run_yao_compile(seed: u64, p: YaoCompileParams) -> Result<Report> {
    // The demonstration source decides two-bit equality with
    // worst-case advantage exactly 1/4.
    let source = equality_demo_protocol();
    let gamma = 0.25;
    let compiled = compile_to_qsmp(&source, gamma, p.delta)?;
    let s = source.message_bits();
    let tau_expected = 2f64.powf(-(s as f64) / 2.0 - 1.0);
    let k_expected =
        (16.0 * 4f64.powi(s as i32) * (2.0 / p.delta).ln() / (gamma * gamma)).ceil() as u64;
    let mut correctness = Vec::with_capacity(source.x_size());
    let mut min_correct = 1.0f64;
    for x in 0..source.x_size() {
        let mut row = Vec::with_capacity(source.y_size());
        for y in 0..source.y_size() {
            let accept = compiled.accept_probability(x, y)?;
            let correct = if x == y { accept } else { 1.0 - accept };
            min_correct = min_correct.min(correct);
            row.push(correct);
        }
        correctness.push(row);
    }
    let checks = vec![
        Check::new(
            "threshold_follows_the_message_width",
            compiled.tau() == tau_expected,
            format!("tau = {}", compiled.tau()),
        ),
        Check::new(
            "copy_count_follows_the_formula",
            compiled.k() == k_expected,
            format!("k = {}", compiled.k()),
        ),
        Check::new(
            "every_input_decided_correctly",
            min_correct >= 1.0 - p.delta,
            format!("worst per-input correctness {min_correct:.6}"),
        ),
    ];
    let measured = json!({
        "gamma": gamma,
        "delta": p.delta,
        "message_bits": s,
        "k": compiled.k(),
        "tau": compiled.tau(),
        "threshold_hits": compiled.threshold_hits(),
        "qubits_per_side": compiled.cost().alice_to_referee_qubits,
        "per_input_correctness": correctness,
        "min_correctness": min_correct,
    });
    Ok(Report::assemble(Experiment::YaoCompile, seed, to_value(&p), measured, checks))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct Gen2Params {
    states: u64,
    measurements_per_state: u64,
    epsilon: f64,
    max_qubits: usize,
}

impl Default for Gen2Params {
    fn default() -> Self {
        Gen2Params { states: 100, measurements_per_state: 100, epsilon: 0.01, max_qubits: 3 }
    }
}

fn run_gen2_discretize(seed: u64, p: Gen2Params) -> Result<Report> {
    if p.max_qubits == 0 {
        bail!("max_qubits must be positive");
    }
    let mut worst_shift = 0.0f64;
    let mut length_ok = true;
    let mut lengths = Vec::new();
    for trial in 0..p.states {
        let mut rng = stream_rng(seed, Experiment::Gen2Discretize.domain(), trial);
        let qubits = 1 + (trial as usize) % p.max_qubits;
        let state = StateVector::random(vec![Register::new("r", qubits)], &mut rng);
        let (description, reconstructed) = discretize_message(&state, p.epsilon)?;
        let t = precision_bits(qubits, p.epsilon)?;
        let expected_bits = (1usize << (qubits + 1)) * t;
        if description.len() != expected_bits {
            length_ok = false;
        }
        if trial < p.max_qubits as u64 {
            lengths.push(json!({ "qubits": qubits, "description_bits": expected_bits }));
        }
        for _ in 0..p.measurements_per_state {
            let family =
                qsmp_core::quantum::ProjectorFamily::random_rank_one("r", 1 << qubits, &mut rng)?;
            let (before, _) = qsmp_core::quantum::measure_projective(&state, &family)?;
            let (after, _) = qsmp_core::quantum::measure_projective(&reconstructed, &family)?;
            for (label, mass) in before.iter() {
                worst_shift = worst_shift.max((mass - after.probability(label)).abs());
            }
            for (label, mass) in after.iter() {
                worst_shift = worst_shift.max((mass - before.probability(label)).abs());
            }
        }
    }
    let checks = vec![
        Check::new(
            "description_length_follows_the_rule",
            length_ok,
            "two t-bit parts per amplitude".to_string(),
        ),
        Check::new(
            "outcome_shift_within_epsilon",
            worst_shift <= p.epsilon,
            format!("worst shift {worst_shift:.5}"),
        ),
    ];
    let measured = json!({
        "states": p.states,
        "measurements_per_state": p.measurements_per_state,
        "epsilon": p.epsilon,
        "description_lengths": lengths,
        "worst_outcome_shift": worst_shift,
    });
    Ok(Report::assemble(Experiment::Gen2Discretize, seed, to_value(&p), measured, checks))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct TeleportParams {
    states: u64,
}

impl Default for TeleportParams {
    fn default() -> Self {
        TeleportParams { states: 100 }
    }
}

fn run_teleport_check(seed: u64, p: TeleportParams) -> Result<Report> {
    let pair = epr_state(1)?;
    let mut worst_defect = 0.0f64;
    let mut bits_ok = true;
    for trial in 0..p.states {
        let mut rng = stream_rng(seed, Experiment::TeleportCheck.domain(), trial);
        let message = StateVector::random(vec![Register::new("m", 1)], &mut rng);
        let outcome = teleport_qubit(&message, &pair, &mut rng)?;
        worst_defect = worst_defect.max((outcome.state.fidelity(&message)? - 1.0).abs());
        if outcome.classical_bits.len() != 2 {
            bits_ok = false;
        }
    }
    let checks = vec![
        Check::new(
            "fidelity_is_one",
            worst_defect <= 1e-12,
            format!("worst fidelity defect {worst_defect:.3e}"),
        ),
        Check::new(
            "two_classical_bits_per_qubit",
            bits_ok,
            "every transcript carried exactly two bits".to_string(),
        ),
    ];
    let measured = json!({
        "states": p.states,
        "worst_fidelity_defect": worst_defect,
        "classical_bits_per_qubit": 2,
    });
    Ok(Report::assemble(Experiment::TeleportCheck, seed, to_value(&p), measured, checks))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct FProtocolParams {
    m_param: u64,
    t: usize,
    negatives: u64,
    positives: u64,
}

impl Default for FProtocolParams {
    fn default() -> Self {
        FProtocolParams { m_param: 16, t: 5, negatives: 3, positives: 3 }
    }
}

fn run_f_protocol(seed: u64, p: FProtocolParams) -> Result<Report> {
    let dims = subm_dims(p.m_param)?;
    let index_bits = p.m_param.trailing_zeros() as usize;
    // The exact coin need; the executor's hard ceiling still applies.
    let protocol = f_sampling_protocol(p.m_param, p.t, Some(p.t * index_bits))?;
    let message_bits = protocol.cost().alice_to_bob_bits;
    let loglog = (p.m_param as f64).log2().log2().ceil() as usize;

    let universe = 1usize << dims.string_len;
    if universe <= dims.list_len {
        bail!("no coordinate can miss a list covering the whole universe");
    }
    let mut worst_negative = 0.0f64;
    for trial in 0..p.negatives {
        let mut rng = stream_rng(seed, Experiment::FProtocol.domain(), 2 * trial);
        let pairs: Vec<FCoordinate> = (0..p.m_param)
            .map(|_| {
                // A random list, then a query drawn off the list.
                let mut slots: Vec<usize> = (0..universe).collect();
                for chosen in 0..dims.list_len {
                    let pick = chosen + rng.gen_range(0..slots.len() - chosen);
                    slots.swap(chosen, pick);
                }
                let b: Vec<BitString> = slots[..dims.list_len]
                    .iter()
                    .map(|&v| BitString::from_index(v, dims.string_len))
                    .collect();
                let off = slots[dims.list_len + rng.gen_range(0..universe - dims.list_len)];
                FCoordinate { a: BitString::from_index(off, dims.string_len), b }
            })
            .collect();
        let instance = FInstance::new(p.m_param, pairs)?;
        let (dist, _) = protocol.run_exact(&instance)?;
        worst_negative = worst_negative.max(dist.probability("1"));
        if exact_accept_probability(&instance, p.t)? != 0.0 {
            bail!("constructed negative instance has a satisfied coordinate");
        }
    }

    let mut worst_positive = 1.0f64;
    let mut accepted = 0u64;
    let mut counter = 1u64;
    while accepted < p.positives {
        let mut rng = stream_rng(seed, Experiment::FProtocol.domain(), 2 * counter + 1);
        counter += 1;
        if counter > 64 * (p.positives + 1) {
            bail!("positive rejection sampling failed to converge");
        }
        let instance = sample_f_hard_x(p.m_param, &mut rng)?;
        if instance.satisfied_count() as u64 != p.m_param {
            continue;
        }
        accepted += 1;
        let (dist, _) = protocol.run_exact(&instance)?;
        worst_positive = worst_positive.min(dist.probability("1"));
    }

    let floor = 1.0 - 2f64.powi(-(p.t as i32));
    let checks = vec![
        Check::new(
            "negatives_never_accepted",
            worst_negative == 0.0,
            format!("worst negative acceptance mass {worst_negative:.1e}"),
        ),
        Check::new(
            "positives_accepted_with_high_mass",
            worst_positive >= floor,
            format!("worst positive acceptance {worst_positive:.6}, floor {floor}"),
        ),
        Check::new(
            "message_cost_follows_the_rule",
            message_bits == p.t * loglog,
            format!("{message_bits} bits for {} draws", p.t),
        ),
    ];
    let measured = json!({
        "m_param": p.m_param,
        "t": p.t,
        "message_bits": message_bits,
        "coin_bits": protocol.coin_bits(),
        "negatives": p.negatives,
        "positives": p.positives,
        "worst_negative_mass": worst_negative,
        "worst_positive_mass": worst_positive,
        "positive_floor": floor,
    });
    Ok(Report::assemble(Experiment::FProtocol, seed, to_value(&p), measured, checks))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct LemmaSweepParams {
    instances: u64,
    dim_a: usize,
    dim_b: usize,
    csv_path: Option<String>,
}

impl Default for LemmaSweepParams {
    fn default() -> Self {
        LemmaSweepParams { instances: 50, dim_a: 2, dim_b: 2, csv_path: None }
    }
}

fn run_lemma_k_sweep(seed: u64, p: LemmaSweepParams) -> Result<Report> {
    if p.instances == 0 {
        bail!("the sweep needs at least one instance");
    }
    let mut rows = Vec::with_capacity(p.instances as usize);
    let mut csv = String::from(LEMMA_CSV_HEADER);
    csv.push('\n');
    let mut lower_violations = 0u64;
    let mut upper_violations = 0u64;
    let mut worst_ratio = 0.0f64;
    for i in 0..p.instances {
        let mut rng = stream_rng(seed, Experiment::LemmaKSweep.domain(), i);
        let instance = random_instance(p.dim_a, p.dim_b, &mut rng)?;
        let report = check_lemma_bound(&instance)?;
        if report.p_star < report.a * report.b - 1e-6 {
            lower_violations += 1;
        }
        if report.p_star > report.four_ab + 1e-6 {
            upper_violations += 1;
            if report.four_ab > 0.0 {
                worst_ratio = worst_ratio.max(report.p_star / report.four_ab);
            }
        }
        csv.push_str(&report.csv_row(i));
        csv.push('\n');
        rows.push(json!({
            "seed": i,
            "a": report.a,
            "b": report.b,
            "p_product": report.p_product,
            "p_star": report.p_star,
            "four_ab": report.four_ab,
            "pass": report.pass,
        }));
    }
    if let Some(path) = &p.csv_path {
        fs::write(path, &csv).with_context(|| format!("cannot write CSV to `{path}`"))?;
    }
    let checks = vec![
        Check::new(
            "lower_bound_ab_holds",
            lower_violations == 0,
            format!("{lower_violations}/{} instances below a*b - 1e-6", p.instances),
        ),
        Check::new(
            "upper_bound_four_ab_holds",
            upper_violations == 0,
            format!(
                "{upper_violations}/{} instances above 4ab + 1e-6 (worst p*/(4ab) = \
                 {worst_ratio:.3}); nearly parallel same-index pairs break this ceiling, \
                 see the README notes",
                p.instances
            ),
        ),
    ];
    let measured = json!({
        "instances": p.instances,
        "dim_a": p.dim_a,
        "dim_b": p.dim_b,
        "rows": rows,
        "lower_violations": lower_violations,
        "upper_violations": upper_violations,
        "worst_ratio": worst_ratio,
    });
    Ok(Report::assemble(Experiment::LemmaKSweep, seed, to_value(&p), measured, checks))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct FactYParams {
    m_param: u64,
    alice_bits: u32,
    bob_bits: u32,
}

impl Default for FactYParams {
    fn default() -> Self {
        FactYParams { m_param: 16, alice_bits: 1, bob_bits: 1 }
    }
}

fn run_fact_y_enumerate(seed: u64, p: FactYParams) -> Result<Report> {
    let (problem, weights) = subm_finite_problem(p.m_param)?;
    let search = best_deterministic_smp(&problem, &weights, p.alice_bits, p.bob_bits)?;
    let replay: u64 = (0..problem.x_size())
        .flat_map(|x| (0..problem.y_size()).map(move |y| (x, y)))
        .map(|(x, y)| {
            let output = search.referee_table[search.alice_table[x]][search.bob_table[y]];
            if problem.is_valid(x, y, output) {
                weights[x * problem.y_size() + y]
            } else {
                0
            }
        })
        .sum();

    // Widen Alice's budget while the enumeration guard admits it.
    let mut chain = vec![json!({ "alice_bits": p.alice_bits, "success_mass": search.success_mass })];
    let mut monotone = true;
    let mut previous = search.success_mass;
    for wider in p.alice_bits + 1..=p.alice_bits + 2 {
        let log2_size = wider as u64 * problem.x_size() as u64
            + p.bob_bits as u64 * problem.y_size() as u64;
        if log2_size > ENUMERATION_GUARD_LOG2 as u64 {
            break;
        }
        let result = best_deterministic_smp(&problem, &weights, wider, p.bob_bits)?;
        monotone &= previous <= result.success_mass;
        previous = result.success_mass;
        chain.push(json!({ "alice_bits": wider, "success_mass": result.success_mass }));
    }

    let checks = vec![
        Check::new(
            "witness_replays_to_reported_mass",
            replay == search.success_mass,
            format!("replayed {replay}, reported {}", search.success_mass),
        ),
        Check::new(
            "success_is_monotone_in_the_budget",
            monotone,
            format!("chain of {} budgets", chain.len()),
        ),
    ];
    let measured = json!({
        "m_param": p.m_param,
        "alice_bits": p.alice_bits,
        "bob_bits": p.bob_bits,
        "x_size": problem.x_size(),
        "y_size": problem.y_size(),
        "success_mass": search.success_mass,
        "total_mass": search.total_mass,
        "success_probability": search.success_probability(),
        "budget_chain": chain,
    });
    Ok(Report::assemble(Experiment::FactYEnumerate, seed, to_value(&p), measured, checks))
}
