//! Scenario files, artifact headers, and the small spec grammars shared
//! by the subcommands (domain specs, potential specs, mode specs).

use anyhow::{anyhow, bail, Context, Result};
use isospec_core::catalog::{eight_graph_mode, three_branch_mode, torus_mode, EightTag, ThreeBranchTag};
use isospec_core::domain::{
    build_graph, discretize_nodes, eight_graph, three_branch_graph, BoundaryKind, Edge, Grid,
    MetricDomain, Vertex,
};
use isospec_core::funcspace::{TrigExpression, WaveFunction};
use isospec_core::isomod::{construct_circle_example, RhoInput};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::Arc;

/// Tool version baked into every artifact header.
pub fn tool_version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

/// FNV-1a 64-bit hash of the canonical scenario bytes, hex-encoded.
pub fn scenario_hash(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}

/// Header line for CSV artifacts.
pub fn csv_header(hash: &str, seed: u64) -> String {
    format!("# isospec {} scenario={} seed={}", tool_version(), hash, seed)
}

/// Header object embedded in JSON artifacts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArtifactHeader {
    /// Tool version.
    pub tool_version: String,
    /// Hash of the canonical scenario (or flag) description.
    pub scenario_hash: String,
    /// RNG seed in effect (0 when no randomness is involved).
    pub seed: u64,
}

impl ArtifactHeader {
    pub fn new(hash: &str, seed: u64) -> Self {
        ArtifactHeader {
            tool_version: tool_version().to_string(),
            scenario_hash: hash.to_string(),
            seed,
        }
    }
}

// ---------------------------------------------------------------------
// Scenario files
// ---------------------------------------------------------------------

/// A declarative experiment description; round-trips byte-identically
/// through [`parse_scenario`] / [`emit_scenario`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Domain spec: `eight`, `three-branch`, `circle:LENGTH`, or a graph
    /// JSON path.
    pub domain: String,
    /// Potential spec: `none`, `remark38:j=N`, or trig text.
    pub potential: Option<String>,
    /// Generator preset: `eight` or `circle`.
    pub generators: String,
    /// The experiment to run.
    pub experiment: Experiment,
    /// Report output path (overridable with `--out`).
    pub out: String,
    /// RNG seed recorded in artifacts.
    pub seed: u64,
}

/// Experiment kind and parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum Experiment {
    /// Realize `e^{iφ}ψ₀` from a certificate and compare to the exact
    /// phase action.
    #[serde(rename = "phase")]
    Phase {
        /// Initial state mode spec.
        psi0: String,
        /// Certificate target spec (grammar of `saturate --target`).
        target: String,
        /// Synthesis knobs.
        #[serde(flatten)]
        params: ScenarioParams,
    },
    /// Steer one eigenstate toward another through the certified basis.
    #[serde(rename = "transition")]
    Transition {
        /// Source mode spec.
        source: String,
        /// Destination mode spec.
        dest: String,
        /// Phase basis spec: `circle:K` or `eight-waves:K`.
        basis: String,
        /// Minimum fidelity; below it the run exits with code 3.
        threshold: f64,
        /// Synthesis knobs.
        #[serde(flatten)]
        params: ScenarioParams,
    },
}

/// Synthesis and discretization knobs carried by a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioParams {
    /// Pulse duration δ.
    pub delta: f64,
    /// Conjugation free-flight time γ.
    pub gamma: f64,
    /// Halve (δ, γ) per recursion depth.
    pub halve_per_level: bool,
    /// Symmetric (error-cancelling) conjugation.
    pub symmetric_conjugation: bool,
    /// Combo amplitude cap above which pulses become exact phases.
    pub max_pulse_amplitude: f64,
    /// Grid nodes per edge.
    pub nodes: usize,
    /// Eigenbasis size for the propagator.
    pub modes: usize,
}

impl ScenarioParams {
    /// The synthesis-knob subset.
    pub fn synth(&self) -> isospec_core::synth::SynthesisParams {
        isospec_core::synth::SynthesisParams {
            delta: self.delta,
            gamma: self.gamma,
            halve_per_level: self.halve_per_level,
            symmetric_conjugation: self.symmetric_conjugation,
            max_pulse_amplitude: self.max_pulse_amplitude,
        }
    }
}

/// Parse and validate a scenario file.
pub fn parse_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading scenario {}", path.display()))?;
    let sc: Scenario = serde_json::from_str(&text).map_err(|e| {
        anyhow!("{}:{}:{}: {}", path.display(), e.line(), e.column(), e)
    })?;
    // Validate the embedded specs eagerly so errors carry the file name.
    parse_domain(&sc.domain).with_context(|| format!("{}: domain", path.display()))?;
    Ok(sc)
}

/// Canonical scenario emission (the byte form golden files are kept in).
pub fn emit_scenario(sc: &Scenario) -> String {
    let mut s = serde_json::to_string_pretty(sc).expect("scenario serializes");
    s.push('\n');
    s
}

// ---------------------------------------------------------------------
// Domain specs
// ---------------------------------------------------------------------

/// On-disk graph description.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    edges: Vec<GraphFileEdge>,
    vertices: Vec<GraphFileVertex>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFileEdge {
    id: usize,
    length: f64,
    from: usize,
    to: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFileVertex {
    id: usize,
    bc: String,
}

/// Parse `eight | three-branch | circle:LENGTH | path.json`.
pub fn parse_domain(spec: &str) -> Result<MetricDomain> {
    match spec {
        "eight" => return Ok(eight_graph()),
        "three-branch" => return Ok(three_branch_graph()),
        _ => {}
    }
    if let Some(len) = spec.strip_prefix("circle:") {
        let length: f64 = len.parse().context("circle length")?;
        if length <= 0.0 {
            bail!("circle length must be positive, got {length}");
        }
        return Ok(MetricDomain::Circle { length });
    }
    if spec.ends_with(".json") {
        let text = std::fs::read_to_string(spec)
            .with_context(|| format!("reading graph file {spec}"))?;
        let gf: GraphFile =
            serde_json::from_str(&text).with_context(|| format!("parsing graph file {spec}"))?;
        let edges: Vec<Edge> = gf
            .edges
            .iter()
            .map(|e| Edge { id: e.id, length: e.length, from: e.from, to: e.to })
            .collect();
        let mut vertices = Vec::new();
        for v in &gf.vertices {
            let condition = match v.bc.as_str() {
                "dirichlet" => BoundaryKind::Dirichlet,
                "kirchhoff" => BoundaryKind::NeumannKirchhoff,
                other => bail!("unknown boundary condition {other:?} (want dirichlet|kirchhoff)"),
            };
            vertices.push(Vertex { id: v.id, incident: Vec::new(), condition });
        }
        return Ok(build_graph(edges, vertices)?);
    }
    bail!("unknown domain {spec:?} (want eight | three-branch | circle:LENGTH | graph.json)")
}

// ---------------------------------------------------------------------
// Potential specs
// ---------------------------------------------------------------------

/// A parsed potential: exact trig text or the Remark-3.8 construction.
pub enum PotentialSpec {
    /// Edgewise trigonometric sum.
    Trig(TrigExpression),
    /// `V = ρ″/ρ − C²j²/ρ⁴` for `ρ = cos x + 2` (circle only).
    Remark38 {
        /// Winding index j ≥ 1.
        j: u32,
    },
}

/// Parse `none | remark38:j=N | <trig text>`; `None` means no potential.
pub fn parse_potential(spec: Option<&str>, num_edges: usize) -> Result<Option<PotentialSpec>> {
    let Some(spec) = spec else { return Ok(None) };
    if spec == "none" || spec.is_empty() {
        return Ok(None);
    }
    if let Some(rest) = spec.strip_prefix("remark38:j=") {
        let j: u32 = rest.parse().context("remark38 winding index")?;
        if j == 0 {
            bail!("remark38 winding index must be ≥ 1");
        }
        return Ok(Some(PotentialSpec::Remark38 { j }));
    }
    Ok(Some(PotentialSpec::Trig(parse_trig(spec, num_edges)?)))
}

/// Realize a potential on a grid.
pub fn potential_on_grid(
    spec: &PotentialSpec,
    domain: &MetricDomain,
    grid: &Arc<Grid>,
) -> Result<isospec_core::funcspace::RealFunction> {
    match spec {
        PotentialSpec::Trig(e) => {
            if e.num_edges() != grid.edges.len() {
                bail!(
                    "potential has {} edge blocks, domain has {}",
                    e.num_edges(),
                    grid.edges.len()
                );
            }
            Ok(e.evaluate(grid))
        }
        PotentialSpec::Remark38 { j } => {
            if !matches!(domain, MetricDomain::Circle { .. }) {
                bail!("remark38 potentials are defined on the circle only");
            }
            let mut rho = TrigExpression::constant(2.0, 1);
            rho = rho.add(&TrigExpression::cos(1, 0, 2, 1.0));
            let ex = construct_circle_example(grid, RhoInput::Expr(&rho), *j)?;
            Ok(ex.v)
        }
    }
}

/// Parse edgewise trig text: edges separated by `;`, each edge a sum of
/// terms `C`, `C*cos(Wx)`, `C*sin(Wx)` (also bare `cos(Wx)`/`sin(Wx)`),
/// with `W` a positive multiple of ½ (`x` alone means `W = 1`).
pub fn parse_trig(text: &str, num_edges: usize) -> Result<TrigExpression> {
    let chunks: Vec<&str> = text.split(';').collect();
    if chunks.len() != num_edges {
        bail!("potential text has {} edge blocks, expected {num_edges}", chunks.len());
    }
    let mut out = TrigExpression::zero(num_edges);
    for (e, chunk) in chunks.iter().enumerate() {
        for (coef, rest) in split_terms(chunk)? {
            let term = parse_term(coef, &rest, e, num_edges)
                .with_context(|| format!("in term {rest:?}"))?;
            out = out.add(&term);
        }
    }
    Ok(out)
}

/// Split `a - 2*cos(x) + sin(0.5x)` into signed term strings.
fn split_terms(chunk: &str) -> Result<Vec<(f64, String)>> {
    let compact: String = chunk.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() {
        return Ok(Vec::new());
    }
    let mut terms = Vec::new();
    let mut sign = 1.0;
    let mut cur = String::new();
    let mut depth = 0usize;
    for (i, c) in compact.chars().enumerate() {
        match c {
            '(' => {
                depth += 1;
                cur.push(c);
            }
            ')' => {
                depth = depth.checked_sub(1).ok_or_else(|| anyhow!("unbalanced parentheses"))?;
                cur.push(c);
            }
            '+' | '-' if depth == 0 && i > 0 && !cur.is_empty() => {
                terms.push((sign, std::mem::take(&mut cur)));
                sign = if c == '+' { 1.0 } else { -1.0 };
            }
            '-' if depth == 0 && cur.is_empty() => sign = -sign,
            '+' if depth == 0 && cur.is_empty() => {}
            _ => cur.push(c),
        }
    }
    if depth != 0 {
        bail!("unbalanced parentheses in {chunk:?}");
    }
    if !cur.is_empty() {
        terms.push((sign, cur));
    }
    Ok(terms)
}

fn parse_term(sign: f64, term: &str, edge: usize, num_edges: usize) -> Result<TrigExpression> {
    // Optional leading coefficient, optional '*', then cos(...)/sin(...)
    let (coef, fun) = match term.find(|c| c == 'c' || c == 's') {
        Some(0) => (1.0, term),
        Some(pos) => {
            let head = term[..pos].trim_end_matches('*');
            (head.parse::<f64>().context("coefficient")?, &term[pos..])
        }
        None => {
            // pure constant
            let c: f64 = term.parse().context("constant term")?;
            return Ok(TrigExpression::constant(sign * c, num_edges));
        }
    };
    let (kind, arg) = if let Some(a) = fun.strip_prefix("cos(").and_then(|s| s.strip_suffix(')')) {
        ('c', a)
    } else if let Some(a) = fun.strip_prefix("sin(").and_then(|s| s.strip_suffix(')')) {
        ('s', a)
    } else {
        bail!("expected cos(...) or sin(...), got {fun:?}");
    };
    let wtext = arg.strip_suffix('x').ok_or_else(|| anyhow!("argument must end in x"))?;
    let w: f64 = if wtext.is_empty() { 1.0 } else { wtext.trim_end_matches('*').parse()? };
    let halves = (w * 2.0).round();
    if halves <= 0.0 || (w * 2.0 - halves).abs() > 1e-12 {
        bail!("frequency {w} is not a positive multiple of 1/2");
    }
    Ok(match kind {
        'c' => TrigExpression::cos(num_edges, edge, halves as i64, sign * coef),
        _ => TrigExpression::sin(num_edges, edge, halves as i64, sign * coef),
    })
}

// ---------------------------------------------------------------------
// Mode specs
// ---------------------------------------------------------------------

/// Build a normalized initial/target state from a mode spec:
/// `constant`, `eta:K`, `eight:ground|odd:K|even:K:J`,
/// `three:ground|level:K:J`, `torus:N:S`, `circle:cos:K|sin:K`.
pub fn parse_mode_spec(spec: &str, domain: &MetricDomain, grid: &Arc<Grid>) -> Result<WaveFunction> {
    let parts: Vec<&str> = spec.split(':').collect();
    let wf = match parts.as_slice() {
        ["constant"] => {
            let mut w = WaveFunction::from_fn(grid, |_, _| Complex64::new(1.0, 0.0));
            w.normalize();
            w
        }
        ["eta", k] => {
            let k: f64 = k.parse().context("eta frequency")?;
            let mut w = WaveFunction::from_fn(grid, move |_, x| Complex64::from_polar(1.0, k * x));
            w.normalize();
            w
        }
        ["eight", rest @ ..] => {
            let tag = parse_eight_tag(rest)?;
            eight_graph_mode(tag).to_wavefunction(grid)
        }
        ["three", "ground"] => three_branch_mode(ThreeBranchTag::Ground).to_wavefunction(grid),
        ["three", "level", k, j] => {
            three_branch_mode(ThreeBranchTag::Level(k.parse()?, j.parse()?)).to_wavefunction(grid)
        }
        ["torus", n, s] => {
            let n: i64 = n.parse()?;
            let s: i8 = s.parse()?;
            torus_mode(1, &[n], &[s]).to_wavefunction(grid)
        }
        ["circle", kind @ ("cos" | "sin"), k] => {
            let k: f64 = k.parse()?;
            let cosine = *kind == "cos";
            let nrm = 1.0 / std::f64::consts::PI.sqrt();
            let mut w = WaveFunction::from_fn(grid, move |_, x| {
                Complex64::new(if cosine { nrm * (k * x).cos() } else { nrm * (k * x).sin() }, 0.0)
            });
            w.normalize();
            w
        }
        _ => bail!("unknown mode spec {spec:?}"),
    };
    // Graph modes require the matching domain.
    let expect = grid.edges.len();
    if matches!(domain, MetricDomain::Graph { .. }) && wf.data.len() != expect {
        bail!("mode spec {spec:?} does not match the domain");
    }
    Ok(wf)
}

/// Parse the tail of an `eight:...` mode spec.
pub fn parse_eight_tag(rest: &[&str]) -> Result<EightTag> {
    Ok(match rest {
        ["ground"] => EightTag::Ground,
        ["odd", k] => EightTag::Odd(k.parse()?),
        ["even", k, j] => EightTag::Even(k.parse()?, j.parse()?),
        _ => bail!("unknown eight-graph tag {rest:?}"),
    })
}

/// Shared grid constructor with validation.
pub fn make_grid(domain: &MetricDomain, nodes: usize) -> Result<Arc<Grid>> {
    Ok(Arc::new(discretize_nodes(domain, nodes)?))
}
