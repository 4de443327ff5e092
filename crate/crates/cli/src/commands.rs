//! Subcommand implementations.

use crate::scenario::{
    csv_header, make_grid, parse_domain, parse_mode_spec, parse_potential,
    parse_scenario, potential_on_grid, scenario_hash, ArtifactHeader, Experiment, Scenario,
};
use anyhow::{anyhow, bail, Context, Result};
use isospec_core::catalog::{
    disk_mode, disk_real_modes, eight_graph_mode, hermite_mode, sphere_mode, three_branch_mode,
    torus_mode, CatalogEntry, EightTag, ThreeBranchTag,
};
use isospec_core::domain::MetricDomain;
use isospec_core::funcspace::{inner_product, RealFunction, WaveFunction};
use isospec_core::isomod::{scan_catalog_pairs, ModulusReport, Verdict, SCAN_SEED};
use isospec_core::propagator::PropagatorContext;
use isospec_core::saturation::{
    cert_validate, circle_generators, derive_circle, derive_eight_graph, derive_eight_wave,
    eight_generators, CertPair, CircleMode, EightWave, GeneratorSet, ValidationReport,
};
use isospec_core::spectral::{
    analytic_modes_to_pairs, circle_spectrum, eigen_residual, graph_spectrum_analytic,
    graph_spectrum_numeric, EigenPair,
};
use isospec_core::specfun::{bessel_j, bessel_zero, hermite_fn, legendre_p};
use isospec_core::synth::{run_schedule, run_transition_experiment, ControlSchedule, PhaseReport, TransitionReport};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// A run that completed but breached a monitored numerical invariant
/// (exit code 3, distinct from misuse/validation failures).
#[derive(Debug)]
pub struct NumericalFailure(pub String);

impl std::fmt::Display for NumericalFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "numerical acceptance failure: {}", self.0)
    }
}

impl std::error::Error for NumericalFailure {}

fn write_artifact(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// Hash over the effective flag set, so artifacts from plain-flag
/// invocations carry a stable scenario identifier too.
fn flags_hash(parts: &[&str]) -> String {
    scenario_hash(parts.join("\u{1f}").as_bytes())
}

// ---------------------------------------------------------------------
// spectrum
// ---------------------------------------------------------------------

pub fn cmd_spectrum(
    domain_spec: &str,
    potential_spec: Option<&str>,
    modes: usize,
    nodes: usize,
    method: Option<&str>,
    out: &Path,
    eigenfunctions: Option<&Path>,
) -> Result<()> {
    let domain = parse_domain(domain_spec)?;
    let grid = make_grid(&domain, nodes)?;
    let pot = parse_potential(potential_spec, grid.edges.len())?;
    let v = pot.as_ref().map(|p| potential_on_grid(p, &domain, &grid)).transpose()?;

    let method = match method {
        Some(m @ ("analytic" | "numeric")) => m,
        Some(other) => bail!("unknown method {other:?} (want analytic|numeric)"),
        None if v.is_none() => "analytic",
        None => "numeric",
    };
    if method == "analytic" && v.is_some() {
        bail!("the analytic path supports V = 0 only; use --method numeric");
    }

    let pairs: Vec<EigenPair> = match (&domain, method) {
        (MetricDomain::Circle { .. }, "analytic") | (MetricDomain::Circle { .. }, "numeric") => {
            circle_spectrum(v.as_ref(), &grid, modes)?
        }
        (MetricDomain::Graph { .. } | MetricDomain::Interval { .. }, "analytic") => {
            // Scan upward until enough modes appear.
            let mut lambda_max = (modes as f64 / 2.0).powi(2).max(4.0);
            let found = loop {
                let (_, m) = graph_spectrum_analytic(&domain, lambda_max)?;
                if m.len() >= modes {
                    break m;
                }
                lambda_max *= 2.0;
            };
            analytic_modes_to_pairs(&found[..modes], &grid)
        }
        (MetricDomain::Graph { .. } | MetricDomain::Interval { .. }, _) => {
            graph_spectrum_numeric(&domain, v.as_ref(), &grid, modes)?
        }
        _ => unreachable!(),
    };

    let hash = flags_hash(&[
        "spectrum",
        domain_spec,
        potential_spec.unwrap_or("none"),
        &modes.to_string(),
        &nodes.to_string(),
        method,
    ]);
    let mut csv = String::new();
    writeln!(csv, "{}", csv_header(&hash, 0))?;
    writeln!(csv, "index,lambda,cluster,residual")?;
    for (i, p) in pairs.iter().enumerate() {
        let r = eigen_residual(&p.phi, v.as_ref(), p.lambda);
        writeln!(csv, "{},{:.12e},{},{:.6e}", i, p.lambda, p.cluster, r)?;
    }
    write_artifact(out, &csv)?;

    if let Some(dir) = eigenfunctions {
        std::fs::create_dir_all(dir)?;
        for (i, p) in pairs.iter().enumerate() {
            let mut m = String::new();
            writeln!(m, "{}", csv_header(&hash, 0))?;
            writeln!(m, "edge,node,x,re,im")?;
            for (e, blk) in p.phi.data.iter().enumerate() {
                let h = grid.edges[e].h;
                for (j, z) in blk.iter().enumerate() {
                    writeln!(m, "{},{},{:.12e},{:.12e},{:.12e}", e, j, j as f64 * h, z.re, z.im)?;
                }
            }
            write_artifact(&dir.join(format!("mode_{i:03}.csv")), &m)?;
        }
    }
    println!("spectrum: {} modes -> {}", pairs.len(), out.display());
    Ok(())
}

// ---------------------------------------------------------------------
// catalog
// ---------------------------------------------------------------------

/// Parse `k=2,j=1`-style parameter lists.
fn parse_params(params: &str) -> Result<Vec<(String, String)>> {
    if params.trim().is_empty() {
        return Ok(Vec::new());
    }
    params
        .split(',')
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| anyhow!("expected key=value, got {kv:?}"))?;
            Ok((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

fn param<'a>(pairs: &'a [(String, String)], key: &str) -> Option<&'a str> {
    pairs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
}

/// Build one catalog entry from a family name and parameter list.
pub fn catalog_entry(family: &str, params: &str) -> Result<CatalogEntry> {
    let p = parse_params(params)?;
    let need = |key: &str| {
        param(&p, key)
            .ok_or_else(|| anyhow!("family {family:?} needs parameter {key}="))
    };
    Ok(match family {
        "eight" => {
            let tag = match (param(&p, "k"), param(&p, "j")) {
                (None, None) => EightTag::Ground,
                (Some(k), None) => EightTag::Odd(k.parse()?),
                (Some(k), Some(j)) => EightTag::Even(k.parse()?, j.parse()?),
                (None, Some(_)) => bail!("eight family with j= also needs k="),
            };
            eight_graph_mode(tag)
        }
        "three-branch" => match param(&p, "k") {
            None => three_branch_mode(ThreeBranchTag::Ground),
            Some(k) => {
                let j: usize = need("j")?.parse()?;
                three_branch_mode(ThreeBranchTag::Level(k.parse()?, j))
            }
        },
        "torus" => {
            let n: Vec<i64> = need("n")?
                .split(':')
                .map(|s| s.parse().context("torus n"))
                .collect::<Result<_>>()?;
            let s: Vec<i8> = need("s")?
                .split(':')
                .map(|s| s.parse().context("torus s"))
                .collect::<Result<_>>()?;
            if n.len() != s.len() || n.is_empty() {
                bail!("torus needs matching n= and s= lists (colon-separated)");
            }
            torus_mode(n.len(), &n, &s)
        }
        "sphere" => sphere_mode(need("l")?.parse()?, need("m")?.parse()?),
        "disk" => disk_mode(need("n")?.parse()?, need("k")?.parse()?, need("sign")?.parse()?),
        "disk-real" => {
            let (c, s) = disk_real_modes(need("n")?.parse()?, need("k")?.parse()?);
            if need("sine")?.parse::<u8>()? == 0 {
                c
            } else {
                s
            }
        }
        "hermite" => {
            let alpha: Vec<usize> = need("alpha")?
                .split(':')
                .map(|s| s.parse().context("hermite alpha"))
                .collect::<Result<_>>()?;
            hermite_mode(&alpha)
        }
        other => bail!("unknown family {other:?}"),
    })
}

pub fn cmd_catalog(family: &str, params: &str, grid: usize, out: &Path) -> Result<()> {
    let entry = catalog_entry(family, params)?;
    let (samples, weights) = entry.sample(grid);
    let hash = flags_hash(&["catalog", family, params, &grid.to_string()]);
    let mut csv = String::new();
    writeln!(csv, "{}", csv_header(&hash, 0))?;
    writeln!(csv, "# label={} lambda={:.12e} norm_const={:.12e}", entry.label, entry.lambda, entry.norm_const)?;
    writeln!(csv, "index,re,im,weight")?;
    for (i, (z, w)) in samples.iter().zip(&weights).enumerate() {
        writeln!(csv, "{},{:.12e},{:.12e},{:.12e}", i, z.re, z.im, w)?;
    }
    write_artifact(out, &csv)?;
    println!("catalog: {} ({} samples) -> {}", entry.label, samples.len(), out.display());
    Ok(())
}

// ---------------------------------------------------------------------
// isomod
// ---------------------------------------------------------------------

/// Inclusive `a..b` range.
fn parse_levels(levels: &str) -> Result<(usize, usize)> {
    let (a, b) = levels
        .split_once("..")
        .ok_or_else(|| anyhow!("expected levels a..b, got {levels:?}"))?;
    let a: usize = a.parse()?;
    let b: usize = b.parse()?;
    if b < a {
        bail!("empty level range {levels:?}");
    }
    Ok((a, b))
}

/// All catalog entries of a family across a level range.
pub fn family_entries(family: &str, lo: usize, hi: usize) -> Result<Vec<CatalogEntry>> {
    let mut entries = Vec::new();
    match family {
        "eight" => {
            for k in lo..=hi {
                if k == 0 {
                    entries.push(eight_graph_mode(EightTag::Ground));
                }
                entries.push(eight_graph_mode(EightTag::Odd(k)));
                if k >= 1 {
                    for j in 1..=3 {
                        entries.push(eight_graph_mode(EightTag::Even(k, j)));
                    }
                }
            }
        }
        "three-branch" => {
            for k in lo..=hi {
                if k == 0 {
                    entries.push(three_branch_mode(ThreeBranchTag::Ground));
                } else {
                    for j in 1..=3 {
                        entries.push(three_branch_mode(ThreeBranchTag::Level(k, j)));
                    }
                }
            }
        }
        "sphere" => {
            for l in lo..=hi {
                for m in -(l as i64)..=(l as i64) {
                    entries.push(sphere_mode(l, m));
                }
            }
        }
        "disk" => {
            for n in lo..=hi {
                for k in 1..=3 {
                    entries.push(disk_mode(n, k, 1));
                    if n > 0 {
                        entries.push(disk_mode(n, k, -1));
                    }
                }
            }
        }
        "hermite" => {
            for a in lo..=hi {
                entries.push(hermite_mode(&[a]));
            }
        }
        "torus" => {
            for n in lo..=hi {
                entries.push(torus_mode(1, &[n as i64], &[1]));
                if n > 0 {
                    entries.push(torus_mode(1, &[n as i64], &[-1]));
                }
            }
        }
        other => bail!("unknown family {other:?}"),
    }
    Ok(entries)
}

#[derive(Serialize)]
struct IsomodArtifact {
    header: ArtifactHeader,
    family: String,
    levels: String,
    tol_share: f64,
    resolution: usize,
    n_shares: usize,
    n_rejects: usize,
    reports: Vec<ModulusReport>,
}

pub fn cmd_isomod(
    family: &str,
    levels: &str,
    tol: f64,
    resolution: usize,
    report_path: &Path,
) -> Result<()> {
    let (lo, hi) = parse_levels(levels)?;
    let entries = family_entries(family, lo, hi)?;
    let reports = scan_catalog_pairs(&entries, tol, resolution);
    let n_shares = reports.iter().filter(|r| r.verdict == Verdict::Shares).count();
    let hash = flags_hash(&["isomod", family, levels, &format!("{tol:e}"), &resolution.to_string()]);
    let artifact = IsomodArtifact {
        header: ArtifactHeader::new(&hash, SCAN_SEED),
        family: family.to_string(),
        levels: levels.to_string(),
        tol_share: tol,
        resolution,
        n_shares,
        n_rejects: reports.len() - n_shares,
        reports,
    };
    let mut text = serde_json::to_string_pretty(&artifact)?;
    text.push('\n');
    write_artifact(report_path, &text)?;
    println!(
        "isomod: {} entries, {} shares / {} rejects -> {}",
        entries.len(),
        artifact.n_shares,
        artifact.n_rejects,
        report_path.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------
// saturate
// ---------------------------------------------------------------------

/// Resolve a certificate target spec against a domain.
pub fn derive_target(domain: &MetricDomain, target: &str) -> Result<(CertPair, GeneratorSet)> {
    let parts: Vec<&str> = target.split(':').collect();
    match domain {
        MetricDomain::Graph { .. } => {
            let gens = eight_generators();
            if gens.domain != *domain {
                bail!("certificate targets are shipped for the eight graph only");
            }
            let pair = match parts.as_slice() {
                ["phi0"] => derive_eight_graph(EightTag::Ground)?,
                ["phi_o", k] => derive_eight_graph(EightTag::Odd(k.parse()?))?,
                ["phi_e", k, j] => derive_eight_graph(EightTag::Even(k.parse()?, j.parse()?))?,
                ["wave-cos", k] => derive_eight_wave(EightWave::CosBoth(k.parse()?))?,
                ["wave-sin", k] => derive_eight_wave(EightWave::SinBoth(k.parse()?))?,
                _ => bail!("unknown eight-graph target {target:?}"),
            };
            Ok((pair, gens))
        }
        MetricDomain::Circle { length }
            if (*length - 2.0 * std::f64::consts::PI).abs() < 1e-12 =>
        {
            let gens = circle_generators();
            let pair = match parts.as_slice() {
                ["cos", k] => derive_circle(CircleMode::Cos(k.parse()?))?,
                ["sin", k] => derive_circle(CircleMode::Sin(k.parse()?))?,
                _ => bail!("unknown circle target {target:?} (want cos:K | sin:K)"),
            };
            Ok((pair, gens))
        }
        _ => bail!("no shipped generator set for this domain"),
    }
}

#[derive(Serialize)]
struct SaturateArtifact {
    header: ArtifactHeader,
    domain: String,
    target: String,
    depth: usize,
    validation_pos: ValidationReport,
    validation_neg: ValidationReport,
    pair: CertPair,
}

pub fn cmd_saturate(domain_spec: &str, target: &str, out: &Path) -> Result<()> {
    let domain = parse_domain(domain_spec)?;
    let (pair, gens) = derive_target(&domain, target)?;
    let vp = cert_validate(&pair.pos, &gens, &domain);
    let vn = cert_validate(&pair.neg, &gens, &domain);
    let valid = vp.valid && vn.valid;
    let hash = flags_hash(&["saturate", domain_spec, target]);
    let artifact = SaturateArtifact {
        header: ArtifactHeader::new(&hash, 0),
        domain: domain_spec.to_string(),
        target: target.to_string(),
        depth: pair.pos.depth,
        validation_pos: vp,
        validation_neg: vn,
        pair,
    };
    let mut text = serde_json::to_string_pretty(&artifact)?;
    text.push('\n');
    write_artifact(out, &text)?;
    println!(
        "saturate: {target} depth {} valid={} -> {}",
        artifact.depth,
        valid,
        out.display()
    );
    if !valid {
        let why = artifact
            .validation_pos
            .first_failure
            .or(artifact.validation_neg.first_failure)
            .unwrap_or_default();
        return Err(NumericalFailure(format!("certificate for {target} failed validation: {why}")).into());
    }
    Ok(())
}

// ---------------------------------------------------------------------
// evolve
// ---------------------------------------------------------------------

/// The generator preset matching a domain (pulses need it).
fn generators_for(domain: &MetricDomain) -> Result<GeneratorSet> {
    match domain {
        MetricDomain::Circle { length }
            if (*length - 2.0 * std::f64::consts::PI).abs() < 1e-12 =>
        {
            Ok(circle_generators())
        }
        MetricDomain::Graph { .. } if *domain == eight_generators().domain => Ok(eight_generators()),
        _ => bail!("no shipped generator set for this domain"),
    }
}

pub fn cmd_evolve(
    domain_spec: &str,
    potential_spec: Option<&str>,
    schedule_path: &Path,
    psi0_spec: &str,
    target_spec: Option<&str>,
    nodes: usize,
    modes: usize,
    out: &Path,
) -> Result<()> {
    let domain = parse_domain(domain_spec)?;
    let grid = make_grid(&domain, nodes)?;
    let pot = parse_potential(potential_spec, grid.edges.len())?;
    let v = pot.as_ref().map(|p| potential_on_grid(p, &domain, &grid)).transpose()?;
    let ctx = match &v {
        None => PropagatorContext::analytic(&domain, &grid, modes)?,
        Some(v) => PropagatorContext::numeric(&domain, &grid, Some(v), modes)?,
    };
    let gens = generators_for(&domain)?;

    let text = std::fs::read_to_string(schedule_path)
        .with_context(|| format!("reading schedule {}", schedule_path.display()))?;
    let schedule: ControlSchedule =
        serde_json::from_str(&text).context("parsing schedule JSON")?;

    let psi0 = parse_mode_spec(psi0_spec, &domain, &grid)?;
    let target = target_spec.map(|t| parse_mode_spec(t, &domain, &grid)).transpose()?;

    let hash = flags_hash(&[
        "evolve",
        domain_spec,
        potential_spec.unwrap_or("none"),
        &text,
        psi0_spec,
        target_spec.unwrap_or(""),
        &nodes.to_string(),
        &modes.to_string(),
    ]);
    let mut csv = String::new();
    writeln!(csv, "{}", csv_header(&hash, 0))?;
    if target.is_some() {
        writeln!(csv, "segment,t,norm,fidelity_psi0,fidelity_target,captured")?;
    } else {
        writeln!(csv, "segment,t,norm,fidelity_psi0,captured")?;
    }
    let mut state = psi0.clone();
    let mut t = 0.0;
    let row = |seg: i64, t: f64, state: &WaveFunction, csv: &mut String| -> Result<()> {
        let f0 = inner_product(state, &psi0)?.norm();
        match &target {
            Some(tg) => {
                let ft = inner_product(state, tg)?.norm();
                writeln!(
                    csv,
                    "{},{:.9e},{:.12},{:.12},{:.12},{:.12}",
                    seg, t, state.norm(), f0, ft, ctx.min_captured.get()
                )?;
            }
            None => writeln!(
                csv,
                "{},{:.9e},{:.12},{:.12},{:.12}",
                seg, t, state.norm(), f0, ctx.min_captured.get()
            )?,
        }
        Ok(())
    };
    row(-1, 0.0, &state, &mut csv)?;
    for (i, seg) in schedule.segments.iter().enumerate() {
        let single = ControlSchedule { segments: vec![seg.clone()] };
        state = run_schedule(&ctx, &state, &single, &gens)?;
        t += single.total_duration();
        row(i as i64, t, &state, &mut csv)?;
    }
    write_artifact(out, &csv)?;
    let drift = (state.norm() - 1.0).abs();
    println!(
        "evolve: {} segments, T={:.6e}, norm drift {:.3e} -> {}",
        schedule.segments.len(),
        t,
        drift,
        out.display()
    );
    if drift > 1e-8 * (1.0 + t) {
        return Err(NumericalFailure(format!("unitarity drift {drift:.3e} over T={t:.3e}")).into());
    }
    Ok(())
}

// ---------------------------------------------------------------------
// synthesize + demos
// ---------------------------------------------------------------------

/// Resolve a basis spec into certificate pairs.
fn parse_basis(spec: &str) -> Result<Vec<CertPair>> {
    let (kind, k) = spec
        .split_once(':')
        .ok_or_else(|| anyhow!("expected basis kind:K, got {spec:?}"))?;
    let kmax: u32 = k.parse()?;
    let mut basis = Vec::new();
    match kind {
        "circle" => {
            for k in 1..=kmax {
                basis.push(derive_circle(CircleMode::Cos(k))?);
                basis.push(derive_circle(CircleMode::Sin(k))?);
            }
        }
        "eight-waves" => {
            for k in 1..=kmax as usize {
                basis.push(derive_eight_wave(EightWave::CosBoth(k))?);
                basis.push(derive_eight_wave(EightWave::SinBoth(k))?);
            }
        }
        other => bail!("unknown basis kind {other:?} (want circle|eight-waves)"),
    }
    Ok(basis)
}

/// JSON report of a synthesize/demo run.
#[derive(Serialize)]
pub struct SynthArtifact {
    header: ArtifactHeader,
    scenario: Scenario,
    kind: String,
    /// Fidelity `|⟨ψ(T), dest⟩|` (transition runs).
    #[serde(skip_serializing_if = "Option::is_none")]
    fidelity: Option<f64>,
    /// `‖ψ(T) − e^{iφ}ψ₀‖` (phase runs).
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<f64>,
    t: f64,
    n_segments: usize,
    /// Residual breakdown.
    #[serde(skip_serializing_if = "Option::is_none")]
    phase_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cert_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    modulus_deviation: Option<f64>,
    /// `1 − min mode-capture` across all free flights.
    truncation_deficit: f64,
    /// Result of one (δ, γ) halving, recorded for refinement checks.
    #[serde(skip_serializing_if = "Option::is_none")]
    refined: Option<RefinedRun>,
}

#[derive(Serialize)]
pub struct RefinedRun {
    delta: f64,
    gamma: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    fidelity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<f64>,
}

/// Execute one scenario; returns the artifact and the threshold verdict.
pub fn run_scenario(sc: &Scenario, hash: &str, refine: bool) -> Result<SynthArtifact> {
    let domain = parse_domain(&sc.domain)?;
    let gens = match sc.generators.as_str() {
        "eight" => eight_generators(),
        "circle" => circle_generators(),
        other => bail!("unknown generator preset {other:?}"),
    };
    if gens.domain != domain {
        bail!("generator preset {} does not live on domain {}", sc.generators, sc.domain);
    }

    match &sc.experiment {
        Experiment::Phase { psi0, target, params } => {
            let grid = make_grid(&domain, params.nodes)?;
            let pot = parse_potential(sc.potential.as_deref(), grid.edges.len())?;
            let ctx = match pot {
                None => PropagatorContext::analytic(&domain, &grid, params.modes)?,
                Some(p) => {
                    let v = potential_on_grid(&p, &domain, &grid)?;
                    PropagatorContext::numeric(&domain, &grid, Some(&v), params.modes)?
                }
            };
            let psi0 = parse_mode_spec(psi0, &domain, &grid)?;
            let (pair, _) = derive_target(&domain, target)?;
            let phi: RealFunction = pair.pos.expr.evaluate(&grid);
            let run = |p: &isospec_core::synth::SynthesisParams| -> Result<PhaseReport> {
                Ok(isospec_core::synth::run_phase_experiment(&ctx, &psi0, &phi, &pair.pos, p, &gens)?)
            };
            let base = params.synth();
            let rep = run(&base)?;
            let refined = if refine {
                let mut half = base.clone();
                half.delta /= 2.0;
                half.gamma /= 2.0;
                let r = run(&half)?;
                Some(RefinedRun {
                    delta: half.delta,
                    gamma: half.gamma,
                    fidelity: None,
                    error: Some(r.error),
                })
            } else {
                None
            };
            Ok(SynthArtifact {
                header: ArtifactHeader::new(hash, sc.seed),
                scenario: sc.clone(),
                kind: "phase".into(),
                fidelity: None,
                error: Some(rep.error),
                t: rep.t,
                n_segments: rep.n_segments,
                phase_residual: None,
                cert_residual: Some(rep.cert_residual),
                modulus_deviation: None,
                truncation_deficit: 1.0 - ctx.min_captured.get(),
                refined,
            })
        }
        Experiment::Transition { source, dest, basis, threshold: _, params } => {
            let grid = make_grid(&domain, params.nodes)?;
            if sc.potential.as_deref().is_some_and(|p| p != "none" && !p.is_empty()) {
                bail!("transition scenarios run with V = 0 (analytic propagator)");
            }
            let ctx = PropagatorContext::analytic(&domain, &grid, params.modes)?;
            let src = parse_mode_spec(source, &domain, &grid)?;
            let dst = parse_mode_spec(dest, &domain, &grid)?;
            let basis = parse_basis(basis)?;
            let run = |p: &isospec_core::synth::SynthesisParams| -> Result<TransitionReport> {
                Ok(run_transition_experiment(&ctx, &src, &dst, &basis, p, &gens)?)
            };
            let base = params.synth();
            let rep = run(&base)?;
            let refined = if refine {
                let mut half = base.clone();
                half.delta /= 2.0;
                half.gamma /= 2.0;
                let r = run(&half)?;
                Some(RefinedRun {
                    delta: half.delta,
                    gamma: half.gamma,
                    fidelity: Some(r.fidelity),
                    error: None,
                })
            } else {
                None
            };
            Ok(SynthArtifact {
                header: ArtifactHeader::new(hash, sc.seed),
                scenario: sc.clone(),
                kind: "transition".into(),
                fidelity: Some(rep.fidelity),
                error: None,
                t: rep.t,
                n_segments: rep.n_segments,
                phase_residual: Some(rep.phase_residual),
                cert_residual: None,
                modulus_deviation: Some(rep.modulus_deviation),
                truncation_deficit: 1.0 - ctx.min_captured.get(),
                refined,
            })
        }
    }
}

/// Write the artifact; enforce transition thresholds and refinement
/// monotonicity (exit 3 on breach).
fn finish_scenario(sc: &Scenario, artifact: &SynthArtifact, out: Option<&Path>) -> Result<()> {
    let path = out.map(PathBuf::from).unwrap_or_else(|| PathBuf::from(&sc.out));
    let mut text = serde_json::to_string_pretty(artifact)?;
    text.push('\n');
    write_artifact(&path, &text)?;
    match (&artifact.fidelity, &artifact.error) {
        (Some(f), _) => println!(
            "{}: fidelity {:.4} T {:.4e} segments {} -> {}",
            artifact.kind, f, artifact.t, artifact.n_segments, path.display()
        ),
        (_, Some(e)) => println!(
            "{}: error {:.4e} T {:.4e} segments {} -> {}",
            artifact.kind, e, artifact.t, artifact.n_segments, path.display()
        ),
        _ => unreachable!(),
    }
    if let Experiment::Transition { threshold, .. } = &sc.experiment {
        let f = artifact.fidelity.expect("transition has fidelity");
        if f < *threshold {
            return Err(NumericalFailure(format!("fidelity {f:.4} below threshold {threshold}")).into());
        }
        if let Some(r) = &artifact.refined {
            let rf = r.fidelity.expect("refined transition has fidelity");
            if rf < f - 1e-6 {
                return Err(NumericalFailure(format!(
                    "refinement decreased fidelity: {f:.6} -> {rf:.6}"
                ))
                .into());
            }
        }
    }
    Ok(())
}

pub fn cmd_synthesize(scenario_path: &Path, out: Option<&Path>, refine: bool) -> Result<()> {
    let sc = parse_scenario(scenario_path)?;
    let hash = scenario_hash(crate::scenario::emit_scenario(&sc).as_bytes());
    let artifact = run_scenario(&sc, &hash, refine)?;
    finish_scenario(&sc, &artifact, out)
}

/// Shipped demo scenarios (also present under `scenarios/`).
pub const DEMO_EIGHT: &str = include_str!("../scenarios/demo-eight.json");
pub const DEMO_TORUS: &str = include_str!("../scenarios/demo-torus.json");

pub fn cmd_demo(which: &str, out: Option<&Path>, skip_refine: bool) -> Result<()> {
    let text = match which {
        "eight" => DEMO_EIGHT,
        "torus" => DEMO_TORUS,
        _ => unreachable!(),
    };
    let sc: Scenario = serde_json::from_str(text).expect("shipped scenario parses");
    let hash = scenario_hash(crate::scenario::emit_scenario(&sc).as_bytes());
    let artifact = run_scenario(&sc, &hash, !skip_refine)?;
    finish_scenario(&sc, &artifact, out)
}

// ---------------------------------------------------------------------
// specfun
// ---------------------------------------------------------------------

/// Parse `a:b:n` sampling ranges.
fn parse_points(points: &str) -> Result<(f64, f64, usize)> {
    let parts: Vec<&str> = points.split(':').collect();
    let [a, b, n] = parts.as_slice() else {
        bail!("expected points a:b:n, got {points:?}");
    };
    let (a, b, n) = (a.parse()?, b.parse()?, n.parse()?);
    if n < 2 {
        bail!("need at least 2 sample points");
    }
    Ok((a, b, n))
}

pub fn cmd_specfun(kind: &str, points: Option<&str>, count: usize, out: &Path) -> Result<()> {
    let hash = flags_hash(&["specfun", kind, points.unwrap_or(""), &count.to_string()]);
    let mut csv = String::new();
    writeln!(csv, "{}", csv_header(&hash, 0))?;
    let parts: Vec<&str> = kind.split(':').collect();
    match parts.as_slice() {
        ["besselj", n] => {
            let n: usize = n.parse()?;
            let (a, b, m) = parse_points(points.ok_or_else(|| anyhow!("besselj needs --points"))?)?;
            writeln!(csv, "x,J_{n}")?;
            for i in 0..m {
                let x = a + (b - a) * i as f64 / (m - 1) as f64;
                writeln!(csv, "{:.12e},{:.12e}", x, bessel_j(n, x))?;
            }
        }
        ["bessel-zeros", n] => {
            let n: usize = n.parse()?;
            writeln!(csv, "k,j_{n}k")?;
            for k in 1..=count {
                writeln!(csv, "{},{:.12e}", k, bessel_zero(n, k)?)?;
            }
        }
        ["legendre", l, m] => {
            let l: usize = l.parse()?;
            let m: usize = m.parse()?;
            let (a, b, num) =
                parse_points(points.unwrap_or("-1.0:1.0:201")).context("legendre points")?;
            writeln!(csv, "t,P_{l}{m}")?;
            for i in 0..num {
                let t = a + (b - a) * i as f64 / (num - 1) as f64;
                writeln!(csv, "{:.12e},{:.12e}", t, legendre_p(l, m, t))?;
            }
        }
        ["hermite", k] => {
            let k: usize = k.parse()?;
            let (a, b, m) = parse_points(points.unwrap_or("-12.0:12.0:481"))?;
            writeln!(csv, "x,h_{k}")?;
            for i in 0..m {
                let x = a + (b - a) * i as f64 / (m - 1) as f64;
                writeln!(csv, "{:.12e},{:.12e}", x, hermite_fn(k, x))?;
            }
        }
        _ => bail!("unknown kind {kind:?} (want besselj:N | bessel-zeros:N | legendre:L:M | hermite:N)"),
    }
    write_artifact(out, &csv)?;
    println!("specfun: {kind} -> {}", out.display());
    Ok(())
}
