//! Saturation-cone certificates.
//!
//! Starting from a finite generator span `H₀ = span{Q₁, …, Q_m}` of
//! domain-stabilizing functions, the cone recursion admits at each level
//! elements `φ − Σᵢ αᵢ (∂ₓψᵢ)²` with `αᵢ ≥ 0`, `φ` from the previous
//! level, and both `±ψᵢ` certified at the previous level.  A
//! [`SaturationCertificate`] records such a derivation as a replayable
//! tree whose evaluation over exact trigonometric algebra reproduces the
//! target expression term-for-term.
//!
//! The module ships two concrete derivations: the six-generator eight
//! graph (every eigenfunction of its catalog reached with depth linear
//! in the level) and the circle with generators `{1, cos x, sin x}`
//! (frequency `k` reached at depth `O(log k)` by doubling).

use crate::catalog::{eight_graph_mode, CatalogEntry, EightTag};
use crate::domain::{eight_graph, Grid, MetricDomain};
use crate::funcspace::{
    stabilizes_domain, trig_grad_squared, RealFunction, TrigExpression,
};
use crate::spectral::symmetric_eigen;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use std::sync::Arc;
use thiserror::Error;

/// Errors from certificate derivation.
#[derive(Debug, Error)]
pub enum SaturationError {
    /// Requested target outside the derivable range.
    #[error("target out of range: {0}")]
    TargetOutOfRange(String),
}

/// A fixed generator span `H₀` on a domain.
#[derive(Debug, Clone)]
pub struct GeneratorSet {
    /// Domain the generators live on.
    pub domain: MetricDomain,
    /// Generator expressions `Q₁ … Q_m`.
    pub generators: Vec<TrigExpression>,
    /// Display labels, same order.
    pub labels: Vec<String>,
}

/// The six eight-graph generators
/// `Q₁=(1,1), Q₂=(cos,cos), Q₃=(sin,0), Q₄=(0,sin),
///  Q₅=(sin(x/2),−sin(x/2)), Q₆=(cos(x/2),cos(x/2))`.
pub fn eight_generators() -> GeneratorSet {
    let gens = vec![
        TrigExpression::constant(1.0, 2),
        TrigExpression::cos(2, 0, 2, 1.0).add(&TrigExpression::cos(2, 1, 2, 1.0)),
        TrigExpression::sin(2, 0, 2, 1.0),
        TrigExpression::sin(2, 1, 2, 1.0),
        TrigExpression::sin(2, 0, 1, 1.0).add(&TrigExpression::sin(2, 1, 1, -1.0)),
        TrigExpression::cos(2, 0, 1, 1.0).add(&TrigExpression::cos(2, 1, 1, 1.0)),
    ];
    GeneratorSet {
        domain: eight_graph(),
        generators: gens,
        labels: (1..=6).map(|i| format!("Q{i}")).collect(),
    }
}

/// Circle generators `{1, cos x, sin x}` (the shipped d = 1 preset).
pub fn circle_generators() -> GeneratorSet {
    GeneratorSet {
        domain: MetricDomain::Circle { length: 2.0 * std::f64::consts::PI },
        generators: vec![
            TrigExpression::constant(1.0, 1),
            TrigExpression::cos(1, 0, 2, 1.0),
            TrigExpression::sin(1, 0, 2, 1.0),
        ],
        labels: vec!["1".into(), "cos".into(), "sin".into()],
    }
}

/// One subtracted cone term `−α (∂ₓψ)²`; both signs of ψ carry
/// certificates.  Subtrees are reference-counted so recursive
/// derivations share structure instead of deep-copying it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConeTerm {
    /// Cone weight, `α ≥ 0`.
    pub alpha: f64,
    /// Certificate for `+ψ`.
    pub psi_pos: Arc<SaturationCertificate>,
    /// Certificate for `−ψ`.
    pub psi_neg: Arc<SaturationCertificate>,
}

/// Node kinds of a certificate tree.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum CertNode {
    /// Depth-0 element of `H₀`: real coefficients over `Q₁ … Q_m`.
    GeneratorCombo {
        /// One coefficient per generator.
        coeffs: Vec<f64>,
    },
    /// `base − Σ αᵢ (∂ₓψᵢ)²`.
    ConeSum {
        /// Previous-level element.
        base: Arc<SaturationCertificate>,
        /// Subtracted gradient-square terms.
        subtracted: Vec<ConeTerm>,
    },
}

/// A replayable membership certificate; caches its evaluated expression
/// and cone depth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SaturationCertificate {
    /// Tree node.
    pub node: CertNode,
    /// Cached exact value.
    pub expr: TrigExpression,
    /// Cone depth `N` (0 for generator combos).
    pub depth: usize,
}

/// Build a depth-0 generator combination.
pub fn cert_combo(gens: &GeneratorSet, coeffs: &[f64]) -> SaturationCertificate {
    assert_eq!(coeffs.len(), gens.generators.len());
    let mut expr = TrigExpression::zero(gens.generators[0].num_edges());
    for (q, &c) in gens.generators.iter().zip(coeffs) {
        expr = expr.add(&q.scale(c));
    }
    SaturationCertificate { node: CertNode::GeneratorCombo { coeffs: coeffs.to_vec() }, expr, depth: 0 }
}

/// Build a cone node `base − Σ αᵢ (∂ₓψᵢ)²`.
pub fn cert_cone(
    base: SaturationCertificate,
    terms: Vec<ConeTerm>,
) -> SaturationCertificate {
    let mut expr = base.expr.clone();
    let mut child_depth = base.depth;
    for t in &terms {
        expr = expr.sub(&trig_grad_squared(&t.psi_pos.expr).scale(t.alpha));
        child_depth = child_depth.max(t.psi_pos.depth).max(t.psi_neg.depth);
    }
    SaturationCertificate {
        node: CertNode::ConeSum { base: Arc::new(base), subtracted: terms },
        expr,
        depth: child_depth + 1,
    }
}

/// Sum of two certified elements; cone levels are closed under addition
/// (bases add, subtracted lists concatenate), so depth is the max of the
/// operands' depths.
pub fn cert_add(a: &SaturationCertificate, b: &SaturationCertificate) -> SaturationCertificate {
    match (&a.node, &b.node) {
        (CertNode::GeneratorCombo { coeffs: ca }, CertNode::GeneratorCombo { coeffs: cb }) => {
            let coeffs: Vec<f64> = ca.iter().zip(cb).map(|(x, y)| x + y).collect();
            SaturationCertificate {
                node: CertNode::GeneratorCombo { coeffs },
                expr: a.expr.add(&b.expr),
                depth: 0,
            }
        }
        (CertNode::ConeSum { base, subtracted }, _) => {
            let mut terms = subtracted.clone();
            let new_base = match &b.node {
                CertNode::ConeSum { base: bb, subtracted: bs } => {
                    terms.extend(bs.iter().cloned());
                    cert_add(base, bb)
                }
                CertNode::GeneratorCombo { .. } => cert_add(base, b),
            };
            SaturationCertificate {
                node: CertNode::ConeSum { base: Arc::new(new_base), subtracted: terms },
                expr: a.expr.add(&b.expr),
                depth: a.depth.max(b.depth),
            }
        }
        (CertNode::GeneratorCombo { .. }, CertNode::ConeSum { .. }) => cert_add(b, a),
    }
}

/// Scale a certified element by `s`; cones require `s ≥ 0` (positive
/// scaling stays in the cone), generator combos accept any sign.
pub fn cert_scale(a: &SaturationCertificate, s: f64) -> SaturationCertificate {
    match &a.node {
        CertNode::GeneratorCombo { coeffs } => SaturationCertificate {
            node: CertNode::GeneratorCombo { coeffs: coeffs.iter().map(|c| c * s).collect() },
            expr: a.expr.scale(s),
            depth: 0,
        },
        CertNode::ConeSum { base, subtracted } => {
            assert!(s >= 0.0, "cone elements only scale by nonnegative factors");
            let terms = subtracted
                .iter()
                .map(|t| ConeTerm { alpha: t.alpha * s, psi_pos: t.psi_pos.clone(), psi_neg: t.psi_neg.clone() })
                .collect();
            SaturationCertificate {
                node: CertNode::ConeSum { base: Arc::new(cert_scale(base, s)), subtracted: terms },
                expr: a.expr.scale(s),
                depth: a.depth,
            }
        }
    }
}

/// Replay a certificate to its exact trigonometric value.
pub fn cert_evaluate(c: &SaturationCertificate, gens: &GeneratorSet) -> TrigExpression {
    cert_evaluate_memo(c, gens, &mut HashMap::new())
}

/// Replay with a per-call memo keyed on node address; shared subtrees
/// (all nodes stay borrowed for the duration, so addresses are stable
/// and unique) are replayed once.
fn cert_evaluate_memo(
    c: &SaturationCertificate,
    gens: &GeneratorSet,
    memo: &mut HashMap<usize, TrigExpression>,
) -> TrigExpression {
    let key = c as *const SaturationCertificate as usize;
    if let Some(e) = memo.get(&key) {
        return e.clone();
    }
    let expr = match &c.node {
        CertNode::GeneratorCombo { coeffs } => {
            let mut expr = TrigExpression::zero(gens.generators[0].num_edges());
            for (q, &co) in gens.generators.iter().zip(coeffs) {
                expr = expr.add(&q.scale(co));
            }
            expr
        }
        CertNode::ConeSum { base, subtracted } => {
            let mut expr = cert_evaluate_memo(base, gens, memo);
            for t in subtracted {
                expr = expr
                    .sub(&trig_grad_squared(&cert_evaluate_memo(&t.psi_pos, gens, memo)).scale(t.alpha));
            }
            expr
        }
    };
    memo.insert(key, expr.clone());
    expr
}

/// Outcome of [`cert_validate`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    /// All invariants hold.
    pub valid: bool,
    /// Path of the first failing node, with the violated invariant.
    pub first_failure: Option<String>,
}

/// Recursively check a certificate: every cached expression matches its
/// replay, every node stabilizes the domain, all `α ≥ 0`, each
/// subtracted ψ carries a matching `−ψ` certificate, and depths are
/// consistent.
pub fn cert_validate(
    c: &SaturationCertificate,
    gens: &GeneratorSet,
    domain: &MetricDomain,
) -> ValidationReport {
    fn fail(path: &str, what: &str) -> ValidationReport {
        ValidationReport { valid: false, first_failure: Some(format!("{path}: {what}")) }
    }
    fn walk(
        c: &SaturationCertificate,
        gens: &GeneratorSet,
        domain: &MetricDomain,
        path: String,
        seen: &mut HashSet<usize>,
        replay_memo: &mut HashMap<usize, TrigExpression>,
    ) -> ValidationReport {
        // Shared subtrees are checked once; addresses are stable and
        // unique while the root is borrowed.
        let key = c as *const SaturationCertificate as usize;
        if seen.contains(&key) {
            return ValidationReport { valid: true, first_failure: None };
        }
        let replay = cert_evaluate_memo(c, gens, replay_memo);
        if !replay.approx_eq(&c.expr, 1e-10) {
            return fail(&path, "cached expression differs from replay");
        }
        if !stabilizes_domain(&c.expr, domain) {
            return fail(&path, "expression fails the stabilization gate");
        }
        match &c.node {
            CertNode::GeneratorCombo { .. } => {
                if c.depth != 0 {
                    return fail(&path, "generator combo must have depth 0");
                }
            }
            CertNode::ConeSum { base, subtracted } => {
                let r = walk(base, gens, domain, format!("{path}/base"), seen, replay_memo);
                if !r.valid {
                    return r;
                }
                let mut max_child = base.depth;
                for (i, t) in subtracted.iter().enumerate() {
                    if t.alpha < 0.0 {
                        return fail(&format!("{path}/term{i}"), "negative cone weight");
                    }
                    if !t.psi_neg.expr.approx_eq(&t.psi_pos.expr.scale(-1.0), 1e-10) {
                        return fail(&format!("{path}/term{i}"), "missing matching -psi certificate");
                    }
                    for (tag, side) in [("psi+", &t.psi_pos), ("psi-", &t.psi_neg)] {
                        let r = walk(side, gens, domain, format!("{path}/term{i}/{tag}"), seen, replay_memo);
                        if !r.valid {
                            return r;
                        }
                    }
                    max_child = max_child.max(t.psi_pos.depth).max(t.psi_neg.depth);
                }
                if c.depth != max_child + 1 {
                    return fail(&path, "depth is not 1 + max child depth");
                }
            }
        }
        seen.insert(key);
        ValidationReport { valid: true, first_failure: None }
    }
    walk(c, gens, domain, "root".to_string(), &mut HashSet::new(), &mut HashMap::new())
}

/// A `(+ψ, −ψ)` certificate pair; every derived element keeps both signs
/// certified at equal depth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertPair {
    /// Certificate for `+ψ`.
    pub pos: SaturationCertificate,
    /// Certificate for `−ψ`.
    pub neg: SaturationCertificate,
}

impl CertPair {
    fn combo(gens: &GeneratorSet, coeffs: &[f64]) -> CertPair {
        let flipped: Vec<f64> = coeffs.iter().map(|c| -c).collect();
        CertPair { pos: cert_combo(gens, coeffs), neg: cert_combo(gens, &flipped) }
    }

    fn add(&self, other: &CertPair) -> CertPair {
        CertPair { pos: cert_add(&self.pos, &other.pos), neg: cert_add(&self.neg, &other.neg) }
    }

    fn sub(&self, other: &CertPair) -> CertPair {
        CertPair { pos: cert_add(&self.pos, &other.neg), neg: cert_add(&self.neg, &other.pos) }
    }

    fn scale(&self, s: f64) -> CertPair {
        assert!(s >= 0.0);
        CertPair { pos: cert_scale(&self.pos, s), neg: cert_scale(&self.neg, s) }
    }

    /// Flip the pair: a certificate pair for −ψ.
    fn flip(&self) -> CertPair {
        CertPair { pos: self.neg.clone(), neg: self.pos.clone() }
    }
}

/// Cone step producing a ± pair: `pos_psis`/`neg_psis` are the
/// subtracted arguments of the identity for `+target` and `−target`,
/// all with weight `alpha`, over the shared `base`.
fn cone_pair(
    base: &SaturationCertificate,
    alpha: f64,
    pos_psis: Vec<CertPair>,
    neg_psis: Vec<CertPair>,
) -> CertPair {
    let mk = |psis: Vec<CertPair>| {
        let terms = psis
            .into_iter()
            .map(|p| ConeTerm { alpha, psi_pos: Arc::new(p.pos), psi_neg: Arc::new(p.neg) })
            .collect();
        cert_cone(base.clone(), terms)
    };
    CertPair { pos: mk(pos_psis), neg: mk(neg_psis) }
}

/// Eight-graph derivation state: pairs for the three integer families
/// `C_m = (cos mx, cos mx)`, `S⁺_m = (sin mx, sin mx)`,
/// `S⁻_m = (sin mx, −sin mx)`, already divided by `m` is *not* stored —
/// entries are the plain amplitude-1 expressions.
struct EightLevels {
    c: Vec<CertPair>,    // index m-1 ↦ C_m
    ssym: Vec<CertPair>, // index m-1 ↦ S⁺_m
    santi: Vec<CertPair>,
}

fn eight_levels(gens: &GeneratorSet, m_max: usize) -> EightLevels {
    // Base cases: C₁ = Q₂, S⁺₁ = Q₃ + Q₄, S⁻₁ = Q₃ − Q₄.
    let c1 = CertPair::combo(gens, &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
    let ssym1 = CertPair::combo(gens, &[0.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
    let santi1 = CertPair::combo(gens, &[0.0, 0.0, 1.0, -1.0, 0.0, 0.0]);
    let two_q1 = cert_combo(gens, &[2.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    let mut lv = EightLevels { c: vec![c1], ssym: vec![ssym1], santi: vec![santi1] };
    for m in 1..m_max {
        let mf = 1.0 / m as f64;
        let cm = lv.c[m - 1].scale(mf);
        let sm = lv.ssym[m - 1].scale(mf);
        let am = lv.santi[m - 1].scale(mf);
        let (c1, s1, a1) = (&lv.c[0], &lv.ssym[0], &lv.santi[0]);

        // C_{m+1} = 2Q₁ − ½[(∂(C_m/m))² + (∂C₁)² + (∂(S⁺_m/m))² + (∂S⁺₁)²
        //                  + (∂(S⁺_m/m − S⁺₁))² + (∂(C_m/m + C₁))²]
        let c_next = cone_pair(
            &two_q1,
            0.5,
            vec![cm.clone(), c1.clone(), sm.clone(), s1.clone(), sm.sub(s1), cm.add(c1)],
            vec![cm.clone(), c1.clone(), sm.clone(), s1.clone(), sm.add(s1), c1.sub(&cm)],
        );
        // S⁺_{m+1}: mixed cos/sin arguments.
        let s_next = cone_pair(
            &two_q1,
            0.5,
            vec![cm.add(s1), c1.add(&sm), sm.clone(), c1.clone(), s1.clone(), cm.clone()],
            vec![cm.sub(s1), c1.sub(&sm), sm.clone(), c1.clone(), s1.clone(), cm.clone()],
        );
        // S⁻_{m+1}: same identity with the antisymmetric sine family.
        let a_next = cone_pair(
            &two_q1,
            0.5,
            vec![cm.add(a1), c1.add(&am), sm.clone(), c1.clone(), s1.clone(), cm.clone()],
            vec![cm.sub(a1), c1.sub(&am), sm.clone(), c1.clone(), s1.clone(), cm.clone()],
        );
        lv.c.push(c_next);
        lv.ssym.push(s_next);
        lv.santi.push(a_next);
    }
    lv
}

/// Half-integer antisymmetric sine `(sin((m+½)x), −sin((m+½)x))` from
/// the level-`m` families plus the half-frequency generators `Q₅, Q₆`.
fn eight_half_step(gens: &GeneratorSet, lv: &EightLevels, m: usize) -> CertPair {
    let mf = 1.0 / m as f64;
    let cm = lv.c[m - 1].scale(mf);
    let sm = lv.ssym[m - 1].scale(mf);
    let am = lv.santi[m - 1].scale(mf);
    // 2Q₅ = (2 sin(x/2), −2 sin(x/2)) has unit-amplitude derivative.
    let q5x2 = CertPair::combo(gens, &[0.0, 0.0, 0.0, 0.0, 2.0, 0.0]);
    let q6x2 = CertPair::combo(gens, &[0.0, 0.0, 0.0, 0.0, 0.0, 2.0]);
    let two_q1 = cert_combo(gens, &[2.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    cone_pair(
        &two_q1,
        0.5,
        vec![cm.add(&q5x2), q6x2.add(&am), q5x2.clone(), sm.clone(), cm.clone(), q6x2.clone()],
        vec![cm.sub(&q5x2), q6x2.sub(&am), q5x2.clone(), sm.clone(), cm.clone(), q6x2.clone()],
    )
}

/// Maximum level for the shipped eight-graph derivation.
pub const EIGHT_K_MAX: usize = 6;

/// Derive a ± certificate pair for an eight-graph catalog eigenfunction
/// (unit-normalized, matching [`eight_graph_mode`]'s expression exactly).
pub fn derive_eight_graph(tag: EightTag) -> Result<CertPair, SaturationError> {
    let gens = eight_generators();
    let entry = check_eight_range(tag)?;
    let norm = entry.norm_const;
    let pair = match tag {
        EightTag::Ground => CertPair::combo(&gens, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
        EightTag::Odd(0) => CertPair::combo(&gens, &[0.0, 0.0, 0.0, 0.0, 1.0, 0.0]),
        EightTag::Odd(k) => {
            let lv = eight_levels(&gens, k);
            eight_half_step(&gens, &lv, k)
        }
        EightTag::Even(k, j) => {
            let lv = eight_levels(&gens, k);
            match j {
                1 => lv.c[k - 1].clone(),
                // (sin kx, 0) = ½(S⁺_k + S⁻_k); (0, sin kx) = ½(S⁺_k − S⁻_k)
                2 => lv.ssym[k - 1].add(&lv.santi[k - 1]).scale(0.5),
                _ => lv.ssym[k - 1].add(&lv.santi[k - 1].flip()).scale(0.5),
            }
        }
    };
    Ok(pair.scale(norm))
}

fn check_eight_range(tag: EightTag) -> Result<CatalogEntry, SaturationError> {
    let ok = match tag {
        EightTag::Ground => true,
        EightTag::Odd(k) => k <= EIGHT_K_MAX,
        EightTag::Even(k, j) => (1..=EIGHT_K_MAX).contains(&k) && (1..=3).contains(&j),
    };
    if !ok {
        return Err(SaturationError::TargetOutOfRange(format!("{tag:?} (k_max {EIGHT_K_MAX})")));
    }
    Ok(eight_graph_mode(tag))
}

/// Edge-symmetric eight-graph waves used as a transition phase basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EightWave {
    /// `(cos kx, cos kx)`, amplitude 1.
    CosBoth(usize),
    /// `(sin kx, sin kx)`, amplitude 1.
    SinBoth(usize),
}

/// Derive a ± pair for an edge-symmetric integer-frequency wave on the
/// eight graph (plain amplitude-1 expressions, `1 ≤ k ≤ 12`).
pub fn derive_eight_wave(wave: EightWave) -> Result<CertPair, SaturationError> {
    let k = match wave {
        EightWave::CosBoth(k) | EightWave::SinBoth(k) => k,
    };
    if !(1..=12).contains(&k) {
        return Err(SaturationError::TargetOutOfRange(format!("{wave:?} (k range 1..=12)")));
    }
    let gens = eight_generators();
    let lv = eight_levels(&gens, k);
    Ok(match wave {
        EightWave::CosBoth(_) => lv.c[k - 1].clone(),
        EightWave::SinBoth(_) => lv.ssym[k - 1].clone(),
    })
}

/// Circle target kinds for [`derive_circle`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CircleMode {
    /// `cos(kx)`.
    Cos(u32),
    /// `sin(kx)`.
    Sin(u32),
}

/// Derive ± certificate pairs for `cos(kx)`/`sin(kx)` on the circle over
/// `{1, cos x, sin x}`; depth grows as `O(log k)` via frequency
/// doubling.
pub fn derive_circle(mode: CircleMode) -> Result<CertPair, SaturationError> {
    let gens = circle_generators();
    let k = match mode {
        CircleMode::Cos(k) | CircleMode::Sin(k) => k,
    };
    if k == 0 {
        return match mode {
            CircleMode::Cos(_) => Ok(CertPair::combo(&gens, &[1.0, 0.0, 0.0])),
            CircleMode::Sin(_) => Err(SaturationError::TargetOutOfRange("sin(0x)".into())),
        };
    }
    if k > 64 {
        return Err(SaturationError::TargetOutOfRange(format!("frequency {k} > 64")));
    }
    let mut memo: HashMap<u32, (CertPair, CertPair)> = HashMap::new();
    let (c, s) = circle_level(&gens, k, &mut memo);
    Ok(match mode {
        CircleMode::Cos(_) => c,
        CircleMode::Sin(_) => s,
    })
}

/// Returns (cos(kx) pair, sin(kx) pair), memoized.
fn circle_level(
    gens: &GeneratorSet,
    k: u32,
    memo: &mut HashMap<u32, (CertPair, CertPair)>,
) -> (CertPair, CertPair) {
    if let Some(v) = memo.get(&k) {
        return v.clone();
    }
    let out = if k == 1 {
        (CertPair::combo(gens, &[0.0, 1.0, 0.0]), CertPair::combo(gens, &[0.0, 0.0, 1.0]))
    } else if k % 2 == 0 {
        let (cm, sm) = circle_level(gens, k / 2, memo);
        let m = (k / 2) as f64;
        let q1 = cert_combo(gens, &[1.0, 0.0, 0.0]);
        let cms = cm.scale(1.0 / m);
        let sms = sm.scale(1.0 / m);
        // cos 2mx = 1 − 2 sin²(mx) = Q₁ − 2(∂(cos(mx)/m))²   (±)
        let c2 = cone_pair(&q1, 2.0, vec![cms.clone()], vec![sms.clone()]);
        // sin 2mx = 1 − (cos mx − sin mx)²-type: Q₁ − (∂((c+s)/m))²  (±)
        let s2 = cone_pair(&q1, 1.0, vec![cms.add(&sms)], vec![cms.sub(&sms)]);
        (c2, s2)
    } else {
        // odd: k = m + 1 with the six-term increment identities
        let (cm, sm) = circle_level(gens, k - 1, memo);
        let m = (k - 1) as f64;
        let cms = cm.scale(1.0 / m);
        let sms = sm.scale(1.0 / m);
        let (c1, s1) = circle_level(gens, 1, memo);
        let two_q1 = cert_combo(gens, &[2.0, 0.0, 0.0]);
        let c_next = cone_pair(
            &two_q1,
            0.5,
            vec![cms.clone(), c1.clone(), sms.clone(), s1.clone(), sms.sub(&s1), cms.add(&c1)],
            vec![cms.clone(), c1.clone(), sms.clone(), s1.clone(), sms.add(&s1), c1.sub(&cms)],
        );
        let s_next = cone_pair(
            &two_q1,
            0.5,
            vec![cms.add(&s1), c1.add(&sms), sms.clone(), c1.clone(), s1.clone(), cms.clone()],
            vec![cms.sub(&s1), c1.sub(&sms), sms.clone(), c1.clone(), s1.clone(), cms.clone()],
        );
        (c_next, s_next)
    };
    memo.insert(k, out.clone());
    out
}

/// Least-squares distance from each target to the *linear span* of the
/// evaluated certificates (a deliberate relaxation of cone membership;
/// flagged as such in the CLI output).  Returns relative L² residuals.
pub fn density_residual(
    targets: &[RealFunction],
    cone: &[SaturationCertificate],
    grid: &std::sync::Arc<Grid>,
) -> Vec<f64> {
    let w = grid.weights_flat();
    let cols: Vec<Vec<f64>> = cone
        .iter()
        .map(|c| c.expr.evaluate(grid).data.concat())
        .collect();
    let m = cols.len();
    // Gram matrix and pseudo-inverse via the symmetric eigensolver.
    let mut gram = vec![0.0; m * m];
    for i in 0..m {
        for j in i..m {
            let v: f64 = cols[i].iter().zip(&cols[j]).zip(&w).map(|((a, b), &w)| a * b * w).sum();
            gram[i * m + j] = v;
            gram[j * m + i] = v;
        }
    }
    let (evals, evecs) = symmetric_eigen(&gram, m, true).expect("Gram eigensolve");
    let evecs = evecs.expect("vectors requested");
    let cutoff = 1e-12 * evals.last().copied().unwrap_or(1.0).max(1e-300);

    targets
        .iter()
        .map(|t| {
            let ts = t.data.concat();
            let tnorm2: f64 = ts.iter().zip(&w).map(|(a, &w)| a * a * w).sum();
            if tnorm2 <= 1e-300 {
                return 0.0;
            }
            let rhs: Vec<f64> = cols
                .iter()
                .map(|c| c.iter().zip(&ts).zip(&w).map(|((a, b), &w)| a * b * w).sum())
                .collect();
            // coefficient vector = G⁺ rhs in the eigenbasis
            let mut coef = vec![0.0; m];
            for e in 0..m {
                if evals[e] <= cutoff {
                    continue;
                }
                let proj: f64 = (0..m).map(|i| evecs[i * m + e] * rhs[i]).sum();
                for (i, c) in coef.iter_mut().enumerate() {
                    *c += evecs[i * m + e] * proj / evals[e];
                }
            }
            // residual² = ‖t‖² − 2 coefᵀrhs + coefᵀG coef
            let mut quad = 0.0;
            for i in 0..m {
                for j in 0..m {
                    quad += coef[i] * gram[i * m + j] * coef[j];
                }
            }
            let lin: f64 = coef.iter().zip(&rhs).map(|(a, b)| a * b).sum();
            let r2 = (tnorm2 - 2.0 * lin + quad).max(0.0);
            (r2 / tnorm2).sqrt()
        })
        .collect()
}
