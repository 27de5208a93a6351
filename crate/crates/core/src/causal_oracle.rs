//! Exact checks of the backdoor identities on small discrete structural
//! causal models with graph `X ← S → Y`, `X → Y` and a binary selection
//! variable `S` (1 = seen imbalanced domain, 0 = balanced domain).
//!
//! Every quantity is obtained by enumeration. Interventional quantities come
//! from the mutilated model (the `S → X` edge removed, `X` clamped);
//! observational ones come from the joint table `P(x, y, s)`. The two routes
//! never share intermediate values, so agreement is a real check.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::Serialize;
use thiserror::Error;

/// Absolute tolerance for every identity.
pub const IDENTITY_TOL: f64 = 1e-12;
pub const MAX_CARDINALITY: usize = 16;
const ROW_TOL: f64 = 1e-12;
/// Minimum entry accepted by the random generator.
pub const MIN_SUPPORT: f64 = 1e-3;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("invalid scm: {0}")]
    InvalidScm(String),
    #[error("zero support: P(x={x}|S={s}) = 0")]
    ZeroSupport { x: usize, s: usize },
    #[error("{identity} violated: |{lhs} - {rhs}| = {deviation:e}")]
    IdentityViolated {
        identity: String,
        lhs: f64,
        rhs: f64,
        deviation: f64,
    },
}

/// `P(S)`, `P(X|S)` and `P(Y|X,S)` over finite domains.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteScm {
    p_s: [f64; 2],
    /// `[s][x]`, flattened.
    p_x_given_s: Vec<f64>,
    /// `[s][x][y]`, flattened.
    p_y_given_xs: Vec<f64>,
    nx: usize,
    ny: usize,
}

fn check_row(row: &[f64], what: &str) -> Result<(), OracleError> {
    if row.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(OracleError::InvalidScm(format!("{what} has a negative entry")));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_TOL {
        return Err(OracleError::InvalidScm(format!("{what} sums to {sum}")));
    }
    Ok(())
}

impl DiscreteScm {
    pub fn new(
        p_s: [f64; 2],
        p_x_given_s: Vec<Vec<f64>>,
        p_y_given_xs: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self, OracleError> {
        check_row(&p_s, "P(S)")?;
        if p_x_given_s.len() != 2 || p_y_given_xs.len() != 2 {
            return Err(OracleError::InvalidScm("S must be binary".into()));
        }
        let nx = p_x_given_s[0].len();
        if !(2..=MAX_CARDINALITY).contains(&nx) {
            return Err(OracleError::InvalidScm(format!("|X| = {nx} outside [2, 16]")));
        }
        let ny = p_y_given_xs[0].first().map_or(0, Vec::len);
        if !(2..=MAX_CARDINALITY).contains(&ny) {
            return Err(OracleError::InvalidScm(format!("|Y| = {ny} outside [2, 16]")));
        }
        let mut flat_x = Vec::with_capacity(2 * nx);
        let mut flat_y = Vec::with_capacity(2 * nx * ny);
        for s in 0..2 {
            let row = &p_x_given_s[s];
            if row.len() != nx {
                return Err(OracleError::InvalidScm("ragged P(X|S)".into()));
            }
            check_row(row, &format!("P(X|S={s})"))?;
            flat_x.extend_from_slice(row);
            if p_y_given_xs[s].len() != nx {
                return Err(OracleError::InvalidScm("ragged P(Y|X,S)".into()));
            }
            for (x, row) in p_y_given_xs[s].iter().enumerate() {
                if row.len() != ny {
                    return Err(OracleError::InvalidScm("ragged P(Y|X,S)".into()));
                }
                check_row(row, &format!("P(Y|X={x},S={s})"))?;
                flat_y.extend_from_slice(row);
            }
        }
        Ok(Self {
            p_s,
            p_x_given_s: flat_x,
            p_y_given_xs: flat_y,
            nx,
            ny,
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn p_s(&self) -> [f64; 2] {
        self.p_s
    }

    /// Mechanism `P(X=x|S=s)`.
    pub fn p_x_given_s(&self, s: usize, x: usize) -> f64 {
        self.p_x_given_s[s * self.nx + x]
    }

    /// Mechanism `P(Y=y|X=x,S=s)`.
    pub fn p_y_given_xs(&self, s: usize, x: usize, y: usize) -> f64 {
        self.p_y_given_xs[(s * self.nx + x) * self.ny + y]
    }

    /// Replaces one `P(Y|X=x,S=s)` row. Used to build mis-specified models.
    pub fn with_y_row(&self, s: usize, x: usize, row: &[f64]) -> Result<Self, OracleError> {
        check_row(row, "replacement P(Y|X,S)")?;
        let mut out = self.clone();
        let start = (s * self.nx + x) * self.ny;
        out.p_y_given_xs[start..start + self.ny].copy_from_slice(row);
        Ok(out)
    }

    /// Both `P(X|S)` and `P(Y|X,S)` depend on `S` somewhere.
    pub fn is_confounded(&self) -> bool {
        let x_shift = (0..self.nx).any(|x| (self.p_x_given_s(0, x) - self.p_x_given_s(1, x)).abs() > 1e-9);
        let y_shift = (0..self.nx).any(|x| {
            (0..self.ny).any(|y| (self.p_y_given_xs(0, x, y) - self.p_y_given_xs(1, x, y)).abs() > 1e-9)
        });
        x_shift && y_shift
    }

    fn check_x(&self, x: usize) -> Result<(), OracleError> {
        if x >= self.nx {
            return Err(OracleError::InvalidScm(format!("x={x} outside domain of size {}", self.nx)));
        }
        Ok(())
    }

    fn check_y(&self, y: usize) -> Result<(), OracleError> {
        if y >= self.ny {
            return Err(OracleError::InvalidScm(format!("y={y} outside domain of size {}", self.ny)));
        }
        Ok(())
    }
}

/// Observational joint `P(x, y, s)` and the marginals derived from it.
#[derive(Debug, Clone)]
pub struct JointTable {
    nx: usize,
    ny: usize,
    /// `[s][x][y]`
    values: Vec<f64>,
}

impl JointTable {
    pub fn from_scm(scm: &DiscreteScm) -> Self {
        let mut values = Vec::with_capacity(2 * scm.nx * scm.ny);
        for s in 0..2 {
            for x in 0..scm.nx {
                for y in 0..scm.ny {
                    values.push(scm.p_s[s] * scm.p_x_given_s(s, x) * scm.p_y_given_xs(s, x, y));
                }
            }
        }
        Self {
            nx: scm.nx,
            ny: scm.ny,
            values,
        }
    }

    pub fn p_xys(&self, x: usize, y: usize, s: usize) -> f64 {
        self.values[(s * self.nx + x) * self.ny + y]
    }

    pub fn p_s(&self, s: usize) -> f64 {
        (0..self.nx).map(|x| self.p_xs(x, s)).sum()
    }

    pub fn p_xs(&self, x: usize, s: usize) -> f64 {
        (0..self.ny).map(|y| self.p_xys(x, y, s)).sum()
    }

    pub fn p_x(&self, x: usize) -> f64 {
        self.p_xs(x, 0) + self.p_xs(x, 1)
    }

    pub fn p_xy(&self, x: usize, y: usize) -> f64 {
        self.p_xys(x, y, 0) + self.p_xys(x, y, 1)
    }

    pub fn p_x_given_s(&self, x: usize, s: usize) -> f64 {
        self.p_xs(x, s) / self.p_s(s)
    }

    pub fn p_s_given_x(&self, s: usize, x: usize) -> f64 {
        self.p_xs(x, s) / self.p_x(x)
    }

    pub fn p_y_given_xs(&self, y: usize, x: usize, s: usize) -> f64 {
        self.p_xys(x, y, s) / self.p_xs(x, s)
    }

    fn require_support(&self, x: usize) -> Result<(), OracleError> {
        for s in 0..2 {
            if !(self.p_xs(x, s) > 0.0) {
                return Err(OracleError::ZeroSupport { x, s });
            }
        }
        Ok(())
    }
}

/// Joint `P_do(s, y)` of the mutilated model with `X` clamped to `x`.
fn mutilated_joint(scm: &DiscreteScm, x: usize) -> Vec<[f64; 2]> {
    (0..scm.ny)
        .map(|y| [0, 1].map(|s| scm.p_s[s] * scm.p_y_given_xs(s, x, y)))
        .collect()
}

/// `P(y|do(x))` for every `y`, marginalizing the mutilated model over `S`.
pub fn interventional(scm: &DiscreteScm, x: usize) -> Result<Vec<f64>, OracleError> {
    scm.check_x(x)?;
    Ok(mutilated_joint(scm, x)
        .into_iter()
        .map(|[s0, s1]| s0 + s1)
        .collect())
}

/// `P(x,y,S=1)/P(x|S=1) + P(x,y,S=0)/P(x|S=0)` for every `y`, from the
/// observational joint only.
pub fn backdoor_eq7(scm: &DiscreteScm, x: usize) -> Result<Vec<f64>, OracleError> {
    scm.check_x(x)?;
    let joint = JointTable::from_scm(scm);
    joint.require_support(x)?;
    let px_s1 = joint.p_x_given_s(x, 1);
    let px_s0 = joint.p_x_given_s(x, 0);
    Ok((0..scm.ny)
        .map(|y| joint.p_xys(x, y, 1) / px_s1 + joint.p_xys(x, y, 0) / px_s0)
        .collect())
}

/// Ways to break the backdoor derivation, for negative controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChainFault {
    None,
    /// Weight `P(y|x,s)` by `P(s|x)` instead of `P(s)`, i.e. keep the
    /// observational `S` distribution when removing `do()`.
    SkipDoRemoval,
    /// Evaluate the observational links on a model whose `P(Y|X=x,S=s)` row
    /// is mixed with the uniform row by `amount`.
    PerturbConditional { s: usize, amount: f64 },
}

/// Named values of each line of the backdoor derivation for one `(x, y)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct A1Chain {
    pub links: Vec<(&'static str, f64)>,
}

impl A1Chain {
    pub fn final_value(&self) -> f64 {
        self.links.last().map_or(f64::NAN, |&(_, v)| v)
    }

    /// Largest absolute difference between consecutive lines.
    pub fn max_link_deviation(&self) -> f64 {
        self.links
            .windows(2)
            .map(|w| (w[0].1 - w[1].1).abs())
            .fold(0.0, f64::max)
    }

    pub fn check(&self, tol: f64) -> Result<(), OracleError> {
        for w in self.links.windows(2) {
            let deviation = (w[0].1 - w[1].1).abs();
            if !(deviation <= tol) {
                return Err(OracleError::IdentityViolated {
                    identity: format!("{} -> {}", w[0].0, w[1].0),
                    lhs: w[0].1,
                    rhs: w[1].1,
                    deviation,
                });
            }
        }
        Ok(())
    }
}

/// Evaluates every line of the derivation
///
/// ```text
/// P(y|do(x))
///   = Σ_s P(y|do(x),s) P(s|do(x))
///   = Σ_s P(y|x,s) P(s)
///   = Σ_s P(x,y,s)/P(x,s) · P(s)
///   = Σ_s P(x,y,s)/P(x|s)
/// ```
///
/// without checking them; `fault` injects a known error.
pub fn a1_chain_values(
    scm: &DiscreteScm,
    x: usize,
    y: usize,
    fault: ChainFault,
) -> Result<A1Chain, OracleError> {
    scm.check_x(x)?;
    scm.check_y(y)?;
    let observed = match fault {
        ChainFault::PerturbConditional { s, amount } => {
            let uniform = 1.0 / scm.ny as f64;
            let row: Vec<f64> = (0..scm.ny)
                .map(|k| (1.0 - amount) * scm.p_y_given_xs(s, x, k) + amount * uniform)
                .collect();
            scm.with_y_row(s, x, &row)?
        }
        _ => scm.clone(),
    };
    let joint = JointTable::from_scm(&observed);
    joint.require_support(x)?;

    let p_do_y = interventional(scm, x)?[y];

    let mutilated = mutilated_joint(scm, x);
    let do_s = |s: usize| mutilated.iter().map(|row| row[s]).sum::<f64>();
    let with_do: f64 = (0..2)
        .map(|s| {
            let p_s_do = do_s(s);
            let p_y_do_s = mutilated[y][s] / p_s_do;
            p_y_do_s * p_s_do
        })
        .sum();

    let without_do: f64 = (0..2)
        .map(|s| {
            let weight = match fault {
                ChainFault::SkipDoRemoval => joint.p_s_given_x(s, x),
                _ => joint.p_s(s),
            };
            joint.p_y_given_xs(y, x, s) * weight
        })
        .sum();

    let joint_ratio: f64 = (0..2)
        .map(|s| joint.p_xys(x, y, s) / joint.p_xs(x, s) * joint.p_s(s))
        .sum();

    let eq7: f64 = (0..2)
        .map(|s| joint.p_xys(x, y, s) / joint.p_x_given_s(x, s))
        .sum();

    Ok(A1Chain {
        links: vec![
            ("P(y|do(x))", p_do_y),
            ("sum_s P(y|do(x),s)P(s|do(x))", with_do),
            ("sum_s P(y|x,s)P(s)", without_do),
            ("sum_s P(x,y,s)/P(x,s)*P(s)", joint_ratio),
            ("sum_s P(x,y,s)/P(x|s)", eq7),
        ],
    })
}

/// [`a1_chain_values`] without faults, failing if any two consecutive lines
/// differ by more than [`IDENTITY_TOL`].
pub fn verify_a1_chain(scm: &DiscreteScm, x: usize, y: usize) -> Result<A1Chain, OracleError> {
    let chain = a1_chain_values(scm, x, y, ChainFault::None)?;
    chain.check(IDENTITY_TOL)?;
    Ok(chain)
}

/// `L(y, f(x))` for every `(x, y)`, row-major `[|X| × |Y|]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossTable {
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

impl LossTable {
    pub fn new(nx: usize, ny: usize, values: Vec<f64>) -> Result<Self, OracleError> {
        if values.len() != nx * ny {
            return Err(OracleError::InvalidScm(format!(
                "loss table has {} entries, expected {}",
                values.len(),
                nx * ny
            )));
        }
        Ok(Self { nx, ny, values })
    }

    pub fn zeros(nx: usize, ny: usize) -> Self {
        Self {
            nx,
            ny,
            values: vec![0.0; nx * ny],
        }
    }

    /// Table for a deterministic classifier `x ↦ prediction[x]` under a
    /// label-by-prediction loss matrix `loss[y][ŷ]`.
    pub fn from_classifier(prediction: &[usize], loss: &[Vec<f64>]) -> Self {
        let nx = prediction.len();
        let ny = loss.len();
        let values = (0..nx)
            .flat_map(|x| (0..ny).map(move |y| (x, y)))
            .map(|(x, y)| loss[y][prediction[x]])
            .collect();
        Self { nx, ny, values }
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[x * self.ny + y]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiskDecomposition {
    /// Risk under the intervened distribution, `Σ L·P(y|do(x))·P(x)`.
    pub lhs: f64,
    /// Two-domain reweighted risk, `Σ L·[P(x)/P(x|s)]·P(x,y,s)`.
    pub rhs: f64,
}

fn risk_parts(scm: &DiscreteScm, loss: &LossTable) -> Result<(JointTable, RiskDecomposition), OracleError> {
    if loss.nx != scm.nx || loss.ny != scm.ny {
        return Err(OracleError::InvalidScm(format!(
            "loss table is {}x{}, scm is {}x{}",
            loss.nx, loss.ny, scm.nx, scm.ny
        )));
    }
    let joint = JointTable::from_scm(scm);
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for x in 0..scm.nx {
        joint.require_support(x)?;
        let p_x = joint.p_x(x);
        let p_do = interventional(scm, x)?;
        let weights = [0, 1].map(|s| p_x / joint.p_x_given_s(x, s));
        for y in 0..scm.ny {
            let l = loss.get(x, y);
            lhs += l * p_do[y] * p_x;
            rhs += (0..2).map(|s| l * weights[s] * joint.p_xys(x, y, s)).sum::<f64>();
        }
    }
    Ok((joint, RiskDecomposition { lhs, rhs }))
}

/// Both sides of the intervened-risk decomposition; errors if they differ by
/// more than [`IDENTITY_TOL`].
pub fn risk_decomposition(scm: &DiscreteScm, loss: &LossTable) -> Result<RiskDecomposition, OracleError> {
    let (_, parts) = risk_parts(scm, loss)?;
    let deviation = (parts.lhs - parts.rhs).abs();
    if !(deviation <= IDENTITY_TOL) {
        return Err(OracleError::IdentityViolated {
            identity: "intervened risk = two-domain risk".into(),
            lhs: parts.lhs,
            rhs: parts.rhs,
            deviation,
        });
    }
    Ok(parts)
}

/// Ordinary risk `Σ L·P(x,y)`, which is what the intervened risk collapses to
/// when the `do()` removal is skipped.
pub fn observational_risk(scm: &DiscreteScm, loss: &LossTable) -> f64 {
    let joint = JointTable::from_scm(scm);
    (0..scm.nx)
        .flat_map(|x| (0..scm.ny).map(move |y| (x, y)))
        .map(|(x, y)| loss.get(x, y) * joint.p_xy(x, y))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PropensityCheck {
    /// `P(x)/P(x|s)`
    pub lhs: f64,
    /// `P(s)/P(s|x)`
    pub rhs: f64,
    pub p_s_given_x: f64,
    /// `lhs · P(s|x)`, which equals `P(s)`.
    pub constant: f64,
}

/// `P(x)/P(x|s) = P(s)/P(s|x)`; with `P(S)` uniform additionally checks
/// `P(x)/P(x|s) = 0.5/P(s|x)`.
pub fn propensity_identity(scm: &DiscreteScm, x: usize, s: usize) -> Result<PropensityCheck, OracleError> {
    scm.check_x(x)?;
    if s > 1 {
        return Err(OracleError::InvalidScm(format!("s={s} is not binary")));
    }
    let joint = JointTable::from_scm(scm);
    joint.require_support(x)?;
    let p_s_given_x = joint.p_s_given_x(s, x);
    let lhs = joint.p_x(x) / joint.p_x_given_s(x, s);
    let rhs = joint.p_s(s) / p_s_given_x;
    let violated = |identity: &str, lhs: f64, rhs: f64| OracleError::IdentityViolated {
        identity: identity.into(),
        lhs,
        rhs,
        deviation: (lhs - rhs).abs(),
    };
    if !((lhs - rhs).abs() <= IDENTITY_TOL) {
        return Err(violated("P(x)/P(x|s) = P(s)/P(s|x)", lhs, rhs));
    }
    if scm.p_s == [0.5, 0.5] {
        let half = 0.5 / p_s_given_x;
        if !((lhs - half).abs() <= IDENTITY_TOL) {
            return Err(violated("P(x)/P(x|s) = 0.5/P(s|x)", lhs, half));
        }
    }
    Ok(PropensityCheck {
        lhs,
        rhs,
        p_s_given_x,
        constant: lhs * p_s_given_x,
    })
}

/// Point drawn from the flat simplex, redrawn until every entry is at least
/// [`MIN_SUPPORT`].
pub fn random_simplex_row<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    loop {
        let draws: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
        let total: f64 = draws.iter().sum();
        let row: Vec<f64> = draws.iter().map(|d| d / total).collect();
        if row.iter().all(|&v| v >= MIN_SUPPORT) {
            return row;
        }
    }
}

/// Full-support random SCM. `p_s = None` draws `P(S)` from the simplex too.
pub fn random_scm<R: Rng + ?Sized>(rng: &mut R, nx: usize, ny: usize, p_s: Option<[f64; 2]>) -> DiscreteScm {
    let p_s = p_s.unwrap_or_else(|| {
        let row = random_simplex_row(rng, 2);
        [row[0], 1.0 - row[0]]
    });
    let p_x: Vec<Vec<f64>> = (0..2).map(|_| random_simplex_row(rng, nx)).collect();
    let p_y: Vec<Vec<Vec<f64>>> = (0..2)
        .map(|_| (0..nx).map(|_| random_simplex_row(rng, ny)).collect())
        .collect();
    DiscreteScm::new(p_s, p_x, p_y).expect("generated rows are valid")
}

/// Worst-case outcome of one identity over a batch of random models.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentitySummary {
    pub identity: &'static str,
    pub cases: usize,
    pub failures: usize,
    pub worst_deviation: f64,
}

impl IdentitySummary {
    fn new(identity: &'static str) -> Self {
        Self {
            identity,
            cases: 0,
            failures: 0,
            worst_deviation: 0.0,
        }
    }

    fn record(&mut self, deviation: f64) {
        self.cases += 1;
        if !(deviation <= IDENTITY_TOL) {
            self.failures += 1;
        }
        // NaN propagates as the worst case
        if deviation.is_nan() || deviation > self.worst_deviation {
            self.worst_deviation = deviation;
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// A random deterministic classifier on `X` and a random loss matrix.
pub fn random_loss_table<R: Rng + ?Sized>(rng: &mut R, nx: usize, ny: usize) -> LossTable {
    let prediction: Vec<usize> = (0..nx).map(|_| rng.gen_range(0..ny)).collect();
    let loss: Vec<Vec<f64>> = (0..ny)
        .map(|_| (0..ny).map(|_| rng.gen_range(0.0..1.0)).collect())
        .collect();
    LossTable::from_classifier(&prediction, &loss)
}

/// Checks every identity on `count` random SCMs with `2 <= |X|, |Y| <= max_card`.
/// Every other SCM has a uniform `P(S)`.
pub fn verify_random_scms<R: Rng + ?Sized>(rng: &mut R, count: usize, max_card: usize) -> Vec<IdentitySummary> {
    let max_card = max_card.clamp(2, MAX_CARDINALITY);
    let mut backdoor = IdentitySummary::new("P(y|do(x)) = sum_s P(x,y,s)/P(x|s)");
    let mut chain_end = IdentitySummary::new("P(y|do(x)) = last line of derivation");
    let mut chain_links = IdentitySummary::new("consecutive derivation lines");
    let mut risk = IdentitySummary::new("intervened risk = two-domain risk");
    let mut propensity = IdentitySummary::new("P(x)/P(x|s) = P(s)/P(s|x)");
    let mut uniform = IdentitySummary::new("uniform P(S): P(x)/P(x|s) = 0.5/P(s|x)");
    for i in 0..count {
        let nx = rng.gen_range(2..=max_card);
        let ny = rng.gen_range(2..=max_card);
        let p_s = (i % 2 == 1).then_some([0.5, 0.5]);
        let scm = random_scm(rng, nx, ny, p_s);
        let joint = JointTable::from_scm(&scm);
        for x in 0..nx {
            let (Ok(p_do), Ok(adjusted)) = (interventional(&scm, x), backdoor_eq7(&scm, x)) else {
                backdoor.record(f64::NAN);
                continue;
            };
            for y in 0..ny {
                backdoor.record((p_do[y] - adjusted[y]).abs());
                match a1_chain_values(&scm, x, y, ChainFault::None) {
                    Ok(chain) => {
                        chain_end.record((p_do[y] - chain.final_value()).abs());
                        chain_links.record(chain.max_link_deviation());
                    }
                    Err(_) => {
                        chain_end.record(f64::NAN);
                        chain_links.record(f64::NAN);
                    }
                }
            }
            for s in 0..2 {
                let lhs = joint.p_x(x) / joint.p_x_given_s(x, s);
                let p_s_given_x = joint.p_s_given_x(s, x);
                propensity.record((lhs - joint.p_s(s) / p_s_given_x).abs());
                if p_s.is_some() {
                    uniform.record((lhs - 0.5 / p_s_given_x).abs());
                }
            }
        }
        let loss = random_loss_table(rng, nx, ny);
        match risk_parts(&scm, &loss) {
            Ok((_, parts)) => risk.record((parts.lhs - parts.rhs).abs()),
            Err(_) => risk.record(f64::NAN),
        }
    }
    vec![backdoor, chain_end, chain_links, risk, propensity, uniform]
}
