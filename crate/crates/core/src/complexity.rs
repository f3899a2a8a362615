//! Bound functionals tying moduli, covering numbers and entropies together:
//! the net-decomposition bound on the hull modulus, entropy integrals, the
//! Sudakov ratio, dyadic chaining from modulus to entropy, and the closed-form
//! reference rate curves for the polynomial covering / polynomial entropy
//! regimes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nets::CoveringCurve;
use crate::process::ModulusCurve;

/// Largest argument accepted by the reference rate curves; keeps every
/// logarithm at least 1 so negative log powers stay bounded.
pub const RATE_X_MAX: f64 = 1.0 / std::f64::consts::E;

/// Upper bound on the hull modulus at `delta` from the class modulus and
/// covering curve: min over the modulus grid of 2ω̂(ε) + δ·√N̂(ε).
///
/// The covering number at ε is read from the finest covering knot ≤ ε, which
/// keeps every candidate an upper bound; grid points with no such knot are
/// skipped. Returns the bound and the minimizing ε.
pub fn hull_modulus_bound(
    mod_f: &ModulusCurve,
    cov_f: &CoveringCurve,
    delta: f64,
) -> Result<(f64, f64)> {
    if !(delta >= 0.0) {
        return Err(Error::InvalidInput(format!("δ = {delta} must be nonnegative")));
    }
    let mut best: Option<(f64, f64)> = None;
    for (&eps, &omega) in mod_f.deltas.iter().zip(&mod_f.estimates) {
        let Some(size) = cov_f.size_upper_at(eps) else { continue };
        let candidate = 2.0 * omega + delta * (size as f64).sqrt();
        if best.map_or(true, |(v, _)| candidate < v) {
            best = Some((candidate, eps));
        }
    }
    best.ok_or(Error::EmptyGrid)
}

/// Monte Carlo half-width of the bound at the minimizing ε: the only random
/// component is the class modulus, which enters with coefficient 2.
pub fn hull_modulus_bound_std_error(mod_f: &ModulusCurve, argmin_eps: f64) -> Result<f64> {
    Ok(2.0 * mod_f.std_error_at_knot(argmin_eps)?)
}

/// ∫_lower^upper H^{1/2}(F, u) du over the step function implied by the
/// covering curve: on [ε_i, ε_{i−1}) the entropy is the value at the finer
/// knot ε_i, and below the finest knot the curve extends as a constant
/// (reported convention for unresolved scales). Errors when `upper` exceeds
/// the coarsest knot.
pub fn dudley_integral(cov: &CoveringCurve, lower: f64, upper: f64) -> Result<f64> {
    if !(lower >= 0.0) || !lower.is_finite() || !upper.is_finite() {
        return Err(Error::InvalidInput(format!("bad integration range [{lower}, {upper}]")));
    }
    if lower > upper {
        return Err(Error::InvalidInput(format!(
            "integration range [{lower}, {upper}] is reversed"
        )));
    }
    if upper > cov.coarsest() * (1.0 + 1e-12) {
        return Err(Error::InvalidInput(format!(
            "grid reaching only {} does not cover upper limit {upper}",
            cov.coarsest()
        )));
    }
    let eps = &cov.epsilons;
    let k = eps.len();
    let mut total = 0.0;
    for j in 1..k {
        let lo = lower.max(eps[j]);
        let hi = upper.min(eps[j - 1]);
        if hi > lo {
            total += (hi - lo) * cov.entropies[j].sqrt();
        }
    }
    let lo = lower;
    let hi = upper.min(eps[k - 1]);
    if hi > lo {
        total += (hi - lo) * cov.entropies[k - 1].sqrt();
    }
    Ok(total)
}

/// (max over the grid of ε·√H(ε)) / sup_estimate — a reporting functional for
/// the minoration direction; no constant is asserted.
pub fn sudakov_ratio(cov: &CoveringCurve, sup_estimate: f64) -> Result<f64> {
    if !(sup_estimate > 0.0) {
        return Err(Error::InvalidInput(format!(
            "supremum estimate {sup_estimate} must be positive"
        )));
    }
    let numerator = cov
        .epsilons
        .iter()
        .zip(&cov.entropies)
        .map(|(&e, &h)| e * h.sqrt())
        .fold(0.0_f64, f64::max);
    Ok(numerator / sup_estimate)
}

/// Which dyadic chaining sum to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainingVariant {
    /// Σ_{i=0}^{k} 2^i ω(2^{1−i}) — entropy of the class itself from its
    /// modulus; the class diameter must be normalized to 1 by the caller.
    Direct,
    /// Σ_{i=0}^{k} 2^i ω_i(2^{2−i}), where the curve knot at 2^{2−i} holds
    /// the modulus of the 2^{−i−1}-separated subset at that scale.
    Separated,
}

/// Dyadic chaining sum bounding H^{1/2}(F, 2^{−k}); the absolute constant is
/// left to the caller's constants profile.
pub fn entropy_from_modulus(
    modulus: &ModulusCurve,
    k: u32,
    variant: ChainingVariant,
) -> Result<f64> {
    let shift = match variant {
        ChainingVariant::Direct => 1,
        ChainingVariant::Separated => 2,
    };
    let mut total = 0.0;
    for i in 0..=k as i32 {
        let scale = (2.0_f64).powi(shift - i);
        let omega = modulus.value_at_knot(scale)?;
        total += (2.0_f64).powi(i) * omega;
    }
    Ok(total)
}

/// Closed-form reference curves for the two entropy-growth regimes and their
/// hull-entropy counterparts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateKind {
    /// Hull modulus when covering numbers grow like ε^{−V}:
    /// δ^{2/(2+V)} log^{V/(2+V)}(1/δ).
    PolyCoveringModulus { v: f64 },
    /// Hull modulus when entropy grows like ε^{−V}, 0 < V < 2:
    /// log^{1/2−1/V}(1/δ).
    PolyEntropyModulusSmall { v: f64 },
    /// Same at the critical exponent V = 2 (separated-subset form):
    /// log(1/δ).
    PolyEntropyModulusCritical,
    /// Same for V > 2 (separated-subset form): δ^{1−V/2}.
    PolyEntropyModulusLarge { v: f64 },
    /// Hull entropy under polynomial covering: ε^{−2V/(2+V)} log^{2V/(2+V)}(1/ε).
    PolyCoveringHullEntropy { v: f64 },
    /// Hull entropy under polynomial entropy: ε^{−2} log^{1−V/2}(1/ε) for
    /// V < 2, ε^{−2} log²(1/ε) at V = 2, ε^{−V} for V > 2.
    PolyEntropyHullEntropy { v: f64 },
}

/// A reference curve together with its multiplicative constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateCurve {
    #[serde(flatten)]
    pub kind: RateKind,
    pub k: f64,
}

impl RateCurve {
    pub fn new(kind: RateKind, k: f64) -> Result<Self> {
        if !(k > 0.0) {
            return Err(Error::InvalidInput(format!("rate constant {k} must be positive")));
        }
        match kind {
            RateKind::PolyCoveringModulus { v }
            | RateKind::PolyCoveringHullEntropy { v }
            | RateKind::PolyEntropyHullEntropy { v } => {
                if !(v > 0.0) {
                    return Err(Error::InvalidInput(format!("exponent V = {v} must be positive")));
                }
            }
            RateKind::PolyEntropyModulusSmall { v } => {
                if !(v > 0.0 && v < 2.0) {
                    return Err(Error::InvalidInput(format!(
                        "exponent V = {v} outside (0, 2)"
                    )));
                }
            }
            RateKind::PolyEntropyModulusLarge { v } => {
                if !(v > 2.0) {
                    return Err(Error::InvalidInput(format!("exponent V = {v} must exceed 2")));
                }
            }
            RateKind::PolyEntropyModulusCritical => {}
        }
        Ok(Self { kind, k })
    }

    /// Exact evaluation; the argument must lie in (0, 1/e] so every logarithm
    /// is at least 1.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(x > 0.0 && x <= RATE_X_MAX * (1.0 + 1e-12)) {
            return Err(Error::InvalidInput(format!(
                "argument {x} outside (0, {RATE_X_MAX:.4}]"
            )));
        }
        let log_inv = (1.0 / x).ln();
        let value = match self.kind {
            RateKind::PolyCoveringModulus { v } => {
                x.powf(2.0 / (2.0 + v)) * log_inv.powf(v / (2.0 + v))
            }
            RateKind::PolyEntropyModulusSmall { v } => log_inv.powf(0.5 - 1.0 / v),
            RateKind::PolyEntropyModulusCritical => log_inv,
            RateKind::PolyEntropyModulusLarge { v } => x.powf(1.0 - v / 2.0),
            RateKind::PolyCoveringHullEntropy { v } => {
                x.powf(-2.0 * v / (2.0 + v)) * log_inv.powf(2.0 * v / (2.0 + v))
            }
            RateKind::PolyEntropyHullEntropy { v } => {
                if v < 2.0 {
                    x.powi(-2) * log_inv.powf(1.0 - v / 2.0)
                } else if v == 2.0 {
                    x.powi(-2) * log_inv * log_inv
                } else {
                    x.powf(-v)
                }
            }
        };
        Ok(self.k * value)
    }
}
