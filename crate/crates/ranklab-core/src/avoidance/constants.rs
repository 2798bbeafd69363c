//! The coupled constant system driving the avoiding-ray iteration, with its
//! validation and the empirical certificates feeding it.

use crate::avoidance::distortion::PsiConstants;
use crate::avoidance::support::{self, StratifiedSupport};
// float methods come from the trait in no_std builds; std test harnesses shadow it
#[allow(unused_imports)]
use crate::num::FloatExt;
use crate::error::{Error, Result};
use crate::flow::{self, FlowOptions};
use crate::geometry::{random_unit_vector, ManifoldModel};
use crate::hyperbolicity::ShrinkCertificate;
use crate::trial_rng;
use alloc::format;
use alloc::string::String;

/// Empirical clearance floor: vectors starting at least `epsilon` from the
/// tangent bundle of the support stay at least `beta * epsilon` from it over
/// one waiting window of flow.
#[derive(Debug, Clone, Copy)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BetaCertificate {
    pub beta: f64,
    pub min_clearance: f64,
    pub epsilon: f64,
    pub window: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Samples vectors with clearance `>= epsilon`, flows them over
/// `[-window, window]` and records the worst clearance reached.
pub fn calibrate_beta(
    model: &ManifoldModel,
    sup: &StratifiedSupport,
    epsilon: f64,
    window: f64,
    samples: usize,
    seed: u64,
    opts: &FlowOptions,
) -> Result<BetaCertificate> {
    let domain = crate::geometry::default_domain(model);
    let mut worst = f64::INFINITY;
    let mut used = 0usize;
    let mut k = 0u64;
    while used < samples && k < 50 * samples as u64 {
        let mut rng = trial_rng(seed, k);
        k += 1;
        let p = domain.sample_point(&mut rng);
        if !model.contains(&p) {
            continue;
        }
        let v = random_unit_vector(model, &p, &mut rng);
        if support::dist_ur(model, sup, &v, false, opts)?.value < epsilon {
            continue;
        }
        used += 1;
        let path = flow::geodesic(model, &v, -window, window, opts)?;
        let steps = (2.0 * window / 0.25).ceil() as usize;
        for s in 0..=steps {
            let t = -window + 2.0 * window * s as f64 / steps as f64;
            let u = path.velocity(t);
            let lb = support::dist_ur_lower_bound(model, sup, &u.base, opts)?;
            if lb >= worst {
                continue;
            }
            let d = support::dist_ur(model, sup, &u, false, opts)?.value;
            worst = worst.min(d);
        }
    }
    if !worst.is_finite() || used == 0 {
        return Err(Error::InvalidInput {
            detail: String::from("no clearance samples found for the beta certificate"),
        });
    }
    let beta = (0.9 * worst / epsilon).min(0.95).max(1e-4);
    Ok(BetaCertificate { beta, min_clearance: worst, epsilon, window, samples: used, seed })
}

/// The full constant set of the avoiding-ray iteration.
#[derive(Debug, Clone, Copy)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConstantsLedger {
    pub r0: f64,
    pub tau: f64,
    /// Displacement bound of one sphere deformation.
    pub c_disp: f64,
    /// Working scale: `epsilon = tau / 20`.
    pub epsilon: f64,
    /// `delta = (c_disp + tau/2) / epsilon`; scale free.
    pub delta: f64,
    /// Shrinking factor `N > 1 + delta/2`.
    pub n_shrink: u32,
    /// `delta/(N-1) < lambda < 2N - delta`.
    pub lambda: f64,
    /// Shield radius `> (delta + lambda) epsilon`.
    pub shield: f64,
    /// Shrinking distance from the certificate.
    pub a_dist: f64,
    /// Waiting window `> max(a_dist + 8 eps, r0 + 4 eps)`.
    pub b_wait: f64,
    /// Clearance floor factor in `(0, 1)`.
    pub beta: f64,
    // auxiliary constants carried along for reporting
    pub mu: f64,
    pub nu: f64,
    pub eta_prime: f64,
    pub kappa: f64,
}

impl ConstantsLedger {
    /// Re-checks every ledger inequality; names the first violated one.
    pub fn validate(&self) -> Result<()> {
        let fail = |name: &'static str, detail: String| Err(Error::ConstraintViolated { name, detail });
        if !(self.r0 > 2.0) {
            return fail("r0_floor", format!("r0 = {} must exceed 2", self.r0));
        }
        if (self.epsilon - self.tau / 20.0).abs() > 1e-12 * self.tau {
            return fail("epsilon_is_tau_over_20", format!("eps = {}, tau = {}", self.epsilon, self.tau));
        }
        let delta = (self.c_disp + self.tau / 2.0) / self.epsilon;
        if (self.delta - delta).abs() > 1e-9 * delta {
            return fail("delta_formula", format!("delta = {}, expected {}", self.delta, delta));
        }
        if !(f64::from(self.n_shrink) > 1.0 + self.delta / 2.0) {
            return fail(
                "n_shrink_floor",
                format!("N = {} must exceed 1 + delta/2 = {}", self.n_shrink, 1.0 + self.delta / 2.0),
            );
        }
        let n = f64::from(self.n_shrink);
        let lo = self.delta / (n - 1.0);
        let hi = 2.0 * n - self.delta;
        if !(lo < hi) {
            return fail("lambda_interval", format!("delta/(N-1) = {lo} >= 2N - delta = {hi}"));
        }
        if !(self.lambda > lo && self.lambda < hi) {
            return fail("lambda_range", format!("lambda = {} outside ({lo}, {hi})", self.lambda));
        }
        if !(self.shield > (self.delta + self.lambda) * self.epsilon) {
            return fail(
                "shield_floor",
                format!(
                    "shield = {} must exceed (delta+lambda) eps = {}",
                    self.shield,
                    (self.delta + self.lambda) * self.epsilon
                ),
            );
        }
        if !(self.b_wait > self.a_dist + 8.0 * self.epsilon) {
            return fail(
                "wait_beyond_shrink",
                format!("b_wait = {} <= a_dist + 8 eps = {}", self.b_wait, self.a_dist + 8.0 * self.epsilon),
            );
        }
        if !(self.b_wait > self.r0 + 4.0 * self.epsilon) {
            return fail(
                "wait_beyond_radius",
                format!("b_wait = {} <= r0 + 4 eps = {}", self.b_wait, self.r0 + 4.0 * self.epsilon),
            );
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return fail("beta_range", format!("beta = {}", self.beta));
        }
        Ok(())
    }
}

/// Scale-free part of the constant choices, shared between the ledger
/// assembly and the certificate preparation (the shrink calibration needs the
/// shield radius and shrinking factor before the ledger exists).
#[derive(Debug, Clone, Copy)]
pub struct LedgerPlan {
    pub epsilon: f64,
    pub delta: f64,
    pub n_shrink: u32,
    pub lambda: f64,
    pub shield: f64,
}

pub fn plan_constants(psi: &PsiConstants) -> Result<LedgerPlan> {
    let tau = psi.tau;
    let epsilon = tau / 20.0;
    let delta = (psi.c_disp + tau / 2.0) / epsilon;
    let n_shrink = (2.0 + delta / 2.0).ceil() as u32;
    let n = f64::from(n_shrink);
    let lo = delta / (n - 1.0);
    let hi = 2.0 * n - delta;
    if !(lo < hi) {
        return Err(Error::ConstraintViolated {
            name: "lambda_interval",
            detail: format!("delta/(N-1) = {lo} >= 2N - delta = {hi}"),
        });
    }
    let lambda = (lo + hi.min(lo + 2.0)) / 2.0;
    let shield = 1.05 * (delta + lambda) * epsilon;
    Ok(LedgerPlan { epsilon, delta, n_shrink, lambda, shield })
}

/// Assembles the ledger from the distortion calibration, the shrink
/// certificate and the clearance certificate.
///
/// `delta` and the shrinking factor are scale free; `tau` (and with it every
/// length) is scaled down when the shrink certificate asks for a smaller
/// shield than the natural choice provides.
pub fn choose_constants(
    r0: f64,
    psi: &PsiConstants,
    shrink: &ShrinkCertificate,
    beta_cert: &BetaCertificate,
) -> Result<ConstantsLedger> {
    if !shrink.accepted {
        return Err(Error::ConstraintViolated {
            name: "shrink_certificate",
            detail: format!("certificate rejected with {} failures", shrink.failures),
        });
    }
    let tau = psi.tau;
    let c_disp = psi.c_disp;
    let plan = plan_constants(psi)?;
    let LedgerPlan { epsilon, delta, n_shrink, lambda, shield } = plan;
    if shrink.delta < shield {
        return Err(Error::ConstraintViolated {
            name: "shield_certified",
            detail: format!(
                "certificate shield {} below the required {}; recalibrate with a larger shield",
                shrink.delta, shield
            ),
        });
    }
    let a_dist = shrink.a;
    let b_wait = (a_dist + 8.0 * epsilon).max(r0 + 4.0 * epsilon) + 0.5;
    if beta_cert.window + 1e-9 < b_wait {
        return Err(Error::ConstraintViolated {
            name: "beta_window",
            detail: format!(
                "clearance certificate window {} shorter than the waiting window {}",
                beta_cert.window, b_wait
            ),
        });
    }
    if beta_cert.beta * epsilon >= beta_cert.min_clearance {
        return Err(Error::ConstraintViolated {
            name: "beta_floor",
            detail: format!(
                "beta*eps = {} not below the certified clearance {}",
                beta_cert.beta * epsilon,
                beta_cert.min_clearance
            ),
        });
    }
    let ledger = ConstantsLedger {
        r0,
        tau,
        c_disp,
        epsilon,
        delta,
        n_shrink,
        lambda,
        shield,
        a_dist,
        b_wait,
        beta: beta_cert.beta,
        mu: psi.mu,
        nu: psi.nu,
        eta_prime: psi.eta_prime,
        kappa: psi.kappa,
    };
    ledger.validate()?;
    Ok(ledger)
}
