use std::time::Instant;

use num_complex::Complex64;
use rand::RngCore;
use rayon::prelude::*;

use super::config::RunConfig;
use super::report::{SuiteReport, SuiteResult, Timing};
use super::sampling::{sample_char, sample_half, sample_point, sample_tau, sample_tau_box, stream};
use crate::error::{Result, ThetaError};
use crate::identities::{
    c_rank_one_ratio, verify_ac, verify_ac_round_trips, verify_addition_converse, verify_addition_forward,
    verify_cyclic_family, verify_doubling, verify_shift, AcDirection, Criterion, IdentityReport, IndexPlan,
};
use crate::jacobi::{
    classical_consistency_residual, classical_jacobi_residual, estimate_constant, finite_difference_d,
    derivative_scale, generalized_residual, heat_disagreement, index_tuples,
};
use crate::moduli::{
    direct_constants, direct_products, product_witness, phi_map, product_reconstruction, rank_check,
    reconstruct_constants, separation_probe, ProjectivePoint,
};
use crate::numeric::max_diff;
use crate::period::PeriodMatrix;
use crate::rational::RationalVector;
use crate::theta::theta_jet;
use crate::truncation::TruncationPolicy;

/// Drift allowed between residuals at the selected and the doubled radius.
pub const STABILITY_TOLERANCE: f64 = 1e-10;

struct Ctx<'a> {
    cfg: &'a RunConfig,
    policy: TruncationPolicy,
}

fn error_report(identity: &str, g: usize, n: u64, e: &ThetaError) -> IdentityReport {
    let mut r = IdentityReport::below(format!("{identity}:error"), g, n, 1.0, 1.0, 0.0)
        .with_input("error", e.to_string());
    r.pass = false;
    r
}

fn collect(identity: &str, g: usize, n: u64, r: Result<Vec<IdentityReport>>) -> Vec<IdentityReport> {
    r.unwrap_or_else(|e| vec![error_report(identity, g, n, &e)])
}

/// Runs `f` over `0..count` in parallel, keeping index order.
fn per_sample<F>(count: usize, identity: &str, g: usize, n: u64, f: F) -> Vec<IdentityReport>
where
    F: Fn(u64) -> Result<Vec<IdentityReport>> + Sync,
{
    (0..count as u64)
        .into_par_iter()
        .map(|i| {
            collect(identity, g, n, f(i))
                .into_iter()
                .map(|mut r| {
                    r.level = n;
                    r.with_input("sample", i)
                })
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

impl Ctx<'_> {
    /// The report at the configured radius, followed by its drift under a doubled radius.
    fn stable<F>(&self, f: F) -> Result<Vec<IdentityReport>>
    where
        F: Fn(&TruncationPolicy) -> Result<IdentityReport>,
    {
        let base = f(&self.policy)?;
        if !self.cfg.stability {
            return Ok(vec![base]);
        }
        let doubled = f(&self.policy.doubled())?;
        let drift = IdentityReport::below(
            format!("{}:radius-stability", base.identity),
            base.genus,
            base.level,
            (base.residual - doubled.residual).abs(),
            1.0,
            STABILITY_TOLERANCE,
        )
        .with_input("residual_doubled", doubled.residual)
        .with_degraded(doubled.degraded);
        Ok(vec![base, drift])
    }

    fn rng(&self, suite: &str, g: usize, n: u64, i: u64) -> rand_chacha::ChaCha8Rng {
        stream(self.cfg.seed, &format!("{suite}/{g}/{n}"), i)
    }

    fn shift(&self, g: usize, n: u64) -> Vec<IdentityReport> {
        per_sample(self.cfg.samples, "shift", g, n, |i| {
            let mut rng = self.rng("shift", g, n, i);
            let tau = sample_tau(g, self.cfg.seed, i);
            let z = sample_point(&mut rng, g);
            let [a, b, c, d] = [(); 4].map(|_| sample_char(&mut rng, 8 * n, g));
            self.stable(|p| verify_shift(&tau, &z, &a, &b, &c, &d, p))
        })
    }

    fn doubling(&self, g: usize, n: u64) -> Vec<IdentityReport> {
        per_sample(self.cfg.samples, "doubling", g, n, |i| {
            let mut rng = self.rng("doubling", g, n, i);
            let tau = sample_tau(g, self.cfg.seed, i);
            let z = sample_point(&mut rng, g);
            let a = sample_char(&mut rng, 8 * n, g);
            let beta = sample_half(&mut rng, g);
            self.stable(|p| verify_doubling(&tau, &z, &a, &beta, p))
        })
    }

    fn addition_forward(&self, g: usize, n: u64) -> Vec<IdentityReport> {
        per_sample(self.cfg.samples, "addition-forward", g, n, |i| {
            let mut rng = self.rng("addition-forward", g, n, i);
            let tau = sample_tau(g, self.cfg.seed, i);
            let (z, w) = (sample_point(&mut rng, g), sample_point(&mut rng, g));
            let (a, b) = (sample_char(&mut rng, 8 * n, g), sample_char(&mut rng, 8 * n, g));
            let eps = sample_half(&mut rng, g);
            self.stable(|p| verify_addition_forward(&tau, &z, &w, &a, &b, &eps, n, p))
        })
    }

    fn addition_converse(&self, g: usize, n: u64) -> Vec<IdentityReport> {
        per_sample(self.cfg.samples, "addition-converse", g, n, |i| {
            let mut rng = self.rng("addition-converse", g, n, i);
            let tau = sample_tau(g, self.cfg.seed, i);
            let (z, w) = (sample_point(&mut rng, g), sample_point(&mut rng, g));
            let (a, b) = (sample_char(&mut rng, 8 * n, g), sample_char(&mut rng, 8 * n, g));
            let (gamma, sigma) = (sample_half(&mut rng, g), sample_half(&mut rng, g));
            self.stable(|p| verify_addition_converse(&tau, &z, &w, &a, &b, &gamma, &sigma, n, p))
        })
    }

    /// Exhaustive plans use two period matrices; sampled plans spread the
    /// tuples over four.
    fn plans(&self, suite: &str, g: usize, n: u64) -> Vec<(PeriodMatrix, IndexPlan)> {
        let per_tau = self.cfg.samples.div_ceil(4);
        let probe = IndexPlan::default_for(g, n, per_tau, 0);
        let count = if probe == IndexPlan::Exhaustive { 2 } else { 4 };
        (0..count as u64)
            .map(|t| {
                let seed = stream(self.cfg.seed, &format!("{suite}-plan/{g}/{n}"), t).next_u64();
                (sample_tau(g, self.cfg.seed, t), IndexPlan::default_for(g, n, per_tau, seed))
            })
            .collect()
    }

    fn ac_theorem(&self, g: usize, n: u64) -> Vec<IdentityReport> {
        let plans = self.plans("ac-theorem", g, n);
        per_sample(plans.len(), "ac-theorem", g, n, |t| {
            let (tau, plan) = &plans[t as usize];
            let mut out = verify_ac(tau, n, &self.policy, AcDirection::A, *plan)?;
            out.extend(verify_ac(tau, n, &self.policy, AcDirection::B, *plan)?);
            out.extend(verify_ac_round_trips(tau, n, &self.policy, *plan)?);
            Ok(out)
        })
    }

    fn cyclic(&self, g: usize, n: u64) -> Vec<IdentityReport> {
        let plans = self.plans("cyclic", g, n);
        per_sample(plans.len(), "cyclic", g, n, |t| {
            let (tau, plan) = &plans[t as usize];
            verify_cyclic_family(tau, n, &self.policy, *plan)
        })
    }

    fn rank(&self, g: usize, n: u64) -> Vec<IdentityReport> {
        per_sample(2, "rank", g, n, |t| {
            let tau = sample_tau(g, self.cfg.seed, t);
            let mut out = Vec::new();
            if n >= 2 {
                for eps in RationalVector::half_integers(g) {
                    for delta in RationalVector::half_integers(g) {
                        let r = rank_check(&tau, n, &eps, &delta, &self.policy)?;
                        out.push(
                            IdentityReport::above("rank", g, n, r.ratio, crate::moduli::RANK_RATIO_FLOOR)
                                .with_tau(&tau)
                                .with_char("eps", &eps)
                                .with_char("delta", &delta),
                        );
                    }
                }
            }
            for a in RationalVector::grid(4 * n, g) {
                if let Some(ratio) = c_rank_one_ratio(&tau, &a, n, &self.policy)? {
                    out.push(IdentityReport::below("c-rank-one", g, n, ratio, 1.0, 1e-8).with_tau(&tau).with_char("a", &a));
                }
            }
            Ok(out)
        })
    }

    fn reconstruction(&self, g: usize, n: u64) -> Vec<IdentityReport> {
        if n < 2 {
            return Vec::new();
        }
        per_sample(self.cfg.reconstruction_samples, "reconstruction", g, n, |i| {
            let tau = sample_tau(g, self.cfg.seed, i);
            let frame = phi_map(&tau, n, &self.policy)?;
            let mut out = Vec::new();
            for gamma in RationalVector::half_integers(g) {
                for delta in RationalVector::half_integers(g) {
                    let report = match reconstruct_constants(&frame, &gamma, &delta, n, &self.policy) {
                        Ok(got) => {
                            let want = ProjectivePoint::new(direct_constants(&tau, &gamma, &delta, n, &self.policy)?)?;
                            let d = got.chordal_distance(&want)?;
                            IdentityReport::below("reconstruction", g, n, d, 1.0, 1e-6)
                        }
                        Err(e) => error_report("reconstruction", g, n, &e),
                    };
                    out.push(
                        report
                            .with_tau(&tau)
                            .with_char("gamma", &gamma)
                            .with_char("delta", &delta)
                            .with_degraded(frame.degraded()),
                    );
                }
            }
            Ok(out)
        })
    }

    fn product_reconstruction(&self, g: usize, n: u64) -> Vec<IdentityReport> {
        if n < 2 {
            return Vec::new();
        }
        let halves = RationalVector::half_integers(g);
        per_sample(self.cfg.reconstruction_samples, "product-reconstruction", g, n, |i| {
            let tau = sample_tau(g, self.cfg.seed, i);
            let frame = phi_map(&tau, n, &self.policy)?;
            let mut out = Vec::new();
            for sigma in &halves {
                for delta in &halves {
                    let mut first = None;
                    for (k, gamma) in halves.iter().enumerate() {
                        let witness = product_witness(&tau, gamma, sigma, delta, n, &self.policy)?;
                        let modulus = match &witness {
                            Some((a, b)) => direct_products(&tau, a, b, sigma, n, &self.policy)?[k].norm(),
                            None => 0.0,
                        };
                        if first.is_none() {
                            first = witness.clone();
                        }
                        out.push(
                            IdentityReport::above("product-reconstruction:witness", g, n, modulus, crate::moduli::ZERO_FLOOR)
                                .with_tau(&tau)
                                .with_char("gamma", gamma)
                                .with_char("sigma", sigma)
                                .with_char("delta", delta),
                        );
                    }
                    let Some((a, b)) = first else { continue };
                    let report = match product_reconstruction(&frame, &a, &b, sigma, delta, n, &self.policy) {
                        Ok(got) => {
                            let want = ProjectivePoint::new(direct_products(&tau, &a, &b, sigma, n, &self.policy)?)?;
                            IdentityReport::below("product-reconstruction", g, n, got.chordal_distance(&want)?, 1.0, 1e-6)
                        }
                        Err(e) => error_report("product-reconstruction", g, n, &e),
                    };
                    out.push(
                        report
                            .with_tau(&tau)
                            .with_char("a", &a)
                            .with_char("b", &b)
                            .with_char("sigma", sigma)
                            .with_char("delta", delta)
                            .with_degraded(frame.degraded()),
                    );
                }
            }
            Ok(out)
        })
    }

    fn separation(&self, g: usize, n: u64) -> Vec<IdentityReport> {
        if n < 2 || (g >= 3 && !self.cfg.all) {
            return Vec::new();
        }
        let mut out = per_sample(self.cfg.separation_pairs, "separation", g, n, |i| {
            let t1 = sample_tau(g, self.cfg.seed, 1000 + 2 * i);
            let t2 = sample_tau(g, self.cfg.seed, 1001 + 2 * i);
            Ok(vec![separation_probe(&t1, &t2, n, &self.policy)?.report])
        });
        let t = sample_tau(g, self.cfg.seed, 0);
        out.extend(collect(
            "separation",
            g,
            n,
            separation_probe(&t, &t, n, &self.policy).map(|p| vec![p.report]),
        ));
        out
    }

    fn jacobi_classical(&self, g: usize, n: u64) -> Vec<IdentityReport> {
        if g != 1 || Some(&n) != self.cfg.level.first() {
            return Vec::new();
        }
        per_sample(self.cfg.samples, "jacobi-classical", 1, 1, |i| {
            let tau = sample_tau_box(self.cfg.seed, i, 0.5, 3.0);
            Ok(vec![
                classical_jacobi_residual(&tau, &self.policy)?,
                classical_consistency_residual(&tau, &self.policy)?,
            ])
        })
    }

    fn jacobi_generalized(&self, g: usize, n: u64) -> Vec<IdentityReport> {
        let seed = self.cfg.seed;
        let fit: Vec<PeriodMatrix> = (0..self.cfg.jacobi_samples as u64).map(|i| sample_tau(g, seed, 2000 + i)).collect();
        let held: Vec<PeriodMatrix> = (0..self.cfg.heldout_samples as u64).map(|i| sample_tau(g, seed, 3000 + i)).collect();
        let tuples = index_tuples(g, n);
        per_sample(tuples.len(), "jacobi-generalized", g, n, |t| {
            let (a, delta) = &tuples[t as usize];
            let est = estimate_constant(&fit, a, delta, n, &self.policy)?;
            let mut out = vec![IdentityReport::below("jacobi-generalized:constancy", g, n, est.relative_std, 1.0, 1e-6)
                .with_char("a", a)
                .with_char("delta", delta)
                .with_input("constant", vec![est.estimate.re, est.estimate.im])
                .with_input("usable_samples", est.samples)
                .with_degraded(est.degraded)];
            for tau in &held {
                out.push(generalized_residual(tau, &est, &self.policy, 1e-8)?);
            }
            Ok(out)
        })
    }

    fn heat_consistency(&self, g: usize, n: u64) -> Vec<IdentityReport> {
        per_sample(self.cfg.samples, "heat-consistency", g, n, |i| {
            let mut rng = self.rng("heat-consistency", g, n, i);
            let tau = sample_tau(g, self.cfg.seed, i).scaled(2.0 * n as f64);
            let z = if i % 2 == 0 { vec![Complex64::new(0.0, 0.0); g] } else { sample_point(&mut rng, g) };
            let (eps, delta) = (sample_char(&mut rng, 8 * n, g), sample_char(&mut rng, 8 * n, g));
            let jet = theta_jet(&tau, &z, &eps, &delta, &self.policy)?;
            let f = |t: &PeriodMatrix| Ok(theta_jet(t, &z, &eps, &delta, &self.policy)?.value);
            let fd = finite_difference_d(&f, &tau)?;
            let scale = derivative_scale(&jet);
            let tag = |r: IdentityReport| {
                r.with_tau(&tau)
                    .with_point("z", &z)
                    .with_char("eps", &eps)
                    .with_char("delta", &delta)
                    .with_degraded(jet.degraded)
            };
            Ok(vec![
                tag(IdentityReport::below("heat-consistency:heat", g, n, heat_disagreement(&jet), scale, 1e-9)),
                tag(IdentityReport::below(
                    "heat-consistency:finite-difference",
                    g,
                    n,
                    max_diff(&fd, &jet.tau_deriv) / scale,
                    scale,
                    1e-9,
                )),
            ])
        })
    }

    fn run(&self, suite: &str, g: usize, n: u64) -> Result<Vec<IdentityReport>> {
        Ok(match suite {
            "shift" => self.shift(g, n),
            "doubling" => self.doubling(g, n),
            "addition-forward" => self.addition_forward(g, n),
            "addition-converse" => self.addition_converse(g, n),
            "ac-theorem" => self.ac_theorem(g, n),
            "cyclic" => self.cyclic(g, n),
            "rank" => self.rank(g, n),
            "reconstruction" => self.reconstruction(g, n),
            "product-reconstruction" => self.product_reconstruction(g, n),
            "separation" => self.separation(g, n),
            "jacobi-classical" => self.jacobi_classical(g, n),
            "jacobi-generalized" => self.jacobi_generalized(g, n),
            "heat-consistency" => self.heat_consistency(g, n),
            other => return Err(ThetaError::UnknownSuite(other.to_string())),
        })
    }
}

/// Runs every configured suite over every configured genus and level.
pub fn run_suite(cfg: &RunConfig) -> Result<SuiteReport> {
    cfg.validate()?;
    let mut policy = cfg.truncation;
    policy.validate()?;
    // Derivative jets need the order-2 bound everywhere.
    policy.deriv_order = policy.deriv_order.max(2);
    let ctx = Ctx { cfg, policy };
    let start = Instant::now();
    let mut timing = Timing::default();
    let mut results = Vec::new();
    for suite in &cfg.suites {
        let t0 = Instant::now();
        let mut reports = Vec::new();
        for &g in &cfg.genus {
            for &n in &cfg.level {
                let mut batch = ctx.run(suite, g, n)?;
                for r in &mut batch {
                    r.seed = Some(cfg.seed);
                    if let (Some(tol), Criterion::Below) = (cfg.tolerance, r.criterion) {
                        if !r.identity.ends_with(":error") {
                            r.rejudge(tol);
                        }
                    }
                    if r.degraded && !cfg.allow_degraded {
                        r.pass = false;
                    }
                }
                reports.extend(batch);
            }
        }
        timing.suites.insert(suite.clone(), t0.elapsed().as_secs_f64());
        results.push(SuiteResult::new(suite, reports));
    }
    timing.total_seconds = start.elapsed().as_secs_f64();
    Ok(SuiteReport::new(cfg.clone(), results, timing))
}
