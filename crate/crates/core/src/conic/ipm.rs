use log::debug;
use nalgebra::DVector;

use super::cones::{
    apply_scaling, identity, identity_scaling, interior_gap, jordan_divide, jordan_product, max_step, nt_scaling,
};
use super::kkt::KktStructure;
use super::standard::StandardForm;
use super::{ConicProgram, KktResiduals, SolverResult, SolverSettings, SolverStatus};
use crate::error::{Error, Result};

const STEP_FRACTION: f64 = 0.99;
const MIN_STEP: f64 = 1e-10;

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `program` with a primal-dual interior-point method.
///
/// Returns `Err` only for malformed programs; solver outcomes are reported
/// through [`SolverResult::status`]. The result is a deterministic function
/// of the program and settings.
pub fn solve(program: &ConicProgram, settings: &SolverSettings) -> Result<SolverResult> {
    program.validate()?;
    if !(settings.tolerance > 0.0) {
        return Err(Error::Config(format!("solver tolerance must be positive, got {}", settings.tolerance)));
    }
    let sf = StandardForm::from_program(program);
    Ok(Ipm::new(&sf, settings).run())
}

struct Ipm<'a> {
    sf: &'a StandardForm,
    kkt: KktStructure,
    settings: &'a SolverSettings,
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    s: Vec<f64>,
}

impl<'a> Ipm<'a> {
    fn new(sf: &'a StandardForm, settings: &'a SolverSettings) -> Self {
        Self {
            sf,
            kkt: KktStructure::new(sf),
            settings,
            x: vec![0.0; sf.n],
            y: vec![0.0; sf.num_eq()],
            z: vec![0.0; sf.num_cone_rows()],
            s: vec![0.0; sf.num_cone_rows()],
        }
    }

    fn finish(&self, status: SolverStatus, res: KktResiduals, iterations: usize, message: Option<String>) -> SolverResult {
        let objective_value = dot(self.sf.c.as_slice(), &self.x);
        SolverResult {
            status,
            primal: self.x.clone(),
            objective_value,
            kkt_residuals: res,
            iterations,
            message,
        }
    }

    /// Least-squares start shifted into the cone interior.
    fn initialize(&mut self) -> std::result::Result<(), String> {
        let sf = self.sf;
        let w = identity_scaling(&sf.cones);
        let f = self.kkt.factor(sf, &w).map_err(|e| e.0)?;
        let bx: Vec<f64> = sf.c.iter().map(|c| -c).collect();
        let (x, y, z) = self.kkt.solve(&f, sf, &w, &bx, sf.b.as_slice(), sf.h.as_slice());
        self.x = x;
        self.y = y;
        self.s = z.iter().map(|v| -v).collect();
        self.z = z;
        let e = identity(&sf.cones, self.s.len());
        for v in [&mut self.s, &mut self.z] {
            let gap = interior_gap(&sf.cones, v);
            let scale = inf_norm(v).max(1.0);
            if gap >= -1e-8 * scale {
                for (vi, ei) in v.iter_mut().zip(&e) {
                    *vi += (1.0 + gap.max(0.0)) * ei;
                }
            }
        }
        Ok(())
    }

    fn run(mut self) -> SolverResult {
        let sf = self.sf;
        let tol = self.settings.tolerance;
        if let Err(msg) = self.initialize() {
            return self.finish(SolverStatus::NumericalFailure, KktResiduals::default(), 0, Some(msg));
        }
        let degree = sf.degree().max(1) as f64;
        let e = identity(&sf.cones, self.s.len());
        let c_scale = inf_norm(sf.c.as_slice()).max(1.0);
        let mut small_steps = 0;
        let mut res = KktResiduals::default();

        for iter in 0..=self.settings.max_iterations {
            let xv = DVector::from_column_slice(&self.x);
            let gx = &sf.g * &xv;
            let ax = &sf.a * &xv;
            let aty = sf.a.tr_mul(&DVector::from_column_slice(&self.y));
            let gtz = sf.g.tr_mul(&DVector::from_column_slice(&self.z));
            let rd: Vec<f64> = (0..sf.n).map(|i| sf.c[i] + aty[i] + gtz[i]).collect();
            let rp_eq: Vec<f64> = (0..ax.len()).map(|i| ax[i] - sf.b[i]).collect();
            let rp_cone: Vec<f64> = (0..gx.len()).map(|i| gx[i] + self.s[i] - sf.h[i]).collect();
            let gap = dot(&self.s, &self.z);
            let pcost = dot(sf.c.as_slice(), &self.x);
            res = KktResiduals {
                primal_res: sf.violation(&gx, &ax),
                dual_res: inf_norm(&rd) / c_scale,
                gap,
            };
            debug!(
                "iter {iter:3} pcost {pcost:+.6e} pres {:.2e} dres {:.2e} gap {:.2e}",
                res.primal_res, res.dual_res, res.gap
            );
            if ![res.primal_res, res.dual_res, gap].iter().all(|v| v.is_finite()) {
                return self.finish(SolverStatus::NumericalFailure, res, iter, Some("non-finite iterate".into()));
            }
            if res.primal_res <= tol && res.dual_res <= tol && gap <= tol * pcost.abs().max(1.0) {
                return self.finish(SolverStatus::Optimal, res, iter, None);
            }
            if let Some(msg) = self.infeasibility_certificate(&aty, &gtz, &gx, &ax, 1e-8) {
                return self.finish(SolverStatus::Infeasible, res, iter, Some(msg));
            }
            if iter == self.settings.max_iterations {
                break;
            }

            let w = nt_scaling(&sf.cones, &self.s, &self.z);
            let lambda = apply_scaling(&sf.cones, &w, &self.z, false);
            let factor = match self.kkt.factor(sf, &w) {
                Ok(f) => f,
                Err(err) => return self.finish(SolverStatus::NumericalFailure, res, iter, Some(err.0)),
            };
            let mu = gap / degree;
            let lam_sq = jordan_product(&sf.cones, &lambda, &lambda);
            let bx: Vec<f64> = rd.iter().map(|v| -v).collect();
            let by: Vec<f64> = rp_eq.iter().map(|v| -v).collect();
            let bz: Vec<f64> = rp_cone.iter().map(|v| -v).collect();

            // bs is the right-hand side of λ∘(W⁻¹ds + W dz) = bs.
            let newton = |bs: &[f64]| {
                let lam_div = jordan_divide(&sf.cones, &lambda, bs);
                let w_lam_div = apply_scaling(&sf.cones, &w, &lam_div, false);
                let bz_red: Vec<f64> = bz.iter().zip(&w_lam_div).map(|(a, b)| a - b).collect();
                let (dx, dy, dz) = self.kkt.solve(&factor, sf, &w, &bx, &by, &bz_red);
                let w_dz = apply_scaling(&sf.cones, &w, &dz, false);
                // scaled ds̃ = λ⋄bs − W dz, and ds = W ds̃
                let ds_scaled: Vec<f64> = lam_div.iter().zip(&w_dz).map(|(a, b)| a - b).collect();
                let ds = apply_scaling(&sf.cones, &w, &ds_scaled, false);
                (dx, dy, dz, ds, ds_scaled, w_dz)
            };

            let bs_aff: Vec<f64> = lam_sq.iter().map(|v| -v).collect();
            let (_, _, dz_a, ds_a, ds_a_scaled, dz_a_scaled) = newton(&bs_aff);
            let alpha_aff = max_step(&sf.cones, &self.s, &ds_a).min(max_step(&sf.cones, &self.z, &dz_a)).min(1.0);
            let sigma = (1.0 - alpha_aff).powi(3);

            let cross = jordan_product(&sf.cones, &ds_a_scaled, &dz_a_scaled);
            let bs: Vec<f64> = (0..lam_sq.len())
                .map(|i| -lam_sq[i] - cross[i] + sigma * mu * e[i])
                .collect();
            let (dx, dy, dz, ds, _, _) = newton(&bs);

            let step_max = max_step(&sf.cones, &self.s, &ds).min(max_step(&sf.cones, &self.z, &dz));
            let alpha = (STEP_FRACTION * step_max).min(1.0);
            if !alpha.is_finite() || [&dx, &dy, &dz, &ds].iter().any(|v| v.iter().any(|x| !x.is_finite())) {
                return self.finish(SolverStatus::NumericalFailure, res, iter, Some("non-finite Newton direction".into()));
            }
            if alpha < MIN_STEP {
                small_steps += 1;
                if small_steps >= 3 {
                    return self.finish(
                        SolverStatus::NumericalFailure,
                        res,
                        iter,
                        Some(format!("step length stalled at {alpha:.1e}")),
                    );
                }
            } else {
                small_steps = 0;
            }
            for (v, d) in self.x.iter_mut().zip(&dx) {
                *v += alpha * d;
            }
            for (v, d) in self.y.iter_mut().zip(&dy) {
                *v += alpha * d;
            }
            for (v, d) in self.z.iter_mut().zip(&dz) {
                *v += alpha * d;
            }
            for (v, d) in self.s.iter_mut().zip(&ds) {
                *v += alpha * d;
            }
        }
        let iters = self.settings.max_iterations;
        self.finish(SolverStatus::MaxIterations, res, iters, None)
    }

    /// Farkas-type certificates: `(y, z)` with `Aᵀy + Gᵀz ≈ 0`, `bᵀy + hᵀz < 0`
    /// proves primal infeasibility; `x` with `cᵀx < 0`, `Ax ≈ 0`,
    /// `-Gx ∈ K` proves unboundedness.
    fn infeasibility_certificate(
        &self,
        aty: &DVector<f64>,
        gtz: &DVector<f64>,
        gx: &DVector<f64>,
        ax: &DVector<f64>,
        tol: f64,
    ) -> Option<String> {
        let sf = self.sf;
        let t = -(dot(sf.b.as_slice(), &self.y) + dot(sf.h.as_slice(), &self.z));
        if t > 0.0 {
            let r = aty.iter().zip(gtz.iter()).map(|(a, b)| (a + b).abs()).fold(0.0f64, f64::max);
            if r / t <= tol && inf_norm(&self.z) / t < 1e12 {
                return Some("primal infeasible".into());
            }
        }
        let cx = dot(sf.c.as_slice(), &self.x);
        if cx < 0.0 {
            let neg_gx: Vec<f64> = gx.iter().map(|v| -v).collect();
            let viol = interior_gap(&sf.cones, &neg_gx).max(0.0);
            if inf_norm(ax.as_slice()).max(viol) / -cx <= tol {
                return Some("dual infeasible (unbounded below)".into());
            }
        }
        None
    }
}
