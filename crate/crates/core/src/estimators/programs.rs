use std::ops::Range;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::array_model::Snapshot;
use crate::conic::{AffineExpr, ConicProgram, Relation};
use crate::dictionary::DictionarySet;

use super::{BlockSignal, Coefficients, EstimatorConfig, Formulation, Method, NeighborCoefficients};

/// A group of `L` program variables standing for `scale · variable`.
#[derive(Debug, Clone, PartialEq)]
struct Group {
    vars: Range<usize>,
    scale: f64,
}

impl Group {
    fn index(&self, l: usize) -> usize {
        self.vars.start + l
    }

    fn read(&self, x: &[f64]) -> Vec<f64> {
        x[self.vars.clone()].iter().map(|v| v * self.scale).collect()
    }
}

/// Where each coefficient lives in the solver's variable vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ProgramLayout {
    method: Method,
    primary: Vec<Group>,
    slack: Option<Group>,
    epigraph: Option<Range<usize>>,
    residual: Option<usize>,
}

impl ProgramLayout {
    pub fn method(&self) -> Method {
        self.method
    }

    /// Number of coefficient variables (`b·L`).
    pub fn num_primary(&self) -> usize {
        self.primary.iter().map(|g| g.vars.len()).sum()
    }

    /// Number of per-block norm epigraph variables.
    pub fn num_epigraph(&self) -> usize {
        self.epigraph.as_ref().map_or(0, |r| r.len())
    }

    pub fn num_slack(&self) -> usize {
        self.slack.as_ref().map_or(0, |g| g.vars.len())
    }

    pub fn has_residual_epigraph(&self) -> bool {
        self.residual.is_some()
    }

    /// Maps a solver point back to coefficients in original units.
    pub fn coefficients(&self, x: &[f64]) -> Coefficients {
        let parts: Vec<Vec<f64>> = self.primary.iter().map(|g| g.read(x)).collect();
        if self.method == Method::Neighbor {
            return Coefficients::Neighbor(NeighborCoefficients {
                base: parts[0].clone(),
                shifted: parts[1].clone(),
            });
        }
        let len = parts[0].len();
        let mut block = BlockSignal::zeros(len);
        block.x1 = parts[0].clone();
        if let Some(p) = parts.get(1) {
            block.x2 = p.clone();
        }
        if let Some(p) = parts.get(2) {
            block.x3 = p.clone();
        }
        if let Some(g) = &self.slack {
            block.z = g.read(x);
        }
        Coefficients::Blocks(block)
    }
}

/// Builds the cone program of `config.method` for one observation.
///
/// The offset coefficients are carried as `x₂ = (δ/2)·x̃₂`, `x₃ = (δ/2)²·x̃₃`
/// and `z = η·z̃` so that every constraint has coefficients of order one.
/// The relaxed proportionality cone is written in these variables after a
/// Lorentz boost, which leaves the feasible set unchanged.
pub fn build_program(snapshot: &Snapshot, dict: &DictionarySet, config: &EstimatorConfig) -> (ConicProgram, ProgramLayout) {
    let method = config.method;
    let l = dict.grid().len();
    let h = 0.5 * dict.grid().grid_size();
    let eta = config.eta;
    let mut program = ConicProgram::new(0);

    let scales: &[f64] = match method {
        Method::Lasso => &[1.0],
        Method::Neighbor => &[1.0, 1.0],
        Method::Taylor1 => &[1.0, h],
        Method::Taylor2 => &[1.0, h, h * h],
    };
    let primary: Vec<Group> = scales
        .iter()
        .map(|&scale| Group { vars: program.add_variables(l), scale })
        .collect();
    let slack = (method == Method::Taylor2).then(|| Group { vars: program.add_variables(l), scale: eta });
    let epigraph = (method != Method::Lasso).then(|| program.add_variables(l));

    for j in 0..l {
        let x1 = primary[0].index(j);
        program.add_nonneg(x1);
        match method {
            Method::Lasso => {}
            Method::Neighbor => program.add_nonneg(primary[1].index(j)),
            Method::Taylor1 | Method::Taylor2 => {
                let x2 = primary[1].index(j);
                program.add_linear(AffineExpr::var(x2).plus(x1, -1.0), Relation::LessEqual, 0.0);
                program.add_linear(AffineExpr::term(x2, -1.0).plus(x1, -1.0), Relation::LessEqual, 0.0);
            }
        }
        if method == Method::Taylor2 {
            let x2 = primary[1].index(j);
            let x3 = primary[2].index(j);
            let z = slack.as_ref().unwrap().index(j);
            program.add_nonneg(x3);
            program.add_linear(AffineExpr::var(x3).plus(x1, -1.0), Relation::LessEqual, 0.0);
            program.add_box(z, 0.0, 1.0);
            let lift = 0.5 * eta / (h * h);
            let head = AffineExpr::var(x1).plus(x3, 1.0).plus(z, 0.5 * eta + lift);
            let tail = vec![
                AffineExpr::term(x2, 2.0),
                AffineExpr::var(x1).plus(x3, -1.0).plus(z, 0.5 * eta - lift),
            ];
            program.add_soc(head, tail);
        }
        if let Some(t) = &epigraph {
            let tail = primary
                .iter()
                .map(|g| AffineExpr::term(g.index(j), g.scale))
                .collect();
            program.add_soc(AffineExpr::var(t.start + j), tail);
        }
    }

    let columns = data_columns(dict, method);
    let residual = stacked_residual(snapshot.observation(), &columns, &primary);
    let weight = match config.formulation {
        Formulation::Regularized => config.mu,
        Formulation::Constrained { .. } => 1.0,
    };
    match &epigraph {
        Some(t) => t.clone().for_each(|i| program.set_cost(i, weight)),
        None => primary[0].vars.clone().for_each(|i| program.set_cost(i, weight)),
    }
    let residual_var = match config.formulation {
        Formulation::Regularized => {
            let w = program.add_variables(1).start;
            program.set_cost(w, 1.0);
            let mut tail = residual;
            tail.push(AffineExpr::var(w).offset(-0.5));
            program.add_soc(AffineExpr::var(w).offset(0.5), tail);
            Some(w)
        }
        Formulation::Constrained { epsilon } => {
            program.add_soc(AffineExpr::constant(epsilon), residual);
            None
        }
    };

    let layout = ProgramLayout {
        method,
        primary,
        slack,
        epigraph,
        residual: residual_var,
    };
    (program, layout)
}

fn data_columns(dict: &DictionarySet, method: Method) -> Vec<DMatrix<Complex64>> {
    match method {
        Method::Lasso => vec![dict.base().clone()],
        Method::Neighbor => vec![dict.base().clone(), dict.shifted_base()],
        Method::Taylor1 => vec![dict.base().clone(), dict.first().expect("order ≥ 1").clone()],
        Method::Taylor2 => vec![
            dict.base().clone(),
            dict.first().expect("order ≥ 1").clone(),
            dict.second_halved().expect("order 2").clone(),
        ],
    }
}

/// `(Re r; Im r)` for `r = y - Σ_b D_b (scale_b · x̃_b)`.
fn stacked_residual(y: &[Complex64], columns: &[DMatrix<Complex64>], groups: &[Group]) -> Vec<AffineExpr> {
    let rows = y.len();
    let mut re: Vec<AffineExpr> = y.iter().map(|v| AffineExpr::constant(v.re)).collect();
    let mut im: Vec<AffineExpr> = y.iter().map(|v| AffineExpr::constant(v.im)).collect();
    for (d, g) in columns.iter().zip(groups) {
        for j in 0..d.ncols() {
            let var = g.index(j);
            for m in 0..rows {
                let c = d[(m, j)] * g.scale;
                re[m].terms.push((var, -c.re));
                im[m].terms.push((var, -c.im));
            }
        }
    }
    re.extend(im);
    re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array_model::ArrayGeometry;
    use crate::dictionary::{build_dictionary, FrequencyGrid};

    fn setup(method: Method) -> (ConicProgram, ProgramLayout) {
        let geo = ArrayGeometry::ula(6).unwrap();
        let grid = FrequencyGrid::new(0.1).unwrap();
        let dict = build_dictionary(&geo, &grid, 2).unwrap();
        let y = Snapshot::new(geo.steering_vector(0.3));
        build_program(&y, &dict, &EstimatorConfig::new(method, 0.1, 1))
    }

    #[test]
    fn variable_counts() {
        let (p, lay) = setup(Method::Taylor1);
        assert_eq!(lay.num_primary(), 40);
        assert_eq!(lay.num_epigraph(), 20);
        assert!(lay.has_residual_epigraph());
        assert_eq!(p.num_vars(), 61);

        let (p, lay) = setup(Method::Taylor2);
        assert_eq!(lay.num_primary(), 60);
        assert_eq!(lay.num_slack(), 20);
        assert_eq!(p.num_vars(), 60 + 20 + 20 + 1);

        let (p, lay) = setup(Method::Lasso);
        assert_eq!(lay.num_epigraph(), 0);
        assert_eq!(p.num_vars(), 21);
    }

    #[test]
    fn programs_validate() {
        for m in Method::ALL {
            setup(m).0.validate().unwrap();
        }
    }

    #[test]
    fn boosted_cone_matches_original() {
        // Evaluate both forms of the relaxed proportionality cone on random points.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let (h, eta) = (0.05, 1e-4);
        let lift = 0.5 * eta / (h * h);
        for _ in 0..2000 {
            let x1: f64 = rng.random_range(0.0..1.0);
            let t2: f64 = rng.random_range(-1.0..1.0);
            let t3: f64 = rng.random_range(0.0..1.0);
            let zt: f64 = rng.random_range(0.0..1.0);
            let (x2, x3, z) = (h * t2, h * h * t3, eta * zt);
            let original = (x1 + x3 + z) - (4.0 * x2 * x2 + (x1 - x3).powi(2)).sqrt();
            let head = x1 + t3 + (0.5 * eta + lift) * zt;
            let boosted = head - (4.0 * t2 * t2 + (x1 - t3 + (0.5 * eta - lift) * zt).powi(2)).sqrt();
            if original.abs() > 1e-9 && boosted.abs() > 1e-9 {
                assert_eq!(original > 0.0, boosted > 0.0, "{x1} {t2} {t3} {zt}");
            }
        }
    }
}
