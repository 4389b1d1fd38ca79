use nalgebra::{DMatrix, DVector};

use super::cones::{ConeBlock, ConeKind};
use super::{AffineExpr, ConicProgram, Relation};

/// Dense standard form `min cᵀx  s.t.  A x = b,  G x + s = h,  s ∈ K`.
///
/// `K` is one orthant block (linear inequalities, nonnegativity and box
/// rows, in that order) followed by one block per second-order cone.
#[derive(Debug, Clone)]
pub(crate) struct StandardForm {
    pub n: usize,
    pub c: DVector<f64>,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub g: DMatrix<f64>,
    pub h: DVector<f64>,
    pub cones: Vec<ConeBlock>,
    /// Sorted variable support of each row of `G`.
    pub g_support: Vec<Vec<usize>>,
}

struct RowSet {
    rows: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
}

impl RowSet {
    fn new() -> Self {
        Self { rows: Vec::new(), rhs: Vec::new() }
    }

    fn push(&mut self, terms: Vec<(usize, f64)>, rhs: f64) {
        self.rows.push(terms);
        self.rhs.push(rhs);
    }

    fn push_negated(&mut self, e: &AffineExpr) {
        // s = e(x) = const + t·x  ⇒  G row = -t, h = const.
        self.push(e.terms.iter().map(|&(i, c)| (i, -c)).collect(), e.constant);
    }

    fn len(&self) -> usize {
        self.rows.len()
    }

    fn to_dense(&self, n: usize) -> (DMatrix<f64>, DVector<f64>, Vec<Vec<usize>>) {
        let mut m = DMatrix::zeros(self.len(), n);
        let mut support = Vec::with_capacity(self.len());
        for (r, terms) in self.rows.iter().enumerate() {
            let mut vars = Vec::with_capacity(terms.len());
            for &(i, c) in terms {
                m[(r, i)] += c;
                vars.push(i);
            }
            vars.sort_unstable();
            vars.dedup();
            vars.retain(|&i| m[(r, i)] != 0.0);
            support.push(vars);
        }
        (m, DVector::from_vec(self.rhs.clone()), support)
    }
}

impl StandardForm {
    pub fn from_program(p: &ConicProgram) -> Self {
        let n = p.num_vars();
        let mut eq = RowSet::new();
        let mut ineq = RowSet::new();

        for c in p.linear_constraints() {
            let rhs = c.bound - c.expr.constant;
            match c.relation {
                Relation::LessEqual => ineq.push(c.expr.terms.clone(), rhs),
                Relation::Equal => eq.push(c.expr.terms.clone(), rhs),
            }
        }
        for &i in p.nonneg_indices() {
            ineq.push(vec![(i, -1.0)], 0.0);
        }
        for b in p.box_constraints() {
            if b.lower == b.upper {
                eq.push(vec![(b.index, 1.0)], b.lower);
            } else {
                ineq.push(vec![(b.index, -1.0)], -b.lower);
                ineq.push(vec![(b.index, 1.0)], b.upper);
            }
        }
        let mut cones = Vec::new();
        if ineq.len() > 0 {
            cones.push(ConeBlock { kind: ConeKind::Nonneg, offset: 0, dim: ineq.len() });
        }
        for soc in p.soc_constraints() {
            let offset = ineq.len();
            ineq.push_negated(&soc.head);
            for t in &soc.tail {
                ineq.push_negated(t);
            }
            cones.push(ConeBlock { kind: ConeKind::Soc, offset, dim: 1 + soc.tail.len() });
        }

        let (a, b, _) = eq.to_dense(n);
        let (g, h, g_support) = ineq.to_dense(n);
        Self {
            n,
            c: DVector::from_column_slice(p.objective()),
            a,
            b,
            g,
            h,
            cones,
            g_support,
        }
    }

    pub fn num_eq(&self) -> usize {
        self.a.nrows()
    }

    pub fn num_cone_rows(&self) -> usize {
        self.g.nrows()
    }

    pub fn degree(&self) -> usize {
        self.cones.iter().map(|c| c.degree()).sum()
    }

    /// Largest constraint violation of `x`, given `Gx` and `Ax`.
    pub fn violation(&self, gx: &DVector<f64>, ax: &DVector<f64>) -> f64 {
        let mut worst = 0.0f64;
        for (v, b) in ax.iter().zip(self.b.iter()) {
            worst = worst.max((v - b).abs());
        }
        for c in &self.cones {
            let r = c.range();
            match c.kind {
                ConeKind::Nonneg => {
                    for i in r {
                        worst = worst.max(gx[i] - self.h[i]);
                    }
                }
                ConeKind::Soc => {
                    let head = self.h[c.offset] - gx[c.offset];
                    let tail: f64 = (c.offset + 1..c.offset + c.dim)
                        .map(|i| (self.h[i] - gx[i]).powi(2))
                        .sum::<f64>()
                        .sqrt();
                    worst = worst.max(tail - head);
                }
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lowering_layout() {
        let mut p = ConicProgram::new(3);
        p.add_linear(AffineExpr::var(0).plus(1, 2.0).offset(1.0), Relation::LessEqual, 4.0);
        p.add_linear(AffineExpr::var(2), Relation::Equal, 1.0);
        p.add_nonneg(1);
        p.add_box(2, 0.0, 2.0);
        p.add_box(0, 0.5, 0.5);
        p.add_soc(AffineExpr::var(2).offset(1.0), vec![AffineExpr::var(0), AffineExpr::term(1, 3.0)]);
        let sf = StandardForm::from_program(&p);
        assert_eq!(sf.num_eq(), 2);
        assert_eq!(sf.num_cone_rows(), 4 + 3);
        assert_eq!(sf.cones.len(), 2);
        assert_eq!(sf.degree(), 4 + 1);
        assert_eq!(sf.h[0], 3.0);
        assert_eq!(sf.g[(0, 1)], 2.0);
        // cone head row: s0 = x2 + 1  ⇒  G = -e2, h = 1
        assert_eq!(sf.g[(4, 2)], -1.0);
        assert_eq!(sf.h[4], 1.0);
        assert_eq!(sf.g_support[0], vec![0, 1]);

        let x = [0.5, 0.1, 1.0];
        let gx = &sf.g * DVector::from_column_slice(&x);
        let ax = &sf.a * DVector::from_column_slice(&x);
        assert!((sf.violation(&gx, &ax) - p.max_violation(&x)).abs() < 1e-15);
    }
}
