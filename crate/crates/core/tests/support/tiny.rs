//! Random feasible programs with at most three variables and two cones, and
//! an exhaustive nested line search that solves them without the
//! interior-point code.

use offgrid_core::conic::{AffineExpr, ConicProgram, Relation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct Row {
    pub coefs: Vec<f64>,
    pub constant: f64,
}

impl Row {
    fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.coefs.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
    }

    fn expr(&self) -> AffineExpr {
        let mut e = AffineExpr::constant(self.constant);
        for (i, &c) in self.coefs.iter().enumerate() {
            if c != 0.0 {
                e = e.plus(i, c);
            }
        }
        e
    }
}

#[derive(Clone, Debug)]
pub struct Tiny {
    pub cost: Vec<f64>,
    pub bounds: Vec<(f64, f64)>,
    pub cones: Vec<(Row, Vec<Row>)>,
    /// `row ≤ 0`.
    pub halfspaces: Vec<Row>,
    pub nonneg: Vec<usize>,
    /// Strictly feasible point the constraints were built around.
    pub interior: Vec<f64>,
}

fn random_row<R: Rng>(rng: &mut R, n: usize) -> Row {
    Row {
        coefs: (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
        constant: rng.random_range(-0.5..0.5),
    }
}

impl Tiny {
    /// Every constraint is built to hold strictly at a random interior point.
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..=3usize);
        let anchor: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..0.5)).collect();
        let bounds: Vec<(f64, f64)> = (0..n)
            .map(|_| (-rng.random_range(0.5..2.0), rng.random_range(0.6..2.0)))
            .collect();
        let cones = (0..rng.random_range(0..=2usize))
            .map(|_| {
                let tail: Vec<Row> = (0..rng.random_range(1..=2usize)).map(|_| random_row(&mut rng, n)).collect();
                let mut head = random_row(&mut rng, n);
                let tail_norm = tail.iter().map(|r| r.eval(&anchor).powi(2)).sum::<f64>().sqrt();
                head.constant += tail_norm - head.eval(&anchor) + rng.random_range(0.05..0.5);
                (head, tail)
            })
            .collect();
        let halfspaces = (0..rng.random_range(0..=2usize))
            .map(|_| {
                let mut r = random_row(&mut rng, n);
                r.constant -= r.eval(&anchor) + rng.random_range(0.05..0.5);
                r
            })
            .collect();
        let nonneg = (0..n).filter(|_| rng.random_bool(0.3)).collect();
        let cost = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        Self { cost, bounds, cones, halfspaces, nonneg, interior: anchor }
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn program(&self) -> ConicProgram {
        let mut p = ConicProgram::new(self.num_vars());
        for (i, &c) in self.cost.iter().enumerate() {
            p.set_cost(i, c);
        }
        for (i, &(lo, hi)) in self.bounds.iter().enumerate() {
            p.add_box(i, lo, hi);
        }
        for (head, tail) in &self.cones {
            p.add_soc(head.expr(), tail.iter().map(Row::expr).collect());
        }
        for h in &self.halfspaces {
            p.add_linear(h.expr(), Relation::LessEqual, 0.0);
        }
        for &i in &self.nonneg {
            p.add_nonneg(i);
        }
        p
    }

    pub fn violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (xi, &(lo, hi)) in x.iter().zip(&self.bounds) {
            worst = worst.max(lo - xi).max(xi - hi);
        }
        for (head, tail) in &self.cones {
            let t = tail.iter().map(|r| r.eval(x).powi(2)).sum::<f64>().sqrt();
            worst = worst.max(t - head.eval(x));
        }
        for h in &self.halfspaces {
            worst = worst.max(h.eval(x));
        }
        for &i in &self.nonneg {
            worst = worst.max(-x[i]);
        }
        worst
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.cost.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// `cᵀx + K·max(0, violation)`: convex, and for large `K` minimised
    /// exactly at the constrained optimum.
    fn penalized(&self, x: &[f64]) -> f64 {
        self.objective(x) + 1e6 * self.violation(x).max(0.0)
    }

    /// Minimum of the objective, by nested golden-section searches over the
    /// box, one coordinate per level. Partial minimisation keeps every level
    /// convex, so each search brackets the global minimiser.
    pub fn brute_force(&self) -> f64 {
        let mut x = vec![0.0; self.num_vars()];
        self.minimize_from(0, &mut x);
        assert!(self.violation(&x) <= 1e-12, "penalty too small: violation {}", self.violation(&x));
        self.objective(&x)
    }

    fn minimize_from(&self, level: usize, x: &mut [f64]) -> f64 {
        if level == x.len() {
            return self.penalized(x);
        }
        let ratio = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = self.bounds[level];
        let eval = |t: f64, x: &mut [f64]| {
            x[level] = t;
            self.minimize_from(level + 1, x)
        };
        let mut c = b - ratio * (b - a);
        let mut d = a + ratio * (b - a);
        let mut fc = eval(c, x);
        let mut fd = eval(d, x);
        while b - a > 1e-13 {
            if fc <= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - ratio * (b - a);
                fc = eval(c, x);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + ratio * (b - a);
                fd = eval(d, x);
            }
        }
        let t = if fc <= fd { c } else { d };
        eval(t, x)
    }
}
