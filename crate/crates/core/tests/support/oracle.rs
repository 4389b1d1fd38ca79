//! Reference solver for the estimation programs: a dense log-barrier
//! Newton method written directly in the original (unscaled) variables,
//! with its own steering-vector algebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Model {
    Lasso,
    Neighbor,
    Taylor1,
    Taylor2,
}

/// Affine form `coefs · v + constant`.
#[derive(Clone, Debug)]
struct Aff {
    coefs: Vec<(usize, f64)>,
    constant: f64,
}

impl Aff {
    fn new(coefs: &[(usize, f64)], constant: f64) -> Self {
        Self { coefs: coefs.to_vec(), constant }
    }
    fn eval(&self, v: &DVector<f64>) -> f64 {
        self.constant + self.coefs.iter().map(|&(i, c)| c * v[i]).sum::<f64>()
    }
}

/// `min ½‖y - B v‖² + qᵀv` over `lin ≥ 0` and `head ≥ ‖tail‖`.
struct Problem {
    n: usize,
    b: DMatrix<f64>,
    y: DVector<f64>,
    q: DVector<f64>,
    lin: Vec<Aff>,
    socs: Vec<(Aff, Vec<Aff>)>,
}

impl Problem {
    fn objective(&self, v: &DVector<f64>) -> f64 {
        let r = &self.y - &self.b * v;
        0.5 * r.norm_squared() + self.q.dot(v)
    }

    fn barrier(&self, v: &DVector<f64>) -> Option<f64> {
        let mut phi = 0.0;
        for a in &self.lin {
            let s = a.eval(v);
            if s <= 0.0 {
                return None;
            }
            phi -= s.ln();
        }
        for (h, tail) in &self.socs {
            let hv = h.eval(v);
            let gap = hv * hv - tail.iter().map(|t| t.eval(v).powi(2)).sum::<f64>();
            if hv <= 0.0 || gap <= 0.0 {
                return None;
            }
            phi -= gap.ln();
        }
        Some(phi)
    }

    fn degree(&self) -> f64 {
        (self.lin.len() + 2 * self.socs.len()) as f64
    }

    fn newton_system(&self, v: &DVector<f64>, tau: f64) -> (DVector<f64>, DMatrix<f64>) {
        let r = &self.y - &self.b * v;
        let mut grad = (-self.b.transpose() * r + &self.q) * tau;
        let mut hess = self.b.transpose() * &self.b * tau;
        let rank_one = |hess: &mut DMatrix<f64>, u: &[(usize, f64)], w: f64| {
            for &(i, a) in u {
                for &(j, b) in u {
                    hess[(i, j)] += w * a * b;
                }
            }
        };
        for a in &self.lin {
            let s = a.eval(v);
            for &(i, c) in &a.coefs {
                grad[i] -= c / s;
            }
            rank_one(&mut hess, &a.coefs, 1.0 / (s * s));
        }
        for (h, tail) in &self.socs {
            let hv = h.eval(v);
            let tv: Vec<f64> = tail.iter().map(|t| t.eval(v)).collect();
            let gap = hv * hv - tv.iter().map(|x| x * x).sum::<f64>();
            // gap = h² - Σ t_i²: ∇gap = 2h∇h - Σ 2t_i∇t_i, ∇²gap = 2∇h∇hᵀ - Σ 2∇t_i∇t_iᵀ
            let mut dgap: Vec<(usize, f64)> = h.coefs.iter().map(|&(i, c)| (i, 2.0 * hv * c)).collect();
            for (t, x) in tail.iter().zip(&tv) {
                dgap.extend(t.coefs.iter().map(|&(i, c)| (i, -2.0 * x * c)));
            }
            for &(i, c) in &dgap {
                grad[i] -= c / gap;
            }
            rank_one(&mut hess, &dgap, 1.0 / (gap * gap));
            rank_one(&mut hess, &h.coefs, -2.0 / gap);
            for t in tail {
                rank_one(&mut hess, &t.coefs, 2.0 / gap);
            }
        }
        (grad, hess)
    }

    fn solve(&self, start: DVector<f64>) -> DVector<f64> {
        let mut v = start;
        assert!(self.barrier(&v).is_some(), "oracle start is not strictly feasible");
        let mut tau = 1.0;
        let nu = self.degree();
        while nu / tau > 1e-11 {
            for _ in 0..200 {
                let (g, h) = self.newton_system(&v, tau);
                let scale = h.diagonal().amax().max(1.0);
                let hreg = h + DMatrix::identity(self.n, self.n) * (1e-15 * scale);
                let step = match hreg.clone().cholesky() {
                    Some(c) => c.solve(&(-&g)),
                    None => hreg.lu().solve(&(-&g)).expect("singular oracle Hessian"),
                };
                let decrement = -g.dot(&step);
                if decrement < 1e-12 {
                    break;
                }
                let f0 = tau * self.objective(&v) + self.barrier(&v).unwrap();
                let mut alpha = 1.0;
                loop {
                    let cand = &v + &step * alpha;
                    if let Some(phi) = self.barrier(&cand) {
                        if tau * self.objective(&cand) + phi <= f0 - 0.25 * alpha * decrement {
                            v = cand;
                            break;
                        }
                    }
                    alpha *= 0.5;
                    if alpha < 1e-14 {
                        break;
                    }
                }
                if alpha < 1e-14 {
                    break;
                }
            }
            tau *= 20.0;
        }
        v
    }
}

/// Steering vector and its derivatives for positions in wavelengths.
pub fn column(positions_wl: &[f64], u: f64, order: u32) -> Vec<Complex64> {
    positions_wl
        .iter()
        .map(|q| {
            let th = 2.0 * PI * q;
            Complex64::new(0.0, th).powu(order) * Complex64::from_polar(1.0, th * u)
        })
        .collect()
}

pub struct OracleSolution {
    pub objective: f64,
    /// Per-grid-point coefficient blocks `(c₁, c₂, c₃)` in original units.
    pub blocks: Vec<[f64; 3]>,
}

/// Solves `½‖y - D c‖² + μ Σ_l ‖c_l‖` for `model` on the grid
/// `-1 + lδ`, `l = 0..2/δ`.
pub fn solve(model: Model, positions_wl: &[f64], y: &[Complex64], delta: f64, mu: f64, eta: f64) -> OracleSolution {
    let l = (2.0 / delta).round() as usize;
    let h = delta / 2.0;
    let m = y.len();
    let grid: Vec<f64> = (0..l).map(|i| -1.0 + i as f64 * delta).collect();
    let mut cols: Vec<Vec<Vec<Complex64>>> = Vec::new();
    let b_len = match model {
        Model::Lasso => 1,
        Model::Neighbor | Model::Taylor1 => 2,
        Model::Taylor2 => 3,
    };
    for &v in &grid {
        let mut block = vec![column(positions_wl, v, 0)];
        match model {
            Model::Lasso => {}
            Model::Neighbor => block.push(column(positions_wl, v + h, 0)),
            Model::Taylor1 => block.push(column(positions_wl, v, 1)),
            Model::Taylor2 => {
                block.push(column(positions_wl, v, 1));
                block.push(column(positions_wl, v, 2).iter().map(|c| c * 0.5).collect());
            }
        }
        cols.push(block);
    }
    // variables: coefficients c[l][k] at l*b_len + k, then t_l, then z_l
    let nc = l * b_len;
    let has_t = model != Model::Lasso;
    let has_z = model == Model::Taylor2;
    let n = nc + if has_t { l } else { 0 } + if has_z { l } else { 0 };
    let t_at = |i: usize| nc + i;
    let z_at = |i: usize| nc + l + i;
    let c_at = |i: usize, k: usize| i * b_len + k;

    let mut bm = DMatrix::zeros(2 * m, n);
    for i in 0..l {
        for k in 0..b_len {
            for r in 0..m {
                bm[(r, c_at(i, k))] = cols[i][k][r].re;
                bm[(m + r, c_at(i, k))] = cols[i][k][r].im;
            }
        }
    }
    let yv = DVector::from_iterator(2 * m, y.iter().map(|c| c.re).chain(y.iter().map(|c| c.im)));
    let mut q = DVector::zeros(n);
    let mut lin = Vec::new();
    let mut socs = Vec::new();
    let mut start = DVector::zeros(n);
    for i in 0..l {
        let x1 = c_at(i, 0);
        lin.push(Aff::new(&[(x1, 1.0)], 0.0));
        start[x1] = 0.1;
        match model {
            Model::Lasso => q[x1] = mu,
            Model::Neighbor => {
                lin.push(Aff::new(&[(c_at(i, 1), 1.0)], 0.0));
                start[c_at(i, 1)] = 0.1;
            }
            Model::Taylor1 | Model::Taylor2 => {
                let x2 = c_at(i, 1);
                lin.push(Aff::new(&[(x1, h), (x2, -1.0)], 0.0));
                lin.push(Aff::new(&[(x1, h), (x2, 1.0)], 0.0));
            }
        }
        if has_z {
            let (x2, x3, z) = (c_at(i, 1), c_at(i, 2), z_at(i));
            lin.push(Aff::new(&[(x3, 1.0)], 0.0));
            lin.push(Aff::new(&[(x1, h * h), (x3, -1.0)], 0.0));
            lin.push(Aff::new(&[(z, 1.0)], 0.0));
            lin.push(Aff::new(&[(z, -1.0)], eta));
            socs.push((
                Aff::new(&[(x1, 1.0), (x3, 1.0), (z, 1.0)], 0.0),
                vec![Aff::new(&[(x2, 2.0)], 0.0), Aff::new(&[(x1, 1.0), (x3, -1.0)], 0.0)],
            ));
            start[x3] = 0.5 * h * h * 0.1;
            start[z] = 0.5 * eta;
        }
        if has_t {
            let t = t_at(i);
            q[t] = mu;
            let tail = (0..b_len).map(|k| Aff::new(&[(c_at(i, k), 1.0)], 0.0)).collect();
            socs.push((Aff::new(&[(t, 1.0)], 0.0), tail));
            start[t] = 1.0;
        }
    }
    let problem = Problem { n, b: bm, y: yv, q, lin, socs };
    let v = problem.solve(start);
    let blocks = (0..l)
        .map(|i| {
            let mut c = [0.0; 3];
            for k in 0..b_len {
                c[k] = v[c_at(i, k)];
            }
            c
        })
        .collect::<Vec<_>>();
    // report g with exact block norms rather than the epigraph variables
    let r = &problem.y - &problem.b * &v;
    let penalty: f64 = blocks.iter().map(|c| (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt()).sum();
    OracleSolution {
        objective: 0.5 * r.norm_squared() + mu * penalty,
        blocks,
    }
}
