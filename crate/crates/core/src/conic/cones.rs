//! Cone arithmetic for `R_+^n × Q^{d_1} × …`: Jordan products, Nesterov–Todd
//! scalings and step-length computation.

use nalgebra::DMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ConeKind {
    Nonneg,
    Soc,
}

/// One cone of the product, occupying `offset..offset + dim` of a slack
/// vector.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ConeBlock {
    pub kind: ConeKind,
    pub offset: usize,
    pub dim: usize,
}

impl ConeBlock {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.dim
    }

    /// Barrier degree: `dim` for the orthant, 1 per second-order cone.
    pub fn degree(&self) -> usize {
        match self.kind {
            ConeKind::Nonneg => self.dim,
            ConeKind::Soc => 1,
        }
    }
}

/// Nesterov–Todd scaling of one cone.
///
/// For the orthant `W = diag(d)` with `d = sqrt(s/z)`. For a second-order
/// cone `W = β (2 v vᵀ - J)` and `W⁻¹ = β⁻¹ (2 J v vᵀ J - J)` with
/// `J = diag(1, -1, …, -1)` and `vᵀ J v = 1`.
#[derive(Debug, Clone)]
pub(crate) enum Scaling {
    Nonneg { d: Vec<f64> },
    Soc { beta: f64, v: Vec<f64> },
}

pub(crate) fn identity_scaling(cones: &[ConeBlock]) -> Vec<Scaling> {
    cones
        .iter()
        .map(|c| match c.kind {
            ConeKind::Nonneg => Scaling::Nonneg { d: vec![1.0; c.dim] },
            ConeKind::Soc => {
                let mut v = vec![0.0; c.dim];
                v[0] = 1.0;
                Scaling::Soc { beta: 1.0, v }
            }
        })
        .collect()
}

fn jnorm(x: &[f64]) -> f64 {
    let tail: f64 = x[1..].iter().map(|t| t * t).sum();
    ((x[0] - tail.sqrt()) * (x[0] + tail.sqrt())).max(0.0).sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// NT scaling at strictly interior `(s, z)`.
pub(crate) fn nt_scaling(cones: &[ConeBlock], s: &[f64], z: &[f64]) -> Vec<Scaling> {
    cones
        .iter()
        .map(|c| {
            let sk = &s[c.range()];
            let zk = &z[c.range()];
            match c.kind {
                ConeKind::Nonneg => Scaling::Nonneg {
                    d: sk.iter().zip(zk).map(|(a, b)| (a / b).sqrt()).collect(),
                },
                ConeKind::Soc => {
                    let sn = jnorm(sk);
                    let zn = jnorm(zk);
                    let beta = (sn / zn).sqrt();
                    let gamma = ((1.0 + dot(sk, zk) / (sn * zn)) / 2.0).sqrt();
                    let mut w: Vec<f64> = sk.iter().map(|x| x / sn).collect();
                    w[0] += zk[0] / zn;
                    for (wi, zi) in w[1..].iter_mut().zip(&zk[1..]) {
                        *wi -= zi / zn;
                    }
                    for wi in &mut w {
                        *wi /= 2.0 * gamma;
                    }
                    w[0] += 1.0;
                    let scale = 1.0 / (2.0 * w[0]).sqrt();
                    for wi in &mut w {
                        *wi *= scale;
                    }
                    Scaling::Soc { beta, v: w }
                }
            }
        })
        .collect()
}

/// `W x` (`inverse = false`) or `W⁻¹ x` (`inverse = true`); `W` is symmetric.
pub(crate) fn apply_scaling(cones: &[ConeBlock], w: &[Scaling], x: &[f64], inverse: bool) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for (c, sc) in cones.iter().zip(w) {
        let xk = &x[c.range()];
        let ok = &mut out[c.range()];
        match sc {
            Scaling::Nonneg { d } => {
                for ((o, xi), di) in ok.iter_mut().zip(xk).zip(d) {
                    *o = if inverse { xi / di } else { xi * di };
                }
            }
            Scaling::Soc { beta, v } => {
                if inverse {
                    // β⁻¹ (2 J v (vᵀ J x) - J x)
                    let vjx = v[0] * xk[0] - dot(&v[1..], &xk[1..]);
                    ok[0] = (2.0 * v[0] * vjx - xk[0]) / beta;
                    for i in 1..c.dim {
                        ok[i] = (-2.0 * v[i] * vjx + xk[i]) / beta;
                    }
                } else {
                    let vx = dot(v, xk);
                    ok[0] = beta * (2.0 * v[0] * vx - xk[0]);
                    for i in 1..c.dim {
                        ok[i] = beta * (2.0 * v[i] * vx + xk[i]);
                    }
                }
            }
        }
    }
    out
}

/// Dense `W` (`inverse = false`) or `W⁻¹` (`inverse = true`) for one cone.
pub(crate) fn scaling_matrix(sc: &Scaling, inverse: bool) -> DMatrix<f64> {
    match sc {
        Scaling::Nonneg { d } => DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            d.len(),
            d.iter().map(|x| if inverse { 1.0 / x } else { *x }),
        )),
        Scaling::Soc { beta, v } => {
            let n = v.len();
            let sign = |i: usize| if i == 0 { 1.0 } else { -1.0 };
            DMatrix::from_fn(n, n, |i, j| {
                let jij = if i == j { sign(i) } else { 0.0 };
                if inverse {
                    (2.0 * sign(i) * v[i] * sign(j) * v[j] - jij) / beta
                } else {
                    beta * (2.0 * v[i] * v[j] - jij)
                }
            })
        }
    }
}

/// Jordan product `u ∘ v`.
pub(crate) fn jordan_product(cones: &[ConeBlock], u: &[f64], v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; u.len()];
    for c in cones {
        let (uk, vk) = (&u[c.range()], &v[c.range()]);
        let ok = &mut out[c.range()];
        match c.kind {
            ConeKind::Nonneg => {
                for ((o, a), b) in ok.iter_mut().zip(uk).zip(vk) {
                    *o = a * b;
                }
            }
            ConeKind::Soc => {
                ok[0] = dot(uk, vk);
                for i in 1..c.dim {
                    ok[i] = uk[0] * vk[i] + vk[0] * uk[i];
                }
            }
        }
    }
    out
}

/// `u ⋄ v`: the `x` solving `u ∘ x = v`, for `u` in the cone interior.
pub(crate) fn jordan_divide(cones: &[ConeBlock], u: &[f64], v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; u.len()];
    for c in cones {
        let (uk, vk) = (&u[c.range()], &v[c.range()]);
        let ok = &mut out[c.range()];
        match c.kind {
            ConeKind::Nonneg => {
                for ((o, a), b) in ok.iter_mut().zip(uk).zip(vk) {
                    *o = b / a;
                }
            }
            ConeKind::Soc => {
                let det = uk[0] * uk[0] - dot(&uk[1..], &uk[1..]);
                let x0 = (uk[0] * vk[0] - dot(&uk[1..], &vk[1..])) / det;
                ok[0] = x0;
                for i in 1..c.dim {
                    ok[i] = (vk[i] - x0 * uk[i]) / uk[0];
                }
            }
        }
    }
    out
}

/// Identity element `e` of the cone product.
pub(crate) fn identity(cones: &[ConeBlock], len: usize) -> Vec<f64> {
    let mut e = vec![0.0; len];
    for c in cones {
        match c.kind {
            ConeKind::Nonneg => e[c.range()].fill(1.0),
            ConeKind::Soc => e[c.offset] = 1.0,
        }
    }
    e
}

/// Smallest `α` with `x + α e` in the cone (negative when `x` is interior).
pub(crate) fn interior_gap(cones: &[ConeBlock], x: &[f64]) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for c in cones {
        let xk = &x[c.range()];
        let t = match c.kind {
            ConeKind::Nonneg => xk.iter().fold(f64::NEG_INFINITY, |m, v| m.max(-v)),
            ConeKind::Soc => dot(&xk[1..], &xk[1..]).sqrt() - xk[0],
        };
        worst = worst.max(t);
    }
    worst
}

/// Largest `α ≥ 0` keeping `x + α d` in the cone (`+∞` if unbounded).
pub(crate) fn max_step(cones: &[ConeBlock], x: &[f64], d: &[f64]) -> f64 {
    let mut alpha = f64::INFINITY;
    for c in cones {
        let (xk, dk) = (&x[c.range()], &d[c.range()]);
        match c.kind {
            ConeKind::Nonneg => {
                for (xi, di) in xk.iter().zip(dk) {
                    if *di < 0.0 {
                        alpha = alpha.min(-xi / di);
                    }
                }
            }
            ConeKind::Soc => alpha = alpha.min(soc_max_step(xk, dk)),
        }
    }
    alpha.max(0.0)
}

fn soc_max_step(x: &[f64], d: &[f64]) -> f64 {
    let mut alpha = f64::INFINITY;
    if d[0] < 0.0 {
        alpha = -x[0] / d[0];
    }
    // q(t) = a t² + b t + c is the J-norm² of x + t d.
    let a = d[0] * d[0] - dot(&d[1..], &d[1..]);
    let b = 2.0 * (x[0] * d[0] - dot(&x[1..], &d[1..]));
    let c = (x[0] * x[0] - dot(&x[1..], &x[1..])).max(0.0);
    let scale = d[0] * d[0] + dot(&d[1..], &d[1..]);
    if a.abs() <= 1e-14 * scale {
        if b < 0.0 {
            alpha = alpha.min(-c / b);
        }
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc >= 0.0 {
            let q = -0.5 * (b + b.signum() * disc.sqrt());
            for root in [q / a, if q != 0.0 { c / q } else { f64::INFINITY }] {
                if root > 0.0 {
                    alpha = alpha.min(root);
                }
            }
        }
    }
    alpha
}
