//! Newton systems of the interior-point method.
//!
//! The system
//!
//! ```text
//! [ 0  Aᵀ  Gᵀ  ] [dx]   [bx]
//! [ A  0   0   ] [dy] = [by]
//! [ G  0  -W²  ] [dz]   [bz]
//! ```
//!
//! is reduced by eliminating the `dz` of every cone that touches only a few
//! variables. Those cones contribute `(W_k⁻¹G_k)ᵀ(W_k⁻¹G_k)` to a
//! block-diagonal matrix `H` whose blocks are the connected components of the
//! variable/cone incidence graph. Each block is factored as `RᵀR` by a QR
//! decomposition of the stacked `W_k⁻¹G_k`, which avoids squaring their
//! condition number. Equality rows and wide cones stay in a small Schur
//! complement, written in the scaled unknown `W dz` and factored the same
//! way. Static regularisation keeps every factor definite; iterative
//! refinement against the unregularised operator removes its effect.

use nalgebra::{DMatrix, DVector, Dyn, LU};

use super::cones::{apply_scaling, scaling_matrix, ConeKind, Scaling};
use super::standard::StandardForm;

/// Cones touching more variables than this are kept in the Schur complement.
const WIDE_CONE_VARS: usize = 16;
const STATIC_REG: f64 = 1e-9;
const MAX_REFINE: usize = 12;

#[derive(Debug, Clone)]
struct Group {
    /// Rows of `G` forming this (sub)cone.
    rows: std::ops::Range<usize>,
    /// Index of the cone in `StandardForm::cones`.
    cone: usize,
    vars: Vec<usize>,
    /// `G[rows, vars]`.
    local: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct KktStructure {
    narrow: Vec<Group>,
    wide: Vec<Group>,
    components: Vec<Vec<usize>>,
    /// Narrow groups belonging to each component.
    component_groups: Vec<Vec<usize>>,
    /// `(component, position)` of each variable.
    placement: Vec<(usize, usize)>,
    /// `[A; G_wide]`.
    coupling: DMatrix<f64>,
}

pub(crate) struct KktFactor {
    /// Upper-triangular `R` with `RᵀR = H` per component.
    blocks: Vec<DMatrix<f64>>,
    /// `W_k⁻¹` and `W_k⁻¹ G_k` of each narrow group.
    narrow_winv: Vec<DMatrix<f64>>,
    narrow_scaled: Vec<DMatrix<f64>>,
    wide_winv: Vec<DMatrix<f64>>,
    /// `R⁻ᵀ Eᵀ` for the scaled coupling rows `E = [A; W⁻¹ G_wide]`.
    v: DMatrix<f64>,
    schur: SchurFactor,
}

enum SchurFactor {
    Empty,
    Triangular(DMatrix<f64>),
    Lu(LU<f64, Dyn, Dyn>),
}

#[derive(Debug)]
pub(crate) struct FactorError(pub String);

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

impl KktStructure {
    pub fn new(sf: &StandardForm) -> Self {
        let mut narrow = Vec::new();
        let mut wide = Vec::new();
        for (ci, cone) in sf.cones.iter().enumerate() {
            let spans: Vec<std::ops::Range<usize>> = match cone.kind {
                ConeKind::Nonneg => cone.range().map(|r| r..r + 1).collect(),
                ConeKind::Soc => vec![cone.range()],
            };
            for rows in spans {
                let mut vars: Vec<usize> = rows.clone().flat_map(|r| sf.g_support[r].iter().copied()).collect();
                vars.sort_unstable();
                vars.dedup();
                let mut local = DMatrix::zeros(rows.len(), vars.len());
                for (i, r) in rows.clone().enumerate() {
                    for (j, &v) in vars.iter().enumerate() {
                        local[(i, j)] = sf.g[(r, v)];
                    }
                }
                let group = Group { rows, cone: ci, vars, local };
                if group.vars.len() > WIDE_CONE_VARS {
                    wide.push(group);
                } else {
                    narrow.push(group);
                }
            }
        }

        let n = sf.n;
        let mut parent: Vec<usize> = (0..n).collect();
        for g in &narrow {
            if let Some((&first, rest)) = g.vars.split_first() {
                for &v in rest {
                    let (a, b) = (find(&mut parent, first), find(&mut parent, v));
                    if a != b {
                        parent[b.max(a)] = a.min(b);
                    }
                }
            }
        }
        let mut root_to_comp = vec![usize::MAX; n];
        let mut components: Vec<Vec<usize>> = Vec::new();
        let mut placement = vec![(0, 0); n];
        for v in 0..n {
            let r = find(&mut parent, v);
            if root_to_comp[r] == usize::MAX {
                root_to_comp[r] = components.len();
                components.push(Vec::new());
            }
            let c = root_to_comp[r];
            placement[v] = (c, components[c].len());
            components[c].push(v);
        }

        let mut component_groups = vec![Vec::new(); components.len()];
        for (k, g) in narrow.iter().enumerate() {
            if let Some(&first) = g.vars.first() {
                component_groups[placement[first].0].push(k);
            }
        }

        let wide_rows: usize = wide.iter().map(|g| g.rows.len()).sum();
        let p = sf.num_eq();
        let mut coupling = DMatrix::zeros(p + wide_rows, n);
        coupling.rows_mut(0, p).copy_from(&sf.a);
        let mut at = p;
        for g in &wide {
            coupling.rows_mut(at, g.rows.len()).copy_from(&sf.g.rows(g.rows.start, g.rows.len()));
            at += g.rows.len();
        }

        Self {
            narrow,
            wide,
            components,
            component_groups,
            placement,
            coupling,
        }
    }

    fn group_scaling<'a>(&self, w: &'a [Scaling], g: &Group, sf: &StandardForm) -> std::borrow::Cow<'a, Scaling> {
        match &w[g.cone] {
            Scaling::Nonneg { d } => {
                let off = sf.cones[g.cone].offset;
                std::borrow::Cow::Owned(Scaling::Nonneg {
                    d: d[g.rows.start - off..g.rows.end - off].to_vec(),
                })
            }
            soc => std::borrow::Cow::Borrowed(soc),
        }
    }

    /// `rhs ← R⁻ᵀ rhs` (`transpose = true`) or `rhs ← R⁻¹ rhs`, blockwise.
    fn solve_blocks(&self, blocks: &[DMatrix<f64>], rhs: &mut [f64], transpose: bool) {
        for (comp, r) in self.components.iter().zip(blocks) {
            let mut local = DVector::from_iterator(comp.len(), comp.iter().map(|&v| rhs[v]));
            if transpose {
                r.tr_solve_upper_triangular_mut(&mut local);
            } else {
                r.solve_upper_triangular_mut(&mut local);
            }
            for (&v, x) in comp.iter().zip(local.iter()) {
                rhs[v] = *x;
            }
        }
    }

    pub fn factor(&self, sf: &StandardForm, w: &[Scaling]) -> Result<KktFactor, FactorError> {
        let mut narrow_winv = Vec::with_capacity(self.narrow.len());
        let mut narrow_scaled = Vec::with_capacity(self.narrow.len());
        for g in &self.narrow {
            let winv = scaling_matrix(&self.group_scaling(w, g, sf), true);
            narrow_scaled.push(&winv * &g.local);
            narrow_winv.push(winv);
        }

        let reg = STATIC_REG.sqrt();
        let mut blocks = Vec::with_capacity(self.components.len());
        for (k, comp) in self.components.iter().enumerate() {
            let groups = &self.component_groups[k];
            let rows: usize = groups.iter().map(|&gi| self.narrow[gi].rows.len()).sum::<usize>() + comp.len();
            let mut stacked = DMatrix::zeros(rows, comp.len());
            let mut at = 0;
            for &gi in groups {
                let g = &self.narrow[gi];
                let m = &narrow_scaled[gi];
                for (j, &v) in g.vars.iter().enumerate() {
                    let col = self.placement[v].1;
                    for i in 0..m.nrows() {
                        stacked[(at + i, col)] = m[(i, j)];
                    }
                }
                at += m.nrows();
            }
            for i in 0..comp.len() {
                stacked[(at + i, i)] = reg;
            }
            let r = stacked.qr().r();
            if !r.iter().all(|x| x.is_finite()) || r.diagonal().iter().any(|d| *d == 0.0) {
                return Err(FactorError(format!("block {k} of the reduced Newton matrix is singular")));
            }
            blocks.push(r);
        }

        let p = sf.num_eq();
        let mut coupling = self.coupling.clone();
        let mut wide_winv = Vec::with_capacity(self.wide.len());
        let mut at = p;
        for g in &self.wide {
            let winv = scaling_matrix(&self.group_scaling(w, g, sf), true);
            let d = g.rows.len();
            let scaled = &winv * self.coupling.rows(at, d);
            coupling.rows_mut(at, d).copy_from(&scaled);
            wide_winv.push(winv);
            at += d;
        }

        let q = coupling.nrows();
        let mut v = coupling.transpose();
        for mut col in v.column_iter_mut() {
            let mut buf: Vec<f64> = col.iter().copied().collect();
            self.solve_blocks(&blocks, &mut buf, true);
            col.copy_from_slice(&buf);
        }
        let schur = if q == 0 {
            SchurFactor::Empty
        } else {
            let n = v.nrows();
            let mut stacked = DMatrix::zeros(n + q, q);
            stacked.rows_mut(0, n).copy_from(&v);
            for i in 0..q {
                stacked[(n + i, i)] = if i < p { reg } else { 1.0 };
            }
            let r = stacked.qr().r();
            if r.iter().all(|x| x.is_finite()) && r.diagonal().iter().all(|d| *d != 0.0) {
                SchurFactor::Triangular(r)
            } else {
                let mut s = v.tr_mul(&v);
                for i in 0..q {
                    s[(i, i)] += if i < p { STATIC_REG } else { 1.0 };
                }
                SchurFactor::Lu(s.lu())
            }
        };
        Ok(KktFactor {
            blocks,
            narrow_winv,
            narrow_scaled,
            wide_winv,
            v,
            schur,
        })
    }

    /// One pass of the (regularised) block elimination. `bz` is given in
    /// scaled form `W⁻¹ bz`.
    fn solve_once(&self, f: &KktFactor, sf: &StandardForm, bx: &[f64], by: &[f64], bz: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let p = sf.num_eq();
        let mut rx = bx.to_vec();
        for (g, scaled) in self.narrow.iter().zip(&f.narrow_scaled) {
            let local_bz = DVector::from_column_slice(&bz[g.rows.clone()]);
            let t = scaled.tr_mul(&local_bz);
            for (&v, val) in g.vars.iter().zip(t.iter()) {
                rx[v] += val;
            }
        }
        let mut a = rx;
        self.solve_blocks(&f.blocks, &mut a, true);

        let q = f.v.ncols();
        let mut nu = DVector::zeros(q);
        if q > 0 {
            let mut rhs = f.v.tr_mul(&DVector::from_column_slice(&a));
            for i in 0..p {
                rhs[i] -= by[i];
            }
            let mut at = p;
            for g in &self.wide {
                for r in g.rows.clone() {
                    rhs[at] -= bz[r];
                    at += 1;
                }
            }
            nu = match &f.schur {
                SchurFactor::Triangular(r) => {
                    let mut x = rhs;
                    r.tr_solve_upper_triangular_mut(&mut x);
                    r.solve_upper_triangular_mut(&mut x);
                    x
                }
                SchurFactor::Lu(lu) => lu.solve(&rhs).unwrap_or_else(|| DVector::from_element(q, f64::NAN)),
                SchurFactor::Empty => rhs,
            };
            let corr = &f.v * &nu;
            for (ai, ci) in a.iter_mut().zip(corr.iter()) {
                *ai -= ci;
            }
        }
        let mut dx = a;
        self.solve_blocks(&f.blocks, &mut dx, false);

        let dy: Vec<f64> = nu.iter().take(p).copied().collect();
        let mut dz = vec![0.0; sf.num_cone_rows()];
        let mut at = p;
        for (g, winv) in self.wide.iter().zip(&f.wide_winv) {
            let d = g.rows.len();
            let local = winv * nu.rows(at, d);
            for (r, val) in g.rows.clone().zip(local.iter()) {
                dz[r] = *val;
            }
            at += d;
        }
        for ((g, winv), scaled) in self.narrow.iter().zip(&f.narrow_winv).zip(&f.narrow_scaled) {
            let gdx = scaled * DVector::from_iterator(g.vars.len(), g.vars.iter().map(|&v| dx[v]));
            let local_bz = DVector::from_iterator(g.rows.len(), g.rows.clone().map(|r| bz[r]));
            let z = winv * (gdx - local_bz);
            for (r, val) in g.rows.clone().zip(z.iter()) {
                dz[r] = *val;
            }
        }
        (dx, dy, dz)
    }

    /// Solves the Newton system with iterative refinement.
    pub fn solve(
        &self,
        f: &KktFactor,
        sf: &StandardForm,
        w: &[Scaling],
        bx: &[f64],
        by: &[f64],
        bz: &[f64],
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let bz = apply_scaling(&sf.cones, w, bz, true);
        let (mut dx, mut dy, mut dz) = self.solve_once(f, sf, bx, by, &bz);
        let norm = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let scale = 1.0f64.max(norm(bx)).max(norm(by)).max(norm(&bz));
        let mut last = f64::INFINITY;
        for _ in 0..MAX_REFINE {
            let (rx, ry, rz) = residual(sf, w, bx, by, &bz, &dx, &dy, &dz);
            let err = norm(&rx).max(norm(&ry)).max(norm(&rz));
            if !err.is_finite() || err <= 1e-14 * scale || err > 0.5 * last {
                break;
            }
            last = err;
            let (cx, cy, cz) = self.solve_once(f, sf, &rx, &ry, &rz);
            for (a, b) in dx.iter_mut().zip(cx) {
                *a += b;
            }
            for (a, b) in dy.iter_mut().zip(cy) {
                *a += b;
            }
            for (a, b) in dz.iter_mut().zip(cz) {
                *a += b;
            }
        }
        (dx, dy, dz)
    }
}

/// `b - K d` for the unregularised Newton operator `K`, with the cone rows
/// in scaled form `W⁻¹ bz - W⁻¹ G dx + W dz`.
#[allow(clippy::too_many_arguments)]
fn residual(
    sf: &StandardForm,
    w: &[Scaling],
    bx: &[f64],
    by: &[f64],
    bz: &[f64],
    dx: &[f64],
    dy: &[f64],
    dz: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let dxv = DVector::from_column_slice(dx);
    let dyv = DVector::from_column_slice(dy);
    let dzv = DVector::from_column_slice(dz);
    let kx = sf.a.tr_mul(&dyv) + sf.g.tr_mul(&dzv);
    let ky = &sf.a * &dxv;
    let gdx = &sf.g * &dxv;
    let winv_gdx = apply_scaling(&sf.cones, w, gdx.as_slice(), true);
    let w_dz = apply_scaling(&sf.cones, w, dz, false);
    let rx = bx.iter().zip(kx.iter()).map(|(b, k)| b - k).collect();
    let ry = by.iter().zip(ky.iter()).map(|(b, k)| b - k).collect();
    let rz = (0..bz.len()).map(|i| bz[i] - (winv_gdx[i] - w_dz[i])).collect();
    (rx, ry, rz)
}
