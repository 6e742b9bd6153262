//! Global matrices and load vectors.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fespace::{FESpace, FieldFn, Spaces};
use crate::mesh::{BoundaryKind, BoundaryLabel};
use crate::quadrature::{gauss_legendre, quadrature, shifted_legendre, triangle_gauss};
use crate::refelem::REF_VERTICES;
use crate::scalar::Scalar;
use crate::sparse::{CsrMatrix, TripletBuilder};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Form {
    /// `(weight trial, test)`
    Mass,
    /// `(div trial, test)`
    Div,
}

fn check_weight<T: Scalar>(space: &FESpace<T>, weight: Option<&[T]>) -> Result<()> {
    if let Some(w) = weight {
        if w.len() != space.num_cells() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {} cells",
                w.len(),
                space.num_cells()
            )));
        }
        if let Some((cell, &value)) = w
            .iter()
            .enumerate()
            .find(|(_, v)| **v < T::zero() || !v.is_finite())
        {
            return Err(Error::NegativeWeight {
                cell,
                value: value.as_f64(),
            });
        }
    }
    Ok(())
}

fn assemble_form<T: Scalar>(
    test: &FESpace<T>,
    trial: &FESpace<T>,
    weight: Option<&[T]>,
    form: Form,
    order: &[usize],
) -> Result<CsrMatrix<T>> {
    if !test.same_mesh(trial) {
        return Err(Error::MeshMismatch);
    }
    check_weight(test, weight)?;
    let nct = test.ncomp();
    match form {
        Form::Mass if nct != trial.ncomp() => {
            return Err(Error::DimensionMismatch(format!(
                "mass form between {} and {}",
                test.family().name(),
                trial.family().name()
            )))
        }
        Form::Div if !(trial.is_hdiv() && nct == 1) => {
            return Err(Error::DimensionMismatch(
                "divergence form needs an H(div) trial and scalar test space".into(),
            ))
        }
        _ => {}
    }
    let degree = (test.family().poly_degree() + trial.family().poly_degree()).clamp(1, 10);
    let rule = quadrature::<T>(degree)?;
    let tt = test.tabulate_rule(&rule);
    let tr = trial.tabulate_rule(&rule);
    let (dt, dr) = (test.dim(), trial.dim());
    let chunks: Vec<TripletBuilder<T>> = order
        .par_chunks(256)
        .map(|cells| {
            let mut b =
                TripletBuilder::with_capacity(test.ndofs(), trial.ndofs(), cells.len() * dt * dr);
            let mut vt = vec![T::zero(); dt * nct];
            let mut vr = vec![T::zero(); dr * nct.max(1)];
            let mut local = vec![T::zero(); dt * dr];
            for &c in cells {
                let wc = weight.map_or(T::one(), |w| w[c]);
                if wc == T::zero() {
                    continue;
                }
                local.iter_mut().for_each(|x| *x = T::zero());
                let det = test.map(c).det;
                for q in 0..rule.len() {
                    test.basis_values(c, &tt, q, &mut vt);
                    match form {
                        Form::Mass => trial.basis_values(c, &tr, q, &mut vr),
                        Form::Div => trial.basis_divs(c, &tr, q, &mut vr),
                    }
                    let jw = rule.weights[q] * det * wc;
                    let ncr = if form == Form::Mass { nct } else { 1 };
                    for i in 0..dt {
                        for j in 0..dr {
                            let mut s = T::zero();
                            for k in 0..ncr {
                                s += vt[i * nct + k] * vr[j * ncr + k];
                            }
                            local[i * dr + j] += jw * s;
                        }
                    }
                }
                let (gt, gr) = (test.cell_dofs(c), trial.cell_dofs(c));
                for i in 0..dt {
                    for j in 0..dr {
                        b.push(gt[i], gr[j], local[i * dr + j]);
                    }
                }
            }
            b
        })
        .collect();
    let mut all = TripletBuilder::new(test.ndofs(), trial.ndofs());
    for c in chunks {
        all.extend(c);
    }
    Ok(all.build())
}

fn natural_order<T: Scalar>(space: &FESpace<T>) -> Vec<usize> {
    (0..space.num_cells()).collect()
}

/// `M[i,j] = (weight phi_j, phi_i)` with a cell-wise constant nonnegative weight.
pub fn assemble_mass<T: Scalar>(space: &FESpace<T>, weight: Option<&[T]>) -> Result<CsrMatrix<T>> {
    assemble_form(space, space, weight, Form::Mass, &natural_order(space))
}

/// `C[i,j] = (weight psi_j, phi_i)` for trial space `trial` and test space `test`.
pub fn assemble_cross_mass<T: Scalar>(
    test: &FESpace<T>,
    trial: &FESpace<T>,
    weight: Option<&[T]>,
) -> Result<CsrMatrix<T>> {
    assemble_form(test, trial, weight, Form::Mass, &natural_order(test))
}

/// `B[i,j] = (div phi_j, psi_i)` with `phi` in `v` and `psi` in `q`.
pub fn assemble_div<T: Scalar>(v: &FESpace<T>, q: &FESpace<T>) -> Result<CsrMatrix<T>> {
    assemble_form(q, v, None, Form::Div, &natural_order(v))
}

/// Load vector `(f, phi_i)` for a scalar or vector field `f`.
pub fn assemble_load<T: Scalar>(space: &FESpace<T>, f: FieldFn<'_, T>) -> Vec<T> {
    let rule = triangle_gauss::<T>(space.family().poly_degree() + 3);
    let tab = space.tabulate_rule(&rule);
    let (dim, nc) = (space.dim(), space.ncomp());
    let local: Vec<Vec<T>> = (0..space.num_cells())
        .into_par_iter()
        .map(|c| {
            let map = space.map(c);
            let mut vals = vec![T::zero(); dim * nc];
            let mut fv = [T::zero(); 2];
            let mut load = vec![T::zero(); dim];
            for q in 0..rule.len() {
                f(map.map(rule.ref_point(q)), &mut fv[..nc]);
                space.basis_values(c, &tab, q, &mut vals);
                let jw = rule.weights[q] * map.det;
                for i in 0..dim {
                    let mut s = T::zero();
                    for k in 0..nc {
                        s += vals[i * nc + k] * fv[k];
                    }
                    load[i] += jw * s;
                }
            }
            load
        })
        .collect();
    let mut out = vec![T::zero(); space.ndofs()];
    for (c, load) in local.iter().enumerate() {
        for (&d, &l) in space.cell_dofs(c).iter().zip(load) {
            out[d] += l;
        }
    }
    out
}

/// All blocks of the six-field system.
#[derive(Debug, Clone)]
pub struct SystemBlocks<T> {
    /// `(rho_a v, v')`
    pub m_v: CsrMatrix<T>,
    /// `(kappa_a^{-1} p, p')`
    pub m_p: CsrMatrix<T>,
    /// `(u, u')` on `W_h`
    pub m_w: CsrMatrix<T>,
    /// `(q, q')` on `Q_h`
    pub m_q: CsrMatrix<T>,
    /// `(div v, p')`, rows `Q_h`, columns `V_h`
    pub b: CsrMatrix<T>,
    /// `(rho_u u, v')`, rows `V_h`, columns `W_h`
    pub c_vu: CsrMatrix<T>,
    /// `(v, u')`, rows `W_h`, columns `V_h`
    pub c_uv: CsrMatrix<T>,
    /// `(rho_q q, p')` on `Q_h`
    pub c_pq: CsrMatrix<T>,
    pub omega_rho_sq: T,
    pub omega_kappa_sq: T,
    pub gamma: T,
}

impl<T: Scalar> SystemBlocks<T> {
    pub fn assemble(
        spaces: &Spaces<T>,
        material: &crate::material::MaterialField<T>,
    ) -> Result<Self> {
        if material.num_cells() != spaces.mesh().num_cells() {
            return Err(Error::MeshMismatch);
        }
        let inv_kappa: Vec<T> = material.kappa_a().iter().map(|&k| T::one() / k).collect();
        Ok(Self {
            m_v: assemble_mass(&spaces.v, Some(material.rho_a()))?,
            m_p: assemble_mass(&spaces.q, Some(&inv_kappa))?,
            m_w: assemble_mass(&spaces.w, None)?,
            m_q: assemble_mass(&spaces.q, None)?,
            b: assemble_div(&spaces.v, &spaces.q)?,
            c_vu: assemble_cross_mass(&spaces.v, &spaces.w, Some(material.rho_u()))?,
            c_uv: assemble_cross_mass(&spaces.w, &spaces.v, None)?,
            c_pq: assemble_mass(&spaces.q, Some(material.rho_q()))?,
            omega_rho_sq: material.omega_rho() * material.omega_rho(),
            omega_kappa_sq: material.omega_kappa() * material.omega_kappa(),
            gamma: material.gamma(),
        })
    }
}

/// Weak Dirichlet load `-int_{Gamma_D} p_D v'.n ds` for every Dirichlet-tagged edge.
pub fn assemble_boundary_load<T: Scalar>(
    space: &FESpace<T>,
    p_d: &(dyn Fn(&BoundaryLabel, [T; 2]) -> T + Sync),
) -> Result<Vec<T>> {
    if !space.is_hdiv() {
        return Err(Error::UnsupportedElement(format!(
            "boundary load on {}",
            space.family().name()
        )));
    }
    let mesh = space.mesh();
    let mut out = vec![T::zero(); space.ndofs()];
    let (s, w) = gauss_legendre::<T>(8);
    let el = space.element();
    let dim = space.dim();
    let mut vals = vec![T::zero(); 2 * dim];
    for (edge, label) in mesh.tagged_boundary() {
        let label = label.ok_or(Error::UntaggedEdge(edge))?;
        if label.kind != BoundaryKind::Dirichlet {
            continue;
        }
        let cell = mesh.edge_cells(edge)[0]
            .ok_or_else(|| Error::Mesh(format!("boundary edge {edge} has no cell")))?;
        let local = mesh
            .cell_edges(cell)
            .iter()
            .position(|&e| e == edge)
            .unwrap();
        let a = REF_VERTICES[(local + 1) % 3];
        let b = REF_VERTICES[(local + 2) % 3];
        let t = [T::lit(b[0] - a[0]), T::lit(b[1] - a[1])];
        let nrm = [t[1], -t[0]];
        let map = space.map(cell);
        let nm = space.family().edge_dofs_per_edge();
        let signs = space.cell_signs(cell);
        let dofs = space.cell_dofs(cell);
        for (&sq, &wq) in s.iter().zip(&w) {
            let p = [T::lit(a[0]) + sq * t[0], T::lit(a[1]) + sq * t[1]];
            let pd = p_d(label, map.map(p));
            if pd == T::zero() {
                continue;
            }
            el.eval(p, &mut vals);
            for m in 0..nm {
                let i = local * nm + m;
                let flux = vals[2 * i] * nrm[0] + vals[2 * i + 1] * nrm[1];
                out[dofs[i]] -= signs[i] * wq * pd * flux;
            }
        }
    }
    Ok(out)
}

/// Prescribed values for a set of degrees of freedom.
#[derive(Debug, Clone, Default)]
pub struct EssentialBc<T> {
    dofs: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> EssentialBc<T> {
    pub fn new() -> Self {
        Self {
            dofs: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.dofs.is_empty()
    }

    pub fn dofs(&self) -> &[usize] {
        &self.dofs
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn add(&mut self, dof: usize, value: T) -> Result<()> {
        if let Some(k) = self.dofs.iter().position(|&d| d == dof) {
            let first = self.values[k];
            if (first - value).abs() > T::tol(64.0) * (T::one() + first.abs()) {
                return Err(Error::ConflictingConstraint {
                    dof,
                    first: first.as_f64(),
                    second: value.as_f64(),
                });
            }
            return Ok(());
        }
        self.dofs.push(dof);
        self.values.push(value);
        Ok(())
    }

    /// Edge-moment values of the outward normal velocity `v_n` on every Neumann-tagged edge.
    pub fn normal_velocity(
        space: &FESpace<T>,
        v_n: &dyn Fn(&BoundaryLabel, [T; 2]) -> T,
    ) -> Result<Self> {
        if !space.is_hdiv() {
            return Err(Error::UnsupportedElement(format!(
                "normal constraint on {}",
                space.family().name()
            )));
        }
        let mesh = space.mesh();
        let nm = space.family().edge_dofs_per_edge();
        let (s, w) = gauss_legendre::<T>(8);
        let mut bc = Self::new();
        for (edge, label) in mesh.tagged_boundary() {
            let label = label.ok_or(Error::UntaggedEdge(edge))?;
            if label.kind != BoundaryKind::Neumann {
                continue;
            }
            let cell = mesh.edge_cells(edge)[0]
                .ok_or_else(|| Error::Mesh(format!("boundary edge {edge} has no cell")))?;
            let local = mesh
                .cell_edges(cell)
                .iter()
                .position(|&e| e == edge)
                .unwrap();
            // outward normal = sign * global normal
            let sigma = T::from_i8(mesh.cell_edge_signs(cell)[local]).unwrap();
            let [ia, ib] = mesh.edges()[edge];
            let (pa, pb) = (mesh.vertices()[ia], mesh.vertices()[ib]);
            let len = mesh.edge_length(edge);
            for m in 0..nm {
                let mut acc = T::zero();
                for (&sq, &wq) in s.iter().zip(&w) {
                    let x = [pa[0] + sq * (pb[0] - pa[0]), pa[1] + sq * (pb[1] - pa[1])];
                    acc += wq * v_n(label, x) * shifted_legendre(m, sq);
                }
                bc.add(space.edge_dofs(edge).start + m, sigma * acc * len)?;
            }
        }
        Ok(bc)
    }

    /// Shifts the constrained indices by `offset` (for placement in a block system).
    pub fn offset(&self, offset: usize) -> Self {
        Self {
            dofs: self.dofs.iter().map(|d| d + offset).collect(),
            values: self.values.clone(),
        }
    }

    /// Symmetric elimination: returns the constrained matrix and the removed
    /// columns `A[:, c]` needed to correct right-hand sides.
    pub fn apply_matrix(&self, a: &CsrMatrix<T>) -> (CsrMatrix<T>, CsrMatrix<T>) {
        let n = a.nrows();
        let mut fixed = vec![false; n];
        for &d in &self.dofs {
            fixed[d] = true;
        }
        let mut kept = TripletBuilder::with_capacity(n, n, a.nnz());
        let mut removed = TripletBuilder::new(n, a.ncols());
        for i in 0..n {
            if fixed[i] {
                kept.push(i, i, T::one());
                continue;
            }
            for (j, v) in a.row(i) {
                if fixed[j] {
                    removed.push(i, j, v);
                } else {
                    kept.push(i, j, v);
                }
            }
        }
        (kept.build(), removed.build())
    }

    /// `b -= A[:, c] g`, then `b[c] = g`.
    pub fn apply_rhs(&self, removed: &CsrMatrix<T>, b: &mut [T]) {
        if self.is_empty() {
            return;
        }
        let mut g = vec![T::zero(); removed.ncols()];
        for (&d, &v) in self.dofs.iter().zip(&self.values) {
            g[d] = v;
        }
        removed.matvec_add(-T::one(), &g, b);
        for (&d, &v) in self.dofs.iter().zip(&self.values) {
            b[d] = v;
        }
    }
}

/// Assembles with a caller-chosen cell traversal order.
#[doc(hidden)]
pub fn assemble_mass_in_order<T: Scalar>(
    space: &Arc<FESpace<T>>,
    weight: Option<&[T]>,
    order: &[usize],
) -> Result<CsrMatrix<T>> {
    assemble_form(space, space, weight, Form::Mass, order)
}
