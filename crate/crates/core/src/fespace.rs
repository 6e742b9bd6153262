//! Global finite element spaces on a mesh.
//!
//! H(div) spaces number edge moments first (edge-major, moment-minor) and then
//! interior moments cell by cell. DG spaces are cell-major blocks.

use std::sync::Arc;

use rayon::prelude::*;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::quadrature::{triangle_gauss, QuadratureRule};
use crate::refelem::{CellMap, ElementFamily, ReferenceElement, Tabulation};
use crate::scalar::Scalar;

/// Field callback: writes `ncomp` values at a physical point.
pub type FieldFn<'a, T> = &'a (dyn Fn([T; 2], &mut [T]) + Sync);

/// Wraps a scalar closure as a field callback.
pub fn scalar_field<T: Scalar>(f: impl Fn([T; 2]) -> T + Sync) -> impl Fn([T; 2], &mut [T]) + Sync {
    move |x, out| out[0] = f(x)
}

/// Wraps a vector closure as a field callback.
pub fn vector_field<T: Scalar>(
    f: impl Fn([T; 2]) -> [T; 2] + Sync,
) -> impl Fn([T; 2], &mut [T]) + Sync {
    move |x, out| out.copy_from_slice(&f(x))
}

#[derive(Debug)]
pub struct FESpace<T> {
    mesh: Arc<Mesh<T>>,
    element: ReferenceElement<T>,
    maps: Vec<CellMap<T>>,
    ndofs: usize,
    dofs: Vec<usize>,
    signs: Vec<T>,
}

impl<T: Scalar> FESpace<T> {
    pub fn new(mesh: Arc<Mesh<T>>, family: ElementFamily) -> Result<Arc<Self>> {
        let element = ReferenceElement::new(family)?;
        let dim = element.dim();
        let nc = mesh.num_cells();
        let maps = (0..nc)
            .map(|c| CellMap::new(mesh.cell_vertices(c), c))
            .collect::<Result<Vec<_>>>()?;
        let mut dofs = Vec::with_capacity(nc * dim);
        let mut signs = Vec::with_capacity(nc * dim);
        let ndofs = if family.is_hdiv() {
            let nm = family.edge_dofs_per_edge();
            let ni = family.interior_dofs();
            let base = mesh.num_edges() * nm;
            for c in 0..nc {
                let edges = mesh.cell_edges(c);
                let es = mesh.cell_edge_signs(c);
                for i in 0..3 {
                    for j in 0..nm {
                        dofs.push(edges[i] * nm + j);
                        // reversed parametrization flips odd Legendre moments
                        let s = if es[i] > 0 || j % 2 == 1 {
                            T::one()
                        } else {
                            -T::one()
                        };
                        signs.push(s);
                    }
                }
                for i in 0..ni {
                    dofs.push(base + c * ni + i);
                    signs.push(T::one());
                }
            }
            base + nc * ni
        } else {
            for c in 0..nc {
                for i in 0..dim {
                    dofs.push(c * dim + i);
                    signs.push(T::one());
                }
            }
            nc * dim
        };
        Ok(Arc::new(Self {
            mesh,
            element,
            maps,
            ndofs,
            dofs,
            signs,
        }))
    }

    pub fn mesh(&self) -> &Arc<Mesh<T>> {
        &self.mesh
    }

    pub fn family(&self) -> ElementFamily {
        self.element.family()
    }

    pub fn element(&self) -> &ReferenceElement<T> {
        &self.element
    }

    pub fn ndofs(&self) -> usize {
        self.ndofs
    }

    /// Local dimension.
    pub fn dim(&self) -> usize {
        self.element.dim()
    }

    pub fn ncomp(&self) -> usize {
        self.element.ncomp()
    }

    pub fn is_hdiv(&self) -> bool {
        self.family().is_hdiv()
    }

    pub fn num_cells(&self) -> usize {
        self.maps.len()
    }

    pub fn cell_dofs(&self, cell: usize) -> &[usize] {
        let d = self.dim();
        &self.dofs[cell * d..(cell + 1) * d]
    }

    pub fn cell_signs(&self, cell: usize) -> &[T] {
        let d = self.dim();
        &self.signs[cell * d..(cell + 1) * d]
    }

    pub fn map(&self, cell: usize) -> &CellMap<T> {
        &self.maps[cell]
    }

    /// Number of DOFs attached to edges (zero for DG spaces).
    pub fn num_edge_dofs(&self) -> usize {
        self.mesh.num_edges() * self.family().edge_dofs_per_edge()
    }

    pub fn edge_dofs(&self, edge: usize) -> std::ops::Range<usize> {
        let nm = self.family().edge_dofs_per_edge();
        edge * nm..(edge + 1) * nm
    }

    pub fn same_mesh(&self, other: &FESpace<T>) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh)
    }

    /// Physical basis values with global signs applied: `out[i * ncomp + c]`.
    pub fn basis_values(&self, cell: usize, tab: &Tabulation<T>, q: usize, out: &mut [T]) {
        let dim = self.dim();
        let signs = self.cell_signs(cell);
        if self.is_hdiv() {
            let map = &self.maps[cell];
            for i in 0..dim {
                let v = map.piola([tab.value(q, i, 0), tab.value(q, i, 1)]);
                out[2 * i] = signs[i] * v[0];
                out[2 * i + 1] = signs[i] * v[1];
            }
        } else {
            let nc = self.ncomp();
            out[..dim * nc].copy_from_slice(&tab.values[q * dim * nc..(q + 1) * dim * nc]);
        }
    }

    /// Physical divergences with signs (H(div) only).
    pub fn basis_divs(&self, cell: usize, tab: &Tabulation<T>, q: usize, out: &mut [T]) {
        let map = &self.maps[cell];
        let signs = self.cell_signs(cell);
        for i in 0..self.dim() {
            out[i] = signs[i] * map.piola_div(tab.div(q, i));
        }
    }

    pub fn tabulate_rule(&self, rule: &QuadratureRule<T>) -> Tabulation<T> {
        let pts: Vec<[T; 2]> = (0..rule.len()).map(|q| rule.ref_point(q)).collect();
        self.element.tabulate(&pts)
    }

    pub fn zero(self: &Arc<Self>) -> FEFunction<T> {
        FEFunction {
            space: Arc::clone(self),
            coeffs: vec![T::zero(); self.ndofs],
        }
    }

    /// Canonical interpolation through the DOF functionals.
    pub fn interpolate_canonical(self: &Arc<Self>, f: FieldFn<'_, T>) -> Result<FEFunction<T>> {
        if !self.is_hdiv() {
            return Err(Error::UnsupportedElement(format!(
                "canonical interpolation into {}",
                self.family().name()
            )));
        }
        let local: Vec<Vec<T>> = (0..self.num_cells())
            .into_par_iter()
            .map(|c| {
                let map = &self.maps[c];
                let mut pulled = |p: [T; 2], out: &mut [T]| {
                    let mut v = [T::zero(); 2];
                    f(map.map(p), &mut v);
                    out.copy_from_slice(&map.pull_back(v));
                };
                self.element.interpolate_dofs(&mut pulled)
            })
            .collect();
        let mut coeffs = vec![T::zero(); self.ndofs];
        let mut seen = vec![false; self.ndofs];
        for (c, vals) in local.iter().enumerate() {
            for ((&g, &s), &v) in self.cell_dofs(c).iter().zip(self.cell_signs(c)).zip(vals) {
                if !seen[g] {
                    coeffs[g] = s * v;
                    seen[g] = true;
                }
            }
        }
        Ok(FEFunction {
            space: Arc::clone(self),
            coeffs,
        })
    }

    /// Cell-wise L2 projection of `weight * f` (DG spaces only).
    pub fn project_l2(
        self: &Arc<Self>,
        f: FieldFn<'_, T>,
        weight: Option<&[T]>,
    ) -> Result<FEFunction<T>> {
        if self.is_hdiv() {
            return Err(Error::UnsupportedElement(format!(
                "L2 projection onto {}",
                self.family().name()
            )));
        }
        if let Some(w) = weight {
            if w.len() != self.num_cells() {
                return Err(Error::DimensionMismatch(format!(
                    "{} weights for {} cells",
                    w.len(),
                    self.num_cells()
                )));
            }
        }
        let rule = triangle_gauss::<T>(10);
        let tab = self.tabulate_rule(&rule);
        let dim = self.dim();
        let nc = self.ncomp();
        let mut mass = DenseMatrix::zeros(dim, dim);
        for q in 0..rule.len() {
            for i in 0..dim {
                for j in 0..dim {
                    let mut s = T::zero();
                    for c in 0..nc {
                        s += tab.value(q, i, c) * tab.value(q, j, c);
                    }
                    mass[(i, j)] += rule.weights[q] * s;
                }
            }
        }
        let lu = mass.lu()?;
        let local: Vec<Vec<T>> = (0..self.num_cells())
            .into_par_iter()
            .map(|c| {
                let map = &self.maps[c];
                let mut load = vec![T::zero(); dim];
                let mut val = [T::zero(); 2];
                for q in 0..rule.len() {
                    f(map.map(rule.ref_point(q)), &mut val[..nc]);
                    for i in 0..dim {
                        let mut s = T::zero();
                        for cc in 0..nc {
                            s += tab.value(q, i, cc) * val[cc];
                        }
                        load[i] += rule.weights[q] * s;
                    }
                }
                if let Some(w) = weight {
                    load.iter_mut().for_each(|l| *l *= w[c]);
                }
                lu.solve_in_place(&mut load);
                load
            })
            .collect();
        Ok(FEFunction {
            space: Arc::clone(self),
            coeffs: local.concat(),
        })
    }
}

/// Coefficient vector of a member of an `FESpace`.
#[derive(Debug, Clone)]
pub struct FEFunction<T> {
    space: Arc<FESpace<T>>,
    pub coeffs: Vec<T>,
}

impl<T: Scalar> FEFunction<T> {
    pub fn new(space: Arc<FESpace<T>>, coeffs: Vec<T>) -> Result<Self> {
        if coeffs.len() != space.ndofs() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for {} DOFs",
                coeffs.len(),
                space.ndofs()
            )));
        }
        Ok(Self { space, coeffs })
    }

    pub fn space(&self) -> &Arc<FESpace<T>> {
        &self.space
    }

    /// Value at a reference point of `cell`.
    pub fn eval_ref(&self, cell: usize, p: [T; 2], out: &mut [T]) {
        let sp = &*self.space;
        let el = sp.element();
        let dim = sp.dim();
        let nc = sp.ncomp();
        let mut vals = vec![T::zero(); dim * nc];
        el.eval(p, &mut vals);
        out[..nc].iter_mut().for_each(|o| *o = T::zero());
        let dofs = sp.cell_dofs(cell);
        let signs = sp.cell_signs(cell);
        for i in 0..dim {
            let a = signs[i] * self.coeffs[dofs[i]];
            for c in 0..nc {
                out[c] += a * vals[i * nc + c];
            }
        }
        if sp.is_hdiv() {
            let v = sp.map(cell).piola([out[0], out[1]]);
            out[..2].copy_from_slice(&v);
        }
    }

    /// Divergence at a reference point of `cell` (H(div) only).
    pub fn eval_div_ref(&self, cell: usize, p: [T; 2]) -> T {
        let sp = &*self.space;
        let mut divs = vec![T::zero(); sp.dim()];
        sp.element().eval_div(p, &mut divs);
        let dofs = sp.cell_dofs(cell);
        let signs = sp.cell_signs(cell);
        let s = (0..sp.dim()).fold(T::zero(), |acc, i| {
            acc + signs[i] * self.coeffs[dofs[i]] * divs[i]
        });
        sp.map(cell).piola_div(s)
    }

    /// Value at a physical point, which must lie in `cell`.
    pub fn evaluate(&self, cell: usize, x: [T; 2], out: &mut [T]) -> Result<()> {
        let map = self.space.map(cell);
        let p = map.inverse_map(x);
        let tol = T::lit(1e-10).max(T::tol(64.0));
        if p[0] < -tol || p[1] < -tol || p[0] + p[1] > T::one() + tol {
            return Err(Error::PointOutsideCell {
                cell,
                x: x[0].as_f64(),
                y: x[1].as_f64(),
            });
        }
        self.eval_ref(cell, p, out);
        Ok(())
    }

    /// `sqrt(sum_K weight_K * int_K |f - self|^2)` with a high-order rule.
    pub fn l2_distance(&self, f: FieldFn<'_, T>, weight: Option<&[T]>) -> T {
        let sp = &*self.space;
        let rule = triangle_gauss::<T>(8);
        let nc = sp.ncomp();
        let total: T = (0..sp.num_cells())
            .into_par_iter()
            .map(|c| {
                let map = sp.map(c);
                let mut a = [T::zero(); 2];
                let mut b = [T::zero(); 2];
                let mut s = T::zero();
                for (p, w) in rule.iter() {
                    self.eval_ref(c, p, &mut a);
                    f(map.map(p), &mut b[..nc]);
                    for k in 0..nc {
                        s += w * (a[k] - b[k]) * (a[k] - b[k]);
                    }
                }
                let wc = weight.map_or(T::one(), |w| w[c]);
                s * map.det * wc
            })
            .collect::<Vec<T>>()
            .into_iter()
            .sum();
        total.sqrt()
    }

    /// `P_h div self` as a member of a scalar DG space.
    pub fn divergence_into(&self, target: &Arc<FESpace<T>>) -> Result<FEFunction<T>> {
        if !self.space.is_hdiv() || target.ncomp() != 1 || !self.space.same_mesh(target) {
            return Err(Error::MeshMismatch);
        }
        // cell-wise projection of the polynomial divergence
        let rule = triangle_gauss::<T>(6);
        let tab = target.tabulate_rule(&rule);
        let dim = target.dim();
        let mut mass = DenseMatrix::zeros(dim, dim);
        for q in 0..rule.len() {
            for i in 0..dim {
                for j in 0..dim {
                    mass[(i, j)] += rule.weights[q] * tab.value(q, i, 0) * tab.value(q, j, 0);
                }
            }
        }
        let lu = mass.lu()?;
        let mut coeffs = vec![T::zero(); target.ndofs()];
        for c in 0..target.num_cells() {
            let mut load = vec![T::zero(); dim];
            for q in 0..rule.len() {
                let d = self.eval_div_ref(c, rule.ref_point(q));
                for i in 0..dim {
                    load[i] += rule.weights[q] * tab.value(q, i, 0) * d;
                }
            }
            lu.solve_in_place(&mut load);
            coeffs[c * dim..(c + 1) * dim].copy_from_slice(&load);
        }
        FEFunction::new(Arc::clone(target), coeffs)
    }
}

/// One of the four velocity/pressure/auxiliary element pairings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pairing {
    /// BDM1 x P0 x P1^2
    Bdm1,
    /// RTN0 x P0 x P0^2
    Rtn0,
    /// BDM2 x P1 x P2^2
    Bdm2,
    /// RTN1 x P1 x P1^2
    Rtn1,
}

impl Pairing {
    pub const ALL: [Pairing; 4] = [Pairing::Bdm1, Pairing::Rtn0, Pairing::Bdm2, Pairing::Rtn1];

    pub fn velocity(&self) -> ElementFamily {
        match self {
            Pairing::Bdm1 => ElementFamily::bdm(1),
            Pairing::Rtn0 => ElementFamily::rtn(0),
            Pairing::Bdm2 => ElementFamily::bdm(2),
            Pairing::Rtn1 => ElementFamily::rtn(1),
        }
    }

    /// Pressure degree `k`.
    pub fn k(&self) -> usize {
        match self {
            Pairing::Bdm1 | Pairing::Rtn0 => 0,
            Pairing::Bdm2 | Pairing::Rtn1 => 1,
        }
    }

    pub fn delta(&self) -> usize {
        self.velocity().delta()
    }

    pub fn pressure(&self) -> ElementFamily {
        ElementFamily::dg_scalar(self.k())
    }

    pub fn auxiliary(&self) -> ElementFamily {
        ElementFamily::dg_vector(self.k() + self.delta())
    }

    /// Space of the post-processed pressure.
    pub fn post(&self) -> ElementFamily {
        ElementFamily::dg_scalar(self.k() + 2)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Pairing::Bdm1 => "bdm1",
            Pairing::Rtn0 => "rtn0",
            Pairing::Bdm2 => "bdm2",
            Pairing::Rtn1 => "rtn1",
        }
    }

    pub fn label(&self) -> String {
        format!(
            "{} x {} x {}",
            self.velocity().name(),
            self.pressure().name(),
            self.auxiliary().name()
        )
    }
}

impl std::fmt::Display for Pairing {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Pairing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Pairing::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown pairing '{s}' (expected bdm1, rtn0, bdm2 or rtn1)"
                ))
            })
    }
}

/// The spaces `V_h`, `Q_h` and `W_h` of one pairing on one mesh.
#[derive(Debug, Clone)]
pub struct Spaces<T> {
    pub pairing: Pairing,
    pub v: Arc<FESpace<T>>,
    pub q: Arc<FESpace<T>>,
    pub w: Arc<FESpace<T>>,
}

impl<T: Scalar> Spaces<T> {
    pub fn new(mesh: Arc<Mesh<T>>, pairing: Pairing) -> Result<Self> {
        Ok(Self {
            pairing,
            v: FESpace::new(mesh.clone(), pairing.velocity())?,
            q: FESpace::new(mesh.clone(), pairing.pressure())?,
            w: FESpace::new(mesh, pairing.auxiliary())?,
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh<T>> {
        self.v.mesh()
    }

    /// Block sizes in the order `v, p, u, w, q, r`.
    pub fn block_sizes(&self) -> [usize; 6] {
        let (nv, nq, nw) = (self.v.ndofs(), self.q.ndofs(), self.w.ndofs());
        [nv, nq, nw, nw, nq, nq]
    }

    pub fn total_dofs(&self) -> usize {
        self.block_sizes().iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Rect;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mesh(n: usize) -> Arc<Mesh<f64>> {
        Arc::new(Mesh::build_structured(Rect::unit(), n).unwrap())
    }

    fn hdiv_families() -> [ElementFamily; 4] {
        [
            ElementFamily::rtn(0),
            ElementFamily::rtn(1),
            ElementFamily::bdm(1),
            ElementFamily::bdm(2),
        ]
    }

    #[test]
    fn dof_counts() {
        let m = mesh(2);
        let v = FESpace::new(m.clone(), ElementFamily::bdm(2)).unwrap();
        assert_eq!(v.ndofs(), 16 * 3 + 8 * 3);
        let q = FESpace::new(m, ElementFamily::dg_vector(1)).unwrap();
        assert_eq!(q.ndofs(), 8 * 6);
    }

    #[test]
    fn constant_field_reproduced() {
        let m = mesh(3);
        for fam in hdiv_families() {
            let v = FESpace::new(m.clone(), fam).unwrap();
            let f = v
                .interpolate_canonical(&vector_field(|_| [1.0, 0.0]))
                .unwrap();
            let mut out = [0.0; 2];
            for c in 0..m.num_cells() {
                f.eval_ref(c, [0.2, 0.3], &mut out);
                assert!((out[0] - 1.0).abs() < 1e-12 && out[1].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn normal_trace_continuous_for_random_coefficients() {
        let m = mesh(4);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for fam in hdiv_families() {
            let v = FESpace::new(m.clone(), fam).unwrap();
            let coeffs = (0..v.ndofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let f = FEFunction::new(v.clone(), coeffs).unwrap();
            let mut jump: f64 = 0.0;
            for e in 0..m.num_edges() {
                let [Some(c0), Some(c1)] = m.edge_cells(e) else {
                    continue;
                };
                let [a, b] = m.edges()[e];
                let (pa, pb) = (m.vertices()[a], m.vertices()[b]);
                let n = m.edge_normal(e);
                for s in [0.1, 0.37, 0.5, 0.81] {
                    let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
                    let mut v0 = [0.0; 2];
                    let mut v1 = [0.0; 2];
                    f.evaluate(c0, x, &mut v0).unwrap();
                    f.evaluate(c1, x, &mut v1).unwrap();
                    let d = (v0[0] - v1[0]) * n[0] + (v0[1] - v1[1]) * n[1];
                    jump = jump.max(d.abs());
                }
            }
            assert!(jump < 1e-10, "{}: jump {jump}", fam.name());
        }
    }

    #[test]
    fn commuting_diagram() {
        let m = mesh(8);
        let field = |x: [f64; 2]| [x[0].sin() * x[1].cos(), x[0] * x[0] * x[1]];
        let div = |x: [f64; 2]| x[0].cos() * x[1].cos() + x[0] * x[0];
        for fam in hdiv_families() {
            let v = FESpace::new(m.clone(), fam).unwrap();
            let q = FESpace::new(
                m.clone(),
                ElementFamily::dg_scalar(fam.div_degree().unwrap()),
            )
            .unwrap();
            let pi = v.interpolate_canonical(&vector_field(field)).unwrap();
            let lhs = pi.divergence_into(&q).unwrap();
            let rhs = q.project_l2(&scalar_field(div), None).unwrap();
            let diff = FEFunction::new(
                q.clone(),
                lhs.coeffs
                    .iter()
                    .zip(&rhs.coeffs)
                    .map(|(a, b)| a - b)
                    .collect(),
            )
            .unwrap();
            let err = diff.l2_distance(&scalar_field(|_| 0.0), None);
            assert!(err < 1e-10, "{}: {err}", fam.name());
        }
    }

    #[test]
    fn projection_of_x_onto_p0_is_centroid() {
        let m = mesh(1);
        let q = FESpace::new(m.clone(), ElementFamily::dg_scalar(0)).unwrap();
        let p = q.project_l2(&scalar_field(|x| x[0]), None).unwrap();
        for c in 0..2 {
            assert!((p.coeffs[c] - m.cell_centroid(c)[0]).abs() < 1e-14);
        }
    }

    #[test]
    fn projection_idempotent() {
        let m = mesh(3);
        let q = FESpace::new(m, ElementFamily::dg_vector(2)).unwrap();
        let f = |x: [f64; 2]| [(3.0 * x[0]).sin(), x[1].exp()];
        let p1 = q.project_l2(&vector_field(f), None).unwrap();
        let p1c = p1.clone();
        let p2 = q
            .project_l2(
                &move |x: [f64; 2], out: &mut [f64]| {
                    let c = (0..p1c.space().num_cells())
                        .find(|&c| {
                            let r = p1c.space().map(c).inverse_map(x);
                            r[0] >= -1e-12 && r[1] >= -1e-12 && r[0] + r[1] <= 1.0 + 1e-12
                        })
                        .unwrap();
                    p1c.evaluate(c, x, out).unwrap();
                },
                None,
            )
            .unwrap();
        for (a, b) in p1.coeffs.iter().zip(&p2.coeffs) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_rate() {
        for k in 0..=2 {
            let mut errs = Vec::new();
            for n in [8, 16, 32] {
                let q = FESpace::new(mesh(n), ElementFamily::dg_scalar(k)).unwrap();
                let f = |x: [f64; 2]| (2.0 * x[0]).sin() * (x[1] * x[1]).cos();
                let p = q.project_l2(&scalar_field(f), None).unwrap();
                errs.push(p.l2_distance(&scalar_field(f), None));
            }
            let rate = (errs[1] / errs[2]).log2();
            assert!((rate - (k as f64 + 1.0)).abs() < 0.15, "k={k} rate {rate}");
        }
    }

    #[test]
    fn interpolation_round_trip() {
        let m = mesh(16);
        let f = |x: [f64; 2]| [x[1].sin(), x[0] * x[1]];
        let v = FESpace::new(m, ElementFamily::bdm(2)).unwrap();
        let pi = v.interpolate_canonical(&vector_field(f)).unwrap();
        assert!(pi.l2_distance(&vector_field(f), None) < 1e-5);
    }

    #[test]
    fn point_outside_cell_rejected() {
        let m = mesh(2);
        let q = FESpace::new(m, ElementFamily::dg_scalar(0)).unwrap();
        let z = q.zero();
        let mut out = [0.0];
        assert!(z.evaluate(0, [0.9, 0.9], &mut out).is_err());
        z.evaluate(0, [0.3, 0.1], &mut out).unwrap();
        assert_eq!(out[0], 0.0);
    }
}
