//! Reference-triangle elements: RTN_k, BDM_l and discontinuous Lagrange P_k.
//!
//! H(div) degrees of freedom are normal moments against shifted Legendre
//! polynomials on the edges, ordered edge-major, followed by interior moments.
//! Edge `i` runs from vertex `(i+1)%3` to vertex `(i+2)%3` of the reference
//! triangle and uses the outward normal, so reference data carry no global
//! orientation.

mod piola;

pub use piola::{piola_map, CellMap};

use crate::dense::{condition_number, DenseMatrix};
use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, quadrature, shifted_legendre, triangle_gauss};
use crate::scalar::Scalar;

pub const REF_VERTICES: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum ElementKind {
    Rtn,
    Bdm,
    DgScalar,
    DgVector,
}

/// An element family with its own degree index: `RTN_k`, `BDM_l` or `P_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ElementFamily {
    pub kind: ElementKind,
    pub degree: usize,
}

impl ElementFamily {
    pub const fn rtn(k: usize) -> Self {
        Self {
            kind: ElementKind::Rtn,
            degree: k,
        }
    }

    pub const fn bdm(l: usize) -> Self {
        Self {
            kind: ElementKind::Bdm,
            degree: l,
        }
    }

    pub const fn dg_scalar(k: usize) -> Self {
        Self {
            kind: ElementKind::DgScalar,
            degree: k,
        }
    }

    pub const fn dg_vector(k: usize) -> Self {
        Self {
            kind: ElementKind::DgVector,
            degree: k,
        }
    }

    pub fn is_supported(&self) -> bool {
        match self.kind {
            ElementKind::Rtn => self.degree <= 1,
            ElementKind::Bdm => (1..=2).contains(&self.degree),
            ElementKind::DgScalar | ElementKind::DgVector => self.degree <= 3,
        }
    }

    pub fn is_hdiv(&self) -> bool {
        matches!(self.kind, ElementKind::Rtn | ElementKind::Bdm)
    }

    /// Superconvergence offset: 1 for BDM, 0 otherwise.
    pub fn delta(&self) -> usize {
        usize::from(self.kind == ElementKind::Bdm)
    }

    /// Number of value components.
    pub fn ncomp(&self) -> usize {
        if self.kind == ElementKind::DgScalar {
            1
        } else {
            2
        }
    }

    pub fn dim(&self) -> usize {
        let k = self.degree;
        match self.kind {
            ElementKind::Rtn => (k + 1) * (k + 3),
            ElementKind::Bdm => (k + 1) * (k + 2),
            ElementKind::DgScalar => (k + 1) * (k + 2) / 2,
            ElementKind::DgVector => (k + 1) * (k + 2),
        }
    }

    /// Highest total polynomial degree appearing in the space.
    pub fn poly_degree(&self) -> usize {
        match self.kind {
            ElementKind::Rtn => self.degree + 1,
            _ => self.degree,
        }
    }

    /// Edge normal moments per edge (H(div) only).
    pub fn edge_dofs_per_edge(&self) -> usize {
        match self.kind {
            ElementKind::Rtn => self.degree + 1,
            ElementKind::Bdm => self.degree + 1,
            _ => 0,
        }
    }

    pub fn interior_dofs(&self) -> usize {
        self.dim() - 3 * self.edge_dofs_per_edge()
    }

    /// Degree of the divergence range (`P_k` for `RTN_k`, `P_{l-1}` for `BDM_l`).
    pub fn div_degree(&self) -> Option<usize> {
        match self.kind {
            ElementKind::Rtn => Some(self.degree),
            ElementKind::Bdm => Some(self.degree - 1),
            _ => None,
        }
    }

    pub fn name(&self) -> String {
        match self.kind {
            ElementKind::Rtn => format!("RTN{}", self.degree),
            ElementKind::Bdm => format!("BDM{}", self.degree),
            ElementKind::DgScalar => format!("P{}", self.degree),
            ElementKind::DgVector => format!("P{}^2", self.degree),
        }
    }
}

/// Where a degree of freedom lives on the reference cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofEntity {
    Edge { edge: usize, moment: usize },
    Interior { index: usize },
}

/// A linear functional discretized as `sum_q weights[q] . v(points[q])`.
#[derive(Debug, Clone)]
pub struct DofFunctional<T> {
    pub entity: DofEntity,
    pub points: Vec<[T; 2]>,
    /// `ncomp` weights per point.
    pub weights: Vec<T>,
}

impl<T: Scalar> DofFunctional<T> {
    pub fn apply(&self, ncomp: usize, f: &mut dyn FnMut([T; 2], &mut [T])) -> T {
        let mut val = [T::zero(); 2];
        let mut acc = T::zero();
        for (q, &p) in self.points.iter().enumerate() {
            f(p, &mut val[..ncomp]);
            for c in 0..ncomp {
                acc += self.weights[q * ncomp + c] * val[c];
            }
        }
        acc
    }
}

/// Monomial exponents `(a, b)` of total degree `<= degree`, graded order.
fn monomials(degree: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for d in 0..=degree {
        for b in 0..=d {
            out.push((d - b, b));
        }
    }
    out
}

fn powi<T: Scalar>(x: T, n: usize) -> T {
    if n == 0 {
        T::one()
    } else {
        x.powi(n as i32)
    }
}

/// Vector (or scalar) polynomials expanded in monomials: `coeffs[i][c * nmono + m]`.
#[derive(Debug, Clone)]
struct PolySet<T> {
    ncomp: usize,
    exps: Vec<(usize, usize)>,
    coeffs: DenseMatrix<T>,
}

impl<T: Scalar> PolySet<T> {
    fn nmono(&self) -> usize {
        self.exps.len()
    }

    fn mono_values(&self, p: [T; 2], v: &mut [T], dx: &mut [T], dy: &mut [T]) {
        for (m, &(a, b)) in self.exps.iter().enumerate() {
            let xa = powi(p[0], a);
            let yb = powi(p[1], b);
            v[m] = xa * yb;
            dx[m] = if a > 0 {
                T::from_usize_lossy(a) * powi(p[0], a - 1) * yb
            } else {
                T::zero()
            };
            dy[m] = if b > 0 {
                T::from_usize_lossy(b) * xa * powi(p[1], b - 1)
            } else {
                T::zero()
            };
        }
    }

    /// Values `[i * ncomp + c]`, divergence `[i]` and gradients of scalar sets `[i * 2 + d]`.
    fn eval(
        &self,
        p: [T; 2],
        values: Option<&mut [T]>,
        divs: Option<&mut [T]>,
        grads: Option<&mut [T]>,
    ) {
        let nm = self.nmono();
        let mut v = vec![T::zero(); nm];
        let mut dx = vec![T::zero(); nm];
        let mut dy = vec![T::zero(); nm];
        self.mono_values(p, &mut v, &mut dx, &mut dy);
        let n = self.coeffs.rows();
        if let Some(out) = values {
            for i in 0..n {
                let row = self.coeffs.row(i);
                for c in 0..self.ncomp {
                    let r = &row[c * nm..(c + 1) * nm];
                    out[i * self.ncomp + c] =
                        r.iter().zip(&v).fold(T::zero(), |a, (&x, &y)| a + x * y);
                }
            }
        }
        if let Some(out) = divs {
            assert_eq!(self.ncomp, 2);
            for i in 0..n {
                let row = self.coeffs.row(i);
                let d0 = row[..nm]
                    .iter()
                    .zip(&dx)
                    .fold(T::zero(), |a, (&x, &y)| a + x * y);
                let d1 = row[nm..]
                    .iter()
                    .zip(&dy)
                    .fold(T::zero(), |a, (&x, &y)| a + x * y);
                out[i] = d0 + d1;
            }
        }
        if let Some(out) = grads {
            assert_eq!(self.ncomp, 1);
            for i in 0..n {
                let row = self.coeffs.row(i);
                out[2 * i] = row.iter().zip(&dx).fold(T::zero(), |a, (&x, &y)| a + x * y);
                out[2 * i + 1] = row.iter().zip(&dy).fold(T::zero(), |a, (&x, &y)| a + x * y);
            }
        }
    }
}

/// Spanning set of the local space in monomial coordinates.
fn spanning_set<T: Scalar>(family: ElementFamily) -> PolySet<T> {
    let deg = family.poly_degree();
    let exps = monomials(deg);
    let nm = exps.len();
    let idx = |a: usize, b: usize| exps.iter().position(|&e| e == (a, b)).unwrap();
    let ncomp = family.ncomp();
    let mut rows: Vec<Vec<T>> = Vec::new();
    let unit = |c: usize, m: usize| {
        let mut r = vec![T::zero(); ncomp * nm];
        r[c * nm + m] = T::one();
        r
    };
    match family.kind {
        ElementKind::DgScalar => {
            for m in 0..nm {
                rows.push(unit(0, m));
            }
        }
        ElementKind::DgVector | ElementKind::Bdm => {
            for c in 0..2 {
                for m in 0..nm {
                    rows.push(unit(c, m));
                }
            }
        }
        ElementKind::Rtn => {
            let k = family.degree;
            for c in 0..2 {
                for (m, &(a, b)) in exps.iter().enumerate() {
                    if a + b <= k {
                        rows.push(unit(c, m));
                    }
                }
            }
            // x * (homogeneous degree k)
            for b in 0..=k {
                let a = k - b;
                let mut r = vec![T::zero(); 2 * nm];
                r[idx(a + 1, b)] = T::one();
                r[nm + idx(a, b + 1)] = T::one();
                rows.push(r);
            }
        }
    }
    let coeffs = DenseMatrix::from_fn(rows.len(), ncomp * nm, |i, j| rows[i][j]);
    PolySet {
        ncomp,
        exps,
        coeffs,
    }
}

/// Quadrature accuracy used when discretizing functionals.
#[derive(Debug, Clone, Copy)]
struct FunctionalAccuracy {
    edge_points: usize,
    interior_gauss: usize,
}

fn functionals<T: Scalar>(family: ElementFamily, acc: FunctionalAccuracy) -> Vec<DofFunctional<T>> {
    let mut out = Vec::new();
    match family.kind {
        ElementKind::Rtn | ElementKind::Bdm => {
            let nmom = family.edge_dofs_per_edge();
            let (s, w) = gauss_legendre::<T>(acc.edge_points);
            for edge in 0..3 {
                let a = REF_VERTICES[(edge + 1) % 3];
                let b = REF_VERTICES[(edge + 2) % 3];
                let t = [T::lit(b[0] - a[0]), T::lit(b[1] - a[1])];
                let nrm = [t[1], -t[0]];
                for moment in 0..nmom {
                    let mut points = Vec::new();
                    let mut weights = Vec::new();
                    for (&sq, &wq) in s.iter().zip(&w) {
                        points.push([T::lit(a[0]) + sq * t[0], T::lit(a[1]) + sq * t[1]]);
                        let l = shifted_legendre(moment, sq) * wq;
                        weights.push(l * nrm[0]);
                        weights.push(l * nrm[1]);
                    }
                    out.push(DofFunctional {
                        entity: DofEntity::Edge { edge, moment },
                        points,
                        weights,
                    });
                }
            }
            let rule = triangle_gauss::<T>(acc.interior_gauss);
            for (index, psi) in interior_test_functions::<T>(family).into_iter().enumerate() {
                let mut points = Vec::new();
                let mut weights = Vec::new();
                for (p, wq) in rule.iter() {
                    let v = psi(p);
                    points.push(p);
                    weights.push(wq * v[0]);
                    weights.push(wq * v[1]);
                }
                out.push(DofFunctional {
                    entity: DofEntity::Interior { index },
                    points,
                    weights,
                });
            }
        }
        ElementKind::DgScalar | ElementKind::DgVector => {
            let pts = lagrange_points::<T>(family.degree);
            let ncomp = family.ncomp();
            let mut index = 0;
            for c in 0..ncomp {
                for &p in &pts {
                    let mut weights = vec![T::zero(); ncomp];
                    weights[c] = T::one();
                    out.push(DofFunctional {
                        entity: DofEntity::Interior { index },
                        points: vec![p],
                        weights,
                    });
                    index += 1;
                }
            }
        }
    }
    out
}

type VecFn<T> = Box<dyn Fn([T; 2]) -> [T; 2]>;

/// Interior moment test functions: `P_{k-1}^2` for `RTN_k`, first-kind
/// Nedelec `P_{l-2}^2 + x^perp P~_{l-2}` for `BDM_l`.
fn interior_test_functions<T: Scalar>(family: ElementFamily) -> Vec<VecFn<T>> {
    let mut out: Vec<VecFn<T>> = Vec::new();
    let base_degree = match family.kind {
        ElementKind::Rtn if family.degree >= 1 => family.degree - 1,
        ElementKind::Bdm if family.degree >= 2 => family.degree - 2,
        _ => return out,
    };
    for c in 0..2 {
        for (a, b) in monomials(base_degree) {
            out.push(Box::new(move |p: [T; 2]| {
                let m = powi(p[0], a) * powi(p[1], b);
                if c == 0 {
                    [m, T::zero()]
                } else {
                    [T::zero(), m]
                }
            }));
        }
    }
    if family.kind == ElementKind::Bdm {
        for b in 0..=base_degree {
            let a = base_degree - b;
            out.push(Box::new(move |p: [T; 2]| {
                let m = powi(p[0], a) * powi(p[1], b);
                [-p[1] * m, p[0] * m]
            }));
        }
    }
    out
}

/// Equispaced lattice points; the centroid for degree 0.
fn lagrange_points<T: Scalar>(k: usize) -> Vec<[T; 2]> {
    if k == 0 {
        return vec![[T::lit(1.0 / 3.0), T::lit(1.0 / 3.0)]];
    }
    let mut pts = Vec::new();
    let kf = T::from_usize_lossy(k);
    for j in 0..=k {
        for i in 0..=(k - j) {
            pts.push([T::from_usize_lossy(i) / kf, T::from_usize_lossy(j) / kf]);
        }
    }
    pts
}

/// Basis functions, divergences and DOF functionals of one element on the reference triangle.
#[derive(Debug, Clone)]
pub struct ReferenceElement<T> {
    family: ElementFamily,
    basis: PolySet<T>,
    dofs: Vec<DofFunctional<T>>,
    fine_dofs: Vec<DofFunctional<T>>,
    vandermonde_condition: T,
}

/// Reference values tabulated at a set of points.
#[derive(Debug, Clone)]
pub struct Tabulation<T> {
    pub npoints: usize,
    pub dim: usize,
    pub ncomp: usize,
    /// `[q][i][c]`
    pub values: Vec<T>,
    /// `[q][i]`, H(div) only.
    pub divs: Vec<T>,
    /// `[q][i][d]`, scalar only.
    pub grads: Vec<T>,
}

impl<T: Scalar> Tabulation<T> {
    #[inline]
    pub fn value(&self, q: usize, i: usize, c: usize) -> T {
        self.values[(q * self.dim + i) * self.ncomp + c]
    }

    #[inline]
    pub fn div(&self, q: usize, i: usize) -> T {
        self.divs[q * self.dim + i]
    }

    #[inline]
    pub fn grad(&self, q: usize, i: usize, d: usize) -> T {
        self.grads[(q * self.dim + i) * 2 + d]
    }
}

/// Builds the nodal basis dual to the DOF functionals of `family`.
pub fn make_reference<T: Scalar>(family: ElementFamily) -> Result<ReferenceElement<T>> {
    ReferenceElement::new(family)
}

impl<T: Scalar> ReferenceElement<T> {
    pub fn new(family: ElementFamily) -> Result<Self> {
        if !family.is_supported() {
            return Err(Error::UnsupportedElement(family.name()));
        }
        let span = spanning_set::<T>(family);
        let deg = family.poly_degree();
        // functional quadrature is exact on the local space
        let exact = FunctionalAccuracy {
            edge_points: deg + 2,
            interior_gauss: deg + 2,
        };
        let fine = FunctionalAccuracy {
            edge_points: 12,
            interior_gauss: 12,
        };
        let dofs = functionals::<T>(family, exact);
        let fine_dofs = functionals::<T>(family, fine);
        let n = family.dim();
        if span.coeffs.rows() != n || dofs.len() != n {
            return Err(Error::UnsupportedElement(format!(
                "{}: inconsistent dimension",
                family.name()
            )));
        }
        // V[j][m] = dof_j(span_m)
        let ncomp = family.ncomp();
        let mut vals = vec![T::zero(); n * ncomp];
        let mut v = DenseMatrix::zeros(n, n);
        for (j, dof) in dofs.iter().enumerate() {
            for (q, &p) in dof.points.iter().enumerate() {
                span.eval(p, Some(&mut vals), None, None);
                for m in 0..n {
                    for c in 0..ncomp {
                        v[(j, m)] += dof.weights[q * ncomp + c] * vals[m * ncomp + c];
                    }
                }
            }
        }
        let cond = condition_number(&v)?;
        // basis_i = sum_m C[i][m] span_m with C V^T = I
        let c = v.transpose().lu()?.inverse();
        let coeffs = c.matmul(&span.coeffs);
        let basis = PolySet {
            ncomp,
            exps: span.exps,
            coeffs,
        };
        Ok(Self {
            family,
            basis,
            dofs,
            fine_dofs,
            vandermonde_condition: cond,
        })
    }

    pub fn family(&self) -> ElementFamily {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.family.dim()
    }

    pub fn ncomp(&self) -> usize {
        self.family.ncomp()
    }

    pub fn dofs(&self) -> &[DofFunctional<T>] {
        &self.dofs
    }

    /// 1-norm condition number of the functional/spanning-set matrix.
    pub fn vandermonde_condition(&self) -> T {
        self.vandermonde_condition
    }

    /// Local index of moment `moment` on local edge `edge`.
    pub fn edge_dof(&self, edge: usize, moment: usize) -> usize {
        edge * self.family.edge_dofs_per_edge() + moment
    }

    /// Values `out[i * ncomp + c]`.
    pub fn eval(&self, p: [T; 2], out: &mut [T]) {
        self.basis.eval(p, Some(out), None, None);
    }

    /// Divergences `out[i]` (H(div) families).
    pub fn eval_div(&self, p: [T; 2], out: &mut [T]) {
        self.basis.eval(p, None, Some(out), None);
    }

    /// Gradients `out[i * 2 + d]` (scalar families).
    pub fn eval_grad(&self, p: [T; 2], out: &mut [T]) {
        self.basis.eval(p, None, None, Some(out));
    }

    pub fn tabulate(&self, points: &[[T; 2]]) -> Tabulation<T> {
        let dim = self.dim();
        let ncomp = self.ncomp();
        let hdiv = self.family.is_hdiv();
        let scalar = ncomp == 1;
        let mut tab = Tabulation {
            npoints: points.len(),
            dim,
            ncomp,
            values: vec![T::zero(); points.len() * dim * ncomp],
            divs: if hdiv {
                vec![T::zero(); points.len() * dim]
            } else {
                Vec::new()
            },
            grads: if scalar {
                vec![T::zero(); points.len() * dim * 2]
            } else {
                Vec::new()
            },
        };
        for (q, &p) in points.iter().enumerate() {
            let v = &mut tab.values[q * dim * ncomp..(q + 1) * dim * ncomp];
            let d = if hdiv {
                Some(&mut tab.divs[q * dim..(q + 1) * dim])
            } else {
                None
            };
            let g = if scalar {
                Some(&mut tab.grads[q * dim * 2..(q + 1) * dim * 2])
            } else {
                None
            };
            self.basis.eval(p, Some(v), d, g);
        }
        tab
    }

    /// Applies the DOF functionals to a reference-space field using high-order
    /// quadrature, for interpolating non-polynomial data.
    pub fn interpolate_dofs(&self, f: &mut dyn FnMut([T; 2], &mut [T])) -> Vec<T> {
        let ncomp = self.ncomp();
        self.fine_dofs.iter().map(|d| d.apply(ncomp, f)).collect()
    }

    /// Exact-quadrature DOF values of a field from the local space.
    pub fn apply_dofs(&self, f: &mut dyn FnMut([T; 2], &mut [T])) -> Vec<T> {
        let ncomp = self.ncomp();
        self.dofs.iter().map(|d| d.apply(ncomp, f)).collect()
    }

    /// Quadrature rule exact for products of two basis functions and a degree-`extra` factor.
    pub fn mass_quadrature(&self, extra: usize) -> crate::quadrature::QuadratureRule<T> {
        let d = (2 * self.family.poly_degree() + extra).clamp(1, 10);
        quadrature(d).expect("degree within supported range")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn supported() -> Vec<ElementFamily> {
        let mut v = vec![
            ElementFamily::rtn(0),
            ElementFamily::rtn(1),
            ElementFamily::bdm(1),
            ElementFamily::bdm(2),
        ];
        for k in 0..=3 {
            v.push(ElementFamily::dg_scalar(k));
            v.push(ElementFamily::dg_vector(k));
        }
        v
    }

    fn random_interior(rng: &mut ChaCha8Rng) -> [f64; 2] {
        loop {
            let p = [rng.gen_range(0.02..0.96), rng.gen_range(0.02..0.96)];
            if p[0] + p[1] < 0.97 {
                return p;
            }
        }
    }

    #[test]
    fn dimensions() {
        let dims = [
            (ElementFamily::rtn(0), 3),
            (ElementFamily::bdm(1), 6),
            (ElementFamily::rtn(1), 8),
            (ElementFamily::bdm(2), 12),
        ];
        for (f, d) in dims {
            let e = make_reference::<f64>(f).unwrap();
            assert_eq!(e.dim(), d);
        }
        for k in 0..=3 {
            assert_eq!(
                make_reference::<f64>(ElementFamily::dg_scalar(k))
                    .unwrap()
                    .dim(),
                (k + 1) * (k + 2) / 2
            );
        }
    }

    #[test]
    fn unsupported_rejected() {
        assert!(make_reference::<f64>(ElementFamily::rtn(2)).is_err());
        assert!(make_reference::<f64>(ElementFamily::bdm(0)).is_err());
        assert!(make_reference::<f64>(ElementFamily::dg_scalar(4)).is_err());
    }

    #[test]
    fn delta_by_kind() {
        assert_eq!(ElementFamily::bdm(1).delta(), 1);
        assert_eq!(ElementFamily::rtn(1).delta(), 0);
    }

    #[test]
    fn unisolvent_for_all_families() {
        for f in supported() {
            let e = make_reference::<f64>(f).unwrap();
            let c = e.vandermonde_condition();
            assert!(c.is_finite() && c < 1e8, "{}: condition {c}", f.name());
        }
    }

    #[test]
    fn kronecker_property() {
        for f in supported() {
            let e = make_reference::<f64>(f).unwrap();
            let n = e.dim();
            let nc = e.ncomp();
            let mut vals = vec![0.0; n * nc];
            for i in 0..n {
                let mut basis_i = |p: [f64; 2], out: &mut [f64]| {
                    e.eval(p, &mut vals);
                    out.copy_from_slice(&vals[i * nc..(i + 1) * nc]);
                };
                let d = e.apply_dofs(&mut basis_i);
                for (j, dj) in d.iter().enumerate() {
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!(
                        (dj - expected).abs() < 1e-12,
                        "{} basis {i} dof {j}: {dj}",
                        f.name()
                    );
                }
            }
        }
    }

    #[test]
    fn rtn0_divergence_constant() {
        let e = make_reference::<f64>(ElementFamily::rtn(0)).unwrap();
        let mut d0 = [0.0; 3];
        let mut d1 = [0.0; 3];
        e.eval_div([0.1, 0.2], &mut d0);
        e.eval_div([0.6, 0.3], &mut d1);
        for i in 0..3 {
            assert!((d0[i] - d1[i]).abs() < 1e-13);
            // flux through one edge with unit moment: div = 1 / area = 2
            assert!((d0[i] - 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn divergence_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let step = 1e-5;
        for f in supported().into_iter().filter(|f| f.is_hdiv()) {
            let e = make_reference::<f64>(f).unwrap();
            let n = e.dim();
            let mut div = vec![0.0; n];
            let mut vp = vec![0.0; 2 * n];
            let mut vm = vec![0.0; 2 * n];
            for _ in 0..10 {
                let p = random_interior(&mut rng);
                e.eval_div(p, &mut div);
                let mut fd = vec![0.0; n];
                for d in 0..2 {
                    let mut a = p;
                    let mut b = p;
                    a[d] += step;
                    b[d] -= step;
                    e.eval(a, &mut vp);
                    e.eval(b, &mut vm);
                    for i in 0..n {
                        fd[i] += (vp[2 * i + d] - vm[2 * i + d]) / (2.0 * step);
                    }
                }
                for i in 0..n {
                    assert!(
                        (fd[i] - div[i]).abs() < 1e-6 * (1.0 + div[i].abs()),
                        "{}",
                        f.name()
                    );
                }
            }
        }
    }

    #[test]
    fn polynomial_reproduction() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for f in supported() {
            let e = make_reference::<f64>(f).unwrap();
            let n = e.dim();
            let nc = e.ncomp();
            // random member of the space
            let coef: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut vals = vec![0.0; n * nc];
            let mut field = |p: [f64; 2], out: &mut [f64]| {
                e.eval(p, &mut vals);
                for c in 0..nc {
                    out[c] = (0..n).map(|i| coef[i] * vals[i * nc + c]).sum();
                }
            };
            let dofs = e.interpolate_dofs(&mut field);
            for (a, b) in dofs.iter().zip(&coef) {
                assert!((a - b).abs() < 1e-11, "{}", f.name());
            }
        }
    }

    #[test]
    fn f32_reference_element() {
        let e = make_reference::<f32>(ElementFamily::bdm(1)).unwrap();
        let mut vals = vec![0f32; 12];
        e.eval([0.25, 0.25], &mut vals);
        assert!(vals.iter().all(|v| v.is_finite()));
    }
}
