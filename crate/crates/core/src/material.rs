//! Coefficients, derived weights, states and the energy functional.

use std::fmt;
use std::sync::Arc;

use crate::assembly::assemble_mass;
use crate::error::{Error, Result};
use crate::fespace::{FEFunction, Spaces};
use crate::mesh::RegionIndicator;
use crate::scalar::Scalar;
use crate::sparse::CsrMatrix;

/// Whether a region is an ordinary medium or carries active resonances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Medium {
    Pim,
    Nim,
}

/// Coefficients of one region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionCoefficients<T> {
    pub medium: Medium,
    pub rho_a: T,
    pub kappa_a: T,
    /// Resonance strength `Omega_rho`.
    pub cap_omega_rho: T,
    /// Resonance strength `Omega_kappa`.
    pub cap_omega_kappa: T,
}

impl<T: Scalar> RegionCoefficients<T> {
    pub fn pim(rho_a: T, kappa_a: T) -> Self {
        Self {
            medium: Medium::Pim,
            rho_a,
            kappa_a,
            cap_omega_rho: T::zero(),
            cap_omega_kappa: T::zero(),
        }
    }

    pub fn nim(rho_a: T, kappa_a: T, cap_omega_rho: T, cap_omega_kappa: T) -> Self {
        Self {
            medium: Medium::Nim,
            rho_a,
            kappa_a,
            cap_omega_rho,
            cap_omega_kappa,
        }
    }
}

/// Cell-wise constant coefficients with global `omega_rho`, `omega_kappa`, `gamma`.
#[derive(Debug, Clone)]
pub struct MaterialField<T> {
    medium: Vec<Medium>,
    rho_a: Vec<T>,
    kappa_a: Vec<T>,
    cap_omega_rho: Vec<T>,
    cap_omega_kappa: Vec<T>,
    omega_rho: T,
    omega_kappa: T,
    gamma: T,
    rho_u: Vec<T>,
    rho_w: Vec<T>,
    rho_q: Vec<T>,
    rho_r: Vec<T>,
}

/// A violated admissibility condition.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonPositiveDensity {
        cell: usize,
        value: f64,
    },
    NonPositiveModulus {
        cell: usize,
        value: f64,
    },
    NegativeResonance {
        cell: usize,
        field: &'static str,
        value: f64,
    },
    ResonanceInPim {
        cell: usize,
    },
    MissingResonanceInNim {
        cell: usize,
    },
    NonPositiveFrequency {
        name: &'static str,
        value: f64,
    },
    NegativeDamping {
        value: f64,
    },
    InconsistentWeights {
        cell: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonPositiveDensity { cell, value } => {
                write!(f, "cell {cell}: rho_a = {value} is not positive")
            }
            Violation::NonPositiveModulus { cell, value } => {
                write!(f, "cell {cell}: kappa_a = {value} is not positive")
            }
            Violation::NegativeResonance { cell, field, value } => {
                write!(f, "cell {cell}: {field} = {value} is negative")
            }
            Violation::ResonanceInPim { cell } => {
                write!(f, "cell {cell}: PIM cell with nonzero resonance strength")
            }
            Violation::MissingResonanceInNim { cell } => write!(
                f,
                "cell {cell}: NIM cell without positive resonance strengths"
            ),
            Violation::NonPositiveFrequency { name, value } => {
                write!(f, "{name} = {value} is not positive")
            }
            Violation::NegativeDamping { value } => write!(f, "gamma = {value} is negative"),
            Violation::InconsistentWeights { cell } => {
                write!(f, "cell {cell}: stored weights disagree with coefficients")
            }
        }
    }
}

/// Result of [`MaterialField::validate`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub violations: Vec<Violation>,
}

impl Diagnostics {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    /// Cells named by any violation.
    pub fn cells(&self) -> Vec<usize> {
        let mut c: Vec<usize> = self
            .violations
            .iter()
            .filter_map(|v| match v {
                Violation::NonPositiveDensity { cell, .. }
                | Violation::NonPositiveModulus { cell, .. }
                | Violation::NegativeResonance { cell, .. }
                | Violation::ResonanceInPim { cell }
                | Violation::MissingResonanceInNim { cell }
                | Violation::InconsistentWeights { cell } => Some(*cell),
                _ => None,
            })
            .collect();
        c.dedup();
        c
    }
}

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            return write!(f, "material is admissible");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl<T: Scalar> MaterialField<T> {
    /// Assigns `coefficients[label]` to every cell of `region`.
    pub fn from_regions(
        region: &RegionIndicator,
        coefficients: &[RegionCoefficients<T>],
        omega_rho: T,
        omega_kappa: T,
        gamma: T,
    ) -> Result<Self> {
        if coefficients.len() < region.names().len() {
            return Err(Error::Config(format!(
                "{} regions but coefficients for {}",
                region.names().len(),
                coefficients.len()
            )));
        }
        let per_cell: Vec<RegionCoefficients<T>> =
            region.labels().iter().map(|&l| coefficients[l]).collect();
        Ok(Self::from_cells(&per_cell, omega_rho, omega_kappa, gamma))
    }

    pub fn from_cells(
        cells: &[RegionCoefficients<T>],
        omega_rho: T,
        omega_kappa: T,
        gamma: T,
    ) -> Self {
        let mut m = Self {
            medium: cells.iter().map(|c| c.medium).collect(),
            rho_a: cells.iter().map(|c| c.rho_a).collect(),
            kappa_a: cells.iter().map(|c| c.kappa_a).collect(),
            cap_omega_rho: cells.iter().map(|c| c.cap_omega_rho).collect(),
            cap_omega_kappa: cells.iter().map(|c| c.cap_omega_kappa).collect(),
            omega_rho,
            omega_kappa,
            gamma,
            rho_u: Vec::new(),
            rho_w: Vec::new(),
            rho_q: Vec::new(),
            rho_r: Vec::new(),
        };
        m.update_weights();
        m
    }

    /// Same coefficients on every cell.
    pub fn uniform(
        num_cells: usize,
        c: RegionCoefficients<T>,
        omega_rho: T,
        omega_kappa: T,
        gamma: T,
    ) -> Self {
        Self::from_cells(&vec![c; num_cells], omega_rho, omega_kappa, gamma)
    }

    fn update_weights(&mut self) {
        let n = self.rho_a.len();
        let (wr2, wk2) = (
            self.omega_rho * self.omega_rho,
            self.omega_kappa * self.omega_kappa,
        );
        self.rho_u = (0..n)
            .map(|c| self.rho_a[c] * self.cap_omega_rho[c].powi(2))
            .collect();
        self.rho_w = (0..n)
            .map(|c| self.rho_a[c] * wr2 * self.cap_omega_rho[c].powi(2))
            .collect();
        self.rho_q = (0..n)
            .map(|c| self.cap_omega_kappa[c].powi(2) / self.kappa_a[c])
            .collect();
        self.rho_r = (0..n)
            .map(|c| wk2 * self.cap_omega_kappa[c].powi(2) / self.kappa_a[c])
            .collect();
    }

    /// Replaces the coefficients of one cell and refreshes its weights.
    pub fn set_cell(&mut self, cell: usize, c: RegionCoefficients<T>) {
        self.medium[cell] = c.medium;
        self.rho_a[cell] = c.rho_a;
        self.kappa_a[cell] = c.kappa_a;
        self.cap_omega_rho[cell] = c.cap_omega_rho;
        self.cap_omega_kappa[cell] = c.cap_omega_kappa;
        self.update_weights();
    }

    pub fn set_gamma(&mut self, gamma: T) {
        self.gamma = gamma;
    }

    pub fn num_cells(&self) -> usize {
        self.rho_a.len()
    }

    pub fn medium(&self, cell: usize) -> Medium {
        self.medium[cell]
    }

    pub fn rho_a(&self) -> &[T] {
        &self.rho_a
    }

    pub fn kappa_a(&self) -> &[T] {
        &self.kappa_a
    }

    pub fn cap_omega_rho(&self) -> &[T] {
        &self.cap_omega_rho
    }

    pub fn cap_omega_kappa(&self) -> &[T] {
        &self.cap_omega_kappa
    }

    pub fn omega_rho(&self) -> T {
        self.omega_rho
    }

    pub fn omega_kappa(&self) -> T {
        self.omega_kappa
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn rho_u(&self) -> &[T] {
        &self.rho_u
    }

    pub fn rho_w(&self) -> &[T] {
        &self.rho_w
    }

    pub fn rho_q(&self) -> &[T] {
        &self.rho_q
    }

    pub fn rho_r(&self) -> &[T] {
        &self.rho_r
    }

    pub fn validate(&self) -> Diagnostics {
        let mut v = Vec::new();
        for c in 0..self.num_cells() {
            if !(self.rho_a[c] > T::zero()) {
                v.push(Violation::NonPositiveDensity {
                    cell: c,
                    value: self.rho_a[c].as_f64(),
                });
            }
            if !(self.kappa_a[c] > T::zero()) {
                v.push(Violation::NonPositiveModulus {
                    cell: c,
                    value: self.kappa_a[c].as_f64(),
                });
            }
            for (field, val) in [
                ("Omega_rho", self.cap_omega_rho[c]),
                ("Omega_kappa", self.cap_omega_kappa[c]),
            ] {
                if val < T::zero() {
                    v.push(Violation::NegativeResonance {
                        cell: c,
                        field,
                        value: val.as_f64(),
                    });
                }
            }
            match self.medium[c] {
                Medium::Pim => {
                    if self.cap_omega_rho[c] != T::zero() || self.cap_omega_kappa[c] != T::zero() {
                        v.push(Violation::ResonanceInPim { cell: c });
                    }
                }
                Medium::Nim => {
                    if !(self.cap_omega_rho[c] > T::zero() && self.cap_omega_kappa[c] > T::zero()) {
                        v.push(Violation::MissingResonanceInNim { cell: c });
                    }
                }
            }
        }
        for (name, val) in [
            ("omega_rho", self.omega_rho),
            ("omega_kappa", self.omega_kappa),
        ] {
            if !(val > T::zero()) {
                v.push(Violation::NonPositiveFrequency {
                    name,
                    value: val.as_f64(),
                });
            }
        }
        if self.gamma < T::zero() {
            v.push(Violation::NegativeDamping {
                value: self.gamma.as_f64(),
            });
        }
        let mut fresh = self.clone();
        fresh.update_weights();
        for c in 0..self.num_cells() {
            if fresh.rho_u[c] != self.rho_u[c]
                || fresh.rho_w[c] != self.rho_w[c]
                || fresh.rho_q[c] != self.rho_q[c]
                || fresh.rho_r[c] != self.rho_r[c]
            {
                v.push(Violation::InconsistentWeights { cell: c });
            }
        }
        Diagnostics { violations: v }
    }
}

/// The six coefficient blocks `(v, p, u, w, q, r)` at one time level.
#[derive(Debug, Clone)]
pub struct StateVector<T> {
    pub v: FEFunction<T>,
    pub p: FEFunction<T>,
    pub u: FEFunction<T>,
    pub w: FEFunction<T>,
    pub q: FEFunction<T>,
    pub r: FEFunction<T>,
}

impl<T: Scalar> StateVector<T> {
    pub fn zeros(spaces: &Spaces<T>) -> Self {
        Self {
            v: spaces.v.zero(),
            p: spaces.q.zero(),
            u: spaces.w.zero(),
            w: spaces.w.zero(),
            q: spaces.q.zero(),
            r: spaces.q.zero(),
        }
    }

    pub fn blocks(&self) -> [&FEFunction<T>; 6] {
        [&self.v, &self.p, &self.u, &self.w, &self.q, &self.r]
    }

    pub fn blocks_mut(&mut self) -> [&mut FEFunction<T>; 6] {
        [
            &mut self.v,
            &mut self.p,
            &mut self.u,
            &mut self.w,
            &mut self.q,
            &mut self.r,
        ]
    }

    pub fn len(&self) -> usize {
        self.blocks().iter().map(|b| b.coeffs.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_flat(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.len());
        for b in self.blocks() {
            out.extend_from_slice(&b.coeffs);
        }
        out
    }

    pub fn set_flat(&mut self, x: &[T]) -> Result<()> {
        if x.len() != self.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a state of length {}",
                x.len(),
                self.len()
            )));
        }
        let mut off = 0;
        for b in self.blocks_mut() {
            let n = b.coeffs.len();
            b.coeffs.copy_from_slice(&x[off..off + n]);
            off += n;
        }
        Ok(())
    }

    /// Largest absolute coefficient in each block.
    pub fn block_max_abs(&self) -> [T; 6] {
        self.blocks()
            .map(|b| b.coeffs.iter().fold(T::zero(), |m, &x| m.max(x.abs())))
    }
}

/// Weighted mass matrices defining `E_0`.
#[derive(Debug, Clone)]
pub struct EnergyForm<T> {
    mesh: Arc<crate::mesh::Mesh<T>>,
    /// In block order `v, p, u, w, q, r`.
    mats: [CsrMatrix<T>; 6],
}

impl<T: Scalar> EnergyForm<T> {
    pub fn new(spaces: &Spaces<T>, material: &MaterialField<T>) -> Result<Self> {
        if material.num_cells() != spaces.mesh().num_cells() {
            return Err(Error::MeshMismatch);
        }
        let inv_kappa: Vec<T> = material.kappa_a().iter().map(|&k| T::one() / k).collect();
        Ok(Self {
            mesh: spaces.mesh().clone(),
            mats: [
                assemble_mass(&spaces.v, Some(material.rho_a()))?,
                assemble_mass(&spaces.q, Some(&inv_kappa))?,
                assemble_mass(&spaces.w, Some(material.rho_u()))?,
                assemble_mass(&spaces.w, Some(material.rho_w()))?,
                assemble_mass(&spaces.q, Some(material.rho_q()))?,
                assemble_mass(&spaces.q, Some(material.rho_r()))?,
            ],
        })
    }

    /// Squared weighted norms of each block.
    pub fn terms(&self, state: &StateVector<T>) -> Result<[T; 6]> {
        let mut out = [T::zero(); 6];
        for (k, (m, b)) in self.mats.iter().zip(state.blocks()).enumerate() {
            if !Arc::ptr_eq(b.space().mesh(), &self.mesh) || b.coeffs.len() != m.nrows() {
                return Err(Error::MeshMismatch);
            }
            let mut y = vec![T::zero(); m.nrows()];
            m.matvec(&b.coeffs, &mut y);
            out[k] = y
                .iter()
                .zip(&b.coeffs)
                .fold(T::zero(), |acc, (&a, &c)| acc + a * c)
                .max(T::zero());
        }
        Ok(out)
    }

    /// `E_0`.
    pub fn energy(&self, state: &StateVector<T>) -> Result<T> {
        Ok(self
            .terms(state)?
            .iter()
            .fold(T::zero(), |a, &b| a + b)
            .sqrt())
    }
}

/// `E_0(state)` for a one-off evaluation.
pub fn energy<T: Scalar>(
    spaces: &Spaces<T>,
    state: &StateVector<T>,
    material: &MaterialField<T>,
) -> Result<T> {
    EnergyForm::new(spaces, material)?.energy(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fespace::{scalar_field, vector_field, Pairing};
    use crate::mesh::{Mesh, Rect};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_spaces(n: usize, pairing: Pairing) -> Spaces<f64> {
        Spaces::new(
            Arc::new(Mesh::build_structured(Rect::unit(), n).unwrap()),
            pairing,
        )
        .unwrap()
    }

    #[test]
    fn slab_coefficients_are_admissible() {
        let mesh = Mesh::<f64>::build_structured(Rect::new(0.0, 0.0, 2.0, 2.0), 50).unwrap();
        let region = RegionIndicator::from_rects(
            &mesh,
            "pim",
            &[("nim".into(), Rect::new(0.6, 0.0, 0.8, 2.0))],
        )
        .unwrap();
        let m = MaterialField::from_regions(
            &region,
            &[
                RegionCoefficients::pim(1.0, 1.0),
                RegionCoefficients::nim(1.0, 1.0, 80.0, 80.0),
            ],
            40.0,
            40.0,
            0.0,
        )
        .unwrap();
        assert!(m.validate().is_valid());
    }

    #[test]
    fn zero_modulus_reported() {
        let mut m = MaterialField::uniform(4, RegionCoefficients::pim(1.0, 1.0), 1.0, 1.0, 0.0);
        m.set_cell(2, RegionCoefficients::pim(1.0, 0.0));
        let d = m.validate();
        assert!(!d.is_valid());
        assert_eq!(d.cells(), vec![2]);
    }

    #[test]
    fn negative_resonance_reported() {
        let m = MaterialField::uniform(
            3,
            RegionCoefficients::nim(1.0, 1.0, -1.0, 1.0),
            1.0,
            1.0,
            0.0,
        );
        let d = m.validate();
        assert!(d
            .violations
            .iter()
            .any(|v| matches!(v, Violation::NegativeResonance { .. })));
    }

    #[test]
    fn weights_recomputed_exactly() {
        let mut m = MaterialField::uniform(
            2,
            RegionCoefficients::nim(2.0, 3.0, 0.5, 1.5),
            4.0,
            5.0,
            0.1,
        );
        m.set_cell(0, RegionCoefficients::nim(1.5, 0.5, 2.0, 3.0));
        assert_eq!(m.rho_u()[0], 1.5 * 4.0);
        assert_eq!(m.rho_w()[0], 1.5 * 16.0 * 4.0);
        assert_eq!(m.rho_q()[0], 9.0 / 0.5);
        assert_eq!(m.rho_r()[0], 25.0 * 9.0 / 0.5);
        assert!(m.validate().is_valid());
    }

    #[test]
    fn zero_state_has_zero_energy() {
        let s = unit_spaces(2, Pairing::Bdm1);
        let mat = MaterialField::uniform(
            8,
            RegionCoefficients::nim(1.0, 1.0, 1.0, 1.0),
            1.0,
            1.0,
            0.0,
        );
        assert_eq!(energy(&s, &StateVector::zeros(&s), &mat).unwrap(), 0.0);
    }

    #[test]
    fn unit_constants_on_square() {
        let s = unit_spaces(3, Pairing::Rtn0);
        let mat = MaterialField::uniform(18, RegionCoefficients::pim(1.0, 1.0), 1.0, 1.0, 0.0);
        let mut st = StateVector::zeros(&s);
        st.v =
            s.v.interpolate_canonical(&vector_field(|_| [1.0, 0.0]))
                .unwrap();
        st.p = s.q.project_l2(&scalar_field(|_| 1.0), None).unwrap();
        let e = energy(&s, &st, &mat).unwrap();
        assert!((e * e - 2.0).abs() < 1e-13);
    }

    #[test]
    fn constant_state_on_mixed_mesh() {
        // left half NIM with Omega = 2, right half PIM
        let mesh = Arc::new(Mesh::build_structured(Rect::unit(), 4).unwrap());
        let region = RegionIndicator::from_rects(
            &mesh,
            "pim",
            &[("nim".into(), Rect::new(0.0, 0.0, 0.5, 1.0))],
        )
        .unwrap();
        let (wr, wk) = (3.0, 0.5);
        let mat = MaterialField::from_regions(
            &region,
            &[
                RegionCoefficients::pim(2.0, 4.0),
                RegionCoefficients::nim(2.0, 4.0, 2.0, 2.0),
            ],
            wr,
            wk,
            0.0,
        )
        .unwrap();
        let s = Spaces::new(mesh, Pairing::Bdm1).unwrap();
        let mut st = StateVector::zeros(&s);
        let one = scalar_field(|_| 1.0);
        let ones = vector_field(|_| [1.0, 1.0]);
        st.v =
            s.v.interpolate_canonical(&vector_field(|_| [1.0, 0.0]))
                .unwrap();
        st.p = s.q.project_l2(&one, None).unwrap();
        st.u = s.w.project_l2(&ones, None).unwrap();
        st.w = s.w.project_l2(&ones, None).unwrap();
        st.q = s.q.project_l2(&one, None).unwrap();
        st.r = s.q.project_l2(&one, None).unwrap();
        // hand-computed: area 1/2 for each region
        let (rho_a, kappa) = (2.0, 4.0);
        let omega2 = 4.0;
        let expected = rho_a * 1.0
            + 1.0 / kappa
            + 0.5
                * (rho_a * omega2 * 2.0
                    + rho_a * wr * wr * omega2 * 2.0
                    + omega2 / kappa
                    + wk * wk * omega2 / kappa);
        let e: f64 = energy(&s, &st, &mat).unwrap();
        assert!(
            (e * e - expected).abs() < 1e-12 * expected,
            "{} vs {expected}",
            e * e
        );
    }

    #[test]
    fn energy_is_a_seminorm() {
        let s = unit_spaces(3, Pairing::Bdm2);
        let mat = MaterialField::uniform(
            18,
            RegionCoefficients::nim(1.3, 0.7, 1.1, 0.9),
            2.0,
            1.5,
            0.0,
        );
        let form = EnergyForm::new(&s, &mat).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut random = || {
            let mut st = StateVector::zeros(&s);
            let x: Vec<f64> = (0..st.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            st.set_flat(&x).unwrap();
            st
        };
        for _ in 0..5 {
            let a = random();
            let b = random();
            let mut sum = a.clone();
            let flat: Vec<f64> = a
                .to_flat()
                .iter()
                .zip(b.to_flat())
                .map(|(x, y)| x + y)
                .collect();
            sum.set_flat(&flat).unwrap();
            let mut scaled = a.clone();
            scaled
                .set_flat(&a.to_flat().iter().map(|x| -2.5 * x).collect::<Vec<_>>())
                .unwrap();
            let (ea, eb, es) = (
                form.energy(&a).unwrap(),
                form.energy(&b).unwrap(),
                form.energy(&sum).unwrap(),
            );
            assert!(es <= ea + eb + 1e-12);
            assert!((form.energy(&scaled).unwrap() - 2.5 * ea).abs() < 1e-12 * ea);
        }
    }
}
