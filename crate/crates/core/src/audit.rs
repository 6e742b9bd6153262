//! Energy audit: conservation without damping, monotone decay with damping.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::assembly::SystemBlocks;
use crate::error::Result;
use crate::fespace::{Pairing, Spaces};
use crate::material::{MaterialField, RegionCoefficients, StateVector};
use crate::mesh::{BoundaryLabel, BoundaryPart, Mesh, Rect, RegionIndicator};
use crate::stepper::{run, zero_auxiliary_on_pim, CnSystem, EnergyTrace, TimeGrid, Unforced};

#[derive(Debug, Clone, Serialize)]
pub struct AuditSettings {
    pub pairing: Pairing,
    pub n: usize,
    pub steps: usize,
    pub dt: f64,
    pub gamma: f64,
    pub seed: u64,
}

impl AuditSettings {
    pub fn new(pairing: Pairing) -> Self {
        Self {
            pairing,
            n: 16,
            steps: 200,
            dt: 0.01,
            gamma: 0.5,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub settings: AuditSettings,
    pub times: Vec<f64>,
    pub conservative: Vec<f64>,
    pub damped: Vec<f64>,
    /// `max_n |E_n - E_0| / E_0` without damping.
    pub max_drift: f64,
    /// `max_n (E_{n+1} - E_n) / E_0` with damping; at most roundoff.
    pub max_increase: f64,
}

/// Unit square with a metamaterial strip `[1/4, 3/4] x [0, 1]`; `n` must be a multiple of 4.
pub fn strip_material(mesh: &Mesh<f64>, gamma: f64) -> Result<MaterialField<f64>> {
    let region = RegionIndicator::from_rects(
        mesh,
        "background",
        &[("strip".into(), Rect::new(0.25, 0.0, 0.75, 1.0))],
    )?;
    MaterialField::from_regions(
        &region,
        &[
            RegionCoefficients::pim(1.5, 0.8),
            RegionCoefficients::nim(1.0, 1.2, 2.0, 1.5),
        ],
        3.0,
        2.0,
        gamma,
    )
}

/// Seeded random coefficients, auxiliaries zero outside the strip.
pub fn random_state(
    spaces: &Spaces<f64>,
    material: &MaterialField<f64>,
    seed: u64,
) -> Result<StateVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = StateVector::zeros(spaces);
    let x: Vec<f64> = (0..s.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    s.set_flat(&x)?;
    zero_auxiliary_on_pim(&mut s, material)?;
    Ok(s)
}

fn trace(
    spaces: &Spaces<f64>,
    material: &MaterialField<f64>,
    init: StateVector<f64>,
    grid: &TimeGrid<f64>,
) -> Result<EnergyTrace<f64>> {
    let blocks = SystemBlocks::assemble(spaces, material)?;
    let system = CnSystem::new(spaces, &blocks, grid.dt())?;
    let mut tr = EnergyTrace::new(spaces, material)?;
    run(&system, init, &Unforced, grid, &mut [&mut tr])?;
    Ok(tr)
}

/// Zero boundary data on the unit square, random initial state.
pub fn energy_audit(settings: &AuditSettings) -> Result<AuditReport> {
    let mesh = Mesh::build_structured(Rect::unit(), settings.n)?.classify_boundary(vec![
        BoundaryPart::all(BoundaryLabel::dirichlet("boundary")),
    ])?;
    let mesh = Arc::new(mesh);
    let spaces = Spaces::new(mesh.clone(), settings.pairing)?;
    let grid = TimeGrid::new(settings.dt * settings.steps as f64, settings.steps)?;

    let lossless = strip_material(&mesh, 0.0)?;
    let damped_mat = strip_material(&mesh, settings.gamma)?;
    let init = random_state(&spaces, &lossless, settings.seed)?;
    let cons = trace(&spaces, &lossless, init.clone(), &grid)?;
    let damp = trace(&spaces, &damped_mat, init, &grid)?;

    let e0 = damp.energies[0];
    let max_increase = damp
        .energies
        .windows(2)
        .map(|w| (w[1] - w[0]) / e0)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(AuditReport {
        settings: settings.clone(),
        max_drift: cons.max_relative_drift(),
        times: cons.times,
        conservative: cons.energies,
        damped: damp.energies,
        max_increase,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn audit_on_coarse_mesh() {
        let s = AuditSettings {
            n: 4,
            steps: 20,
            ..AuditSettings::new(Pairing::Rtn0)
        };
        let r = energy_audit(&s).unwrap();
        assert_eq!(r.conservative.len(), 21);
        assert!(r.max_drift < 1e-10, "{}", r.max_drift);
        assert!(r.max_increase <= 1e-12, "{}", r.max_increase);
        assert!(r.damped.last().unwrap() < &r.damped[0]);
    }
}
