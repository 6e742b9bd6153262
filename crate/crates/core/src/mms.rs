//! Manufactured solution on the unit square and convergence studies.

use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use crate::assembly::SystemBlocks;
use crate::error::{Error, Result};
use crate::fespace::{scalar_field, vector_field, FEFunction, Pairing, Spaces};
use crate::material::{MaterialField, RegionCoefficients, StateVector};
use crate::mesh::{BoundaryLabel, BoundaryPart, Mesh, Rect, RegionIndicator};
use crate::postprocess::postprocess_pressure;
use crate::scalar::Scalar;
use crate::stepper::{initial_state, run, CnSystem, Forcing, InitialData, TimeGrid};

/// Closed-form fields built from
/// `w = ((1 + sin t)(x^2 y + x y^2), cos 2t (x + y + cos x))`, `r = cos 3t xy`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactSolution<T> {
    pub rho_a: T,
    pub kappa_a: T,
    pub omega_rho: T,
    pub omega_kappa: T,
    pub gamma: T,
    /// Region carrying `Omega_rho = Omega_kappa = cap_omega`; zero elsewhere.
    pub region: Rect<T>,
    pub cap_omega: T,
}

impl<T: Scalar> ExactSolution<T> {
    pub fn new(omega_rho: T, omega_kappa: T, gamma: T, region: Rect<T>) -> Self {
        Self {
            rho_a: T::one(),
            kappa_a: T::one(),
            omega_rho,
            omega_kappa,
            gamma,
            region,
            cap_omega: T::one(),
        }
    }

    /// Unit coefficients, `gamma = 0`, `Omega_0 = [3/8, 5/8] x [0, 1]`.
    pub fn standard() -> Self {
        Self::new(
            T::one(),
            T::one(),
            T::zero(),
            Rect::new(T::lit(0.375), T::zero(), T::lit(0.625), T::one()),
        )
    }

    fn a(x: [T; 2]) -> T {
        x[0] * x[0] * x[1] + x[0] * x[1] * x[1]
    }

    fn b(x: [T; 2]) -> T {
        x[0] + x[1] + x[0].cos()
    }

    fn c(x: [T; 2]) -> T {
        x[0] * x[1]
    }

    /// `Omega_rho` (equal to `Omega_kappa`) at `x`.
    pub fn cap_omega_at(&self, x: [T; 2]) -> T {
        let tol = T::tol(64.0);
        if self.region.contains_closed(x, tol) {
            self.cap_omega
        } else {
            T::zero()
        }
    }

    pub fn w(&self, t: T, x: [T; 2]) -> [T; 2] {
        [
            (T::one() + t.sin()) * Self::a(x),
            (T::lit(2.0) * t).cos() * Self::b(x),
        ]
    }

    pub fn u(&self, t: T, x: [T; 2]) -> [T; 2] {
        [
            t.cos() * Self::a(x),
            -T::lit(2.0) * (T::lit(2.0) * t).sin() * Self::b(x),
        ]
    }

    fn v_coef(&self, t: T) -> [T; 2] {
        let wr2 = self.omega_rho * self.omega_rho;
        [
            -t.sin() + wr2 * (T::one() + t.sin()),
            (wr2 - T::lit(4.0)) * (T::lit(2.0) * t).cos(),
        ]
    }

    pub fn v(&self, t: T, x: [T; 2]) -> [T; 2] {
        let k = self.v_coef(t);
        [k[0] * Self::a(x), k[1] * Self::b(x)]
    }

    pub fn r(&self, t: T, x: [T; 2]) -> T {
        (T::lit(3.0) * t).cos() * Self::c(x)
    }

    pub fn q(&self, t: T, x: [T; 2]) -> T {
        -T::lit(3.0) * (T::lit(3.0) * t).sin() * Self::c(x)
    }

    fn p_coef(&self, t: T) -> T {
        let (s, c) = ((T::lit(3.0) * t).sin(), (T::lit(3.0) * t).cos());
        -T::lit(9.0) * c - T::lit(3.0) * self.gamma * s + self.omega_kappa * self.omega_kappa * c
    }

    pub fn p(&self, t: T, x: [T; 2]) -> T {
        self.p_coef(t) * Self::c(x)
    }

    /// `rho_a v_t + grad p + rho_a Omega_rho^2 u`.
    pub fn f(&self, t: T, x: [T; 2]) -> [T; 2] {
        let wr2 = self.omega_rho * self.omega_rho;
        let vt = [
            (wr2 - T::one()) * t.cos() * Self::a(x),
            -T::lit(2.0) * (wr2 - T::lit(4.0)) * (T::lit(2.0) * t).sin() * Self::b(x),
        ];
        let pc = self.p_coef(t);
        let grad_p = [pc * x[1], pc * x[0]];
        let om = self.cap_omega_at(x);
        let u = self.u(t, x);
        [
            self.rho_a * vt[0] + grad_p[0] + self.rho_a * om * om * u[0],
            self.rho_a * vt[1] + grad_p[1] + self.rho_a * om * om * u[1],
        ]
    }

    /// `kappa_a^{-1} p_t + div v + kappa_a^{-1} Omega_kappa^2 q`.
    pub fn g(&self, t: T, x: [T; 2]) -> T {
        let (s, c) = ((T::lit(3.0) * t).sin(), (T::lit(3.0) * t).cos());
        let wk2 = self.omega_kappa * self.omega_kappa;
        let pt =
            (T::lit(27.0) * s - T::lit(9.0) * self.gamma * c - T::lit(3.0) * wk2 * s) * Self::c(x);
        let k = self.v_coef(t);
        let div_v = k[0] * (T::lit(2.0) * x[0] * x[1] + x[1] * x[1]) + k[1];
        let om = self.cap_omega_at(x);
        (pt + om * om * self.q(t, x)) / self.kappa_a + div_v
    }

    /// Coefficient field on `mesh` matching this solution.
    pub fn material(&self, mesh: &Mesh<T>) -> Result<MaterialField<T>> {
        let region = RegionIndicator::from_rects(mesh, "pim", &[("nim".to_string(), self.region)])?;
        MaterialField::from_regions(
            &region,
            &[
                RegionCoefficients::pim(self.rho_a, self.kappa_a),
                RegionCoefficients::nim(self.rho_a, self.kappa_a, self.cap_omega, self.cap_omega),
            ],
            self.omega_rho,
            self.omega_kappa,
            self.gamma,
        )
    }
}

impl<T: Scalar> Forcing<T> for ExactSolution<T> {
    fn f(&self, t: T, x: [T; 2]) -> [T; 2] {
        ExactSolution::f(self, t, x)
    }

    fn g(&self, t: T, x: [T; 2]) -> T {
        ExactSolution::g(self, t, x)
    }

    fn p_d(&self, _label: &BoundaryLabel, t: T, x: [T; 2]) -> T {
        self.p(t, x)
    }

    fn v_n(&self, _label: &BoundaryLabel, t: T, x: [T; 2]) -> T {
        // unit square: outward normal from the side
        let v = self.v(t, x);
        let tol = T::lit(1e-12);
        if x[0] <= tol {
            -v[0]
        } else if x[0] >= T::one() - tol {
            v[0]
        } else if x[1] <= tol {
            -v[1]
        } else {
            v[1]
        }
    }
}

/// `sqrt(int weight |sigma - sigma_h|^2)`.
pub fn weighted_error<T: Scalar>(
    fef: &FEFunction<T>,
    exact: &(dyn Fn([T; 2], &mut [T]) + Sync),
    weight: Option<&[T]>,
) -> T {
    fef.l2_distance(exact, weight)
}

/// How the time step follows the mesh size `h = 1/N`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DtPolicy {
    /// `dt = h`
    H,
    /// `dt = h^2`
    H2,
}

impl DtPolicy {
    /// Policy giving optimal rates for `pairing`.
    pub fn optimal(pairing: Pairing) -> Self {
        match pairing {
            Pairing::Bdm1 | Pairing::Rtn0 => DtPolicy::H,
            Pairing::Bdm2 | Pairing::Rtn1 => DtPolicy::H2,
        }
    }

    pub fn dt(&self, n: usize) -> f64 {
        let h = 1.0 / n as f64;
        match self {
            DtPolicy::H => h,
            DtPolicy::H2 => h * h,
        }
    }
}

impl std::str::FromStr for DtPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "h" => Ok(DtPolicy::H),
            "h2" | "h^2" => Ok(DtPolicy::H2),
            _ => Err(Error::Config(format!("unknown time step policy '{s}'"))),
        }
    }
}

pub const FIELD_NAMES: [&str; 7] = ["v", "u", "w", "p", "q", "r", "p*"];

/// Final time of the standard study.
pub const FINAL_TIME: f64 = 0.25;

/// Errors on one mesh level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelErrors {
    pub n: usize,
    pub h: f64,
    pub dt: f64,
    pub steps: usize,
    /// In the order of [`FIELD_NAMES`].
    pub errors: [f64; 7],
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub pairing: Pairing,
    pub policy: DtPolicy,
    pub levels: Vec<LevelErrors>,
}

impl ConvergenceReport {
    /// `log2(e_{2h} / e_h)` between consecutive halved levels; `None` otherwise.
    pub fn rates(&self, field: usize) -> Vec<Option<f64>> {
        self.levels
            .windows(2)
            .map(|w| {
                (w[1].n == 2 * w[0].n).then(|| (w[0].errors[field] / w[1].errors[field]).log2())
            })
            .collect()
    }

    pub fn final_rate(&self, field: usize) -> Option<f64> {
        self.rates(field).last().copied().flatten()
    }

    pub fn error(&self, n: usize, field: usize) -> Option<f64> {
        self.levels
            .iter()
            .find(|l| l.n == n)
            .map(|l| l.errors[field])
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("pairing,n,h,dt,steps,field,error,rate\n");
        for field in 0..FIELD_NAMES.len() {
            let rates = self.rates(field);
            for (i, l) in self.levels.iter().enumerate() {
                let rate = if i == 0 { None } else { rates[i - 1] };
                let _ = writeln!(
                    s,
                    "{},{},{:.17e},{:.17e},{},{},{:.17e},{}",
                    self.pairing.name(),
                    l.n,
                    l.h,
                    l.dt,
                    l.steps,
                    FIELD_NAMES[field],
                    l.errors[field],
                    rate.map_or(String::new(), |r| format!("{r:.4}"))
                );
            }
        }
        s
    }

    /// Aligned table with one row per field and error/rate columns per level.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{} (dt = {})",
            self.pairing.label(),
            if self.policy == DtPolicy::H {
                "h"
            } else {
                "h^2"
            }
        );
        let _ = write!(s, "{:<12}", "N");
        for (i, l) in self.levels.iter().enumerate() {
            let _ = write!(s, "{:>12}", l.n);
            if i > 0 {
                let _ = write!(s, "{:>8}", "rate");
            }
        }
        s.push('\n');
        for (f, name) in FIELD_NAMES.iter().enumerate() {
            let label = format!("|{name}-{name}_h|");
            let _ = write!(s, "{label:<12}");
            let rates = self.rates(f);
            for (i, l) in self.levels.iter().enumerate() {
                let _ = write!(s, "{:>12.2e}", l.errors[f]);
                if i > 0 {
                    let _ = write!(
                        s,
                        "{:>8}",
                        rates[i - 1].map_or("-".to_string(), |r| format!("{r:.2}"))
                    );
                }
            }
            s.push('\n');
        }
        s
    }
}

/// Unit square with every edge pressure-tagged.
pub fn unit_square_mesh(n: usize) -> Result<Mesh<f64>> {
    Mesh::build_structured(Rect::unit(), n)?.classify_boundary(vec![BoundaryPart::all(
        BoundaryLabel::dirichlet("boundary"),
    )])
}

/// Solves the manufactured problem to `t_final` on an `n x n` mesh.
pub fn run_level(
    exact: &ExactSolution<f64>,
    pairing: Pairing,
    n: usize,
    dt: f64,
    t_final: f64,
) -> Result<LevelErrors> {
    let start = Instant::now();
    let mesh = Arc::new(unit_square_mesh(n)?);
    let spaces = Spaces::new(mesh.clone(), pairing)?;
    let material = exact.material(&mesh)?;
    let grid = TimeGrid::with_step(t_final, dt)?;
    let blocks = SystemBlocks::assemble(&spaces, &material)?;
    let system = CnSystem::new(&spaces, &blocks, grid.dt())?;

    let v0 = vector_field(|x| exact.v(0.0, x));
    let p0 = scalar_field(|x| exact.p(0.0, x));
    let u0 = vector_field(|x| exact.u(0.0, x));
    let w0 = vector_field(|x| exact.w(0.0, x));
    let q0 = scalar_field(|x| exact.q(0.0, x));
    let r0 = scalar_field(|x| exact.r(0.0, x));
    let data = InitialData {
        v: Some(&v0),
        p: Some(&p0),
        u: Some(&u0),
        w: Some(&w0),
        q: Some(&q0),
        r: Some(&r0),
    };
    let init = initial_state(&spaces, &data)?;

    let last = grid.n_steps();
    let mut penultimate: Option<StateVector<f64>> = None;
    let mut keep = |step: usize,
                    _t: f64,
                    prev: Option<&StateVector<f64>>,
                    _cur: &StateVector<f64>|
     -> Result<()> {
        if step == last {
            penultimate = prev.cloned();
        }
        Ok(())
    };
    let fin = run(&system, init, exact, &grid, &mut [&mut keep])?;
    let prev = penultimate.ok_or_else(|| Error::Config("run produced no steps".into()))?;

    let t = grid.t_final();
    let post = postprocess_pressure(
        &spaces,
        &prev,
        &fin,
        exact,
        grid.time(last - 1),
        &material,
        grid.dt(),
    )?;
    let errors = [
        fin.v.l2_distance(&vector_field(|x| exact.v(t, x)), None),
        fin.u.l2_distance(&vector_field(|x| exact.u(t, x)), None),
        fin.w.l2_distance(&vector_field(|x| exact.w(t, x)), None),
        fin.p.l2_distance(&scalar_field(|x| exact.p(t, x)), None),
        fin.q.l2_distance(&scalar_field(|x| exact.q(t, x)), None),
        fin.r.l2_distance(&scalar_field(|x| exact.r(t, x)), None),
        post.p_star
            .l2_distance(&scalar_field(|x| exact.p(post.time, x)), None),
    ];
    let seconds = start.elapsed().as_secs_f64();
    log::info!(
        "{} N={n}: {} steps in {seconds:.2} s",
        pairing.name(),
        grid.n_steps()
    );
    Ok(LevelErrors {
        n,
        h: 1.0 / n as f64,
        dt: grid.dt(),
        steps: grid.n_steps(),
        errors,
        seconds,
    })
}

/// Runs every level (concurrently) and collects the errors.
pub fn convergence_study(
    exact: &ExactSolution<f64>,
    pairing: Pairing,
    levels: &[usize],
    policy: DtPolicy,
    t_final: f64,
) -> Result<ConvergenceReport> {
    let mut levels: Vec<usize> = levels.to_vec();
    levels.sort_unstable();
    levels.dedup();
    let results: Vec<Result<LevelErrors>> = levels
        .par_iter()
        .map(|&n| run_level(exact, pairing, n, policy.dt(n), t_final))
        .collect();
    Ok(ConvergenceReport {
        pairing,
        policy,
        levels: results.into_iter().collect::<Result<_>>()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn nim() -> ExactSolution<f64> {
        // Omega = 1 everywhere
        ExactSolution::new(1.0, 1.0, 0.0, Rect::new(-1.0, -1.0, 2.0, 2.0))
    }

    #[test]
    fn initial_values() {
        let e = ExactSolution::<f64>::standard();
        let w = e.w(0.0, [1.0, 1.0]);
        assert!((w[0] - 2.0).abs() < 1e-15);
        assert!((w[1] - (2.0 + 1f64.cos())).abs() < 1e-15);
        assert!((e.r(0.0, [1.0, 1.0]) - 1.0).abs() < 1e-15);
        let (x, y) = (0.3, 0.8);
        let u = e.u(0.0, [x, y]);
        assert!((u[0] - (x * x * y + x * y * y)).abs() < 1e-15);
        assert_eq!(u[1], 0.0);
    }

    #[test]
    fn frozen_values() {
        let e = nim();
        let (t, x) = (0.3, [0.45, 0.7]);
        let f = e.f(t, x);
        let v = e.v(t, x);
        assert!((f[0] - -3.13494517912997).abs() < 1e-12);
        assert!((f[1] - 2.39328220797800).abs() < 1e-12);
        assert!((e.g(t, x) - 3.82570066245677).abs() < 1e-12);
        assert!((v[0] - 0.36225).abs() < 1e-12);
        assert!((v[1] - -5.07692106018004).abs() < 1e-12);
        assert!((e.p(t, x) - -1.56645712004207).abs() < 1e-12);
    }

    /// Central differences in `t` and `x` against the closures.
    #[test]
    fn residuals_vanish() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let e = ExactSolution::new(1.3, 0.7, 0.4, Rect::new(0.375, 0.0, 0.625, 1.0));
        let hs = 1e-5;
        for _ in 0..100 {
            let t: f64 = rng.gen_range(0.0..1.0);
            let x = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
            let dt = |f: &dyn Fn(f64) -> f64| (f(t + hs) - f(t - hs)) / (2.0 * hs);
            let dx = |f: &dyn Fn([f64; 2]) -> f64, d: usize| {
                let (mut a, mut b) = (x, x);
                a[d] += hs;
                b[d] -= hs;
                (f(a) - f(b)) / (2.0 * hs)
            };
            let om = e.cap_omega_at(x);
            let (wr2, wk2) = (e.omega_rho * e.omega_rho, e.omega_kappa * e.omega_kappa);
            for d in 0..2 {
                // momentum
                let vt = dt(&|s| e.v(s, x)[d]);
                let gp = dx(&|y| e.p(t, y), d);
                let res = e.rho_a * vt + gp + e.rho_a * om * om * e.u(t, x)[d] - e.f(t, x)[d];
                assert!(res.abs() < 1e-7, "{res}");
                // auxiliary
                let ut = dt(&|s| e.u(s, x)[d]);
                assert!((ut - e.v(t, x)[d] + wr2 * e.w(t, x)[d]).abs() < 1e-7);
                let wt = dt(&|s| e.w(s, x)[d]);
                assert!((wt - e.u(t, x)[d]).abs() < 1e-7);
            }
            let pt = dt(&|s| e.p(s, x));
            let div = dx(&|y| e.v(t, y)[0], 0) + dx(&|y| e.v(t, y)[1], 1);
            let res = pt / e.kappa_a + div + om * om * e.q(t, x) / e.kappa_a - e.g(t, x);
            assert!(res.abs() < 1e-7, "{res}");
            let qt = dt(&|s| e.q(s, x));
            assert!((qt - e.p(t, x) + e.gamma * e.q(t, x) + wk2 * e.r(t, x)).abs() < 1e-7);
            let rt = dt(&|s| e.r(s, x));
            assert!((rt - e.q(t, x)).abs() < 1e-7);
        }
    }

    #[test]
    fn forcing_jumps_across_region() {
        let e = ExactSolution::<f64>::standard();
        let inside = e.g(0.4, [0.5, 0.5]);
        let outside_pt = e.g(0.4, [0.7, 0.5]);
        assert!(e.cap_omega_at([0.5, 0.5]) == 1.0 && e.cap_omega_at([0.7, 0.5]) == 0.0);
        assert!(inside.is_finite() && outside_pt.is_finite());
        let mut e0 = e;
        e0.cap_omega = 0.0;
        assert!((e0.g(0.4, [0.5, 0.5]) - inside).abs() > 1e-3);
    }

    #[test]
    fn interpolant_error_matches_distance() {
        let e = ExactSolution::<f64>::standard();
        let mesh = Arc::new(unit_square_mesh(4).unwrap());
        let s = Spaces::new(mesh, Pairing::Rtn1).unwrap();
        let f = vector_field(|x| e.v(0.2, x));
        let vh = s.v.interpolate_canonical(&f).unwrap();
        assert_eq!(weighted_error(&vh, &f, None), vh.l2_distance(&f, None));
        let lin = vector_field(|x: [f64; 2]| [1.0 + x[0], 2.0 - x[1]]);
        let lh = s.v.interpolate_canonical(&lin).unwrap();
        assert!(weighted_error(&lh, &lin, None) < 1e-12);
    }

    #[test]
    fn rates_and_outputs() {
        let lvl = |n: usize, e: f64| LevelErrors {
            n,
            h: 1.0 / n as f64,
            dt: 0.1,
            steps: 1,
            errors: [e; 7],
            seconds: 0.0,
        };
        let r = ConvergenceReport {
            pairing: Pairing::Rtn0,
            policy: DtPolicy::H,
            levels: vec![lvl(8, 4e-2), lvl(16, 1e-2), lvl(48, 1e-3)],
        };
        let rates = r.rates(0);
        assert!((rates[0].unwrap() - 2.0).abs() < 1e-12);
        assert!(rates[1].is_none());
        assert_eq!(r.to_csv().lines().count(), 1 + 7 * 3);
        assert!(r.to_table().contains("RTN"));
    }

    #[test]
    fn coarse_rtn0_study_converges() {
        let r = convergence_study(
            &ExactSolution::standard(),
            Pairing::Rtn0,
            &[8, 16],
            DtPolicy::H,
            0.25,
        )
        .unwrap();
        for f in 0..6 {
            let rate = r.final_rate(f).unwrap();
            assert!(rate > 0.8, "{} rate {rate}", FIELD_NAMES[f]);
        }
    }
}
