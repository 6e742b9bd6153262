//! Crank-Nicolson time stepping for the six-field system.

use crate::assembly::{assemble_boundary_load, assemble_load, EssentialBc, SystemBlocks};
use crate::error::{Error, Result};
use crate::fespace::{scalar_field, vector_field, FieldFn, Spaces};
use crate::material::{EnergyForm, MaterialField, Medium, StateVector};
use crate::mesh::BoundaryLabel;
use crate::scalar::Scalar;
use crate::solver::CondensedLu;
use crate::sparse::{CsrMatrix, Ordering};

/// Uniform grid `t_n = n dt` on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid<T> {
    t_final: T,
    n_steps: usize,
}

impl<T: Scalar> TimeGrid<T> {
    pub fn new(t_final: T, n_steps: usize) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::Config("time grid needs at least one step".into()));
        }
        if !(t_final > T::zero()) || !t_final.is_finite() {
            return Err(Error::Config(format!(
                "final time {t_final} must be positive"
            )));
        }
        Ok(Self { t_final, n_steps })
    }

    /// Grid with step `dt`; `t_final / dt` must be an integer up to rounding.
    pub fn with_step(t_final: T, dt: T) -> Result<Self> {
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(Error::Config(format!("time step {dt} must be positive")));
        }
        let n = (t_final / dt).round();
        if n < T::one() || ((n * dt - t_final) / t_final).abs() > T::lit(1e-9).max(T::tol(16.0)) {
            return Err(Error::Config(format!(
                "final time {t_final} is not a multiple of the step {dt}"
            )));
        }
        Self::new(t_final, n.to_usize().unwrap_or(0))
    }

    pub fn t_final(&self) -> T {
        self.t_final
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> T {
        self.t_final / T::from_usize_lossy(self.n_steps)
    }

    pub fn time(&self, n: usize) -> T {
        if n == self.n_steps {
            return self.t_final;
        }
        self.dt() * T::from_usize_lossy(n)
    }
}

/// Time-dependent data of a run. Every method defaults to zero.
pub trait Forcing<T: Scalar>: Sync {
    /// `false` skips the volume loads entirely.
    fn has_body_loads(&self) -> bool {
        true
    }

    /// `false` skips the boundary data entirely.
    fn has_boundary_data(&self) -> bool {
        true
    }

    fn f(&self, _t: T, _x: [T; 2]) -> [T; 2] {
        [T::zero(); 2]
    }

    fn g(&self, _t: T, _x: [T; 2]) -> T {
        T::zero()
    }

    /// Pressure on Dirichlet-tagged edges.
    fn p_d(&self, _label: &BoundaryLabel, _t: T, _x: [T; 2]) -> T {
        T::zero()
    }

    /// Outward normal velocity on Neumann-tagged edges.
    fn v_n(&self, _label: &BoundaryLabel, _t: T, _x: [T; 2]) -> T {
        T::zero()
    }
}

/// Zero sources and homogeneous boundary data.
#[derive(Debug, Clone, Copy, Default)]
pub struct Unforced;

impl<T: Scalar> Forcing<T> for Unforced {
    fn has_body_loads(&self) -> bool {
        false
    }

    fn has_boundary_data(&self) -> bool {
        false
    }
}

/// Right-hand side contributions at a single time level.
#[derive(Debug, Clone)]
pub struct StepLoads<T> {
    /// `(f, v') - <p_D, v'.n>`
    pub v: Vec<T>,
    /// `(g, p')`
    pub p: Vec<T>,
    /// Values of the constrained normal-velocity moments.
    pub v_n: Vec<T>,
}

/// `A = M/dt + K/2`, `A_rhs = M/dt - K/2` with a reusable factorization of `A`.
pub struct CnSystem<T: Scalar> {
    spaces: Spaces<T>,
    dt: T,
    /// `sign(dt)`; both matrices are stored multiplied by it.
    sign: T,
    offsets: [usize; 7],
    a: CsrMatrix<T>,
    a_rhs: CsrMatrix<T>,
    removed: CsrMatrix<T>,
    constraints: EssentialBc<T>,
    solver: CondensedLu<T>,
}

impl<T: Scalar> std::fmt::Debug for CnSystem<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CnSystem")
            .field("pairing", &self.spaces.pairing)
            .field("dt", &self.dt)
            .field("dofs", &self.a.nrows())
            .field("nnz", &self.a.nnz())
            .field("interface", &self.solver.interface_len())
            .finish()
    }
}

/// `K` in block order `(v, p, u, w, q, r)`.
fn coupling_blocks<T: Scalar>(
    b: &SystemBlocks<T>,
    bt: &CsrMatrix<T>,
) -> Vec<(usize, usize, T, CsrMatrix<T>)> {
    let one = T::one();
    vec![
        (0, 1, -one, bt.clone()),
        (0, 2, one, b.c_vu.clone()),
        (1, 0, one, b.b.clone()),
        (1, 4, one, b.c_pq.clone()),
        (2, 0, -one, b.c_uv.clone()),
        (2, 3, b.omega_rho_sq, b.m_w.clone()),
        (3, 2, -one, b.m_w.clone()),
        (4, 1, -one, b.m_q.clone()),
        (4, 4, b.gamma, b.m_q.clone()),
        (4, 5, b.omega_kappa_sq, b.m_q.clone()),
        (5, 4, -one, b.m_q.clone()),
    ]
}

impl<T: Scalar> CnSystem<T> {
    pub fn new(spaces: &Spaces<T>, blocks: &SystemBlocks<T>, dt: T) -> Result<Self> {
        if dt == T::zero() || !dt.is_finite() {
            return Err(Error::Config(format!(
                "time step {dt} must be finite and nonzero"
            )));
        }
        let sizes = spaces.block_sizes();
        let mut offsets = [0usize; 7];
        for k in 0..6 {
            offsets[k + 1] = offsets[k] + sizes[k];
        }
        let sign = dt.signum();
        let inv_dt = T::one() / dt.abs();
        let half = T::lit(0.5) * sign;
        let masses = [
            &blocks.m_v,
            &blocks.m_p,
            &blocks.m_w,
            &blocks.m_w,
            &blocks.m_q,
            &blocks.m_q,
        ];
        let bt = blocks.b.transpose();
        let k = coupling_blocks(blocks, &bt);
        let mut lhs: Vec<(usize, usize, T, &CsrMatrix<T>)> = Vec::new();
        let mut rhs: Vec<(usize, usize, T, &CsrMatrix<T>)> = Vec::new();
        for (i, m) in masses.iter().enumerate() {
            lhs.push((i, i, inv_dt, m));
            rhs.push((i, i, inv_dt, m));
        }
        for (bi, bj, s, m) in &k {
            lhs.push((*bi, *bj, half * *s, m));
            rhs.push((*bi, *bj, -half * *s, m));
        }
        let a_full = CsrMatrix::from_blocks(&sizes, &sizes, &lhs)?;
        let a_rhs = CsrMatrix::from_blocks(&sizes, &sizes, &rhs)?;

        let constraints = EssentialBc::normal_velocity(&spaces.v, &|_, _| T::zero())?;
        let (a, removed) = constraints.apply_matrix(&a_full);

        let (groups, interface, coords) = Self::partition(spaces, &offsets);
        let solver =
            CondensedLu::factor(&a, groups, interface, Ordering::NestedDissection(coords))?;
        log::info!(
            "CN system {}: {} dofs, {} nonzeros, {} interface unknowns",
            spaces.pairing,
            a.nrows(),
            a.nnz(),
            solver.interface_len()
        );
        Ok(Self {
            spaces: spaces.clone(),
            dt,
            sign,
            offsets,
            a,
            a_rhs,
            removed,
            constraints,
            solver,
        })
    }

    /// Cell-local groups and the edge-moment interface with its coordinates.
    fn partition(
        spaces: &Spaces<T>,
        offsets: &[usize; 7],
    ) -> (Vec<Vec<usize>>, Vec<usize>, Vec<[f64; 2]>) {
        let mesh = spaces.mesh();
        let v = &spaces.v;
        let ne = v.num_edge_dofs();
        let nm = v.family().edge_dofs_per_edge();
        let interface: Vec<usize> = (0..ne).collect();
        let coords = (0..ne)
            .map(|d| {
                let m = mesh.edge_midpoint(d / nm);
                [m[0].as_f64(), m[1].as_f64()]
            })
            .collect();
        let blocks = [&spaces.q, &spaces.w, &spaces.w, &spaces.q, &spaces.q];
        let groups = (0..mesh.num_cells())
            .map(|c| {
                let mut g: Vec<usize> = v
                    .cell_dofs(c)
                    .iter()
                    .copied()
                    .filter(|&d| d >= ne)
                    .collect();
                for (k, sp) in blocks.iter().enumerate() {
                    g.extend(sp.cell_dofs(c).iter().map(|&d| offsets[k + 1] + d));
                }
                g
            })
            .collect();
        (groups, interface, coords)
    }

    pub fn spaces(&self) -> &Spaces<T> {
        &self.spaces
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn ndofs(&self) -> usize {
        self.a.nrows()
    }

    /// Left matrix after constraint elimination, multiplied by `sign(dt)`.
    pub fn matrix(&self) -> &CsrMatrix<T> {
        &self.a
    }

    /// Degrees of freedom fixed by normal-velocity data.
    pub fn constrained_dofs(&self) -> &[usize] {
        self.constraints.dofs()
    }

    /// Errors unless `dt` matches the factored step.
    pub fn check_dt(&self, dt: T) -> Result<()> {
        if (dt - self.dt).abs() > T::tol(64.0) * self.dt.abs() {
            return Err(Error::StaleTimeStep {
                factored: self.dt.as_f64(),
                requested: dt.as_f64(),
            });
        }
        Ok(())
    }

    /// Loads of `forcing` at time `t`.
    pub fn loads(&self, forcing: &dyn Forcing<T>, t: T) -> Result<StepLoads<T>> {
        let (v_sp, q_sp) = (&self.spaces.v, &self.spaces.q);
        let mut v = vec![T::zero(); v_sp.ndofs()];
        let mut p = vec![T::zero(); q_sp.ndofs()];
        let mut v_n = vec![T::zero(); self.constraints.dofs().len()];
        if forcing.has_body_loads() {
            v = assemble_load(v_sp, &vector_field(|x| forcing.f(t, x)));
            p = assemble_load(q_sp, &scalar_field(|x| forcing.g(t, x)));
        }
        if forcing.has_boundary_data() {
            let b = assemble_boundary_load(v_sp, &|label, x| forcing.p_d(label, t, x))?;
            v.iter_mut().zip(b).for_each(|(a, b)| *a += b);
            if !v_n.is_empty() {
                let bc = EssentialBc::normal_velocity(v_sp, &|label, x| forcing.v_n(label, t, x))?;
                v_n = bc.values().to_vec();
            }
        }
        Ok(StepLoads { v, p, v_n })
    }

    /// Right-hand side for the step from `state` with loads at both ends.
    pub fn rhs(
        &self,
        state: &StateVector<T>,
        prev: &StepLoads<T>,
        next: &StepLoads<T>,
    ) -> Result<Vec<T>> {
        let x = state.to_flat();
        if x.len() != self.ndofs()
            || prev.v.len() != self.spaces.v.ndofs()
            || prev.p.len() != self.spaces.q.ndofs()
        {
            return Err(Error::DimensionMismatch(
                "state or loads do not match the system".into(),
            ));
        }
        let mut b = vec![T::zero(); x.len()];
        self.a_rhs.matvec(&x, &mut b);
        let h = T::lit(0.5) * self.sign;
        let (o1, o2) = (self.offsets[1], self.offsets[2]);
        for (i, (a, c)) in prev.v.iter().zip(&next.v).enumerate() {
            b[i] += h * (*a + *c);
        }
        for (i, (a, c)) in prev.p.iter().zip(&next.p).enumerate() {
            b[o1 + i] += h * (*a + *c);
        }
        debug_assert_eq!(o2 - o1, prev.p.len());
        if !self.constraints.is_empty() {
            let mut bc = EssentialBc::new();
            for (&d, &v) in self.constraints.dofs().iter().zip(&next.v_n) {
                bc.add(d, v)?;
            }
            bc.apply_rhs(&self.removed, &mut b);
        }
        Ok(b)
    }

    /// One step `U^n -> U^{n+1}`.
    pub fn step(
        &self,
        state: &StateVector<T>,
        prev: &StepLoads<T>,
        next: &StepLoads<T>,
    ) -> Result<StateVector<T>> {
        let mut b = self.rhs(state, prev, next)?;
        self.solver.solve_in_place(&mut b);
        if b.iter().any(|x| !x.is_finite()) {
            return Err(Error::Singular(
                "non-finite value in the time step solution".into(),
            ));
        }
        let mut out = state.clone();
        out.set_flat(&b)?;
        Ok(out)
    }

    /// `||A x - b|| / ||b||` in the max norm.
    pub fn relative_residual(&self, x: &StateVector<T>, b: &[T]) -> T {
        let xf = x.to_flat();
        let mut r = vec![T::zero(); xf.len()];
        self.a.matvec(&xf, &mut r);
        let num = r
            .iter()
            .zip(b)
            .fold(T::zero(), |m, (a, c)| m.max((*a - *c).abs()));
        let den = b.iter().fold(T::zero(), |m, c| m.max(c.abs()));
        if den == T::zero() {
            num
        } else {
            num / den
        }
    }
}

/// Called at `t_0` and after every step.
pub trait Observer<T: Scalar> {
    fn observe(
        &mut self,
        step: usize,
        t: T,
        previous: Option<&StateVector<T>>,
        current: &StateVector<T>,
    ) -> Result<()>;
}

impl<T: Scalar, F> Observer<T> for F
where
    F: FnMut(usize, T, Option<&StateVector<T>>, &StateVector<T>) -> Result<()>,
{
    fn observe(
        &mut self,
        step: usize,
        t: T,
        previous: Option<&StateVector<T>>,
        current: &StateVector<T>,
    ) -> Result<()> {
        self(step, t, previous, current)
    }
}

/// Records `E_0(t_n)` at every step.
#[derive(Debug, Clone)]
pub struct EnergyTrace<T> {
    form: EnergyForm<T>,
    pub times: Vec<T>,
    pub energies: Vec<T>,
}

impl<T: Scalar> EnergyTrace<T> {
    pub fn new(spaces: &Spaces<T>, material: &MaterialField<T>) -> Result<Self> {
        Ok(Self {
            form: EnergyForm::new(spaces, material)?,
            times: Vec::new(),
            energies: Vec::new(),
        })
    }

    /// `max_n |E(t_n) - E(t_0)| / E(t_0)`.
    pub fn max_relative_drift(&self) -> T {
        let e0 = match self.energies.first() {
            Some(&e) if e > T::zero() => e,
            _ => return T::zero(),
        };
        self.energies
            .iter()
            .fold(T::zero(), |m, &e| m.max((e - e0).abs() / e0))
    }
}

impl<T: Scalar> Observer<T> for EnergyTrace<T> {
    fn observe(
        &mut self,
        _step: usize,
        t: T,
        _previous: Option<&StateVector<T>>,
        current: &StateVector<T>,
    ) -> Result<()> {
        self.times.push(t);
        self.energies.push(self.form.energy(current)?);
        Ok(())
    }
}

/// Advances `initial` over `grid`, notifying every observer at each level.
pub fn run<T: Scalar>(
    system: &CnSystem<T>,
    initial: StateVector<T>,
    forcing: &dyn Forcing<T>,
    grid: &TimeGrid<T>,
    observers: &mut [&mut dyn Observer<T>],
) -> Result<StateVector<T>> {
    system.check_dt(grid.dt())?;
    let mut state = initial;
    for o in observers.iter_mut() {
        o.observe(0, grid.time(0), None, &state)?;
    }
    let mut prev = system.loads(forcing, grid.time(0))?;
    for n in 0..grid.n_steps() {
        let t = grid.time(n + 1);
        let next = system.loads(forcing, t)?;
        let new = system.step(&state, &prev, &next)?;
        for o in observers.iter_mut() {
            o.observe(n + 1, t, Some(&state), &new)?;
        }
        state = new;
        prev = next;
    }
    Ok(state)
}

/// Continuous initial fields; `None` means zero.
pub struct InitialData<'a, T> {
    pub v: Option<FieldFn<'a, T>>,
    pub p: Option<FieldFn<'a, T>>,
    pub u: Option<FieldFn<'a, T>>,
    pub w: Option<FieldFn<'a, T>>,
    pub q: Option<FieldFn<'a, T>>,
    pub r: Option<FieldFn<'a, T>>,
}

impl<T> Default for InitialData<'_, T> {
    fn default() -> Self {
        Self {
            v: None,
            p: None,
            u: None,
            w: None,
            q: None,
            r: None,
        }
    }
}

/// Canonical interpolation for `v`, L2 projections for the other fields.
pub fn initial_state<T: Scalar>(
    spaces: &Spaces<T>,
    data: &InitialData<'_, T>,
) -> Result<StateVector<T>> {
    let mut s = StateVector::zeros(spaces);
    if let Some(f) = data.v {
        s.v = spaces.v.interpolate_canonical(f)?;
    }
    let dg = [
        (data.p, &spaces.q),
        (data.u, &spaces.w),
        (data.w, &spaces.w),
        (data.q, &spaces.q),
        (data.r, &spaces.q),
    ];
    for (slot, (f, sp)) in s.blocks_mut().into_iter().skip(1).zip(dg) {
        if let Some(f) = f {
            *slot = sp.project_l2(f, None)?;
        }
    }
    Ok(s)
}

/// Sets `u, w, q, r` to zero on every PIM cell.
pub fn zero_auxiliary_on_pim<T: Scalar>(
    state: &mut StateVector<T>,
    material: &MaterialField<T>,
) -> Result<()> {
    if material.num_cells() != state.u.space().num_cells() {
        return Err(Error::MeshMismatch);
    }
    for f in [&mut state.u, &mut state.w, &mut state.q, &mut state.r] {
        let sp = f.space().clone();
        for c in 0..material.num_cells() {
            if material.medium(c) == Medium::Pim {
                for &d in sp.cell_dofs(c) {
                    f.coeffs[d] = T::zero();
                }
            }
        }
    }
    Ok(())
}
