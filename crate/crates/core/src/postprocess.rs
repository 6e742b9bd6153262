//! Element-local pressure reconstruction `p*` of degree `k + 2`.

use std::sync::Arc;

use rayon::prelude::*;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::fespace::{FEFunction, FESpace, Spaces};
use crate::material::{MaterialField, StateVector};
use crate::quadrature::triangle_gauss;
use crate::scalar::Scalar;
use crate::stepper::Forcing;

/// Reconstructed pressure approximating `p(t_n + dt/2)`.
#[derive(Debug, Clone)]
pub struct PostState<T> {
    pub p_star: FEFunction<T>,
    pub time: T,
}

/// Values of `fun` at the rule points of `cell`, component-major per point.
fn values_at<T: Scalar>(
    fun: &FEFunction<T>,
    tab: &crate::refelem::Tabulation<T>,
    cell: usize,
    out: &mut [T],
    scratch: &mut [T],
) {
    let sp = fun.space();
    let (dim, nc) = (sp.dim(), sp.ncomp());
    let dofs = sp.cell_dofs(cell);
    for q in 0..tab.npoints {
        sp.basis_values(cell, tab, q, scratch);
        for c in 0..nc {
            out[q * nc + c] = (0..dim).fold(T::zero(), |acc, i| {
                acc + fun.coeffs[dofs[i]] * scratch[i * nc + c]
            });
        }
    }
}

/// Solves, on every cell `K`,
/// `(grad p*, grad p')_K = (f - rho_a (v^{n+1} - v^n)/dt - rho_u u^{n+1/2}, grad p')_K`
/// with `int_K p* = int_K p^{n+1/2}`.
pub fn postprocess_pressure<T: Scalar>(
    spaces: &Spaces<T>,
    prev: &StateVector<T>,
    next: &StateVector<T>,
    forcing: &dyn Forcing<T>,
    t_n: T,
    material: &MaterialField<T>,
    dt: T,
) -> Result<PostState<T>> {
    let mesh = spaces.mesh();
    if material.num_cells() != mesh.num_cells() {
        return Err(Error::MeshMismatch);
    }
    for f in [&prev.v, &next.v, &prev.u, &next.u, &prev.p, &next.p] {
        if !Arc::ptr_eq(f.space().mesh(), mesh) {
            return Err(Error::MeshMismatch);
        }
    }
    if dt == T::zero() {
        return Err(Error::Config("zero time step".into()));
    }
    let post = FESpace::new(mesh.clone(), spaces.pairing.post())?;
    let n = post.dim();
    let deg = post.family().poly_degree() + spaces.v.family().poly_degree() + 2;
    let rule = triangle_gauss::<T>(deg.div_ceil(2) + 1);
    let nq = rule.len();
    let tab_post = post.tabulate_rule(&rule);
    let tab_v = spaces.v.tabulate_rule(&rule);
    let tab_w = spaces.w.tabulate_rule(&rule);
    let tab_q = spaces.q.tabulate_rule(&rule);
    let half = T::lit(0.5);
    let t_mid = t_n + half * dt;
    let t_next = t_n + dt;
    let body = forcing.has_body_loads();

    let local: Vec<Result<Vec<T>>> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let map = post.map(c);
            let (rho_a, rho_u) = (material.rho_a()[c], material.rho_u()[c]);
            let mut v0 = vec![T::zero(); 2 * nq];
            let mut v1 = vec![T::zero(); 2 * nq];
            let mut u0 = vec![T::zero(); 2 * nq];
            let mut u1 = vec![T::zero(); 2 * nq];
            let mut p0 = vec![T::zero(); nq];
            let mut p1 = vec![T::zero(); nq];
            let mut scratch =
                vec![T::zero(); 2 * spaces.v.dim().max(spaces.w.dim()).max(spaces.q.dim())];
            values_at(&prev.v, &tab_v, c, &mut v0, &mut scratch);
            values_at(&next.v, &tab_v, c, &mut v1, &mut scratch);
            values_at(&prev.u, &tab_w, c, &mut u0, &mut scratch);
            values_at(&next.u, &tab_w, c, &mut u1, &mut scratch);
            values_at(&prev.p, &tab_q, c, &mut p0, &mut scratch);
            values_at(&next.p, &tab_q, c, &mut p1, &mut scratch);

            let mut sys = DenseMatrix::zeros(n + 1, n + 1);
            let mut rhs = vec![T::zero(); n + 1];
            for q in 0..nq {
                let jw = rule.weights[q] * map.det;
                let x = map.map(rule.ref_point(q));
                let f = if body {
                    let (a, b) = (forcing.f(t_n, x), forcing.f(t_next, x));
                    [half * (a[0] + b[0]), half * (a[1] + b[1])]
                } else {
                    [T::zero(); 2]
                };
                let mut g = [T::zero(); 2];
                for d in 0..2 {
                    let vdot = (v1[2 * q + d] - v0[2 * q + d]) / dt;
                    let umid = half * (u0[2 * q + d] + u1[2 * q + d]);
                    g[d] = f[d] - rho_a * vdot - rho_u * umid;
                }
                let grads: Vec<[T; 2]> = (0..n)
                    .map(|i| map.grad([tab_post.grad(q, i, 0), tab_post.grad(q, i, 1)]))
                    .collect();
                for i in 0..n {
                    for j in 0..n {
                        sys[(i, j)] += jw * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
                    }
                    let phi = tab_post.value(q, i, 0);
                    sys[(i, n)] += jw * phi;
                    sys[(n, i)] += jw * phi;
                    rhs[i] += jw * (g[0] * grads[i][0] + g[1] * grads[i][1]);
                }
                rhs[n] += jw * half * (p0[q] + p1[q]);
            }
            let lu = sys
                .lu()
                .map_err(|_| Error::Singular(format!("post-processing system on cell {c}")))?;
            lu.solve_in_place(&mut rhs);
            rhs.truncate(n);
            Ok(rhs)
        })
        .collect();
    let mut coeffs = vec![T::zero(); post.ndofs()];
    for (c, l) in local.into_iter().enumerate() {
        for (&d, v) in post.cell_dofs(c).iter().zip(l?) {
            coeffs[d] = v;
        }
    }
    Ok(PostState {
        p_star: FEFunction::new(post, coeffs)?,
        time: t_mid,
    })
}

/// `int_K f` for every cell.
pub fn cell_integrals<T: Scalar>(f: &FEFunction<T>) -> Vec<T> {
    let sp = f.space();
    let rule = triangle_gauss::<T>(sp.family().poly_degree() / 2 + 2);
    let tab = sp.tabulate_rule(&rule);
    let nc = sp.ncomp();
    let mut vals = vec![T::zero(); rule.len() * nc];
    let mut scratch = vec![T::zero(); sp.dim() * nc];
    (0..sp.num_cells())
        .map(|c| {
            values_at(f, &tab, c, &mut vals, &mut scratch);
            let det = sp.map(c).det;
            (0..rule.len()).fold(T::zero(), |acc, q| {
                acc + rule.weights[q] * det * vals[q * nc]
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fespace::{scalar_field, vector_field, Pairing};
    use crate::material::RegionCoefficients;
    use crate::mesh::{Mesh, Rect};
    use crate::stepper::Unforced;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spaces(pairing: Pairing) -> Spaces<f64> {
        Spaces::new(
            Arc::new(Mesh::build_structured(Rect::unit(), 4).unwrap()),
            pairing,
        )
        .unwrap()
    }

    fn random_state(s: &Spaces<f64>, seed: u64) -> StateVector<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut st = StateVector::zeros(s);
        let x: Vec<f64> = (0..st.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        st.set_flat(&x).unwrap();
        st
    }

    fn material(n: usize) -> MaterialField<f64> {
        MaterialField::uniform(
            n,
            RegionCoefficients::nim(1.3, 0.9, 1.2, 0.8),
            1.0,
            1.0,
            0.0,
        )
    }

    #[test]
    fn cellwise_constant_pressure_is_reproduced() {
        let s = spaces(Pairing::Bdm1);
        let mat = material(32);
        let mut st = StateVector::zeros(&s);
        st.p =
            s.q.project_l2(&scalar_field(|x| if x[0] < 0.5 { 2.0 } else { -1.0 }), None)
                .unwrap();
        let post = postprocess_pressure(&s, &st, &st, &Unforced, 0.0, &mat, 0.1).unwrap();
        let err = post
            .p_star
            .l2_distance(&scalar_field(|x| if x[0] < 0.5 { 2.0 } else { -1.0 }), None);
        assert!(err < 1e-13, "{err}");
        assert!((post.time - 0.05).abs() < 1e-15);
    }

    #[test]
    fn cell_means_preserved() {
        for pairing in Pairing::ALL {
            let s = spaces(pairing);
            let mat = material(32);
            let (a, b) = (random_state(&s, 1), random_state(&s, 2));
            let post = postprocess_pressure(&s, &a, &b, &Unforced, 0.0, &mat, 0.05).unwrap();
            let mut mid = a.p.clone();
            mid.coeffs
                .iter_mut()
                .zip(&b.p.coeffs)
                .for_each(|(x, y)| *x = 0.5 * (*x + y));
            for (m1, m2) in cell_integrals(&post.p_star)
                .iter()
                .zip(cell_integrals(&mid))
            {
                assert!((m1 - m2).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn recovers_gradient_of_polynomial_pressure() {
        // p = x^2 y + 3 y^2 with v' = -grad p, rho_a = 1, rho_u = 0
        let s = spaces(Pairing::Bdm2);
        let mat = MaterialField::uniform(32, RegionCoefficients::pim(1.0, 1.0), 1.0, 1.0, 0.0);
        let p = |x: [f64; 2]| x[0] * x[0] * x[1] + 3.0 * x[1] * x[1];
        let dt = 0.1;
        let mut a = StateVector::zeros(&s);
        let mut b = StateVector::zeros(&s);
        b.v =
            s.v.interpolate_canonical(&vector_field(|x: [f64; 2]| {
                [-2.0 * x[0] * x[1] * dt, -(x[0] * x[0] + 6.0 * x[1]) * dt]
            }))
            .unwrap();
        a.p = s.q.project_l2(&scalar_field(p), None).unwrap();
        b.p = a.p.clone();
        let post = postprocess_pressure(&s, &a, &b, &Unforced, 0.0, &mat, dt).unwrap();
        assert!(post.p_star.l2_distance(&scalar_field(p), None) < 1e-12);
    }

    #[test]
    fn locality() {
        let s = spaces(Pairing::Rtn1);
        let mat = material(32);
        let (a, b) = (random_state(&s, 3), random_state(&s, 4));
        let base = postprocess_pressure(&s, &a, &b, &Unforced, 0.0, &mat, 0.05).unwrap();
        let mut b2 = b.clone();
        for &d in s.q.cell_dofs(7) {
            b2.p.coeffs[d] += 1.0;
        }
        for &d in s.w.cell_dofs(7) {
            b2.u.coeffs[d] -= 0.5;
        }
        let moved = postprocess_pressure(&s, &a, &b2, &Unforced, 0.0, &mat, 0.05).unwrap();
        let post = base.p_star.space();
        for c in 0..32 {
            let changed = post
                .cell_dofs(c)
                .iter()
                .any(|&d| base.p_star.coeffs[d] != moved.p_star.coeffs[d]);
            assert_eq!(changed, c == 7, "cell {c}");
        }
    }
}
