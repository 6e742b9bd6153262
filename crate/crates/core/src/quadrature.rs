//! Quadrature on the reference triangle `(0,0), (1,0), (0,1)` and on `[0, 1]`.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Points are barycentric `(l0, l1, l2)`; the reference point is `(l1, l2)`.
/// Weights sum to the reference area `1/2`.
#[derive(Debug, Clone)]
pub struct QuadratureRule<T> {
    pub points: Vec<[T; 3]>,
    pub weights: Vec<T>,
    pub degree: usize,
}

impl<T: Scalar> QuadratureRule<T> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Reference coordinates of point `q`.
    pub fn ref_point(&self, q: usize) -> [T; 2] {
        [self.points[q][1], self.points[q][2]]
    }

    pub fn iter(&self) -> impl Iterator<Item = ([T; 2], T)> + '_ {
        (0..self.len()).map(move |q| (self.ref_point(q), self.weights[q]))
    }
}

/// Symmetric rule on the reference triangle exact for polynomials of degree `<= degree`.
pub fn quadrature<T: Scalar>(degree: usize) -> Result<QuadratureRule<T>> {
    if !(1..=10).contains(&degree) {
        return Err(Error::UnsupportedQuadrature(degree));
    }
    let rule = match degree {
        1 => orbit_rule(&[(Orbit::Centroid, 1.0)], 1),
        2 => orbit_rule(&[(Orbit::S21(1.0 / 6.0), 1.0 / 3.0)], 2),
        3 | 4 => orbit_rule(
            &[
                (Orbit::S21(0.445948490915965), 0.223381589678011),
                (Orbit::S21(0.091576213509771), 0.109951743655322),
            ],
            4,
        ),
        5 => {
            let s15 = 15f64.sqrt();
            orbit_rule(
                &[
                    (Orbit::Centroid, 9.0 / 40.0),
                    (Orbit::S21((6.0 - s15) / 21.0), (155.0 - s15) / 1200.0),
                    (Orbit::S21((6.0 + s15) / 21.0), (155.0 + s15) / 1200.0),
                ],
                5,
            )
        }
        d => symmetrized_collapsed((d + 3) / 2, d),
    };
    Ok(rule)
}

/// High-order rule for integrating smooth non-polynomial data, exact to degree `2n - 2`.
pub fn triangle_gauss<T: Scalar>(n: usize) -> QuadratureRule<T> {
    collapsed(n, 2 * n - 2)
}

enum Orbit {
    Centroid,
    /// `(a, a, 1 - 2a)` and its permutations.
    S21(f64),
}

/// Weights given relative to unit area.
fn orbit_rule<T: Scalar>(orbits: &[(Orbit, f64)], degree: usize) -> QuadratureRule<T> {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (orbit, w) in orbits {
        match orbit {
            Orbit::Centroid => {
                let t = 1.0 / 3.0;
                points.push([T::lit(t), T::lit(t), T::lit(t)]);
                weights.push(T::lit(0.5 * w));
            }
            Orbit::S21(a) => {
                let b = 1.0 - 2.0 * a;
                for p in [[b, *a, *a], [*a, b, *a], [*a, *a, b]] {
                    points.push(p.map(T::lit));
                    weights.push(T::lit(0.5 * w));
                }
            }
        }
    }
    QuadratureRule {
        points,
        weights,
        degree,
    }
}

/// Collapsed (Duffy) tensor Gauss rule, `n` points per direction.
fn collapsed<T: Scalar>(n: usize, degree: usize) -> QuadratureRule<T> {
    let (x, w) = gauss_legendre_f64(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let u = x[i];
            let v = x[j];
            let px = u;
            let py = v * (1.0 - u);
            points.push([T::lit(1.0 - px - py), T::lit(px), T::lit(py)]);
            weights.push(T::lit(w[i] * w[j] * (1.0 - u)));
        }
    }
    QuadratureRule {
        points,
        weights,
        degree,
    }
}

/// Collapsed rule averaged over the six barycentric permutations, with
/// coincident points merged.
fn symmetrized_collapsed<T: Scalar>(n: usize, degree: usize) -> QuadratureRule<T> {
    let (x, w) = gauss_legendre_f64(n);
    let perms = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mut pts: Vec<[f64; 3]> = Vec::new();
    let mut wts: Vec<f64> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let u = x[i];
            let px = u;
            let py = x[j] * (1.0 - u);
            let bary = [1.0 - px - py, px, py];
            let weight = w[i] * w[j] * (1.0 - u) / 6.0;
            for p in &perms {
                let b = [bary[p[0]], bary[p[1]], bary[p[2]]];
                match pts
                    .iter()
                    .position(|q| (0..3).all(|k| (q[k] - b[k]).abs() < 1e-14))
                {
                    Some(k) => wts[k] += weight,
                    None => {
                        pts.push(b);
                        wts.push(weight);
                    }
                }
            }
        }
    }
    QuadratureRule {
        points: pts.into_iter().map(|p| p.map(T::lit)).collect(),
        weights: wts.into_iter().map(T::lit).collect(),
        degree,
    }
}

/// Gauss-Legendre nodes and weights on `[0, 1]`, exact to degree `2n - 1`.
pub fn gauss_legendre<T: Scalar>(n: usize) -> (Vec<T>, Vec<T>) {
    let (x, w) = gauss_legendre_f64(n);
    (
        x.into_iter().map(T::lit).collect(),
        w.into_iter().map(T::lit).collect(),
    )
}

fn gauss_legendre_f64(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev-like initial guess, refined by Newton on P_n.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        // map from [-1, 1] to [0, 1], ascending order
        nodes[n - 1 - i] = 0.5 * (z + 1.0);
        weights[n - 1 - i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Shifted Legendre polynomial `L_j` on `[0, 1]`, with `L_j(1 - s) = (-1)^j L_j(s)`.
pub fn shifted_legendre<T: Scalar>(j: usize, s: T) -> T {
    let z = T::lit(2.0) * s - T::one();
    let mut p0 = T::one();
    if j == 0 {
        return p0;
    }
    let mut p1 = z;
    for k in 2..=j {
        let kf = T::from_usize_lossy(k);
        let p2 = ((T::lit(2.0) * kf - T::one()) * z * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    p1
}
