use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Affine map `x = v0 + J x_hat` from the reference triangle to a cell.
#[derive(Debug, Clone, Copy)]
pub struct CellMap<T> {
    pub origin: [T; 2],
    /// `jac[r][c]`, columns are `v1 - v0` and `v2 - v0`.
    pub jac: [[T; 2]; 2],
    pub inv: [[T; 2]; 2],
    pub det: T,
}

impl<T: Scalar> CellMap<T> {
    pub fn new(v: [[T; 2]; 3], cell: usize) -> Result<Self> {
        let jac = [
            [v[1][0] - v[0][0], v[2][0] - v[0][0]],
            [v[1][1] - v[0][1], v[2][1] - v[0][1]],
        ];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det <= T::zero() {
            return Err(Error::DegenerateCell {
                cell,
                det: det.as_f64(),
            });
        }
        let inv = [
            [jac[1][1] / det, -jac[0][1] / det],
            [-jac[1][0] / det, jac[0][0] / det],
        ];
        Ok(Self {
            origin: v[0],
            jac,
            inv,
            det,
        })
    }

    #[inline]
    pub fn map(&self, p: [T; 2]) -> [T; 2] {
        [
            self.origin[0] + self.jac[0][0] * p[0] + self.jac[0][1] * p[1],
            self.origin[1] + self.jac[1][0] * p[0] + self.jac[1][1] * p[1],
        ]
    }

    #[inline]
    pub fn inverse_map(&self, x: [T; 2]) -> [T; 2] {
        let d = [x[0] - self.origin[0], x[1] - self.origin[1]];
        [
            self.inv[0][0] * d[0] + self.inv[0][1] * d[1],
            self.inv[1][0] * d[0] + self.inv[1][1] * d[1],
        ]
    }

    /// Contravariant Piola push-forward `J v_hat / det J`.
    #[inline]
    pub fn piola(&self, v: [T; 2]) -> [T; 2] {
        [
            (self.jac[0][0] * v[0] + self.jac[0][1] * v[1]) / self.det,
            (self.jac[1][0] * v[0] + self.jac[1][1] * v[1]) / self.det,
        ]
    }

    /// Inverse Piola pull-back `det J J^{-1} v`.
    #[inline]
    pub fn pull_back(&self, v: [T; 2]) -> [T; 2] {
        [
            self.det * (self.inv[0][0] * v[0] + self.inv[0][1] * v[1]),
            self.det * (self.inv[1][0] * v[0] + self.inv[1][1] * v[1]),
        ]
    }

    #[inline]
    pub fn piola_div(&self, div_hat: T) -> T {
        div_hat / self.det
    }

    /// Physical gradient `J^{-T} grad_hat`.
    #[inline]
    pub fn grad(&self, g: [T; 2]) -> [T; 2] {
        [
            self.inv[0][0] * g[0] + self.inv[1][0] * g[1],
            self.inv[0][1] * g[0] + self.inv[1][1] * g[1],
        ]
    }

    /// `J^T J`, entering the Piola mass matrix.
    pub fn metric(&self) -> [[T; 2]; 2] {
        let j = &self.jac;
        let mut m = [[T::zero(); 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                m[a][b] = j[0][a] * j[0][b] + j[1][a] * j[1][b];
            }
        }
        m
    }
}

/// Pushes reference H(div) values and divergences forward to a cell.
pub fn piola_map<T: Scalar>(map: &CellMap<T>, v_hat: [T; 2], div_hat: T) -> ([T; 2], T) {
    (map.piola(v_hat), map.piola_div(div_hat))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let m = CellMap::<f64>::new([[0.2, 0.1], [0.9, 0.3], [0.4, 0.8]], 0).unwrap();
        let x = m.map([0.25, 0.5]);
        let back = m.inverse_map(x);
        assert!((back[0] - 0.25).abs() < 1e-14 && (back[1] - 0.5).abs() < 1e-14);
        let v = m.pull_back(m.piola([1.5, -0.7]));
        assert!((v[0] - 1.5).abs() < 1e-14 && (v[1] + 0.7).abs() < 1e-14);
    }

    #[test]
    fn clockwise_rejected() {
        assert!(CellMap::new([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]], 3).is_err());
    }

    #[test]
    fn flux_preserved() {
        // flux of a constant field through a mapped edge equals the reference flux
        let m = CellMap::<f64>::new([[0.0, 0.0], [2.0, 0.0], [0.0, 0.5]], 0).unwrap();
        let vh = [0.3f64, 0.7];
        let v = m.piola(vh);
        // reference edge 2 from (0,0) to (1,0), scaled normal (0,-1)
        let ref_flux = -vh[1];
        // physical edge from (0,0) to (2,0), scaled normal (0,-2)
        let phys_flux = -2.0 * v[1];
        assert!((ref_flux - phys_flux).abs() < 1e-14);
    }
}
