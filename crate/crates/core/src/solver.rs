//! Direct solver for systems whose unknowns split into independent local
//! groups coupled only through a shared interface.
//!
//! Each group block is factored densely with partial pivoting and eliminated;
//! the interface Schur complement is factored with [`SparseLu`]. The result is
//! an exact LU factorization of the full matrix in a block elimination order.

use rayon::prelude::*;

use crate::dense::{DenseLu, DenseMatrix};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sparse::{CsrMatrix, Ordering, SparseLu, TripletBuilder};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Unassigned,
    Group(usize, usize),
    Interface(usize),
}

#[derive(Debug, Clone)]
struct GroupFactor<T> {
    dofs: Vec<usize>,
    iface: Vec<usize>,
    lu: DenseLu<T>,
    /// `A_Ig`, `|iface| x |dofs|`
    a_ig: DenseMatrix<T>,
    /// `A_gg^{-1} A_gI`, `|dofs| x |iface|`
    x: DenseMatrix<T>,
}

#[derive(Debug, Clone)]
pub struct CondensedLu<T> {
    n: usize,
    interface: Vec<usize>,
    groups: Vec<GroupFactor<T>>,
    schur: SparseLu<T>,
}

impl<T: Scalar> CondensedLu<T> {
    /// `ordering` refers to the interface unknowns in the order given.
    pub fn factor(
        a: &CsrMatrix<T>,
        groups: Vec<Vec<usize>>,
        interface: Vec<usize>,
        ordering: Ordering,
    ) -> Result<Self> {
        let n = a.nrows();
        if n != a.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} system",
                n,
                a.ncols()
            )));
        }
        let mut role = vec![Role::Unassigned; n];
        for (k, &d) in interface.iter().enumerate() {
            if d >= n || role[d] != Role::Unassigned {
                return Err(Error::DimensionMismatch(format!(
                    "interface unknown {d} invalid or repeated"
                )));
            }
            role[d] = Role::Interface(k);
        }
        for (g, dofs) in groups.iter().enumerate() {
            for (l, &d) in dofs.iter().enumerate() {
                if d >= n || role[d] != Role::Unassigned {
                    return Err(Error::DimensionMismatch(format!(
                        "group unknown {d} invalid or repeated"
                    )));
                }
                role[d] = Role::Group(g, l);
            }
        }
        if let Some(d) = role.iter().position(|r| *r == Role::Unassigned) {
            return Err(Error::DimensionMismatch(format!(
                "unknown {d} belongs to no group"
            )));
        }
        let at = a.transpose();

        let factors: Vec<GroupFactor<T>> = groups
            .into_par_iter()
            .enumerate()
            .map(|(g, dofs)| {
                let m = dofs.len();
                let mut agg = DenseMatrix::zeros(m, m);
                let mut iface: Vec<usize> = Vec::new();
                let coupled = |role: Role, iface: &mut Vec<usize>| -> Result<()> {
                    match role {
                        Role::Interface(k) => {
                            if !iface.contains(&k) {
                                iface.push(k);
                            }
                            Ok(())
                        }
                        Role::Group(h, _) if h == g => Ok(()),
                        _ => Err(Error::Singular(format!(
                            "group {g} couples to another group directly"
                        ))),
                    }
                };
                for (l, &d) in dofs.iter().enumerate() {
                    for (j, v) in a.row(d) {
                        coupled(role[j], &mut iface)?;
                        if let Role::Group(_, lj) = role[j] {
                            agg[(l, lj)] = v;
                        }
                    }
                    for (j, _) in at.row(d) {
                        coupled(role[j], &mut iface)?;
                    }
                }
                iface.sort_unstable();
                let ni = iface.len();
                let mut agi = DenseMatrix::zeros(m, ni);
                let mut a_ig = DenseMatrix::zeros(ni, m);
                for (l, &d) in dofs.iter().enumerate() {
                    for (j, v) in a.row(d) {
                        if let Role::Interface(k) = role[j] {
                            agi[(l, iface.binary_search(&k).unwrap())] = v;
                        }
                    }
                    for (j, v) in at.row(d) {
                        if let Role::Interface(k) = role[j] {
                            a_ig[(iface.binary_search(&k).unwrap(), l)] = v;
                        }
                    }
                }
                let lu = agg.lu().map_err(|_| {
                    Error::Singular(format!("local block of group {g} is singular"))
                })?;
                let x = lu.solve_matrix(&agi);
                Ok(GroupFactor {
                    dofs,
                    iface,
                    lu,
                    a_ig,
                    x,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let ni = interface.len();
        let mut s = TripletBuilder::new(ni, ni);
        for (k, &d) in interface.iter().enumerate() {
            for (j, v) in a.row(d) {
                if let Role::Interface(kj) = role[j] {
                    s.push(k, kj, v);
                }
            }
        }
        for f in &factors {
            let c = f.a_ig.matmul(&f.x);
            for (r, &kr) in f.iface.iter().enumerate() {
                for (q, &kq) in f.iface.iter().enumerate() {
                    s.push(kr, kq, -c[(r, q)]);
                }
            }
        }
        let schur = SparseLu::factor(&s.build(), ordering)?;
        log::debug!(
            "condensed LU: {} unknowns, {} interface, fill {}",
            n,
            ni,
            schur.fill()
        );
        Ok(Self {
            n,
            interface,
            groups: factors,
            schur,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn interface_len(&self) -> usize {
        self.interface.len()
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        let ys: Vec<Vec<T>> = self
            .groups
            .par_iter()
            .map(|f| {
                let mut y: Vec<T> = f.dofs.iter().map(|&d| b[d]).collect();
                f.lu.solve_in_place(&mut y);
                y
            })
            .collect();
        let mut rhs: Vec<T> = self.interface.iter().map(|&d| b[d]).collect();
        for (f, y) in self.groups.iter().zip(&ys) {
            for (r, &k) in f.iface.iter().enumerate() {
                let s = f
                    .a_ig
                    .row(r)
                    .iter()
                    .zip(y)
                    .fold(T::zero(), |acc, (&a, &b)| acc + a * b);
                rhs[k] -= s;
            }
        }
        self.schur.solve_in_place(&mut rhs);
        for (k, &d) in self.interface.iter().enumerate() {
            b[d] = rhs[k];
        }
        for (f, y) in self.groups.iter().zip(ys) {
            for (l, &d) in f.dofs.iter().enumerate() {
                let row = f.x.row(l);
                let s = f
                    .iface
                    .iter()
                    .zip(row)
                    .fold(T::zero(), |acc, (&k, &x)| acc + x * rhs[k]);
                b[d] = y[l] - s;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Chain of groups of size 3 linked through single interface unknowns.
    fn chain(
        ngroups: usize,
        rng: &mut ChaCha8Rng,
    ) -> (CsrMatrix<f64>, Vec<Vec<usize>>, Vec<usize>) {
        let n = ngroups * 4 + 1;
        let mut b = TripletBuilder::new(n, n);
        let mut groups = Vec::new();
        let mut interface = Vec::new();
        for g in 0..=ngroups {
            interface.push(g * 4);
        }
        for g in 0..ngroups {
            let dofs: Vec<usize> = (1..4).map(|k| g * 4 + k).collect();
            let coupled = [g * 4, g * 4 + 4];
            for &i in dofs.iter().chain(&coupled) {
                for &j in dofs.iter().chain(&coupled) {
                    let v = if i == j {
                        6.0
                    } else {
                        rng.gen_range(-1.0..1.0)
                    };
                    b.push(i, j, v);
                }
            }
            groups.push(dofs);
        }
        (b.build(), groups, interface)
    }

    #[test]
    fn matches_known_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (a, groups, interface) = chain(30, &mut rng);
        let n = a.nrows();
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut b = vec![0.0; n];
        a.matvec(&x, &mut b);
        let lu = CondensedLu::factor(&a, groups, interface, Ordering::Natural).unwrap();
        lu.solve_in_place(&mut b);
        for (u, v) in b.iter().zip(&x) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_partitions() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (a, mut groups, interface) = chain(3, &mut rng);
        let missing = groups[0].pop().unwrap();
        assert!(
            CondensedLu::factor(&a, groups.clone(), interface.clone(), Ordering::Natural).is_err()
        );
        groups[0].push(missing);
        // merge interface unknown 4 into group 0 so groups 0 and 1 couple directly
        let mut g = groups.clone();
        g[0].push(4);
        let iface: Vec<usize> = interface.iter().copied().filter(|&d| d != 4).collect();
        assert!(CondensedLu::factor(&a, g, iface, Ordering::Natural).is_err());
    }
}
