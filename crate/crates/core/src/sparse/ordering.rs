//! Fill-reducing orderings.

/// Elimination order for [`super::SparseLu`].
#[derive(Debug, Clone)]
pub enum Ordering {
    Natural,
    /// Geometric nested dissection using one coordinate per unknown.
    NestedDissection(Vec<[f64; 2]>),
}

const LEAF: usize = 48;

/// Geometric nested dissection on a symmetric adjacency pattern.
///
/// Returns `perm` with `perm[new] = old`. Each level splits the node set at
/// the coordinate median of its longer extent; nodes on the lower side that
/// touch the upper side form the separator and are numbered last.
pub fn nested_dissection(indptr: &[usize], indices: &[usize], coords: &[[f64; 2]]) -> Vec<usize> {
    let n = coords.len();
    let mut perm = Vec::with_capacity(n);
    let mut side = vec![0u8; n];
    let mut stack: Vec<Task> = vec![Task::Split((0..n).collect())];
    // emulate recursion: Split pushes Emit(separator), Split(upper), Split(lower)
    while let Some(task) = stack.pop() {
        match task {
            Task::Emit(nodes) => perm.extend(nodes),
            Task::Split(mut nodes) => {
                if nodes.len() <= LEAF {
                    nodes.sort_unstable();
                    perm.extend(nodes);
                    continue;
                }
                let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
                for &v in &nodes {
                    for d in 0..2 {
                        lo[d] = lo[d].min(coords[v][d]);
                        hi[d] = hi[d].max(coords[v][d]);
                    }
                }
                let axis = if hi[0] - lo[0] >= hi[1] - lo[1] { 0 } else { 1 };
                nodes.sort_unstable_by(|&a, &b| {
                    coords[a][axis]
                        .partial_cmp(&coords[b][axis])
                        .unwrap()
                        .then(a.cmp(&b))
                });
                let mid = nodes.len() / 2;
                // keep nodes with equal coordinates on one side
                let split_val = coords[nodes[mid]][axis];
                let cut = nodes.partition_point(|&v| coords[v][axis] < split_val);
                let cut = if cut == 0 { mid } else { cut };
                for &v in &nodes[..cut] {
                    side[v] = 1;
                }
                for &v in &nodes[cut..] {
                    side[v] = 2;
                }
                let mut lower = Vec::new();
                let mut sep = Vec::new();
                for &v in &nodes[..cut] {
                    let touches = indices[indptr[v]..indptr[v + 1]]
                        .iter()
                        .any(|&u| side[u] == 2);
                    if touches {
                        sep.push(v);
                    } else {
                        lower.push(v);
                    }
                }
                let upper: Vec<usize> = nodes[cut..].to_vec();
                for &v in &nodes {
                    side[v] = 0;
                }
                sep.sort_unstable();
                stack.push(Task::Emit(sep));
                stack.push(Task::Split(upper));
                stack.push(Task::Split(lower));
            }
        }
    }
    perm
}

enum Task {
    Split(Vec<usize>),
    Emit(Vec<usize>),
}
