use std::collections::BTreeMap;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::EconError;

/// Row count from which fixed effects are swept out by alternating
/// projections instead of an explicit dummy projection.
pub const ALTERNATING_THRESHOLD: usize = 5_000;

/// Convergence threshold of the alternating projections, relative to the
/// largest absolute entry of the vector being residualized.
pub const ALTERNATING_TOL: f64 = 1e-12;

const MAX_SWEEPS: usize = 100_000;

/// Remaps arbitrary labels to dense indices in sorted-label order.
pub(crate) fn dense_ids(labels: &[u64]) -> (Vec<usize>, usize) {
    let mut map = BTreeMap::new();
    for &l in labels {
        map.entry(l).or_insert(0usize);
    }
    for (i, v) in map.values_mut().enumerate() {
        *v = i;
    }
    (labels.iter().map(|l| map[l]).collect(), map.len())
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

enum Method {
    None,
    Dummies { design: Vec<Vec<usize>>, chol: Cholesky<f64, Dyn> },
    Alternating,
}

/// Projects vectors off the span of one or more sets of group dummies.
pub struct Absorber {
    ids: Vec<Vec<usize>>,
    counts: Vec<Vec<f64>>,
    method: Method,
    rank: usize,
}

impl Absorber {
    /// `factors` holds one label vector per set of fixed effects; every
    /// vector has one entry per observation.
    pub fn new(factors: &[Vec<u64>], n_obs: usize) -> Result<Self, EconError> {
        Self::with_threshold(factors, n_obs, ALTERNATING_THRESHOLD)
    }

    pub fn with_threshold(factors: &[Vec<u64>], n_obs: usize, threshold: usize) -> Result<Self, EconError> {
        if factors.len() > 2 {
            return Err(EconError::Unsupported("at most two sets of fixed effects"));
        }
        let mut ids = Vec::new();
        let mut counts = Vec::new();
        let mut levels = Vec::new();
        for f in factors {
            if f.len() != n_obs {
                return Err(EconError::DimensionMismatch { what: "fixed-effect labels", expected: n_obs, got: f.len() });
            }
            let (dense, m) = dense_ids(f);
            let mut c = vec![0.0; m];
            for &g in &dense {
                c[g] += 1.0;
            }
            ids.push(dense);
            counts.push(c);
            levels.push(m);
        }

        // Dummy columns kept: every level of the first factor, and for the
        // second all levels except one per connected component.
        let (rank, keep_b) = match levels.len() {
            0 => (0, Vec::new()),
            1 => (levels[0], Vec::new()),
            _ => {
                let (na, nb) = (levels[0], levels[1]);
                let mut parent: Vec<usize> = (0..na + nb).collect();
                for (&ia, &ib) in ids[0].iter().zip(&ids[1]).take(n_obs) {
                    let (a, b) = (find(&mut parent, ia), find(&mut parent, na + ib));
                    if a != b {
                        parent[a] = b;
                    }
                }
                let mut seen_root = std::collections::HashSet::new();
                for a in 0..na {
                    let r = find(&mut parent, a);
                    seen_root.insert(r);
                }
                let components = seen_root.len();
                // Drop the first level of the second factor in each component.
                let mut dropped = std::collections::HashSet::new();
                let mut keep = vec![true; nb];
                for (b, k) in keep.iter_mut().enumerate() {
                    let r = find(&mut parent, na + b);
                    if dropped.insert(r) {
                        *k = false;
                    }
                }
                (na + nb - components, keep)
            }
        };

        let method = if levels.is_empty() {
            Method::None
        } else if n_obs >= threshold {
            Method::Alternating
        } else {
            let mut design: Vec<Vec<usize>> = vec![Vec::new(); n_obs];
            let mut col_of_b = vec![usize::MAX; keep_b.len()];
            let mut m = levels[0];
            for (b, &k) in keep_b.iter().enumerate() {
                if k {
                    col_of_b[b] = m;
                    m += 1;
                }
            }
            for i in 0..n_obs {
                design[i].push(ids[0][i]);
                if levels.len() == 2 {
                    let c = col_of_b[ids[1][i]];
                    if c != usize::MAX {
                        design[i].push(c);
                    }
                }
            }
            let mut dtd = DMatrix::<f64>::zeros(m, m);
            for cols in &design {
                for &p in cols {
                    for &q in cols {
                        dtd[(p, q)] += 1.0;
                    }
                }
            }
            let chol = Cholesky::new(dtd).ok_or(EconError::Numerical("fixed-effect dummies are singular"))?;
            Method::Dummies { design, chol }
        };
        Ok(Self { ids, counts, method, rank })
    }

    /// Number of linearly independent dummy columns absorbed.
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn uses_alternating_projections(&self) -> bool {
        matches!(self.method, Method::Alternating)
    }

    fn demean(&self, k: usize, v: &mut [f64]) -> f64 {
        let mut sums = vec![0.0; self.counts[k].len()];
        for (i, &g) in self.ids[k].iter().enumerate() {
            sums[g] += v[i];
        }
        let mut max_change: f64 = 0.0;
        for (i, &g) in self.ids[k].iter().enumerate() {
            let m = sums[g] / self.counts[k][g];
            v[i] -= m;
            max_change = max_change.max(m.abs());
        }
        max_change
    }

    /// Residual of `v` after projecting on the fixed-effect dummies.
    pub fn residualize(&self, v: &[f64]) -> Result<Vec<f64>, EconError> {
        let mut out = v.to_vec();
        match &self.method {
            Method::None => {}
            Method::Dummies { design, chol } => {
                let m = chol.l_dirty().nrows();
                let mut dtv = DVector::<f64>::zeros(m);
                for (i, cols) in design.iter().enumerate() {
                    for &c in cols {
                        dtv[c] += v[i];
                    }
                }
                let coef = chol.solve(&dtv);
                for (i, cols) in design.iter().enumerate() {
                    out[i] -= cols.iter().map(|&c| coef[c]).sum::<f64>();
                }
            }
            Method::Alternating => {
                if self.ids.len() == 1 {
                    self.demean(0, &mut out);
                } else {
                    let scale = v.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(f64::MIN_POSITIVE);
                    let mut converged = false;
                    for _ in 0..MAX_SWEEPS {
                        let c0 = self.demean(0, &mut out);
                        let c1 = self.demean(1, &mut out);
                        if c0.max(c1) <= ALTERNATING_TOL * scale {
                            converged = true;
                            break;
                        }
                    }
                    if !converged {
                        return Err(EconError::Numerical("alternating projections did not converge"));
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn residualize_matrix(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>, EconError> {
        let mut out = x.clone();
        for j in 0..x.ncols() {
            let col: Vec<f64> = x.column(j).iter().copied().collect();
            let r = self.residualize(&col)?;
            out.set_column(j, &DVector::from_vec(r));
        }
        Ok(out)
    }
}
