use super::mat::{Mat, SpMat};
use super::zpe::{Scalar, Zpe};

#[derive(Clone, Copy, Debug, Default)]
pub struct Want {
    pub u: bool,
    pub uinv: bool,
    pub v: bool,
    pub vinv: bool,
}

impl Want {
    pub const ALL: Want = Want { u: true, uinv: true, v: true, vinv: true };
    pub const NONE: Want = Want { u: false, uinv: false, v: false, vinv: false };
}

/// U * m * V = diag(p^vals[0], p^vals[1], ...), vals nondecreasing, e meaning zero.
#[derive(Clone, Debug)]
pub struct SnfDense {
    pub ring: Zpe,
    pub rows: usize,
    pub cols: usize,
    pub vals: Vec<u32>,
    pub u: Option<Mat>,
    pub uinv: Option<Mat>,
    pub v: Option<Mat>,
    pub vinv: Option<Mat>,
}

impl SnfDense {
    /// Number of nonzero diagonal entries.
    pub fn rank(&self) -> usize {
        self.vals.iter().take_while(|&&v| v < self.ring.e()).count()
    }

    /// Valuation of the j-th diagonal entry, e for zero or beyond the diagonal.
    pub fn val_at(&self, j: usize) -> u32 {
        self.vals.get(j).copied().unwrap_or(self.ring.e())
    }
}

fn swap_rows(m: &mut Mat, a: usize, b: usize) {
    if a == b {
        return;
    }
    let c = m.cols;
    for j in 0..c {
        m.data.swap(a * c + j, b * c + j);
    }
}

fn swap_cols(m: &mut Mat, a: usize, b: usize) {
    if a == b {
        return;
    }
    let c = m.cols;
    for i in 0..m.rows {
        m.data.swap(i * c + a, i * c + b);
    }
}

/// row_i -= c * row_k
fn row_sub(m: &mut Mat, i: usize, k: usize, c: u64) {
    let r = m.ring;
    let n = m.cols;
    let (src, dst) = if i < k {
        let (lo, hi) = m.data.split_at_mut(k * n);
        (&hi[..n], &mut lo[i * n..(i + 1) * n])
    } else {
        let (lo, hi) = m.data.split_at_mut(i * n);
        (&lo[k * n..(k + 1) * n], &mut hi[..n])
    };
    for j in 0..n {
        if src[j] != 0 {
            dst[j] = r.sub_mul(dst[j], c, src[j]);
        }
    }
}

/// col_j += c * col_k
fn col_add(m: &mut Mat, j: usize, k: usize, c: u64) {
    let r = m.ring;
    let n = m.cols;
    for i in 0..m.rows {
        let s = m.data[i * n + k];
        if s != 0 {
            m.data[i * n + j] = r.add(m.data[i * n + j], r.mul(c, s));
        }
    }
}

fn scale_row(m: &mut Mat, i: usize, c: u64) {
    let r = m.ring;
    let n = m.cols;
    for x in &mut m.data[i * n..(i + 1) * n] {
        *x = r.mul(*x, c);
    }
}

fn scale_col(m: &mut Mat, j: usize, c: u64) {
    let r = m.ring;
    let n = m.cols;
    for i in 0..m.rows {
        m.data[i * n + j] = r.mul(m.data[i * n + j], c);
    }
}

/// Smith normal form by minimal-valuation pivoting; ties go to the lowest (row, col).
pub fn snf_dense(mut m: Mat, want: Want) -> SnfDense {
    let ring = m.ring;
    let e = ring.e();
    let (rows, cols) = (m.rows, m.cols);
    let mut u = want.u.then(|| Mat::identity(ring, rows));
    let mut uinv = want.uinv.then(|| Mat::identity(ring, rows));
    let mut v = want.v.then(|| Mat::identity(ring, cols));
    let mut vinv = want.vinv.then(|| Mat::identity(ring, cols));
    let mut vals = Vec::new();
    let kmax = rows.min(cols);
    for k in 0..kmax {
        let mut best: Option<(u32, usize, usize)> = None;
        'search: for i in k..rows {
            let row = m.row(i);
            for j in k..cols {
                let x = row[j];
                if x == 0 {
                    continue;
                }
                let vv = ring.val(x);
                if best.is_none_or(|b| vv < b.0) {
                    best = Some((vv, i, j));
                    if vv == 0 {
                        break 'search;
                    }
                }
            }
        }
        let Some((pv, pi, pj)) = best else { break };
        swap_rows(&mut m, k, pi);
        if let Some(u) = u.as_mut() {
            swap_rows(u, k, pi);
        }
        if let Some(ui) = uinv.as_mut() {
            swap_cols(ui, k, pi);
        }
        swap_cols(&mut m, k, pj);
        if let Some(v) = v.as_mut() {
            swap_cols(v, k, pj);
        }
        if let Some(vi) = vinv.as_mut() {
            swap_rows(vi, k, pj);
        }
        let unit = ring.unit_part(m.get(k, k));
        let uinv_c = ring.inv_unit(unit);
        if unit != 1 {
            scale_row(&mut m, k, uinv_c);
            if let Some(u) = u.as_mut() {
                scale_row(u, k, uinv_c);
            }
            if let Some(ui) = uinv.as_mut() {
                scale_col(ui, k, unit % ring.q());
            }
        }
        // rows below
        for i in k + 1..rows {
            let x = m.get(i, k);
            if x == 0 {
                continue;
            }
            let c = ring.div_p_pow(x, pv);
            row_sub(&mut m, i, k, c);
            if let Some(u) = u.as_mut() {
                row_sub(u, i, k, c);
            }
            if let Some(ui) = uinv.as_mut() {
                col_add(ui, k, i, c);
            }
        }
        // columns to the right: only row k of m changes
        for j in k + 1..cols {
            let x = m.get(k, j);
            if x == 0 {
                continue;
            }
            let c = ring.div_p_pow(x, pv);
            m.set(k, j, 0);
            if let Some(v) = v.as_mut() {
                col_add(v, j, k, ring.neg(c % ring.q()));
            }
            if let Some(vi) = vinv.as_mut() {
                // V' = V E with E = I - c e_k e_j^T, so V'^{-1} = (I + c e_k e_j^T) V^{-1}
                let n = vi.cols;
                for t in 0..n {
                    let s = vi.data[j * n + t];
                    if s != 0 {
                        vi.data[k * n + t] = ring.add(vi.data[k * n + t], ring.mul(c, s));
                    }
                }
            }
        }
        vals.push(pv);
    }
    while vals.len() < kmax {
        vals.push(e);
    }
    SnfDense { ring, rows, cols, vals, u, uinv, v, vinv }
}

/// Result of [`snf`] on a sparse matrix.
#[derive(Clone, Debug)]
pub struct Snf {
    pub diag: Vec<Scalar>,
    pub u: SpMat,
    pub v: SpMat,
}

/// U * m * V = diag with diagonal entries powers of p (or zero), nondecreasing valuation.
pub fn snf(m: &SpMat) -> Snf {
    let r = snf_dense(m.to_dense(), Want { u: true, uinv: false, v: true, vinv: false });
    let diag = r
        .vals
        .iter()
        .map(|&v| Scalar { value: r.ring.p_pow(v), ring: r.ring })
        .collect();
    Snf { diag, u: r.u.unwrap().to_sparse(), v: r.v.unwrap().to_sparse() }
}

/// Builds the rows x cols matrix with the given diagonal.
pub fn diag_matrix(ring: Zpe, rows: usize, cols: usize, diag: &[Scalar]) -> SpMat {
    let mut m = SpMat::new(ring, rows, cols);
    for (i, d) in diag.iter().enumerate() {
        m.set(i, i, d.value);
    }
    m
}

/// Elementary divisor exponents of m (zeros reported as e), nondecreasing.
pub fn elementary_divisors(m: &SpMat) -> Vec<u32> {
    snf_dense(m.to_dense(), Want::NONE).vals
}
