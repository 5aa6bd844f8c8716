use pdcris::ring::{Mat, Zpe};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn det_i128(m: &[Vec<i128>]) -> i128 {
    // Bareiss
    let n = m.len();
    if n == 0 {
        return 1;
    }
    let mut a: Vec<Vec<i128>> = m.to_vec();
    let mut sign = 1;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if a[k][k] == 0 {
            let Some(s) = (k + 1..n).find(|&i| a[i][k] != 0) else { return 0 };
            a.swap(k, s);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}

fn vp(mut x: i128, p: i128) -> Option<u32> {
    if x == 0 {
        return None;
    }
    let mut v = 0;
    while x % p == 0 {
        x /= p;
        v += 1;
    }
    Some(v)
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn go(s: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in s..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    go(0, n, k, &mut cur, &mut out);
    out
}

/// Elementary divisor exponents from determinantal divisors of the integer lift.
pub fn snf_oracle(m: &Mat) -> Vec<u32> {
    let p = m.ring.p() as i128;
    let e = m.ring.e();
    let k = m.rows.min(m.cols);
    let mut out = Vec::new();
    let mut prev = Some(0u32);
    for s in 1..=k {
        let mut best: Option<u32> = None;
        for rs in subsets(m.rows, s) {
            for cs in subsets(m.cols, s) {
                let sub: Vec<Vec<i128>> =
                    rs.iter().map(|&i| cs.iter().map(|&j| m.get(i, j) as i128).collect()).collect();
                if let Some(v) = vp(det_i128(&sub), p) {
                    best = Some(best.map_or(v, |b: u32| b.min(v)));
                }
            }
        }
        let v = match (best, prev) {
            (Some(b), Some(a)) => (b - a).min(e),
            _ => e,
        };
        out.push(v);
        prev = best;
    }
    out
}

pub fn random_mat(rng: &mut ChaCha8Rng, r: Zpe, rows: usize, cols: usize) -> Mat {
    let mut m = Mat::zeros(r, rows, cols);
    let style = rng.gen_range(0..3);
    for i in 0..rows {
        for j in 0..cols {
            let x = match style {
                0 => rng.gen_range(0..r.q()),
                1 => r.mul(r.p_pow(rng.gen_range(0..=r.e())), rng.gen_range(0..r.q())),
                _ => {
                    if rng.gen_bool(0.5) {
                        0
                    } else {
                        r.p_pow(rng.gen_range(0..r.e()))
                    }
                }
            };
            m.set(i, j, x);
        }
    }
    m
}

pub fn is_diag(m: &Mat, vals: &[u32]) -> bool {
    let r = m.ring;
    (0..m.rows).all(|i| {
        (0..m.cols).all(|j| {
            let want = if i == j { r.p_pow(vals[i]) } else { 0 };
            m.get(i, j) == want
        })
    })
}
