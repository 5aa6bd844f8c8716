use super::zpe::Zpe;
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Sparse vector: sorted (index, nonzero value) pairs.
pub type SVec = Vec<(usize, u64)>;

pub fn svec_from_dense(v: &[u64]) -> SVec {
    v.iter().enumerate().filter(|(_, &x)| x != 0).map(|(i, &x)| (i, x)).collect()
}

pub fn svec_to_dense(v: &SVec, n: usize) -> Vec<u64> {
    let mut out = vec![0; n];
    for &(i, x) in v {
        out[i] = x;
    }
    out
}

/// a + c*b
pub fn svec_axpy(r: Zpe, a: &SVec, c: u64, b: &SVec) -> SVec {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let ka = a.get(i).map(|x| x.0).unwrap_or(usize::MAX);
        let kb = b.get(j).map(|x| x.0).unwrap_or(usize::MAX);
        if ka < kb {
            out.push(a[i]);
            i += 1;
        } else if kb < ka {
            let v = r.mul(c, b[j].1);
            if v != 0 {
                out.push((kb, v));
            }
            j += 1;
        } else {
            let v = r.add(a[i].1, r.mul(c, b[j].1));
            if v != 0 {
                out.push((ka, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

pub fn svec_scale(r: Zpe, c: u64, a: &SVec) -> SVec {
    a.iter().filter_map(|&(i, x)| {
        let v = r.mul(c, x);
        (v != 0).then_some((i, v))
    }).collect()
}

/// Dense row-major matrix over Z/p^e.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mat {
    pub ring: Zpe,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<u64>,
}

impl Mat {
    pub fn zeros(ring: Zpe, rows: usize, cols: usize) -> Mat {
        Mat { ring, rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(ring: Zpe, n: usize) -> Mat {
        let mut m = Mat::zeros(ring, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1 % ring.q();
        }
        m
    }

    pub fn from_rows(ring: Zpe, rows: &[Vec<i64>]) -> Mat {
        let r = rows.len();
        let c = rows.first().map(|x| x.len()).unwrap_or(0);
        let mut m = Mat::zeros(ring, r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c);
            for (j, &x) in row.iter().enumerate() {
                m.data[i * c + j] = ring.from_i64(x);
            }
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: u64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<u64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn mul(&self, o: &Mat) -> Mat {
        assert_eq!(self.cols, o.rows, "dimension mismatch");
        let r = self.ring;
        let mut out = Mat::zeros(r, self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                let orow = o.row(k);
                let base = i * o.cols;
                for j in 0..o.cols {
                    if orow[j] != 0 {
                        out.data[base + j] = r.add(out.data[base + j], r.mul(a, orow[j]));
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[u64]) -> Vec<u64> {
        assert_eq!(self.cols, v.len());
        let r = self.ring;
        (0..self.rows)
            .map(|i| {
                let row = self.row(i);
                let mut acc = 0;
                for j in 0..self.cols {
                    if row[j] != 0 && v[j] != 0 {
                        acc = r.add(acc, r.mul(row[j], v[j]));
                    }
                }
                acc
            })
            .collect()
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.ring, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    /// Horizontal concatenation [self | o].
    pub fn hcat(&self, o: &Mat) -> Mat {
        assert_eq!(self.rows, o.rows);
        let mut m = Mat::zeros(self.ring, self.rows, self.cols + o.cols);
        for i in 0..self.rows {
            m.data[i * m.cols..i * m.cols + self.cols].copy_from_slice(self.row(i));
            m.data[i * m.cols + self.cols..(i + 1) * m.cols].copy_from_slice(o.row(i));
        }
        m
    }

    pub fn from_cols(ring: Zpe, rows: usize, cols: &[Vec<u64>]) -> Mat {
        let mut m = Mat::zeros(ring, rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            assert_eq!(c.len(), rows);
            for i in 0..rows {
                m.set(i, j, c[i]);
            }
        }
        m
    }

    pub fn to_sparse(&self) -> SpMat {
        let mut s = SpMat::new(self.ring, self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let v = self.get(i, j);
                if v != 0 {
                    s.entries.insert((i, j), v);
                }
            }
        }
        s
    }
}

/// Sparse matrix keyed by (row, col); zero entries are never stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpMat {
    pub ring: Zpe,
    pub rows: usize,
    pub cols: usize,
    pub entries: BTreeMap<(usize, usize), u64>,
}

impl SpMat {
    pub fn new(ring: Zpe, rows: usize, cols: usize) -> SpMat {
        SpMat { ring, rows, cols, entries: BTreeMap::new() }
    }

    pub fn identity(ring: Zpe, n: usize) -> SpMat {
        let mut m = SpMat::new(ring, n, n);
        if ring.q() > 1 {
            for i in 0..n {
                m.entries.insert((i, i), 1);
            }
        }
        m
    }

    pub fn from_rows(ring: Zpe, rows: &[Vec<i64>]) -> SpMat {
        Mat::from_rows(ring, rows).to_sparse()
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        *self.entries.get(&(i, j)).unwrap_or(&0)
    }

    pub fn set(&mut self, i: usize, j: usize, v: u64) {
        assert!(i < self.rows && j < self.cols, "index out of range");
        let v = v % self.ring.q();
        if v == 0 {
            self.entries.remove(&(i, j));
        } else {
            self.entries.insert((i, j), v);
        }
    }

    pub fn add_to(&mut self, i: usize, j: usize, v: u64) {
        let cur = self.get(i, j);
        self.set(i, j, self.ring.add(cur, v % self.ring.q()));
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn to_dense(&self) -> Mat {
        let mut m = Mat::zeros(self.ring, self.rows, self.cols);
        for (&(i, j), &v) in &self.entries {
            m.set(i, j, v);
        }
        m
    }

    pub fn transpose(&self) -> SpMat {
        let mut t = SpMat::new(self.ring, self.cols, self.rows);
        for (&(i, j), &v) in &self.entries {
            t.entries.insert((j, i), v);
        }
        t
    }

    pub fn mul(&self, o: &SpMat) -> SpMat {
        assert_eq!(self.cols, o.rows, "dimension mismatch");
        let r = self.ring;
        let ocols = o.col_lists_by_row();
        let mut acc: BTreeMap<(usize, usize), u64> = BTreeMap::new();
        for (&(i, k), &a) in &self.entries {
            for &(j, b) in &ocols[k] {
                let e = acc.entry((i, j)).or_insert(0);
                *e = r.add(*e, r.mul(a, b));
            }
        }
        acc.retain(|_, v| *v != 0);
        SpMat { ring: r, rows: self.rows, cols: o.cols, entries: acc }
    }

    fn col_lists_by_row(&self) -> Vec<SVec> {
        let mut rows = vec![Vec::new(); self.rows];
        for (&(i, j), &v) in &self.entries {
            rows[i].push((j, v));
        }
        rows
    }

    /// Rows as sparse vectors.
    pub fn row_vecs(&self) -> Vec<SVec> {
        self.col_lists_by_row()
    }

    /// Columns as sparse vectors.
    pub fn col_vecs(&self) -> Vec<SVec> {
        let mut cols = vec![Vec::new(); self.cols];
        for (&(i, j), &v) in &self.entries {
            cols[j].push((i, v));
        }
        cols
    }

    pub fn mul_svec(&self, v: &SVec) -> SVec {
        let r = self.ring;
        let cols = self.col_vecs();
        let mut out = vec![0u64; self.rows];
        for &(j, x) in v {
            for &(i, a) in &cols[j] {
                out[i] = r.add(out[i], r.mul(a, x));
            }
        }
        svec_from_dense(&out)
    }

    pub fn from_cols(ring: Zpe, rows: usize, cols: &[SVec]) -> SpMat {
        let mut m = SpMat::new(ring, rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            for &(i, v) in c {
                m.set(i, j, v);
            }
        }
        m
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn scale(&self, c: u64) -> SpMat {
        let mut m = SpMat::new(self.ring, self.rows, self.cols);
        for (&k, &v) in &self.entries {
            let x = self.ring.mul(c, v);
            if x != 0 {
                m.entries.insert(k, x);
            }
        }
        m
    }

    pub fn add(&self, o: &SpMat) -> SpMat {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        let mut m = self.clone();
        for (&(i, j), &v) in &o.entries {
            m.add_to(i, j, v);
        }
        m
    }

    /// Text dump: header "rows cols p e", then "row col value" per entry.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{} {} {} {}", self.rows, self.cols, self.ring.p(), self.ring.e()).unwrap();
        for (&(i, j), &v) in &self.entries {
            writeln!(s, "{i} {j} {v}").unwrap();
        }
        s
    }

    pub fn parse_dump(text: &str) -> Result<SpMat, String> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let head: Vec<u64> = lines
            .next()
            .ok_or("empty dump")?
            .split_whitespace()
            .map(|t| t.parse::<u64>().map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?;
        if head.len() != 4 {
            return Err("header must be 'rows cols p e'".into());
        }
        let ring = Zpe::try_new(head[2], head[3] as u32).ok_or("bad p or e")?;
        let mut m = SpMat::new(ring, head[0] as usize, head[1] as usize);
        for (n, l) in lines.enumerate() {
            let f: Vec<u64> = l
                .split_whitespace()
                .map(|t| t.parse::<u64>().map_err(|e| format!("line {}: {e}", n + 2)))
                .collect::<Result<_, _>>()?;
            if f.len() != 3 || f[0] >= head[0] || f[1] >= head[1] {
                return Err(format!("line {}: bad entry", n + 2));
            }
            m.set(f[0] as usize, f[1] as usize, f[2]);
        }
        Ok(m)
    }
}
