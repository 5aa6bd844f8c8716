use super::mat::{svec_axpy, svec_scale, SVec};
use super::zpe::Zpe;

/// Howell form of a submodule of (Z/p^e)^n: echelon rows with pivots p^v, entries
/// above pivots reduced, and p^(e-v) * row lying in the span of later rows.
/// Reduction against it yields canonical coset representatives.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Howell {
    pub ring: Zpe,
    pub ncols: usize,
    /// Rows sorted by pivot column.
    pub rows: Vec<SVec>,
    /// (pivot column, pivot valuation) per row.
    pub pivots: Vec<(usize, u32)>,
    pivot_row: Vec<Option<usize>>,
}

impl Howell {
    pub fn new(ring: Zpe, ncols: usize, gens: Vec<SVec>) -> Howell {
        let e = ring.e();
        let mut buckets: Vec<Vec<SVec>> = vec![Vec::new(); ncols];
        for g in gens {
            let g: SVec = g.into_iter().map(|(i, x)| (i, x % ring.q())).filter(|x| x.1 != 0).collect();
            if let Some(&(c, _)) = g.first() {
                buckets[c].push(g);
            }
        }
        let mut rows = Vec::new();
        let mut pivots = Vec::new();
        for col in 0..ncols {
            let mut cand = std::mem::take(&mut buckets[col]);
            if cand.is_empty() {
                continue;
            }
            let mut bi = 0;
            let mut bv = e;
            for (i, r) in cand.iter().enumerate() {
                let v = ring.val(r[0].1);
                if v < bv {
                    bv = v;
                    bi = i;
                    if v == 0 {
                        break;
                    }
                }
            }
            let mut piv = cand.swap_remove(bi);
            let u = ring.unit_part(piv[0].1);
            if u != 1 {
                piv = svec_scale(ring, ring.inv_unit(u), &piv);
            }
            for r in cand {
                let c = ring.div_p_pow(r[0].1, bv);
                let nr = svec_axpy(ring, &r, ring.neg(c % ring.q()), &piv);
                debug_assert!(nr.first().is_none_or(|x| x.0 > col));
                if let Some(&(c2, _)) = nr.first() {
                    buckets[c2].push(nr);
                }
            }
            if bv > 0 {
                let sat = svec_scale(ring, ring.p_pow(e - bv), &piv);
                if let Some(&(c2, _)) = sat.first() {
                    buckets[c2].push(sat);
                }
            }
            rows.push(piv);
            pivots.push((col, bv));
        }
        let mut pivot_row = vec![None; ncols];
        for (k, &(c, _)) in pivots.iter().enumerate() {
            pivot_row[c] = Some(k);
        }
        let mut h = Howell { ring, ncols, rows, pivots, pivot_row };
        // reduce entries above pivots, bottom-up
        for k in (0..h.rows.len()).rev() {
            let r = std::mem::take(&mut h.rows[k]);
            let head = r[0];
            let tail: SVec = r[1..].to_vec();
            let tail = h.reduce_from(tail, k + 1);
            let mut full = vec![head];
            full.extend(tail);
            h.rows[k] = full;
        }
        h
    }

    pub fn empty(ring: Zpe, ncols: usize) -> Howell {
        Howell { ring, ncols, rows: Vec::new(), pivots: Vec::new(), pivot_row: vec![None; ncols] }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn pivot_of(&self, col: usize) -> Option<(usize, u32)> {
        self.pivot_row[col].map(|k| (k, self.pivots[k].1))
    }

    fn reduce_from(&self, v: SVec, start: usize) -> SVec {
        let ring = self.ring;
        let mut v = v;
        let mut pos = 0;
        loop {
            // first entry of v at index >= pos whose column is a pivot column of a row >= start
            let mut hit = None;
            for (idx, &(c, x)) in v.iter().enumerate().skip(pos) {
                if let Some(k) = self.pivot_row[c] {
                    if k >= start {
                        hit = Some((idx, c, x, k));
                        break;
                    }
                }
            }
            let Some((idx, c, x, k)) = hit else { return v };
            let pv = self.pivots[k].1;
            let d = ring.p().pow(pv);
            let qt = x / d;
            if qt != 0 {
                v = svec_axpy(ring, &v, ring.neg(qt % ring.q()), &self.rows[k]);
            }
            pos = match v.binary_search_by_key(&c, |t| t.0) {
                Ok(i) => i + 1,
                Err(i) => i,
            };
            let _ = idx;
        }
    }

    /// Canonical representative of v modulo the row span.
    pub fn reduce(&self, v: SVec) -> SVec {
        self.reduce_from(v, 0)
    }

    pub fn contains(&self, v: SVec) -> bool {
        self.reduce(v).is_empty()
    }

    /// Columns without a unit pivot, with the order of their coordinate (e if free).
    pub fn free_coords(&self) -> Vec<(usize, u32)> {
        (0..self.ncols)
            .filter_map(|c| match self.pivot_row[c] {
                None => Some((c, self.ring.e())),
                Some(k) if self.pivots[k].1 > 0 => Some((c, self.pivots[k].1)),
                _ => None,
            })
            .collect()
    }

    /// Rows whose pivot is not a unit; these are supported on the non-eliminated columns.
    pub fn torsion_rows(&self) -> Vec<SVec> {
        self.rows
            .iter()
            .zip(&self.pivots)
            .filter(|(_, &(_, v))| v > 0)
            .map(|(r, _)| r.clone())
            .collect()
    }
}

/// Canonical reduction modulo a submodule that first eliminates every coordinate solvable
/// with a unit coefficient (leftmost column first), then keeps the remaining relations,
/// which lie in p * R^n, in Howell form. The surviving coordinates form a minimal
/// generating set of the quotient.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reducer {
    pub ring: Zpe,
    pub ncols: usize,
    /// Rows with pivot entry 1, in increasing pivot column; zero on earlier pivot columns.
    pub unit_rows: Vec<(usize, SVec)>,
    unit_pivot: Vec<Option<usize>>,
    pub howell: Howell,
}

fn svec_get(v: &SVec, c: usize) -> u64 {
    match v.binary_search_by_key(&c, |t| t.0) {
        Ok(i) => v[i].1,
        Err(_) => 0,
    }
}

impl Reducer {
    pub fn new(ring: Zpe, ncols: usize, gens: Vec<SVec>) -> Reducer {
        let mut rows: Vec<SVec> = gens
            .into_iter()
            .map(|g| g.into_iter().map(|(i, x)| (i, x % ring.q())).filter(|x| x.1 != 0).collect())
            .filter(|g: &SVec| !g.is_empty())
            .collect();
        let mut col_rows: Vec<std::collections::BTreeSet<usize>> = vec![Default::default(); ncols];
        for (k, r) in rows.iter().enumerate() {
            for &(c, _) in r {
                col_rows[c].insert(k);
            }
        }
        let mut active = vec![true; rows.len()];
        let mut unit_rows = Vec::new();
        let mut unit_pivot = vec![None; ncols];
        for c in 0..ncols {
            let Some(&k) = col_rows[c].iter().find(|&&k| active[k] && ring.is_unit(svec_get(&rows[k], c))) else {
                continue;
            };
            active[k] = false;
            let inv = ring.inv_unit(svec_get(&rows[k], c));
            let piv = svec_scale(ring, inv, &rows[k]);
            for &(cc, _) in &rows[k] {
                col_rows[cc].remove(&k);
            }
            let others: Vec<usize> = col_rows[c].iter().copied().collect();
            for o in others {
                let x = svec_get(&rows[o], c);
                let old = std::mem::take(&mut rows[o]);
                for &(cc, _) in &old {
                    col_rows[cc].remove(&o);
                }
                let new = svec_axpy(ring, &old, ring.neg(x), &piv);
                for &(cc, _) in &new {
                    col_rows[cc].insert(o);
                }
                rows[o] = new;
            }
            unit_pivot[c] = Some(unit_rows.len());
            unit_rows.push((c, piv));
        }
        let rest: Vec<SVec> = rows.into_iter().zip(&active).filter(|(r, &a)| a && !r.is_empty()).map(|(r, _)| r).collect();
        let howell = Howell::new(ring, ncols, rest);
        Reducer { ring, ncols, unit_rows, unit_pivot, howell }
    }

    pub fn reduce(&self, v: SVec) -> SVec {
        let ring = self.ring;
        let mut acc: std::collections::BTreeMap<usize, u64> = v.into_iter().filter(|x| x.1 % ring.q() != 0).collect();
        let mut cursor = 0;
        loop {
            let next = acc.range(cursor..).find(|(c, _)| self.unit_pivot[**c].is_some()).map(|(&c, &x)| (c, x));
            let Some((c, x)) = next else { break };
            let row = &self.unit_rows[self.unit_pivot[c].unwrap()].1;
            for &(cc, y) in row {
                let e = acc.entry(cc).or_insert(0);
                *e = ring.sub(*e, ring.mul(x, y));
                if *e == 0 {
                    acc.remove(&cc);
                }
            }
            cursor = c + 1;
        }
        self.howell.reduce(acc.into_iter().collect())
    }

    pub fn contains(&self, v: SVec) -> bool {
        self.reduce(v).is_empty()
    }

    /// Surviving coordinates with the order of their Howell pivot (e if none).
    pub fn free_coords(&self) -> Vec<(usize, u32)> {
        (0..self.ncols)
            .filter(|&c| self.unit_pivot[c].is_none())
            .map(|c| (c, self.howell.pivot_of(c).map_or(self.ring.e(), |(_, v)| v)))
            .collect()
    }

    /// Relations among the surviving coordinates.
    pub fn torsion_rows(&self) -> Vec<SVec> {
        self.howell.rows.clone()
    }
}
