//! Crystals as free modules with integrable connection over an envelope: integrability and
//! quasi-nilpotence checks, Taylor transport between liftings, horizontal sections and
//! torsion search.

pub mod derham;

pub use derham::{Connection, FormSpace, Frame, Matrix};

use crate::envelope::EnvelopePresentation;
use crate::pdpoly::{Elem, Mono, PdError, PdMap};
use crate::ring::complex::subquotient;
use crate::ring::{CochainComplex, CohomologyTable, SVec, SpMat, Summand, Term};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CrystalError {
    #[error("bad crystal shape: {0}")]
    Shape(String),
    #[error(transparent)]
    Pd(#[from] PdError),
    #[error("h_{0} = {1} is not in the PD ideal of the target")]
    NotPd(usize, String),
    #[error("image of {0} has a weight-0 term; liftings must not lower weights")]
    Weight(String),
    #[error("target algebra does not extend the source")]
    Target,
    #[error("torsion search needs e >= 2")]
    Precision,
}

#[derive(Clone, Debug)]
pub struct CrystalData {
    pub env: Arc<EnvelopePresentation>,
    pub rank: usize,
    /// One matrix per base variable: nabla(m_j) = sum_i sum_k gamma[i][k][j] m_k dx_i.
    pub gamma: Vec<Matrix>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckReport {
    pub pass: bool,
    pub witness: Option<String>,
}

impl CrystalData {
    pub fn new(env: Arc<EnvelopePresentation>, rank: usize, gamma: Vec<Matrix>) -> Result<Self, CrystalError> {
        let nb = env.nbase();
        if gamma.len() != nb {
            return Err(CrystalError::Shape(format!("{} connection matrices, expected {nb}", gamma.len())));
        }
        for g in &gamma {
            if g.len() != rank || g.iter().any(|row| row.len() != rank) {
                return Err(CrystalError::Shape(format!("connection matrices must be {rank}x{rank}")));
            }
            if g.iter().flatten().any(|x| x.algebra() != &env.ambient) {
                return Err(CrystalError::Pd(PdError::MixedAlgebra));
            }
        }
        let gamma = gamma.iter().map(|g| g.iter().map(|row| row.iter().map(|x| env.normal_form(x)).collect()).collect()).collect();
        Ok(CrystalData { env, rank, gamma })
    }

    /// The structure sheaf: M = D, nabla = d.
    pub fn constant(env: Arc<EnvelopePresentation>) -> Self {
        let z = Elem::zero(&env.ambient);
        let gamma = vec![vec![vec![z]]; env.nbase()];
        CrystalData { env, rank: 1, gamma }
    }

    /// Connection matrices given as strings, `mats[i][k][j]`.
    pub fn parse(env: Arc<EnvelopePresentation>, rank: usize, mats: &[Vec<Vec<String>>]) -> Result<Self, CrystalError> {
        let gamma = mats
            .iter()
            .map(|g| g.iter().map(|row| row.iter().map(|s| env.parse(s)).collect::<Result<Vec<_>, _>>()).collect())
            .collect::<Result<Vec<Matrix>, _>>()?;
        Self::new(env, rank, gamma)
    }

    pub fn connection(&self) -> Connection {
        let mut gamma = self.gamma.clone();
        gamma.resize(self.env.ndiff(), Vec::new());
        Connection { env: self.env.clone(), rank: self.rank, frame: Frame::Native, gamma }
    }

    pub fn basis_vector(&self, j: usize) -> Vec<Elem> {
        let z = Elem::zero(&self.env.ambient);
        (0..self.rank).map(|k| if k == j { Elem::one(&self.env.ambient) } else { z.clone() }).collect()
    }

    /// Curvature d_i(G_j) - d_j(G_i) + G_i G_j - G_j G_i must vanish for all i < j.
    pub fn check_integrability(&self) -> CheckReport {
        let env = &self.env;
        let r = self.rank;
        let nb = env.nbase();
        let dg: Vec<Vec<Vec<Vec<Elem>>>> =
            self.gamma.iter().map(|g| g.iter().map(|row| row.iter().map(|x| env.d(x)).collect()).collect()).collect();
        for i in 0..nb {
            for j in i + 1..nb {
                for k in 0..r {
                    for l in 0..r {
                        let mut c = &dg[j][k][l][i] - &dg[i][k][l][j];
                        for m in 0..r {
                            c = &c + &(&self.gamma[i][k][m] * &self.gamma[j][m][l]);
                            c = &c - &(&self.gamma[j][k][m] * &self.gamma[i][m][l]);
                        }
                        let c = env.normal_form(&c);
                        if !c.is_zero() {
                            return CheckReport {
                                pass: false,
                                witness: Some(format!("curvature ({i},{j}) entry ({k},{l}) = {c}")),
                            };
                        }
                    }
                }
            }
        }
        CheckReport { pass: true, witness: None }
    }

    /// Every iterate nabla_i^k (a m_j), a a basis element of D, vanishes in the truncated
    /// slice for some k <= (d + 1) e.
    pub fn check_quasi_nilpotent(&self) -> CheckReport {
        let env = &self.env;
        let conn = self.connection();
        let bound = (env.degree as usize + 1) * env.ring.e() as usize;
        let items: Vec<(usize, usize, usize)> = (0..env.nbase())
            .flat_map(|i| (0..self.rank).flat_map(move |j| (0..env.basis.len()).map(move |b| (i, j, b))))
            .collect();
        let bad = items.par_iter().find_first(|&&(i, j, b)| {
            let mut v: Vec<Elem> = self.basis_vector(j).iter().map(|x| env.mul(x, &env.basis_elem(b))).collect();
            for _ in 0..bound {
                if v.iter().all(|x| x.is_zero()) {
                    return false;
                }
                v = conn.nabla_dir(i, &v);
            }
            !v.iter().all(|x| x.is_zero())
        });
        match bad {
            None => CheckReport { pass: true, witness: None },
            Some(&(i, j, b)) => CheckReport {
                pass: false,
                witness: Some(format!(
                    "nabla_{} does not kill {}*m{} within {bound} steps",
                    env.ambient.base[i].name,
                    env.basis[b].name,
                    j + 1
                )),
            },
        }
    }

    /// The de Rham complex M -> M (x) Omega^1 -> ..., truncated at the envelope degree.
    pub fn de_rham(&self) -> (CochainComplex, Vec<FormSpace>) {
        let conn = self.connection();
        conn.de_rham(conn.ndiff())
    }

    /// ker nabla as H^0 of M -> M (x) Omega^1.
    pub fn horizontal_sections(&self) -> CohomologyTable {
        let (c, _) = self.connection().de_rham(1);
        let mut t = c.cohomology();
        t.degrees.retain(|&k, _| k == 0);
        t
    }

    /// Horizontal p-torsion not explained by p^{e-1} D: representatives of
    /// (ker nabla cap ker p) / (ker nabla cap p^{e-1} M).
    pub fn torsion_horizontal(&self) -> Result<Vec<Torsion>, CrystalError> {
        self.torsion_search(false)
    }

    /// Horizontal p-torsion modulo p^{e-1} times horizontal sections:
    /// (ker nabla cap ker p) / p^{e-1} ker nabla.
    pub fn p_torsion_horizontal(&self) -> Result<Vec<Torsion>, CrystalError> {
        self.torsion_search(true)
    }

    fn torsion_search(&self, modulo_horizontal: bool) -> Result<Vec<Torsion>, CrystalError> {
        let env = &self.env;
        let r = env.ring;
        if r.e() < 2 {
            return Err(CrystalError::Precision);
        }
        let conn = self.connection();
        let spaces = conn.spaces(1);
        let m_term = spaces[0].term(env);
        let n1 = spaces.get(1).map(|s| s.term(env)).unwrap_or(Term::weighted(vec![], vec![]));
        let d0 = if spaces.len() > 1 { conn.differential(&spaces[0], &spaces[1]) } else { SpMat::new(r, 0, spaces[0].len()) };
        let n = m_term.rank;
        // [nabla; p] : M -> M (x) Omega^1 (+) M
        let mut stacked = SpMat::new(r, n1.rank + n, n);
        for (&(i, j), &x) in &d0.entries {
            stacked.set(i, j, x);
        }
        for i in 0..n {
            stacked.set(n1.rank + i, i, r.p_pow(1));
        }
        let mut w = n1.weights.clone().unwrap();
        w.extend(m_term.weights.clone().unwrap());
        let mut rels = n1.rels.clone();
        rels.extend(m_term.rels.iter().map(|v| v.iter().map(|&(i, x)| (i + n1.rank, x)).collect()));
        let kc = CochainComplex::new_unchecked(r, 0, vec![m_term.clone(), Term::weighted(w, rels)], vec![stacked]);
        let k_gens: Vec<Summand> = kc.cohomology().summands(0).to_vec();
        let pe1 = r.p_pow(r.e() - 1);
        let scaled = |v: &SVec| -> SVec { v.iter().map(|&(i, x)| (i, r.mul(x, pe1))).filter(|x| x.1 != 0).collect() };
        let l_src = if modulo_horizontal { d0.clone() } else { d0.scale(pe1) };
        let lc = CochainComplex::new_unchecked(r, 0, vec![m_term.clone(), n1], vec![l_src]);
        let l_gens: Vec<Summand> = lc.cohomology().summands(0).to_vec();
        let split = k_gens.iter().chain(&l_gens).all(|s| s.weight.is_some());
        let weights = m_term.weights.clone().unwrap();
        let key = |v: &SVec| if split { Some(weights[v[0].0]) } else { None };
        let mut by_w: BTreeMap<Option<u32>, (Vec<SVec>, Vec<SVec>)> = BTreeMap::new();
        for s in &k_gens {
            by_w.entry(key(&s.rep)).or_default().0.push(s.rep.clone());
        }
        for s in &l_gens {
            let v = scaled(&s.rep);
            if !v.is_empty() {
                by_w.entry(key(&v)).or_default().1.push(v);
            }
        }
        for rel in &m_term.rels {
            if let Some(e) = by_w.get_mut(&key(rel)) {
                e.0.push(rel.clone());
                e.1.push(rel.clone());
            }
        }
        let parts: Vec<(Option<u32>, Vec<Summand>)> = by_w
            .into_par_iter()
            .map(|(w, (a, b))| (w, subquotient(r, n, &a, &b)))
            .collect();
        let space = &spaces[0];
        let mut out = Vec::new();
        for (w, sums) in parts {
            for s in sums {
                let mut comps = vec![Elem::zero(&env.ambient); self.rank];
                for (_, j, e) in space.unpack(env, &s.rep) {
                    comps[j] = e;
                }
                out.push(Torsion {
                    weight: w,
                    exponent: s.exponent,
                    display: comps.iter().map(|c| c.to_string()).collect(),
                    rep: s.rep,
                });
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Torsion {
    pub weight: Option<u32>,
    /// Order p^exponent of the class in the subquotient.
    pub exponent: u32,
    /// Coordinates in the basis of M = D^r (basis of D in envelope order, per component).
    pub rep: SVec,
    /// Components as elements.
    pub display: Vec<String>,
}

/// A PD ring map D -> B lifting the identity, given by the images of the base variables.
#[derive(Clone, Debug)]
pub struct Lifting {
    pub source: Arc<EnvelopePresentation>,
    pub target: Arc<EnvelopePresentation>,
    pub images: Vec<Elem>,
    map: PdMap,
}

fn extends(source: &EnvelopePresentation, target: &EnvelopePresentation) -> bool {
    let (s, t) = (&source.ambient, &target.ambient);
    s.ring == t.ring
        && s.base == t.base
        && t.pd.len() >= s.pd.len()
        && s.pd == t.pd[..s.pd.len()]
        && source.ncore == target.ncore
        && source.degree == target.degree
}

impl Lifting {
    /// B must be the source with extra PD variables; extension variables of the source map
    /// to themselves.
    pub fn new(
        source: Arc<EnvelopePresentation>,
        target: Arc<EnvelopePresentation>,
        images: Vec<Elem>,
    ) -> Result<Lifting, CrystalError> {
        if !extends(&source, &target) || images.len() != source.nbase() {
            return Err(CrystalError::Target);
        }
        let tb = &target.ambient;
        let nb = source.nbase();
        let images: Vec<Elem> = images.iter().map(|x| target.normal_form(x)).collect();
        for (i, img) in images.iter().enumerate() {
            let h = target.normal_form(&(img - &Elem::var(tb, i)));
            if !h.in_pd_ideal() {
                return Err(CrystalError::NotPd(i + 1, h.to_string()));
            }
            if h.terms().keys().any(|m| tb.weight(m) == 0) {
                return Err(CrystalError::Weight(source.ambient.base[i].name.clone()));
            }
        }
        let mut all = images.clone();
        for t in 0..source.ncore {
            let f = &source.gens[t];
            let mut shifted = Elem::one(tb);
            let mut plain: Mono = tb.unit_mono();
            for (i, &a) in f.iter().enumerate() {
                shifted = &shifted * &images[i].pow(a);
                plain[i] = a;
            }
            let y = Elem::var(tb, nb + t);
            all.push(target.normal_form(&(&(&y + &shifted) - &Elem::term(tb, plain, 1))));
        }
        for k in 0..source.next {
            all.push(Elem::var(tb, nb + source.ncore + k));
        }
        let map = PdMap::new(&source.ambient, tb, all)?;
        Ok(Lifting { source, target, images, map })
    }

    /// The canonical inclusion x_i -> x_i.
    pub fn canonical(source: Arc<EnvelopePresentation>, target: Arc<EnvelopePresentation>) -> Result<Lifting, CrystalError> {
        let imgs = (0..source.nbase()).map(|i| Elem::var(&target.ambient, i)).collect();
        Lifting::new(source, target, imgs)
    }

    pub fn apply(&self, a: &Elem) -> Elem {
        self.target.normal_form(&self.map.apply(a))
    }
}

fn multi_indices(n: usize, max: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![0; n]];
    for i in 0..n {
        let prev = std::mem::take(&mut out);
        for e in prev {
            let used: u32 = e.iter().sum();
            for k in 0..=max - used {
                let mut f = e.clone();
                f[i] = k;
                out.push(f);
            }
        }
    }
    out.sort_by_key(|e| (e.iter().sum::<u32>(), std::cmp::Reverse(e.clone())));
    out
}

/// Taylor transport of v: sum_E phi2(nabla^E v) * prod_i gamma_{e_i}(h_i), with
/// h_i = phi1(x_i) - phi2(x_i). This is the B-linear map M (x)_{phi1} B -> M (x)_{phi2} B
/// extending m (x) 1 -> m (x) 1 on M = D with nabla = d.
pub fn transport_apply(c: &CrystalData, f1: &Lifting, f2: &Lifting, v: &[Elem]) -> Result<Vec<Elem>, CrystalError> {
    let b = &f1.target;
    if !Arc::ptr_eq(b, &f2.target) && **b != *f2.target {
        return Err(CrystalError::Target);
    }
    let nb = c.env.nbase();
    let deg = b.degree;
    let h: Vec<Elem> = (0..nb).map(|i| b.normal_form(&(&f1.images[i] - &f2.images[i]))).collect();
    let mut gam: Vec<Vec<Elem>> = Vec::new();
    for (i, hi) in h.iter().enumerate() {
        if !hi.in_pd_ideal() {
            return Err(CrystalError::NotPd(i + 1, hi.to_string()));
        }
        gam.push((0..=deg).map(|n| b.gamma(hi, n)).collect::<Result<Vec<_>, _>>()?);
    }
    let conn = c.connection();
    let mut memo: BTreeMap<Vec<u32>, Vec<Elem>> = BTreeMap::new();
    let mut acc: Vec<Elem> = vec![Elem::zero(&b.ambient); c.rank];
    for e in multi_indices(nb, deg) {
        let vec = match e.iter().position(|&k| k > 0) {
            None => v.iter().map(|x| c.env.normal_form(x)).collect(),
            Some(i) => {
                let mut prev = e.clone();
                prev[i] -= 1;
                conn.nabla_dir(i, &memo[&prev])
            }
        };
        let mut g = Elem::one(&b.ambient);
        for (i, &k) in e.iter().enumerate() {
            if k > 0 {
                g = b.mul(&g, &gam[i][k as usize]);
            }
        }
        if !g.is_zero() {
            for (k, x) in vec.iter().enumerate() {
                if !x.is_zero() {
                    acc[k] = &acc[k] + &b.mul(&f2.apply(x), &g);
                }
            }
        }
        memo.insert(e, vec);
    }
    Ok(acc.iter().map(|x| b.normal_form(x)).collect())
}

/// Matrix of the transport M (x)_{phi1} B -> M (x)_{phi2} B on the basis m_j (x) 1.
pub fn taylor_transport(c: &CrystalData, f1: &Lifting, f2: &Lifting) -> Result<Matrix, CrystalError> {
    let cols: Vec<Vec<Elem>> =
        (0..c.rank).map(|j| transport_apply(c, f1, f2, &c.basis_vector(j))).collect::<Result<_, _>>()?;
    Ok((0..c.rank).map(|k| (0..c.rank).map(|j| cols[j][k].clone()).collect()).collect())
}

/// Product of matrices over an envelope.
pub fn mat_mul(env: &EnvelopePresentation, a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    let m = b.first().map_or(0, |r| r.len());
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| {
                    let mut s = Elem::zero(&env.ambient);
                    for (k, bk) in b.iter().enumerate() {
                        s = &s + &(&a[i][k] * &bk[j]);
                    }
                    env.normal_form(&s)
                })
                .collect()
        })
        .collect()
}
