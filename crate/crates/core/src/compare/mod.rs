//! Experiments: de Rham against Cech-Alexander, derived base change, and the torsion
//! example on F_p[x,y]/(x^2, xy, y^2). Every run is repeated at a higher truncation and
//! only weights inside the stable range are compared.

use crate::cechalex::{induced_maps, Cech, CechError};
use crate::crystal::derham::FormSpace;
use crate::crystal::{CrystalData, CrystalError, Torsion};
use crate::envelope::{EnvelopeError, EnvelopePresentation, SchemePresentation};
use crate::ring::{CohomologyTable, ComplexError, SVec};
use serde::Serialize;
use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CompareError {
    #[error(transparent)]
    Envelope(#[from] EnvelopeError),
    #[error(transparent)]
    Crystal(#[from] CrystalError),
    #[error(transparent)]
    Cech(#[from] CechError),
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error("invalid experiment: {0}")]
    Spec(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeChoice {
    Flat,
    Monomial,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CrystalSpec {
    pub rank: usize,
    /// `matrices[i][k][j]`, one matrix per base variable.
    pub matrices: Vec<Vec<Vec<String>>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExperimentSpec {
    pub presentation: SchemePresentation,
    pub envelope: EnvelopeChoice,
    pub e: u32,
    pub degree: u32,
    pub levels: usize,
    pub margin: u32,
    pub crystal: Option<CrystalSpec>,
}

impl ExperimentSpec {
    pub fn new(presentation: SchemePresentation, envelope: EnvelopeChoice, e: u32, degree: u32) -> Self {
        ExperimentSpec { presentation, envelope, e, degree, levels: 2, margin: 2, crystal: None }
    }

    pub fn flat(p: u64, e: u32, vars: &[&str], degree: u32) -> Self {
        Self::new(SchemePresentation::new(p, 1, vars, &[]), EnvelopeChoice::Flat, e, degree)
    }

    /// F_p[x,y]/(x^2, xy, y^2) through the monomial envelope.
    pub fn bo(p: u64, e: u32, degree: u32) -> Self {
        Self::new(SchemePresentation::new(p, 1, &["x", "y"], &["x^2", "x*y", "y^2"]), EnvelopeChoice::Monomial, e, degree)
    }

    pub fn envelope_at(&self, e: u32, degree: u32) -> Result<Arc<EnvelopePresentation>, CompareError> {
        Ok(Arc::new(match self.envelope {
            EnvelopeChoice::Flat => EnvelopePresentation::flat(&self.presentation, e, degree)?,
            EnvelopeChoice::Monomial => EnvelopePresentation::monomial(&self.presentation, e, degree)?,
        }))
    }

    pub fn crystal_on(&self, env: Arc<EnvelopePresentation>) -> Result<CrystalData, CompareError> {
        Ok(match &self.crystal {
            None => CrystalData::constant(env),
            Some(c) => CrystalData::parse(env, c.rank, &c.matrices)?,
        })
    }

    /// e >= N and d >= 2 w_max.
    pub fn validate(&self) -> Result<(), CompareError> {
        if self.e < self.presentation.nilpotency {
            return Err(CompareError::Spec(format!("precision {} below nilpotency {}", self.e, self.presentation.nilpotency)));
        }
        let env = self.envelope_at(self.e, self.degree.min(2))?;
        let w = env.max_weight();
        if self.degree < 2 * w {
            return Err(CompareError::Spec(format!("truncation {} below twice the generator weight {w}", self.degree)));
        }
        Ok(())
    }

    fn degrees(&self) -> [u32; 2] {
        [self.degree, self.degree + self.margin]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

/// Weight of a cohomology class; classes of a complex that is not weight-homogeneous
/// (any nonzero connection matrix) are ungraded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Weight(pub Option<u32>);

impl Serialize for Weight {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            Some(w) => s.serialize_str(&w.to_string()),
            None => s.serialize_str("ungraded"),
        }
    }
}

/// Cohomological degree -> weight -> sorted exponents.
pub type Table = BTreeMap<i32, BTreeMap<Weight, Vec<u32>>>;

/// Graded classes of weight <= wmax, plus every ungraded class.
pub fn table_of(t: &CohomologyTable, degrees: impl IntoIterator<Item = i32>, wmax: u32) -> Table {
    degrees
        .into_iter()
        .map(|k| {
            let mut m: BTreeMap<Weight, Vec<u32>> = BTreeMap::new();
            for s in t.summands(k).iter().filter(|s| s.weight.is_none_or(|w| w <= wmax)) {
                m.entry(Weight(s.weight)).or_default().push(s.exponent);
            }
            m.values_mut().for_each(|v| v.sort_unstable());
            (k, m)
        })
        .collect()
}

fn restrict(t: &Table, wmax: u32) -> Table {
    t.iter().map(|(&k, m)| (k, m.iter().filter(|(w, _)| w.0.is_none_or(|x| x <= wmax)).map(|(&w, v)| (w, v.clone())).collect())).collect()
}

fn restrict_degrees(t: &Table, kmax: i32) -> Table {
    t.range(..=kmax).map(|(&k, m)| (k, m.clone())).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TorsionClass {
    pub weight: Option<u32>,
    pub exponent: u32,
    pub element: Vec<String>,
}

impl From<&Torsion> for TorsionClass {
    fn from(t: &Torsion) -> Self {
        TorsionClass { weight: t.weight, exponent: t.exponent, element: t.display.clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Run {
    pub degree: u32,
    pub stable_weight: u32,
    pub tables: BTreeMap<String, Table>,
    pub checks: BTreeMap<String, bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub torsion: Option<Vec<TorsionClass>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classes: Option<Vec<Class>>,
}

impl Run {
    /// The graded part of H^k in table `name`, by weight.
    pub fn graded(&self, name: &str, k: i32) -> BTreeMap<u32, Vec<u32>> {
        self.tables.get(name).and_then(|t| t.get(&k)).map_or_else(BTreeMap::new, |m| m.iter().filter_map(|(w, v)| Some((w.0?, v.clone()))).collect())
    }
}

/// A cyclic summand Z/p^exponent of H^degree with a representative cocycle.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Class {
    pub degree: i32,
    pub weight: Option<u32>,
    pub exponent: u32,
    pub representative: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ComparisonReport {
    pub experiment: String,
    pub p: u64,
    pub e: u32,
    pub status: Status,
    pub runs: Vec<Run>,
    pub notes: Vec<String>,
}

impl ComparisonReport {
    /// Fail if any check fails; inconclusive if the runs disagree inside the common stable range.
    fn finish(experiment: &str, p: u64, e: u32, runs: Vec<Run>, mut notes: Vec<String>) -> Self {
        let failed: Vec<String> =
            runs.iter().flat_map(|r| r.checks.iter().filter(|(_, &ok)| !ok).map(move |(k, _)| format!("{k} fails at d={}", r.degree))).collect();
        let w = runs.iter().map(|r| r.stable_weight).min().unwrap_or(0);
        let mut stable = true;
        for name in runs[0].tables.keys() {
            let tabs: Vec<Table> = runs.iter().filter_map(|r| r.tables.get(name)).map(|t| restrict(t, w)).collect();
            if tabs.windows(2).any(|p| p[0] != p[1]) {
                stable = false;
                notes.push(format!("{name} differs between truncations in weights <= {w}"));
            }
        }
        let tors: Vec<Vec<TorsionClass>> = runs
            .iter()
            .filter_map(|r| r.torsion.as_ref())
            .map(|t| t.iter().filter(|c| c.weight.is_none_or(|x| x <= w)).cloned().collect())
            .collect();
        if tors.windows(2).any(|p| p[0] != p[1]) {
            stable = false;
            notes.push(format!("torsion classes differ between truncations in weights <= {w}"));
        }
        let status = if !failed.is_empty() {
            Status::Fail
        } else if !stable {
            Status::Inconclusive
        } else {
            Status::Pass
        };
        notes.extend(failed);
        ComparisonReport { experiment: experiment.to_string(), p, e, status, runs, notes }
    }
}

/// "(a)*e1*dx^dy + ..." for a coordinate vector of forms in the base differentials.
pub fn form_string(env: &EnvelopePresentation, fs: &FormSpace, v: &SVec) -> String {
    let parts: Vec<String> = fs
        .unpack(env, v)
        .into_iter()
        .filter(|(_, _, a)| !a.is_zero())
        .map(|(s, j, a)| {
            let mut t = format!("({a})");
            if fs.rank > 1 {
                t.push_str(&format!("*e{}", j + 1));
            }
            let dx: Vec<String> = fs.subsets[s].iter().map(|&i| format!("d{}", env.ambient.base[i].name)).collect();
            if !dx.is_empty() {
                t.push('*');
                t.push_str(&dx.join("^"));
            }
            t
        })
        .collect();
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join(" + ")
    }
}

/// Cohomology of the de Rham complex of the crystal, with representatives.
pub fn de_rham_experiment(spec: &ExperimentSpec) -> Result<ComparisonReport, CompareError> {
    spec.validate()?;
    let mut runs = Vec::new();
    for d in spec.degrees() {
        let env = spec.envelope_at(spec.e, d)?;
        let stable = d - env.max_weight();
        let (cx, spaces) = spec.crystal_on(env.clone())?.de_rham();
        let t = cx.cohomology_in(cx.lo..=cx.hi(), Some(stable));
        let mut classes = Vec::new();
        for k in cx.lo..=cx.hi() {
            for sm in t.summands(k) {
                let representative = form_string(&env, &spaces[(k - cx.lo) as usize], &sm.rep);
                classes.push(Class { degree: k, weight: sm.weight, exponent: sm.exponent, representative });
            }
        }
        let mut tables = BTreeMap::new();
        tables.insert("de_rham".to_string(), table_of(&t, cx.lo..=cx.hi(), stable));
        runs.push(Run { degree: d, stable_weight: stable, tables, checks: BTreeMap::new(), torsion: None, classes: Some(classes) });
    }
    Ok(ComparisonReport::finish("de_rham", spec.presentation.p, spec.e, runs, Vec::new()))
}

/// Cohomology of the Cech-Alexander row M(0) -> M(1) -> ... -> M(L) in degrees < L, where
/// the truncation at level L determines it.
pub fn cech_alexander_experiment(spec: &ExperimentSpec) -> Result<ComparisonReport, CompareError> {
    spec.validate()?;
    if spec.levels == 0 {
        return Err(CompareError::Spec("the Cech-Alexander row needs at least one level".into()));
    }
    let mut runs = Vec::new();
    for d in spec.degrees() {
        let env = spec.envelope_at(spec.e, d)?;
        let stable = d - env.max_weight();
        let c = spec.crystal_on(env)?;
        let l = spec.levels;
        let row = Cech::new(&c, l)?.row(0, l)?;
        let top = l as i32 - 1;
        let t = row.cohomology_in(0..=top, Some(stable));
        let mut tables = BTreeMap::new();
        tables.insert("cech_alexander".to_string(), table_of(&t, 0..=top, stable));
        let mut checks = BTreeMap::new();
        checks.insert("row_is_complex".to_string(), row.validate().is_ok());
        runs.push(Run { degree: d, stable_weight: stable, tables, checks, torsion: None, classes: None });
    }
    Ok(ComparisonReport::finish("cech_alexander", spec.presentation.p, spec.e, runs, Vec::new()))
}

/// H^k of (a) the de Rham complex in every degree, (b) the totalized double complex and
/// (c) the Cech-Alexander row for k <= min(L - 1, number of base variables), plus the
/// projections Tot -> column 0 and Tot -> row 0 inducing isomorphisms there.
pub fn compare_derham_ca(spec: &ExperimentSpec) -> Result<ComparisonReport, CompareError> {
    spec.validate()?;
    if spec.levels == 0 {
        return Err(CompareError::Spec("the comparison needs at least one level".into()));
    }
    let mut runs = Vec::new();
    for d in spec.degrees() {
        let env = spec.envelope_at(spec.e, d)?;
        let stable = d - env.max_weight();
        let c = spec.crystal_on(env.clone())?;
        let l = spec.levels;
        let kmax = (l - 1).min(env.nbase()) as i32;
        let cech = Cech::new(&c, l)?;
        let dc = cech.double_complex(l, l)?;
        let tot = dc.totalize();
        let (col0, pc) = dc.project_to_column0();
        let (row0, pr) = dc.project_to_row0();
        let dr = c.de_rham().0.cohomology_in(0..=env.nbase() as i32, Some(stable));
        let tt = tot.cohomology_in(0..=kmax, Some(stable));
        let ca = row0.cohomology_in(0..=kmax, Some(stable));
        let mut tables = BTreeMap::new();
        tables.insert("de_rham".to_string(), table_of(&dr, 0..=env.nbase() as i32, stable));
        tables.insert("total".to_string(), table_of(&tt, 0..=kmax, stable));
        tables.insert("cech_alexander".to_string(), table_of(&ca, 0..=kmax, stable));
        let iso = |maps: Vec<crate::cechalex::InducedMap>| maps.iter().all(|m| m.is_iso());
        let mut checks = BTreeMap::new();
        checks.insert("double_complex".to_string(), dc.check().pass());
        let low = restrict_degrees(&tables["de_rham"], kmax);
        checks.insert("total_matches_de_rham".to_string(), tables["total"] == low);
        checks.insert("cech_alexander_matches_de_rham".to_string(), tables["cech_alexander"] == low);
        checks.insert("column_projection_iso".to_string(), iso(induced_maps(&tot, &col0, &pc, kmax, Some(stable))));
        checks.insert("row_projection_iso".to_string(), iso(induced_maps(&tot, &row0, &pr, kmax, Some(stable))));
        runs.push(Run { degree: d, stable_weight: stable, tables, checks, torsion: None, classes: None });
    }
    Ok(ComparisonReport::finish("compare_derham_ca", spec.presentation.p, spec.e, runs, Vec::new()))
}

/// Z/p^e2 (x)^L of the de Rham complex at precision e against the de Rham complex computed
/// directly at precision e2; the derived side must vanish in negative degrees.
pub fn base_change_check(spec: &ExperimentSpec, e2: u32) -> Result<ComparisonReport, CompareError> {
    spec.validate()?;
    let mut runs = Vec::new();
    for d in spec.degrees() {
        let env = spec.envelope_at(spec.e, d)?;
        let stable = d - env.max_weight();
        let dr = spec.crystal_on(env.clone())?.de_rham().0;
        let derived = dr.derived_mod(e2)?;
        let direct = spec.crystal_on(spec.envelope_at(e2, d)?)?.de_rham().0.cohomology();
        let hi = dr.hi();
        let mut tables = BTreeMap::new();
        tables.insert("derived".to_string(), table_of(&derived, -1..=hi, stable));
        tables.insert("direct".to_string(), table_of(&direct, 0..=hi, stable));
        let mut nonneg = tables["derived"].clone();
        nonneg.remove(&-1);
        let mut checks = BTreeMap::new();
        checks.insert("negative_degrees_vanish".to_string(), tables["derived"][&-1].is_empty());
        checks.insert("derived_matches_direct".to_string(), nonneg == tables["direct"]);
        runs.push(Run { degree: d, stable_weight: stable, tables, checks, torsion: None, classes: None });
    }
    Ok(ComparisonReport::finish("base_change_check", spec.presentation.p, spec.e, runs, Vec::new()))
}

/// Searches for p-torsion horizontal sections of the envelope of F_p[x,y]/(x^2, xy, y^2)
/// and for H^{-1} of the de Rham complex reduced mod p.
pub fn bo_torsion_experiment(p: u64, e: u32, degree: u32, margin: u32) -> Result<ComparisonReport, CompareError> {
    if degree < 4 {
        return Err(CompareError::Spec("the torsion experiment needs d >= 4".into()));
    }
    let mut spec = ExperimentSpec::bo(p, e, degree);
    spec.margin = margin;
    let mut rep = torsion_experiment(&spec)?;
    rep.experiment = "bo_torsion_experiment".into();
    Ok(rep)
}

/// p-torsion horizontal sections of the crystal and H^{-1} of its de Rham complex reduced
/// mod p, for any supported presentation.
pub fn torsion_experiment(spec: &ExperimentSpec) -> Result<ComparisonReport, CompareError> {
    spec.validate()?;
    if spec.e < 2 {
        return Err(CompareError::Spec("the torsion experiment needs e >= 2".into()));
    }
    let mut runs = Vec::new();
    let mut wmax = 0;
    for d in spec.degrees() {
        let env = spec.envelope_at(spec.e, d)?;
        wmax = env.max_weight();
        let stable = d - wmax;
        let c = spec.crystal_on(env)?;
        let torsion: Vec<TorsionClass> =
            c.torsion_horizontal()?.iter().filter(|t| t.weight.is_none_or(|w| w <= stable)).map(TorsionClass::from).collect();
        let derived = c.de_rham().0.derived_mod_p()?;
        let mut tables = BTreeMap::new();
        tables.insert("derived_mod_p".to_string(), table_of(&derived, -1..=0, stable));
        let mut checks = BTreeMap::new();
        checks.insert("torsion_found".to_string(), !torsion.is_empty());
        checks.insert("negative_cohomology".to_string(), !tables["derived_mod_p"][&-1].is_empty());
        runs.push(Run { degree: d, stable_weight: stable, tables, checks, torsion: Some(torsion), classes: None });
    }
    let notes = vec![format!("generator weight {wmax}; classes reported in weights <= d - {wmax}")];
    Ok(ComparisonReport::finish("torsion_experiment", spec.presentation.p, spec.e, runs, notes))
}
