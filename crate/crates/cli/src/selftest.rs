use pdcris::cechalex::{diagonal_omega_check, homotopy_check, poincare_check, Cech};
use pdcris::compare::*;
use pdcris::crystal::CrystalData;
use pdcris::envelope::{EnvelopePresentation, SchemePresentation};
use serde::Serialize;
use std::collections::BTreeMap;
use std::sync::Arc;

#[derive(Serialize)]
pub struct SelfTest {
    pub status: Status,
    pub checks: BTreeMap<&'static str, bool>,
}

fn flat(p: u64, e: u32, vars: &[&str], d: u32) -> Result<Arc<EnvelopePresentation>, String> {
    EnvelopePresentation::flat(&SchemePresentation::new(p, 1, vars, &[]), e, d).map(Arc::new).map_err(|e| e.to_string())
}

fn passes(r: Result<ComparisonReport, CompareError>, want: Status) -> bool {
    r.is_ok_and(|r| r.status == want)
}

pub fn run() -> Result<SelfTest, String> {
    let mut checks = BTreeMap::new();
    checks.insert("homotopy_identities", homotopy_check(4).pass);

    let a1 = flat(2, 2, &["x"], 4)?;
    let cech = Cech::new(&CrystalData::constant(a1.clone()), 3).map_err(|e| e.to_string())?;
    let row = cech.omega_row(1, 3).map_err(|e| e.to_string())?;
    checks.insert("omega_row_contraction", row.check_contraction().pass);

    let mut ok = true;
    for vars in [&["x"][..], &["x", "y"][..]] {
        ok &= poincare_check(&flat(2, 2, vars, 8)?, 1).is_ok_and(|r| r.pass);
    }
    checks.insert("poincare_lemma", ok);
    checks.insert("diagonal_conormal", diagonal_omega_check(&a1).is_ok_and(|r| r.pass));

    checks.insert(
        "de_rham_vs_cech_alexander",
        passes(compare_derham_ca(&ExperimentSpec::flat(2, 2, &["x"], 8)), Status::Pass)
            && passes(compare_derham_ca(&ExperimentSpec::flat(3, 1, &["x", "y"], 8)), Status::Pass),
    );
    checks.insert(
        "base_change",
        passes(base_change_check(&ExperimentSpec::flat(2, 2, &["x"], 8), 1), Status::Pass)
            && passes(base_change_check(&ExperimentSpec::bo(2, 2, 10), 1), Status::Fail),
    );
    checks.insert("bo_torsion", passes(bo_torsion_experiment(2, 2, 10, 2), Status::Pass));

    let bo = |e: u32, n: u32, extra: &[&str]| {
        let mut g = vec!["x^2", "x*y", "y^2"];
        g.extend_from_slice(extra);
        EnvelopePresentation::monomial(&SchemePresentation::new(2, n, &["x", "y"], &g), e, 8).map(|x| x.dump())
    };
    checks.insert("envelope_mod_p", matches!((bo(2, 1, &[]), bo(2, 2, &["2"])), (Ok(a), Ok(b)) if a == b));

    let status = if checks.values().all(|&x| x) { Status::Pass } else { Status::Fail };
    Ok(SelfTest { status, checks })
}
