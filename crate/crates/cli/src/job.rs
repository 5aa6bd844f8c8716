//! Job documents: one JSON object per run, unknown keys rejected.

use pdcris::compare::{CrystalSpec, EnvelopeChoice, ExperimentSpec};
use pdcris::envelope::SchemePresentation;
use pdcris::ring::Zpe;
use serde::Deserialize;
use std::path::PathBuf;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Envelope,
    Derham,
    Cech,
    Compare,
    BaseChange,
    Torsion,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Envelope => "envelope",
            Command::Derham => "derham",
            Command::Cech => "cech",
            Command::Compare => "compare",
            Command::BaseChange => "base_change",
            Command::Torsion => "torsion",
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrystalBlock {
    pub rank: usize,
    /// One rank x rank matrix per variable, entries in element syntax.
    pub connection: Vec<Vec<Vec<String>>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Job {
    #[serde(default)]
    pub command: Option<Command>,
    pub prime: u64,
    pub precision: u32,
    #[serde(default = "one")]
    pub nilpotency: u32,
    pub variables: Vec<String>,
    #[serde(default)]
    pub generators: Vec<String>,
    pub truncation: u32,
    #[serde(default)]
    pub crystal: Option<CrystalBlock>,
    #[serde(default)]
    pub level: Option<usize>,
    /// Target precision for base_change.
    #[serde(default)]
    pub reduce_to: Option<u32>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn one() -> u32 {
    1
}

impl Job {
    pub fn parse(text: &str) -> Result<Job, String> {
        let job: Job = serde_json::from_str(text).map_err(|e| format!("job document: {e}"))?;
        job.check()?;
        Ok(job)
    }

    fn check(&self) -> Result<(), String> {
        if Zpe::try_new(self.prime, self.precision).is_none() {
            return Err(format!("prime {} with precision {} is not supported", self.prime, self.precision));
        }
        if self.nilpotency == 0 || self.nilpotency > self.precision {
            return Err(format!("nilpotency {} must lie in 1..={}", self.nilpotency, self.precision));
        }
        for (i, v) in self.variables.iter().enumerate() {
            if v.is_empty() || !v.chars().next().unwrap().is_ascii_alphabetic() || !v.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(format!("variable {v:?} is not an identifier"));
            }
            if self.variables[..i].contains(v) {
                return Err(format!("variable {v:?} is repeated"));
            }
        }
        if let Some(c) = &self.crystal {
            if c.rank == 0 {
                return Err("crystal rank must be positive".into());
            }
            if c.connection.len() != self.variables.len() {
                return Err(format!("crystal needs {} connection matrices, got {}", self.variables.len(), c.connection.len()));
            }
            for m in &c.connection {
                if m.len() != c.rank || m.iter().any(|r| r.len() != c.rank) {
                    return Err(format!("connection matrices must be {0} x {0}", c.rank));
                }
            }
        }
        if let Some(r) = self.reduce_to {
            if r == 0 || r >= self.precision {
                return Err(format!("reduce_to {r} must lie in 1..{}", self.precision));
            }
        }
        Ok(())
    }

    pub fn spec(&self, margin: u32) -> ExperimentSpec {
        let vars: Vec<&str> = self.variables.iter().map(|s| s.as_str()).collect();
        let gens: Vec<&str> = self.generators.iter().map(|s| s.as_str()).collect();
        let pres = SchemePresentation::new(self.prime, self.nilpotency, &vars, &gens);
        let mut s = ExperimentSpec::new(pres, EnvelopeChoice::Monomial, self.precision, self.truncation);
        s.margin = margin;
        if let Some(l) = self.level {
            s.levels = l;
        }
        s.crystal = self.crystal.as_ref().map(|c| CrystalSpec { rank: c.rank, matrices: c.connection.clone() });
        s
    }
}
