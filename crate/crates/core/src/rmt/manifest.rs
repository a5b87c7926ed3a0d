//! Program access manifests and the static constraint checker.
//!
//! The manifest declares which stage touches which register in which mode.
//! The checker rejects programs whose declared accesses cannot execute on a
//! unidirectional match-action pipeline: reads of state bound to a later
//! stage, writes flowing backward to an earlier stage, double read-modify-
//! writes of one register in a single traversal, and any mutation from the
//! ingress (read-only) pipeline.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccessMode {
    Read,
    Write,
    Rmw,
}

impl AccessMode {
    pub fn mutates(self) -> bool {
        !matches!(self, AccessMode::Read)
    }
}

/// One declared access: stage `stage` touches register `register`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessDecl {
    pub stage: usize,
    pub register: String,
    pub mode: AccessMode,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegisterBinding {
    pub name: String,
    pub stage: usize,
}

/// Serializable description of a pipeline program, checkable without the
/// runtime stage handlers.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProgramManifest {
    pub name: String,
    pub ingress_stages: usize,
    pub egress_stages: usize,
    pub registers: Vec<RegisterBinding>,
    pub accesses: Vec<AccessDecl>,
}

impl ProgramManifest {
    pub fn total_stages(&self) -> usize {
        self.ingress_stages + self.egress_stages
    }
}

/// Dependency pathology found by [`check_program`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// An earlier stage reads state that only exists in a later stage.
    ForwardRead { stage: usize, register: String },
    /// A later stage writes state bound to an earlier stage.
    BackwardWrite { stage: usize, register: String },
    /// An earlier stage writes state bound to a later stage; the value
    /// should be carried forward in the PHV and committed at its own stage.
    ForwardWrite { stage: usize, register: String },
    /// A later stage reads state bound to an earlier stage; the value
    /// should be snapshotted into the PHV at its own stage.
    BackwardRead { stage: usize, register: String },
    /// One traversal would read-modify-write the same register twice.
    DoubleRmw { stage: usize, register: String },
    /// A stage in the ingress pipeline declares a mutating access.
    IngressWrite { stage: usize, register: String },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::ForwardRead { stage, register } => {
                write!(f, "forward read: stage {stage} reads `{register}` bound to a later stage")
            }
            Violation::BackwardWrite { stage, register } => {
                write!(f, "backward write: stage {stage} writes `{register}` bound to an earlier stage")
            }
            Violation::ForwardWrite { stage, register } => {
                write!(f, "forward write: stage {stage} writes `{register}` bound to a later stage")
            }
            Violation::BackwardRead { stage, register } => {
                write!(f, "backward read: stage {stage} reads `{register}` bound to an earlier stage")
            }
            Violation::DoubleRmw { stage, register } => {
                write!(f, "double read-modify-write of `{register}` declared at stage {stage}")
            }
            Violation::IngressWrite { stage, register } => {
                write!(f, "ingress stage {stage} declares a mutating access to `{register}`")
            }
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ManifestError {
    #[error("malformed manifest: {0}")]
    Malformed(String),
}

/// Static check of a program manifest. Returns the (possibly empty) list of
/// dependency violations, or an error when the manifest itself is broken.
pub fn check_program(manifest: &ProgramManifest) -> Result<Vec<Violation>, ManifestError> {
    if manifest.total_stages() == 0 {
        return Err(ManifestError::Malformed("program has no stages".into()));
    }
    let mut bound: BTreeMap<&str, usize> = BTreeMap::new();
    for reg in &manifest.registers {
        if reg.stage >= manifest.total_stages() {
            return Err(ManifestError::Malformed(format!(
                "register `{}` bound to stage {} of a {}-stage program",
                reg.name,
                reg.stage,
                manifest.total_stages()
            )));
        }
        if bound.insert(reg.name.as_str(), reg.stage).is_some() {
            return Err(ManifestError::Malformed(format!(
                "register `{}` bound more than once",
                reg.name
            )));
        }
    }

    let mut violations = Vec::new();
    let mut rmw_seen: BTreeMap<&str, usize> = BTreeMap::new();
    for acc in &manifest.accesses {
        let Some(&reg_stage) = bound.get(acc.register.as_str()) else {
            return Err(ManifestError::Malformed(format!(
                "access to undeclared register `{}` at stage {}",
                acc.register, acc.stage
            )));
        };
        if acc.stage >= manifest.total_stages() {
            return Err(ManifestError::Malformed(format!(
                "access at stage {} of a {}-stage program",
                acc.stage,
                manifest.total_stages()
            )));
        }
        let reg = acc.register.clone();
        if acc.stage < manifest.ingress_stages && acc.mode.mutates() {
            violations.push(Violation::IngressWrite { stage: acc.stage, register: reg.clone() });
        }
        match acc.mode {
            AccessMode::Read => {
                if acc.stage < reg_stage {
                    violations.push(Violation::ForwardRead { stage: acc.stage, register: reg });
                } else if acc.stage > reg_stage {
                    violations.push(Violation::BackwardRead { stage: acc.stage, register: reg });
                }
            }
            AccessMode::Write | AccessMode::Rmw => {
                if acc.stage > reg_stage {
                    violations.push(Violation::BackwardWrite { stage: acc.stage, register: reg.clone() });
                } else if acc.stage < reg_stage {
                    violations.push(Violation::ForwardWrite { stage: acc.stage, register: reg.clone() });
                }
                if acc.mode == AccessMode::Rmw {
                    let n = rmw_seen.entry(acc.register.as_str()).or_insert(0);
                    *n += 1;
                    if *n == 2 {
                        violations.push(Violation::DoubleRmw { stage: acc.stage, register: reg });
                    }
                }
            }
        }
    }
    Ok(violations)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest(regs: &[(&str, usize)], accs: &[(usize, &str, AccessMode)]) -> ProgramManifest {
        ProgramManifest {
            name: "test".into(),
            ingress_stages: 2,
            egress_stages: 6,
            registers: regs
                .iter()
                .map(|(n, s)| RegisterBinding { name: (*n).into(), stage: *s })
                .collect(),
            accesses: accs
                .iter()
                .map(|(s, r, m)| AccessDecl { stage: *s, register: (*r).into(), mode: *m })
                .collect(),
        }
    }

    #[test]
    fn compliant_program_passes() {
        let m = manifest(
            &[("next-seq", 2), ("avail", 3)],
            &[
                (2, "next-seq", AccessMode::Rmw),
                (3, "avail", AccessMode::Rmw),
                (3, "next-seq", AccessMode::Read), // backward read is flagged
            ],
        );
        // Exact-stage accesses only:
        let m2 = manifest(
            &[("next-seq", 2), ("avail", 3)],
            &[(2, "next-seq", AccessMode::Rmw), (3, "avail", AccessMode::Rmw)],
        );
        assert_eq!(check_program(&m2).unwrap(), vec![]);
        assert_eq!(
            check_program(&m).unwrap(),
            vec![Violation::BackwardRead { stage: 3, register: "next-seq".into() }]
        );
    }

    #[test]
    fn forward_read_detected() {
        let m = manifest(&[("avail", 5)], &[(2, "avail", AccessMode::Read)]);
        assert_eq!(
            check_program(&m).unwrap(),
            vec![Violation::ForwardRead { stage: 2, register: "avail".into() }]
        );
    }

    #[test]
    fn backward_write_detected() {
        let m = manifest(&[("next-seq", 3)], &[(6, "next-seq", AccessMode::Write)]);
        assert_eq!(
            check_program(&m).unwrap(),
            vec![Violation::BackwardWrite { stage: 6, register: "next-seq".into() }]
        );
    }

    #[test]
    fn double_rmw_detected() {
        let m = manifest(
            &[("credits", 4)],
            &[(4, "credits", AccessMode::Rmw), (4, "credits", AccessMode::Rmw)],
        );
        assert_eq!(
            check_program(&m).unwrap(),
            vec![Violation::DoubleRmw { stage: 4, register: "credits".into() }]
        );
    }

    #[test]
    fn ingress_must_be_read_only() {
        let m = manifest(&[("rate", 1)], &[(1, "rate", AccessMode::Write)]);
        assert_eq!(
            check_program(&m).unwrap(),
            vec![Violation::IngressWrite { stage: 1, register: "rate".into() }]
        );
    }

    #[test]
    fn malformed_manifests_rejected() {
        let m = manifest(&[], &[(2, "ghost", AccessMode::Read)]);
        assert!(matches!(check_program(&m), Err(ManifestError::Malformed(_))));
        let mut empty = manifest(&[], &[]);
        empty.ingress_stages = 0;
        empty.egress_stages = 0;
        assert!(matches!(check_program(&empty), Err(ManifestError::Malformed(_))));
    }
}
