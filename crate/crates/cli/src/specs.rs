//! Parsers for ensemble and group specifiers given on the command line.

use std::path::PathBuf;

use qudit_designs::constructions::{
    mub_ensemble, phase_state_ensemble, project_ensemble, sic_qubit, wootters_fields, ProjectionSpec,
};
use qudit_designs::groups::{
    clifford_group, cyclic_group, pauli_group, sl2f5_group, stabilizer_states, FiniteUnitaryGroup, Spin,
};
use qudit_designs::metrics::WeightedStateEnsemble;

use crate::CliError;

fn number<T: std::str::FromStr>(spec: &str, field: &str) -> Result<T, CliError> {
    field
        .parse()
        .map_err(|_| CliError::Usage(format!("`{field}` is not a valid number in `{spec}`")))
}

#[derive(Clone, Debug, PartialEq)]
pub enum EnsembleSpec {
    WoottersFields(usize),
    Phase { dim: usize, prime: usize },
    Sic2,
    Mub(usize),
    Stabilizer(usize),
    Project { source: Box<EnsembleSpec>, dim: usize },
    File(PathBuf),
}

impl EnsembleSpec {
    pub fn parse(spec: &str) -> Result<Self, CliError> {
        let parts: Vec<&str> = spec.split(':').collect();
        let parsed = match parts.as_slice() {
            ["wf", p] => Self::WoottersFields(number(spec, p)?),
            ["phase", d, p] => Self::Phase { dim: number(spec, d)?, prime: number(spec, p)? },
            ["sic2"] => Self::Sic2,
            ["mub", p] => Self::Mub(number(spec, p)?),
            ["stab", n] => Self::Stabilizer(number(spec, n)?),
            ["file", ..] => Self::File(PathBuf::from(&spec["file:".len()..])),
            ["project", rest @ .., dim] if !rest.is_empty() => Self::Project {
                source: Box::new(Self::parse(&rest.join(":"))?),
                dim: number(spec, dim)?,
            },
            _ => return Err(CliError::Usage(format!("unknown ensemble `{spec}`"))),
        };
        Ok(parsed)
    }

    /// `t` is the design order used by projections.
    pub fn build(&self, t: usize) -> Result<WeightedStateEnsemble, CliError> {
        Ok(match self {
            Self::WoottersFields(p) => wootters_fields(*p)?,
            Self::Phase { dim, prime } => phase_state_ensemble(*dim, *prime)?,
            Self::Sic2 => sic_qubit()?,
            Self::Mub(p) => mub_ensemble(*p)?,
            Self::Stabilizer(n) => WeightedStateEnsemble::uniform(stabilizer_states(*n)?.states)?,
            Self::Project { source, dim } => {
                let src = source.build(t)?;
                project_ensemble(&src, &ProjectionSpec::leading(src.dim(), *dim)?, t)?
            }
            Self::File(path) => WeightedStateEnsemble::from_json(&std::fs::read_to_string(path)?)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GroupSpec {
    Clifford(usize),
    Cyclic(usize),
    Pauli(usize),
    Sl2f5,
    Su2Mc(Spin),
    Su2(Spin),
}

impl GroupSpec {
    pub fn parse(spec: &str) -> Result<Self, CliError> {
        let parts: Vec<&str> = spec.split(':').collect();
        let spin = |s: &str| Spin::parse(s).map_err(|_| CliError::Usage(format!("bad spin `{s}` in `{spec}`")));
        Ok(match parts.as_slice() {
            ["clifford", d] => Self::Clifford(number(spec, d)?),
            ["cyclic", d] => Self::Cyclic(number(spec, d)?),
            ["pauli", d] => Self::Pauli(number(spec, d)?),
            ["sl2f5"] => Self::Sl2f5,
            ["su2mc", s] => Self::Su2Mc(spin(s)?),
            ["su2", s] => Self::Su2(spin(s)?),
            _ => return Err(CliError::Usage(format!("unknown group `{spec}`"))),
        })
    }

    /// The enumerated group, if this specifier names a finite one.
    pub fn finite(&self) -> Result<Option<FiniteUnitaryGroup>, CliError> {
        Ok(Some(match self {
            Self::Clifford(d) => clifford_group(*d)?,
            Self::Cyclic(d) => cyclic_group(*d)?,
            Self::Pauli(d) => pauli_group(*d)?,
            Self::Sl2f5 => sl2f5_group()?,
            Self::Su2Mc(_) | Self::Su2(_) => return Ok(None),
        }))
    }
}

/// Parses `1,2,4,8`.
pub fn parse_lengths(spec: &str) -> Result<Vec<usize>, CliError> {
    spec.split(',').map(|s| number(spec, s.trim())).collect()
}
