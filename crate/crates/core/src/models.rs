//! Spin models as term templates and their instantiation on a lattice.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{enumerate_bonds, LatticeSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

impl PauliAxis {
    pub const ALL: [PauliAxis; 3] = [PauliAxis::X, PauliAxis::Y, PauliAxis::Z];

    pub fn name(self) -> &'static str {
        match self {
            PauliAxis::X => "X",
            PauliAxis::Y => "Y",
            PauliAxis::Z => "Z",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Heisenberg,
    Ising,
    Xx,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Heisenberg => "heisenberg",
            ModelKind::Ising => "ising",
            ModelKind::Xx => "xx",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heisenberg" => Ok(ModelKind::Heisenberg),
            "ising" => Ok(ModelKind::Ising),
            "xx" => Ok(ModelKind::Xx),
            _ => Err(Error::invalid(format!("unknown model '{s}'"))),
        }
    }
}

/// Antiferromagnetic pair couplings with unit weight plus an optional
/// uniform field `+B Σ A_i`, in Pauli-matrix units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinModel {
    pub kind: ModelKind,
    pub field: f64,
}

impl SpinModel {
    pub fn heisenberg() -> Self {
        SpinModel {
            kind: ModelKind::Heisenberg,
            field: 0.0,
        }
    }

    pub fn ising(field: f64) -> Self {
        SpinModel {
            kind: ModelKind::Ising,
            field,
        }
    }

    pub fn xx(field: f64) -> Self {
        SpinModel {
            kind: ModelKind::Xx,
            field,
        }
    }

    /// Build a model; the Heisenberg model takes no field.
    pub fn new(kind: ModelKind, field: f64) -> Result<Self> {
        if !field.is_finite() {
            return Err(Error::invalid("field must be finite"));
        }
        if kind == ModelKind::Heisenberg && field != 0.0 {
            return Err(Error::unsupported("the heisenberg model has no field term"));
        }
        Ok(SpinModel { kind, field })
    }

    pub fn pair_axes(&self) -> &'static [PauliAxis] {
        match self.kind {
            ModelKind::Heisenberg => &PauliAxis::ALL,
            ModelKind::Ising => &[PauliAxis::X],
            ModelKind::Xx => &[PauliAxis::X, PauliAxis::Y],
        }
    }

    pub fn field_axis(&self) -> Option<PauliAxis> {
        match self.kind {
            ModelKind::Heisenberg => None,
            ModelKind::Ising | ModelKind::Xx => Some(PauliAxis::Z),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairTerm {
    pub sites: (usize, usize),
    pub axis: PauliAxis,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldTerm {
    pub site: usize,
    pub axis: PauliAxis,
    pub weight: f64,
}

/// A Hamiltonian as a list of weighted one- and two-site Pauli terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermList {
    pub n_sites: usize,
    pub pair_terms: Vec<PairTerm>,
    pub field_terms: Vec<FieldTerm>,
    /// Number of lattice bonds; divides `<H>` to give the energy per bond.
    pub bond_count: usize,
}

impl TermList {
    pub fn new(n_sites: usize, bond_count: usize) -> Self {
        TermList {
            n_sites,
            pair_terms: Vec::new(),
            field_terms: Vec::new(),
            bond_count,
        }
    }

    pub fn push_pair(&mut self, i: usize, j: usize, axis: PauliAxis, weight: f64) {
        self.pair_terms.push(PairTerm {
            sites: (i, j),
            axis,
            weight,
        });
    }

    pub fn push_field(&mut self, site: usize, axis: PauliAxis, weight: f64) {
        self.field_terms.push(FieldTerm { site, axis, weight });
    }
}

/// Instantiate `model` on every bond and site of `lattice`.
pub fn instantiate(model: &SpinModel, lattice: &LatticeSpec) -> TermList {
    let bonds = enumerate_bonds(lattice);
    let mut terms = TermList::new(lattice.num_sites(), bonds.len());
    for &(i, j) in &bonds {
        for &axis in model.pair_axes() {
            terms.push_pair(i, j, axis, 1.0);
        }
    }
    if let Some(axis) = model.field_axis() {
        for s in 0..lattice.num_sites() {
            terms.push_field(s, axis, model.field);
        }
    }
    terms
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn term_counts() {
        let t = instantiate(&SpinModel::heisenberg(), &LatticeSpec::chain(4).unwrap());
        assert_eq!((t.pair_terms.len(), t.field_terms.len()), (12, 0));
        let t = instantiate(&SpinModel::ising(1.0), &LatticeSpec::chain(6).unwrap());
        assert_eq!((t.pair_terms.len(), t.field_terms.len()), (6, 6));
        let t = instantiate(&SpinModel::xx(0.0), &LatticeSpec::chain(8).unwrap());
        assert_eq!(t.pair_terms.len(), 16);
        assert_eq!(t.bond_count, 8);
    }

    #[test]
    fn heisenberg_rejects_field() {
        assert!(SpinModel::new(ModelKind::Heisenberg, 0.5).is_err());
        assert!(SpinModel::new(ModelKind::Ising, f64::NAN).is_err());
        assert_eq!("xx".parse::<ModelKind>().unwrap(), ModelKind::Xx);
    }
}
