//! Small-register quantum engine: states, Pauli action, spectra and
//! thermal averages.

mod eigen;
mod pauli;
mod state;

pub use eigen::{
    ground_state_of, lowest_eigenpair, spectrum_of, thermal_energy, LanczosOptions, Spectrum,
    MAX_DENSE_QUBITS, MAX_ITERATIVE_QUBITS,
};
pub use pauli::{PauliString, PauliSum};
pub use state::PureState;

use crate::error::Result;
use crate::models::{PauliAxis, TermList};

/// Expectation of a product of single-site Paulis.
pub fn expectation(state: &PureState, term: &[(usize, PauliAxis)]) -> Result<f64> {
    state.expectation(term)
}

/// Ground energy (total, not per bond) and a ground vector.
pub fn ground_state(terms: &TermList) -> Result<(f64, PureState)> {
    ground_state_of(&PauliSum::from_terms(terms)?)
}

pub fn full_spectrum(terms: &TermList) -> Result<Spectrum> {
    spectrum_of(&PauliSum::from_terms(terms)?)
}
