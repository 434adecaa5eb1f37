//! Dipole-force entangling gates between co-trapped ions driven on a
//! long-lived optical qubit: light shifts, photon scattering, crystal normal
//! modes, gate timing and error budgets, and wavelength sweeps.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod angular;
pub mod constants;
pub mod dynamics;
pub mod gate;
pub mod modes;
pub mod scattering;
pub mod species;
pub mod stark;
pub mod sweep;

pub use angular::{dipole_moment_sq, tensor_element, wigner3j, AngularError, HalfInt};
pub use scattering::{elastic_rate, inelastic_rate, raman_rate, total_decoherence, DecoherenceBudget, IonDecoherence};
pub use species::{load_species, transition_frequency, QubitSpec, SpeciesData, SpeciesError, SublevelRef};
pub use stark::{ac_stark_shift, differential_stark_shift, find_magic_wavelengths, LaserField, StarkError, StarkShift};
