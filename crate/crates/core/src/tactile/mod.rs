//! Stick–taxel contact, penalty forces and the tactile signal pipeline.

pub mod contact;
pub mod layout;
pub mod signal;

pub use contact::{detect_contacts, penalty_force, Contact, ContactParams, ContactSet};
pub use layout::{TaxelLayout, N_TAXELS, TAXELS_PER_PAD};
pub use signal::{
    binarize, calibrate_offsets, contact_center, synthesize_raw, Crosstalk, SensorModel, TactileFrame,
};
