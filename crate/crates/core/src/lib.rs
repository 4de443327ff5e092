//! Spectra of Schrödinger operators on circles, intervals, and compact
//! metric graphs; detection and construction of eigenfunctions sharing
//! the same modulus; saturation-cone certificates; and compilation of
//! certificates into bilinear control pulse schedules that numerically
//! realize small-time isomodulus transitions.

pub mod catalog;
pub mod domain;
pub mod funcspace;
pub mod isomod;
pub mod propagator;
pub mod saturation;
pub mod specfun;
pub mod spectral;
pub mod synth;
