pub mod adversary;
pub mod bits;
pub mod experiment;
pub mod nonlocal;
pub mod protocol;
pub mod puzzle;
pub mod qsim;
pub mod rng;
pub mod spacetime;
