pub mod blowup;
pub mod cli;
pub mod coeffring;
pub mod hamiltonian;
pub mod newton;
pub mod polyrat;
pub mod regularize;
