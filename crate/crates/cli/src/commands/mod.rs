pub mod envelope;
pub mod equi;
pub mod geometry;
pub mod lattice;
pub mod mazur;
pub mod measures;
pub mod ramsey;
pub mod spaces;
pub mod suite;
