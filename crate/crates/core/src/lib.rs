pub mod frontend;
pub mod types;
pub mod rules;
pub mod tdg;
pub mod recommend;
pub mod solver;
pub mod eval;
pub mod cli;
