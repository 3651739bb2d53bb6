pub mod corr;
pub mod cs;
pub mod gen;
pub mod scb;
pub mod simulate;
