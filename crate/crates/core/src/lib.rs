pub mod error;
pub mod injection;
pub mod io;
pub mod rational;
pub mod series;
pub mod sets;
pub mod stochastic;
pub mod rs_seq;
pub mod transforms;
pub mod witnesses;
