pub mod cli;
pub mod config;
pub mod edoal;
pub mod eval;
pub mod gateway;
pub mod grammar;
pub mod pipeline;
pub mod rdf;
pub mod reduction;
pub mod synthesis;
