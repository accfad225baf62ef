//! Binary covering codes: field arithmetic, verification, seeds, the QM
//! constructions, partition search and length tables.

pub mod code;
pub mod construct;
pub mod gf2m;
pub mod search;
pub mod seeds;
pub mod tables;
pub mod verify;
