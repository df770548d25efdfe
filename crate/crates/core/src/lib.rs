pub mod cover;
pub mod dimension;
pub mod embedding;
pub mod metric;
pub mod schedule;
pub mod verify;
