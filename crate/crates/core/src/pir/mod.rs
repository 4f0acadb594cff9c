pub mod db;
pub mod field;
pub mod game;
pub mod ldc;
pub mod protocol;
pub mod scheme;
pub mod scripts;
pub mod shamir;
pub mod worlds;
