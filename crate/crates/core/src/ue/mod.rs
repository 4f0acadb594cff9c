pub mod construction;
pub mod firewall;
pub mod games;
pub mod hybrid;
pub mod scheme;
pub mod scripts;
