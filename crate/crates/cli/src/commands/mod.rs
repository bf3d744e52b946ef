pub mod analyze;
pub mod design;
pub mod doe;
pub mod monitor;
pub mod simulate;
