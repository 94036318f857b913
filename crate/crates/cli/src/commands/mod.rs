pub mod gap;
pub mod predict;
pub mod run;
pub mod study;
pub mod verify;
