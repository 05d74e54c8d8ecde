//! Experiment harness (to be filled in).
pub fn cli_main() -> i32 { 0 }
