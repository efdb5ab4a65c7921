//! Netlist lint and repair, ground-truth bug and Trojan injection, and
//! simulation-log based localization of analog hardware Trojans.

pub mod detect;
pub mod inject;
pub mod lint;
pub mod metrics;
pub mod netlist;
pub mod simlog;
mod util;
