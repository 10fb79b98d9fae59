// SPDX-License-Identifier: MIT OR Apache-2.0

//! File formats, reports, timing and the `lsar` command line on top of
//! [`lsar_core`].

pub mod bench;
pub mod cli;
pub mod error;
pub mod io;
pub mod report;

pub use error::{CliError, ErrorClass};
