//! File formats, reference caches and the `svrrg` command line for
//! [`svrrg_core`].

pub mod checks;
pub mod cli;
pub mod mm;
pub mod refcache;
pub mod trace_io;
