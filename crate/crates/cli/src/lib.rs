//! Library side of the `gext` command: system files, subcommands and
//! report writing.

pub mod error;
pub mod run;
pub mod spec;

pub use error::CliError;
pub use run::{run_command, Command, RunConfig};
pub use spec::{parse_speedup_spec, parse_system_spec, serialize_system};
