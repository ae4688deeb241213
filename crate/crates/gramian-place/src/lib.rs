pub mod cli;
pub mod error;
pub mod numerics;
pub mod objective;
pub mod oracle;
pub mod placement;
pub mod system;
