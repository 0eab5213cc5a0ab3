pub mod cli;
pub mod pipeline;
pub mod report;
pub mod scenario;
pub mod store;
