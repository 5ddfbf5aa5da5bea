pub mod array;
pub mod channel;
pub mod code;
pub mod config;
pub mod experiment;
pub mod receiver;
pub mod scenario;
