//! Threshold-voltage channel model, GRU detector and transfer-learning
//! detection for MLC/TLC NAND flash.

pub mod channel;
pub mod detect;
pub mod ecc;
pub mod kv;
pub mod neuralnet;
pub mod oracle;
pub mod rng;
pub mod transfer;
