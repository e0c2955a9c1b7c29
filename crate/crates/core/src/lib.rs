pub mod actors;
pub mod benchgen;
pub mod game;
pub mod lts;
pub mod responsibility;
pub mod rml;
pub mod semantics;
pub mod tsformat;
