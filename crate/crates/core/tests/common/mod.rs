#![allow(dead_code)]

pub mod fixtures;
pub mod mutation;
pub mod vectors;
