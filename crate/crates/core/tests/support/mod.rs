#![allow(dead_code)]

pub mod oracle;
pub mod reduce;
pub mod tiny;
