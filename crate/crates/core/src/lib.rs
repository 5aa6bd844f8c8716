#![allow(clippy::needless_range_loop, clippy::type_complexity)]

pub mod cechalex;
pub mod compare;
pub mod crystal;
pub mod envelope;
pub mod pdpoly;
pub mod ring;
