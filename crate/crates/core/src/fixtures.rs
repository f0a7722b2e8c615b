//! Bundled reference families.

use crate::substitution::TypeHFamily;

pub const FIB1D_TOML: &str = include_str!("../../../fixtures/fib1d.toml");
pub const FOUR1D_TOML: &str = include_str!("../../../fixtures/four1d.toml");
pub const DEGENERATE_TOML: &str = include_str!("../../../fixtures/degenerate.toml");
pub const PROD2D_TOML: &str = include_str!("../../../fixtures/prod2d.toml");
pub const BROKEN_NONUNIFORM_TOML: &str = include_str!("../../../fixtures/broken_nonuniform.toml");
pub const BROKEN_ORIGIN_TOML: &str = include_str!("../../../fixtures/broken_origin.toml");
pub const BROKEN_OVERLAP_TOML: &str = include_str!("../../../fixtures/broken_overlap.toml");

pub fn fib1d() -> TypeHFamily {
    TypeHFamily::load(FIB1D_TOML).expect("bundled fixture")
}

pub fn four1d() -> TypeHFamily {
    TypeHFamily::load(FOUR1D_TOML).expect("bundled fixture")
}

pub fn degenerate() -> TypeHFamily {
    TypeHFamily::load(DEGENERATE_TOML).expect("bundled fixture")
}

/// FOUR1D × FOUR1D on unit squares.
pub fn prod2d() -> TypeHFamily {
    TypeHFamily::load(PROD2D_TOML).expect("bundled fixture")
}
