//! Computational workbench for principal-type operators: symbol calculus,
//! bicharacteristic minimality, jet-level division, WKB constructions and
//! the asymptotic pairing integrals used to test Taylor-coefficient vanishing.

pub mod symexpr;
pub mod jet;
pub mod symbol;
pub mod ode;
pub mod bichar;
pub mod factor;
pub mod wkb;
pub mod asymptotics;
