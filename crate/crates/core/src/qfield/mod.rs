//! Exact arithmetic over `Q(zeta_m)`: cyclotomic scalars, Laurent polynomials in
//! `v = q^(1/2)` and reduced rational functions of `v`.

mod cyclo;
mod laurent;
mod parse;
mod ratfunc;
mod roots;
pub(crate) mod serial;

pub use cyclo::{CycRational, CYCLO_ORDER};
pub use laurent::LaurentPoly;
pub use parse::parse_ratfunc;
pub use ratfunc::RatFunc;
pub use roots::{
    cyclotomic_in_q, cyclotomic_poly, divides_power_of, euler_phi, roots_are_roots_of_unity, unity_witness,
    CyclotomicWitness, Divisibility,
};
pub use serial::RatFuncJson;

/// Forwards the owned/borrowed combinations of a binary operator to the
/// `&T op &T` implementation.
macro_rules! forward_binop {
    ($t:ty, $tr:ident, $m:ident) => {
        impl std::ops::$tr<$t> for $t {
            type Output = $t;
            fn $m(self, rhs: $t) -> $t {
                std::ops::$tr::$m(&self, &rhs)
            }
        }
        impl std::ops::$tr<&$t> for $t {
            type Output = $t;
            fn $m(self, rhs: &$t) -> $t {
                std::ops::$tr::$m(&self, rhs)
            }
        }
        impl std::ops::$tr<$t> for &$t {
            type Output = $t;
            fn $m(self, rhs: $t) -> $t {
                std::ops::$tr::$m(self, &rhs)
            }
        }
    };
}
pub(crate) use forward_binop;
