//! Exact sparse polynomial algebra over modal coordinates.

pub mod multiindex;
pub mod scalar;
pub mod series;
pub mod statevec;
pub mod timepoly;

pub use multiindex::MultiIndex;
pub use scalar::{
    abs_re, crat, crat_div, crat_frac, crat_int, crat_one, crat_real, crat_zero, display_crat,
    format_crat, format_rat, parse_crat, parse_rat, rat, rat_int, rat_to_f64, to_c64, C64, CRat,
    Rat,
};
pub use series::{mono_eval, ModalSeries};
pub use statevec::StateVector;
pub use timepoly::TimePoly;
