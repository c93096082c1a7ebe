pub mod interval;
pub mod rational;
pub mod round;

pub use interval::{iv_op, iv_sign, Interval, IvKind, TriBool};
pub use rational::{int, parse_rational, rat, Rational};
