//! Directed rounding without touching the floating-point environment.
//!
//! Every routine computes the round-to-nearest result and then recovers the
//! sign of the rounding error with an error-free transformation (`TwoSum`,
//! FMA residuals). The result is the correctly rounded value in the requested
//! direction. When the residual itself may be inexact (overflow, values near
//! the subnormal range) we fall back to stepping one ulp outward, which is
//! still a valid, if slightly wider, bound.

/// Magnitude below which FMA residuals may be polluted by underflow.
const TINY: f64 = 1.0e-290;

#[inline]
fn suspicious(r: f64) -> bool {
    !r.is_finite() || (r != 0.0 && r.abs() < TINY)
}

#[inline]
fn two_sum_err(a: f64, b: f64, s: f64) -> f64 {
    let bb = s - a;
    (a - (s - bb)) + (b - bb)
}

#[inline]
pub fn add_down(a: f64, b: f64) -> f64 {
    let s = a + b;
    if !s.is_finite() {
        return if s.is_nan() {
            f64::NEG_INFINITY
        } else {
            s.next_down()
        };
    }
    let e = two_sum_err(a, b, s);
    if e < 0.0 {
        s.next_down()
    } else {
        s
    }
}

#[inline]
pub fn add_up(a: f64, b: f64) -> f64 {
    let s = a + b;
    if !s.is_finite() {
        return if s.is_nan() {
            f64::INFINITY
        } else {
            s.next_up()
        };
    }
    let e = two_sum_err(a, b, s);
    if e > 0.0 {
        s.next_up()
    } else {
        s
    }
}

#[inline]
pub fn sub_down(a: f64, b: f64) -> f64 {
    add_down(a, -b)
}

#[inline]
pub fn sub_up(a: f64, b: f64) -> f64 {
    add_up(a, -b)
}

#[inline]
pub fn mul_down(a: f64, b: f64) -> f64 {
    let p = a * b;
    if suspicious(p) || (p == 0.0 && a != 0.0 && b != 0.0) {
        return if p.is_nan() {
            f64::NEG_INFINITY
        } else {
            p.next_down()
        };
    }
    let e = a.mul_add(b, -p);
    if e < 0.0 {
        p.next_down()
    } else {
        p
    }
}

#[inline]
pub fn mul_up(a: f64, b: f64) -> f64 {
    let p = a * b;
    if suspicious(p) || (p == 0.0 && a != 0.0 && b != 0.0) {
        return if p.is_nan() {
            f64::INFINITY
        } else {
            p.next_up()
        };
    }
    let e = a.mul_add(b, -p);
    if e > 0.0 {
        p.next_up()
    } else {
        p
    }
}

#[inline]
pub fn div_down(a: f64, b: f64) -> f64 {
    let q = a / b;
    if suspicious(q) || suspicious(a) || (q == 0.0 && a != 0.0) {
        return if q.is_nan() {
            f64::NEG_INFINITY
        } else {
            q.next_down()
        };
    }
    // a - q*b has the sign of (a/b - q) * b
    let r = (-q).mul_add(b, a);
    let below = if b > 0.0 { r < 0.0 } else { r > 0.0 };
    if below {
        q.next_down()
    } else {
        q
    }
}

#[inline]
pub fn div_up(a: f64, b: f64) -> f64 {
    let q = a / b;
    if suspicious(q) || suspicious(a) || (q == 0.0 && a != 0.0) {
        return if q.is_nan() {
            f64::INFINITY
        } else {
            q.next_up()
        };
    }
    let r = (-q).mul_add(b, a);
    let above = if b > 0.0 { r > 0.0 } else { r < 0.0 };
    if above {
        q.next_up()
    } else {
        q
    }
}

#[inline]
pub fn sqrt_down(a: f64) -> f64 {
    let s = a.sqrt();
    if suspicious(s) || suspicious(a) {
        return s.next_down().max(0.0);
    }
    let r = (-s).mul_add(s, a);
    if r < 0.0 {
        s.next_down()
    } else {
        s
    }
}

#[inline]
pub fn sqrt_up(a: f64) -> f64 {
    let s = a.sqrt();
    if suspicious(s) || suspicious(a) {
        return s.next_up();
    }
    let r = (-s).mul_add(s, a);
    if r > 0.0 {
        s.next_up()
    } else {
        s
    }
}
