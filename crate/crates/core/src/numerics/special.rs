//! Confluent hypergeometric and modified Bessel functions.
//!
//! Only what the channel model needs: 1F1 at moderate arguments (the
//! large-scale covariance integrand) and K_nu for nu = 5/6 class orders
//! (the small-scale covariance factor).

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

const EPS: f64 = 1e-16;
const MAX_TERMS: usize = 700;

/// Kummer confluent hypergeometric function 1F1(a; c; z).
///
/// Series summation with term-ratio stopping for |z| <= 50 (negative
/// arguments go through the Kummer transform so the series has no
/// alternating cancellation); asymptotic expansion beyond.
pub fn confluent_hypergeometric_1f1(a: f64, c: f64, z: f64) -> Result<f64> {
    if !z.is_finite() {
        return Err(Error::Numeric("1F1 argument must be finite".into()));
    }
    if c <= 0.0 && c == c.floor() {
        return Err(Error::Numeric(format!("1F1 pole: c = {c} is a non-positive integer")));
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    if z.abs() <= 50.0 {
        if z > 0.0 {
            kummer_series(a, c, z)
        } else {
            // 1F1(a;c;z) = e^z 1F1(c-a;c;-z)
            Ok(z.exp() * kummer_series(c - a, c, -z)?)
        }
    } else if z < 0.0 {
        asymptotic_large_negative(a, c, z)
    } else {
        asymptotic_large_positive(a, c, z)
    }
}

fn kummer_series(a: f64, c: f64, z: f64) -> Result<f64> {
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    let mut comp = 0.0f64; // Kahan carry
    let mut small_streak = 0;
    for n in 0..MAX_TERMS {
        let nf = n as f64;
        term *= (a + nf) / (c + nf) * z / (nf + 1.0);
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if term.abs() <= EPS * sum.abs() {
            small_streak += 1;
            if small_streak >= 2 {
                return Ok(sum);
            }
        } else {
            small_streak = 0;
        }
    }
    Err(Error::Numeric(format!("1F1 series did not converge for a={a} c={c} z={z}")))
}

/// z -> -inf branch: Gamma(c)/Gamma(c-a) (-z)^{-a} 2F0(a, a-c+1; ; 1/z).
fn asymptotic_large_negative(a: f64, c: f64, z: f64) -> Result<f64> {
    let cma = c - a;
    if cma <= 0.0 && cma == cma.floor() {
        // Gamma pole in the prefactor; fall back on the transformed series,
        // which still converges, just with more terms.
        return Ok(z.exp() * kummer_series(cma, c, -z)?);
    }
    let mz = -z;
    let pref = gamma(c) / gamma(cma) * mz.powf(-a);
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    let mut prev = f64::INFINITY;
    for s in 0..60 {
        let sf = s as f64;
        let next = term * (a + sf) * (a - c + 1.0 + sf) / ((sf + 1.0) * mz);
        if next.abs() >= prev.abs() {
            break; // truncate the divergent tail at its smallest term
        }
        sum += next;
        prev = next;
        term = next;
        if next.abs() <= EPS * sum.abs() {
            break;
        }
    }
    Ok(pref * sum)
}

/// z -> +inf branch: Gamma(c)/Gamma(a) e^z z^{a-c} 2F0(c-a, 1-a; ; 1/z).
fn asymptotic_large_positive(a: f64, c: f64, z: f64) -> Result<f64> {
    let pref = gamma(c) / gamma(a) * z.exp() * z.powf(a - c);
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    let mut prev = f64::INFINITY;
    for s in 0..60 {
        let sf = s as f64;
        let next = term * (c - a + sf) * (1.0 - a + sf) / ((sf + 1.0) * z);
        if next.abs() >= prev.abs() {
            break;
        }
        sum += next;
        prev = next;
        term = next;
        if next.abs() <= EPS * sum.abs() {
            break;
        }
    }
    Ok(pref * sum)
}

/// Modified Bessel function of the second kind K_nu(x), x > 0.
///
/// Below x = 2 the reflection through the I_nu series is used; above,
/// the Steed continued fraction with upward order recurrence. Near-integer
/// orders at small x are outside the supported domain (the channel model
/// only needs nu = 5/6 and half-integer cross-checks).
pub fn bessel_k(order: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Numeric(format!("bessel_k domain: x = {x} must be > 0")));
    }
    let nu = order.abs(); // K_{-nu} = K_nu
    if x < 2.0 {
        let dist = (nu - nu.round()).abs();
        if dist < 1e-8 {
            return Err(Error::Numeric(format!(
                "bessel_k: near-integer order {nu} unsupported for x < 2"
            )));
        }
        bessel_k_series(nu, x)
    } else {
        bessel_k_cf2(nu, x)
    }
}

/// K_nu = pi/2 (I_{-nu} - I_nu)/sin(nu pi); fine for x < 2 where the
/// cancellation between the two I series stays below ~e^{2x} ulps.
fn bessel_k_series(nu: f64, x: f64) -> Result<f64> {
    let i_pos = bessel_i_series(nu, x);
    let i_neg = bessel_i_series(-nu, x);
    let s = (nu * std::f64::consts::PI).sin();
    Ok(std::f64::consts::PI / 2.0 * (i_neg - i_pos) / s)
}

fn bessel_i_series(nu: f64, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = half.powf(nu) / gamma(nu + 1.0);
    let mut sum = term;
    let q = half * half;
    for k in 1..200 {
        let kf = k as f64;
        term *= q / (kf * (kf + nu));
        sum += term;
        if term.abs() <= EPS * sum.abs() {
            break;
        }
    }
    sum
}

/// Steed continued fraction (CF2) for K_mu and K_{mu+1} with
/// mu in [-1/2, 1/2], then upward recurrence to the target order.
fn bessel_k_cf2(nu: f64, x: f64) -> Result<f64> {
    let nl = (nu + 0.5).floor() as i64;
    let mu = nu - nl as f64;
    let a1 = 0.25 - mu * mu;

    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0f64;
    let mut q2 = 1.0f64;
    let mut a = -a1;
    let mut c = a1;
    let mut q = c;
    let mut s = 1.0 + q * delh;
    let mut converged = false;
    for i in 2..10000 {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (a * d + b);
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numeric(format!("bessel_k CF2 did not converge at nu={nu} x={x}")));
    }
    h = a1 * h;

    let mut k_mu = (std::f64::consts::PI / (2.0 * x)).sqrt() * (-x).exp() / s;
    let mut k_mu1 = k_mu * (mu + x + 0.5 - h) / x;
    for j in 0..nl {
        let m = mu + j as f64;
        let k_next = k_mu + 2.0 * (m + 1.0) * k_mu1 / x;
        k_mu = k_mu1;
        k_mu1 = k_next;
    }
    Ok(k_mu)
}
