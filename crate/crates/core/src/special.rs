//! Sine and cosine integrals and the special functions H, F, G of the
//! principal-value representation.

use num_complex::Complex64;
use std::f64::consts::FRAC_PI_2;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Sine integral Si(x) = int_0^x sin(u)/u du (odd in x).
pub fn si(x: f64) -> f64 {
    if x < 0.0 {
        return -si(-x);
    }
    if x <= 4.0 {
        si_series(x)
    } else {
        // Si(x) = pi/2 + Im E1(ix) for x > 0.
        FRAC_PI_2 + e1_continued_fraction(Complex64::new(0.0, x)).im
    }
}

/// Cosine integral Ci(x) = gamma + ln x + int_0^x (cos u - 1)/u du, x > 0.
pub fn ci(x: f64) -> f64 {
    assert!(x > 0.0, "Ci requires x > 0");
    if x <= 4.0 {
        ci_series(x)
    } else {
        -e1_continued_fraction(Complex64::new(0.0, x)).re
    }
}

fn si_series(x: f64) -> f64 {
    // sum_k (-1)^k x^{2k+1} / ((2k+1)(2k+1)!)
    let mut term = x; // x^{2k+1}/(2k+1)!
    let mut sum = x;
    let mut k = 1u32;
    loop {
        let n = 2.0 * k as f64;
        term *= -x * x / (n * (n + 1.0));
        let add = term / (n + 1.0);
        sum += add;
        if add.abs() < 1e-18 * (1.0 + sum.abs()) {
            return sum;
        }
        k += 1;
    }
}

fn ci_series(x: f64) -> f64 {
    // gamma + ln x + sum_{k>=1} (-1)^k x^{2k} / (2k (2k)!)
    let mut sum = 0.0;
    let mut term = 1.0; // x^{2k}/(2k)!
    let mut k = 1u32;
    loop {
        let n = 2.0 * k as f64;
        term *= -x * x / ((n - 1.0) * n);
        let add = term / n;
        sum += add;
        if add.abs() < 1e-18 * (1.0 + sum.abs()) {
            break;
        }
        k += 1;
    }
    EULER_GAMMA + x.ln() + sum
}

/// E1(z) by the modified-Lentz continued fraction; valid away from the
/// negative real axis, used here with z = ix, x > 4.
fn e1_continued_fraction(z: Complex64) -> Complex64 {
    // note: num-complex division squares |denominator|, so the Lentz "tiny"
    // must stay well inside the representable range
    let tiny = Complex64::new(1e-30, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let mut b = z + one;
    let mut c = one / tiny;
    let mut d = one / b;
    let mut h = d;
    for i in 1..400 {
        let a = Complex64::new(-((i * i) as f64), 0.0);
        b += Complex64::new(2.0, 0.0);
        let mut den = a * d + b;
        if den.norm() < 1e-30 {
            den = tiny;
        }
        d = one / den;
        c = b + a / c;
        if c.norm() < 1e-30 {
            c = tiny;
        }
        let delta = c * d;
        h *= delta;
        if (delta - one).norm() < 4e-16 {
            break;
        }
    }
    (-z).exp() * h
}

/// H(t) = int_0^1 sin(st)/s ds; odd, with limits +-pi/2 at +-infinity.
pub fn h_fn(t: f64) -> f64 {
    si(t)
}

/// F(t) = -int_{|t|}^infty sin(r)/r dr = Si(|t|) - pi/2; even, vanishing at
/// infinity. The proof-side sign is adopted: F(0) = -pi/2.
pub fn f_fn(t: f64) -> f64 {
    si(t.abs()) - FRAC_PI_2
}

/// G_{s,c}(t) = sgn(t) sin(st) F(ct), c > 0.
pub fn g_fn(s: f64, c: f64, t: f64) -> f64 {
    assert!(c > 0.0, "G requires c > 0");
    let sgn = if t > 0.0 {
        1.0
    } else if t < 0.0 {
        -1.0
    } else {
        0.0
    };
    sgn * (s * t).sin() * f_fn(c * t)
}

/// int_T^infty cos(w r) / r^2 dr for T > 0, w real (even in w).
///
/// Integration by parts: cos(wT)/T - |w| (pi/2 - Si(|w| T)).
pub fn cos_tail_over_r2(w: f64, t_from: f64) -> f64 {
    assert!(t_from > 0.0);
    let w = w.abs();
    if w == 0.0 {
        return 1.0 / t_from;
    }
    (w * t_from).cos() / t_from - w * (FRAC_PI_2 - si(w * t_from))
}

/// int_T^infty cos(w s) / (lambda^2 + s^2) ds via the expansion
/// sum_k (-1)^k lambda^{2k} I_{2k+2}, valid for |lambda| < T.
///
/// I_m = int_T^infty cos(ws) s^{-m} ds and J_m the sine analogue satisfy the
/// downward-coupled recurrences
///   I_m = cos(wT)/((m-1) T^{m-1}) - w/(m-1) * J_{m-1},
///   J_m = sin(wT)/((m-1) T^{m-1}) + w/(m-1) * I_{m-1},
/// anchored at I_1 = -Ci(wT), J_1 = pi/2 - Si(wT) (w > 0).
pub fn poisson_kernel_tail(w: f64, lambda: Complex64, t_from: f64) -> Complex64 {
    let w = w.abs();
    let terms = 24usize;
    assert!(lambda.norm() < 0.75 * t_from, "tail expansion needs T > |lambda|");
    let max_m = 2 * terms + 2;
    let mut i_m = vec![0.0f64; max_m + 1];
    let mut j_m = vec![0.0f64; max_m + 1];
    if w == 0.0 {
        for m in 2..=max_m {
            i_m[m] = 1.0 / ((m as f64 - 1.0) * t_from.powi(m as i32 - 1));
        }
    } else {
        i_m[1] = -ci(w * t_from);
        j_m[1] = FRAC_PI_2 - si(w * t_from);
        let (s_wt, c_wt) = (w * t_from).sin_cos();
        for m in 2..=max_m {
            let km = m as f64 - 1.0;
            let p = t_from.powi(m as i32 - 1);
            i_m[m] = c_wt / (km * p) - w / km * j_m[m - 1];
            j_m[m] = s_wt / (km * p) + w / km * i_m[m - 1];
        }
    }
    let mut acc = Complex64::new(0.0, 0.0);
    let mut lam_pow = Complex64::new(1.0, 0.0);
    for k in 0..terms {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * lam_pow * i_m[2 * k + 2];
        lam_pow *= lambda * lambda;
        if lam_pow.norm() * i_m.get(2 * k + 4).copied().unwrap_or(0.0).abs() < 1e-18 {
            break;
        }
    }
    acc
}

/// Same integral as [`poisson_kernel_tail`] for the oscillatory regime
/// w |lambda| > 5, where the power-series route amplifies roundoff like
/// (w |lambda|)^{2k} / (2k+1)!.
///
/// Bridge quadrature carries the integral from T to
/// T2 = max(T, |lambda| + 40/w); there an integration-by-parts expansion
///   int_{T2}^infty cos(ws) f(s) ds =
///     sum_j (-1/w^2)^j [ -sin(w T2) f^{(2j)}(T2)/w - cos(w T2) f^{(2j+1)}(T2)/w^2 ]
/// with f(s) = 1/(lambda^2 + s^2) converges at rate k / (w (T2 - |lambda|)),
/// the derivatives coming stably from partial fractions.
pub fn poisson_kernel_tail_osc(w: f64, lambda: Complex64, t_from: f64) -> Complex64 {
    let w = w.abs();
    assert!(w > 0.0, "oscillatory tail needs w > 0");
    let t2 = t_from.max(lambda.norm() + 40.0 / w);
    let mut acc = Complex64::new(0.0, 0.0);
    if t2 > t_from {
        let cap = (std::f64::consts::PI / (2.0 * w)).min(2.0);
        for (s, wt) in crate::quad::composite_nodes(crate::quad::gl16(), t_from, t2, cap) {
            acc += wt * (w * s).cos() / (lambda * lambda + s * s);
        }
    }
    // f^{(k)}(t2) = (-1)^k k! / (2 i lambda) [ (t2 - i lambda)^{-(k+1)} - (t2 + i lambda)^{-(k+1)} ]
    let i = Complex64::new(0.0, 1.0);
    let (dm, dp) = (t2 - i * lambda, t2 + i * lambda);
    let pref = 1.0 / (2.0 * i * lambda);
    let deriv = |k: u32| -> Complex64 {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let mut fact = 1.0;
        for j in 2..=k as u64 {
            fact *= j as f64;
        }
        sign * fact * pref * (dm.powi(-(k as i32 + 1)) - dp.powi(-(k as i32 + 1)))
    };
    let (s_wt, c_wt) = (w * t2).sin_cos();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut scale = 1.0f64; // (1/w^2)^j with alternating sign folded in below
    let mut last = f64::INFINITY;
    for j in 0u32..16 {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let term = sign * scale * (-s_wt * deriv(2 * j) / w - c_wt * deriv(2 * j + 1) / (w * w));
        let size = term.norm();
        if size > last {
            break; // asymptotic series turned; stop at the smallest term
        }
        sum += term;
        last = size;
        if size < 1e-20 {
            break;
        }
        scale /= w * w;
    }
    acc + sum
}

/// Dispatch between the power-series and oscillatory tail routes.
pub fn poisson_tail_auto(w: f64, lambda: Complex64, t_from: f64) -> Complex64 {
    if w.abs() * lambda.norm() <= 5.0 {
        poisson_kernel_tail(w, lambda, t_from)
    } else {
        poisson_kernel_tail_osc(w, lambda, t_from)
    }
}
