//! Deterministic scalar numerics shared across the crate.
//!
//! Provides the error-function pair and standard normal density/CDF,
//! Owen's T function, adaptive Simpson quadrature, percentile and
//! Kolmogorov-Smirnov helpers, and small dense linear algebra for the
//! branch-probability and hedging systems.

use std::f64::consts::PI;

/// `1/sqrt(2*pi)`.
pub const FRAC_1_SQRT_2PI: f64 = 0.39894228040143268;

/// `1/sqrt(pi)`.
pub const FRAC_1_SQRT_PI: f64 = 0.56418958354775629;

// Rational coefficients for the three-region error-function evaluation
// (Cody's Chebyshev-derived minimax fits; relative error ~1e-16).
const ERF_A: [f64; 5] = [
    3.16112374387056560e0,
    1.13864154151050156e2,
    3.77485237685302021e2,
    3.20937758913846947e3,
    1.85777706184603153e-1,
];
const ERF_B: [f64; 4] = [
    2.36012909523441209e1,
    2.44024637934444173e2,
    1.28261652607737228e3,
    2.84423683343917062e3,
];
const ERFC_C: [f64; 9] = [
    5.64188496988670089e-1,
    8.88314979438837594e0,
    6.61191906371416295e1,
    2.98635138197400131e2,
    8.81952221241769090e2,
    1.71204761263407058e3,
    2.05107837782607147e3,
    1.23033935479799725e3,
    2.15311535474403846e-8,
];
const ERFC_D: [f64; 8] = [
    1.57449261107098347e1,
    1.17693950891312499e2,
    5.37181101862009858e2,
    1.62138957456669019e3,
    3.29079923573345963e3,
    4.36261909014324716e3,
    3.43936767414372164e3,
    1.23033935480374942e3,
];
const ERFC_P: [f64; 6] = [
    3.05326634961232344e-1,
    3.60344899949804439e-1,
    1.25781726111229246e-1,
    1.60837851487422766e-2,
    6.58749161529837803e-4,
    1.63153871373020978e-2,
];
const ERFC_Q: [f64; 5] = [
    2.56852019228982242e0,
    1.87295284992346047e0,
    5.27905102951428412e-1,
    6.05183413124413191e-2,
    2.33520497626869185e-3,
];

/// `exp(-y^2)` split into an exact-square part and a small correction so
/// the relative error stays near one ulp for large `y`.
fn exp_neg_sq(y: f64) -> f64 {
    let ysq = (y * 16.0).trunc() / 16.0;
    let del = (y - ysq) * (y + ysq);
    (-ysq * ysq).exp() * (-del).exp()
}

fn erf_small(x: f64) -> f64 {
    let z = x * x;
    let num = (((ERF_A[4] * z + ERF_A[0]) * z + ERF_A[1]) * z + ERF_A[2]) * z + ERF_A[3];
    let den = (((z + ERF_B[0]) * z + ERF_B[1]) * z + ERF_B[2]) * z + ERF_B[3];
    x * num / den
}

fn erfc_mid(y: f64) -> f64 {
    let mut num = ERFC_C[8] * y;
    let mut den = y;
    for i in 0..7 {
        num = (num + ERFC_C[i]) * y;
        den = (den + ERFC_D[i]) * y;
    }
    exp_neg_sq(y) * (num + ERFC_C[7]) / (den + ERFC_D[7])
}

fn erfc_tail(y: f64) -> f64 {
    if y >= 26.543 {
        return 0.0;
    }
    let z = 1.0 / (y * y);
    let mut num = ERFC_P[5] * z;
    let mut den = z;
    for i in 0..4 {
        num = (num + ERFC_P[i]) * z;
        den = (den + ERFC_Q[i]) * z;
    }
    let r = z * (num + ERFC_P[4]) / (den + ERFC_Q[4]);
    exp_neg_sq(y) * (FRAC_1_SQRT_PI - r) / y
}

/// Error function `erf(x)`.
pub fn erf(x: f64) -> f64 {
    let y = x.abs();
    if y <= 0.46875 {
        erf_small(x)
    } else {
        let e = if y <= 4.0 { erfc_mid(y) } else { erfc_tail(y) };
        if x < 0.0 {
            e - 1.0
        } else {
            1.0 - e
        }
    }
}

/// Complementary error function `erfc(x) = 1 - erf(x)`.
pub fn erfc(x: f64) -> f64 {
    let y = x.abs();
    if y <= 0.46875 {
        return 1.0 - erf_small(x);
    }
    let e = if y <= 4.0 { erfc_mid(y) } else { erfc_tail(y) };
    if x < 0.0 {
        2.0 - e
    } else {
        e
    }
}

/// Standard normal density `phi(x)`.
pub fn norm_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal CDF `Phi(x)`, absolute error below 1e-15.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Owen's T function.
///
/// ```text
/// T(h, a) = 1/(2 pi) * Int_0^a exp(-h^2 (1 + x^2) / 2) / (1 + x^2) dx
/// ```
///
/// Evaluated by reducing to `|a| <= 1` with the standard identity
/// `T(h, a) = Phi(h)/2 + Phi(ah)/2 - Phi(h) Phi(ah) - T(ah, 1/a)` and
/// integrating adaptively. Absolute error is below 1e-14.
pub fn owens_t(h: f64, a: f64) -> f64 {
    // T is even in h and odd in a.
    let sign = if a < 0.0 { -1.0 } else { 1.0 };
    let (h, a) = (h.abs(), a.abs());
    let t = if a <= 1.0 {
        owens_t_unit(h, a)
    } else {
        let ah = a * h;
        let (ph, pah) = (norm_cdf(h), norm_cdf(ah));
        0.5 * (ph + pah) - ph * pah - owens_t_unit(ah, 1.0 / a)
    };
    sign * t
}

fn owens_t_unit(h: f64, a: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    let hh = h * h;
    let f = |x: f64| (-0.5 * hh * (1.0 + x * x)).exp() / (1.0 + x * x);
    adaptive_simpson(&f, 0.0, a, 1e-16, 30) / (2.0 * PI)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` with absolute error
/// target `tol`. Recursion stops after `max_depth` bisections even if the
/// local error estimate is still above its share of the budget.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, max_depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let err = left + right - whole;
    if depth == 0 || err.abs() <= 15.0 * tol {
        left + right + err / 15.0
    } else {
        simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Linear-interpolation percentile (the convention where the `p`-th
/// percentile of `n` points sits at rank `(n-1) * p/100`).
///
/// `sorted` must be ascending and nonempty; `p` must lie in `[0, 100]`.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty slice");
    assert!((0.0..=100.0).contains(&p), "percentile rank out of range");
    let h = (sorted.len() - 1) as f64 * p / 100.0;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// One-sample Kolmogorov-Smirnov statistic `sup_x |F_n(x) - F(x)|`
/// against the reference CDF `cdf`. `samples` must be sorted ascending.
pub fn ks_one_sample<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let n = samples.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in samples.iter().enumerate() {
        let fx = cdf(x);
        d = d.max(fx - i as f64 / n).max((i as f64 + 1.0) / n - fx);
    }
    d
}

/// Two-sample Kolmogorov-Smirnov statistic `sup_x |F_n(x) - G_m(x)|`.
/// Both slices must be sorted ascending.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Two-sample KS statistic scaled by `sqrt(n m / (n + m))`, comparable to
/// the asymptotic Kolmogorov critical values (1.6276 at the 1% level).
pub fn ks_two_sample_scaled(a: &[f64], b: &[f64]) -> f64 {
    let (n, m) = (a.len() as f64, b.len() as f64);
    ks_two_sample(a, b) * (n * m / (n + m)).sqrt()
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
/// Returns `None` if a pivot is exactly zero (structurally singular).
pub fn solve_small<const N: usize>(a: [[f64; N]; N], b: [f64; N]) -> Option<[f64; N]> {
    let mut m = a;
    let mut x = b;
    for col in 0..N {
        let mut piv = col;
        for r in col + 1..N {
            if m[r][col].abs() > m[piv][col].abs() {
                piv = r;
            }
        }
        if m[piv][col] == 0.0 {
            return None;
        }
        m.swap(col, piv);
        x.swap(col, piv);
        for r in col + 1..N {
            let f = m[r][col] / m[col][col];
            if f != 0.0 {
                for c in col..N {
                    m[r][c] -= f * m[col][c];
                }
                x[r] -= f * x[col];
            }
        }
    }
    for col in (0..N).rev() {
        let mut s = x[col];
        for c in col + 1..N {
            s -= m[col][c] * x[c];
        }
        x[col] = s / m[col][col];
    }
    Some(x)
}

/// Determinant of a 3x3 matrix (cofactor expansion).
pub fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Determinant of a 4x4 matrix (cofactor expansion along the first row).
pub fn det4(m: [[f64; 4]; 4]) -> f64 {
    let minor = |col: usize| {
        let mut sub = [[0.0; 3]; 3];
        for (r, row) in m[1..].iter().enumerate() {
            let mut c3 = 0;
            for (c, &v) in row.iter().enumerate() {
                if c != col {
                    sub[r][c3] = v;
                    c3 += 1;
                }
            }
        }
        det3(sub)
    };
    m[0][0] * minor(0) - m[0][1] * minor(1) + m[0][2] * minor(2) - m[0][3] * minor(3)
}

/// Sample mean of a slice.
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased (n-1 denominator) sample variance.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}
