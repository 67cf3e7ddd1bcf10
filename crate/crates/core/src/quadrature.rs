//! Adaptive Gauss–Kronrod quadrature and series acceleration, used as an
//! independent oracle for closed-form contour integrals.

// 15-point Kronrod nodes on [0, 1] (symmetric about 0) with the embedded
// 7-point Gauss weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod_15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, &x) in XGK.iter().take(7).enumerate() {
        let pair = f(center - half * x) + f(center + half * x);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive Gauss–Kronrod integral of `f` over `[a, b]` to absolute
/// tolerance `tol`. Returns the value and the error estimate.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let mut intervals = vec![(a, b, kronrod_15(&f, a, b))];
    for _ in 0..2000 {
        let total_err: f64 = intervals.iter().map(|(_, _, (_, e))| e).sum();
        if total_err <= tol {
            break;
        }
        let (worst, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.total_cmp(&y.1 .2 .1))
            .unwrap();
        let (lo, hi, _) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        intervals.push((lo, mid, kronrod_15(&f, lo, mid)));
        intervals.push((mid, hi, kronrod_15(&f, mid, hi)));
    }
    intervals
        .iter()
        .fold((0.0, 0.0), |(v, e), (_, _, (vi, ei))| (v + vi, e + ei))
}

/// Wynn's epsilon extrapolation of a sequence of partial sums.
pub fn wynn_epsilon(partial_sums: &[f64]) -> f64 {
    let n = partial_sums.len();
    if n < 3 {
        return partial_sums.last().copied().unwrap_or(0.0);
    }
    let mut prev = vec![0.0; n + 1];
    let mut cur: Vec<f64> = partial_sums.to_vec();
    let mut best = *partial_sums.last().unwrap();
    let mut column = 0;
    while cur.len() > 1 {
        let next: Vec<f64> = (0..cur.len() - 1)
            .map(|i| {
                let diff = cur[i + 1] - cur[i];
                let base = prev.get(i + 1).copied().unwrap_or(0.0);
                if diff == 0.0 {
                    f64::INFINITY
                } else {
                    base + 1.0 / diff
                }
            })
            .collect();
        prev = cur;
        cur = next;
        column += 1;
        // Even columns carry the extrapolated limits.
        if column % 2 == 0 {
            if let Some(&v) = cur.last() {
                if v.is_finite() {
                    best = v;
                } else {
                    break;
                }
            }
        }
    }
    best
}

/// `∫_0^∞ f` for an integrand oscillating with half-period `half_period`,
/// summed interval by interval and accelerated with Wynn's epsilon.
pub fn integrate_oscillatory(f: impl Fn(f64) -> f64, half_period: f64, terms: usize, tol: f64) -> f64 {
    let mut partial = Vec::with_capacity(terms);
    let mut acc = 0.0;
    for k in 0..terms {
        let a = k as f64 * half_period;
        let (v, _) = integrate(&f, a, a + half_period, tol);
        acc += v;
        partial.push(acc);
    }
    wynn_epsilon(&partial)
}

/// `∫_0^∞ f` for a non-oscillating integrand, via `p = s/(1−s)`.
pub fn integrate_half_line(f: impl Fn(f64) -> f64, tol: f64) -> f64 {
    let g = |s: f64| {
        if s >= 1.0 {
            return 0.0;
        }
        let one_minus = 1.0 - s;
        f(s / one_minus) / (one_minus * one_minus)
    };
    integrate(g, 0.0, 1.0, tol).0
}
