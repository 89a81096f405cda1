//! Adaptive Gauss–Kronrod (7/15) quadrature on a finite interval.

use crate::scalar::Real;

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
    0.209_482_141_084_728,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult<R> {
    pub value: R,
    pub error: R,
    pub evaluations: usize,
}

fn kronrod<R: Real, F: Fn(R) -> R>(f: &F, lo: R, hi: R) -> (R, R) {
    let half = R::lit(0.5);
    let center = half * (lo + hi);
    let half_len = half * (hi - lo);
    let fc = f(center);
    let mut k = fc * R::lit(WGK[7]);
    let mut g = fc * R::lit(WG[3]);
    for i in 0..7 {
        let dx = half_len * R::lit(XGK[i]);
        let pair = f(center - dx) + f(center + dx);
        k = k + pair * R::lit(WGK[i]);
        if i % 2 == 1 {
            g = g + pair * R::lit(WG[i / 2]);
        }
    }
    (k * half_len, ((k - g) * half_len).abs())
}

/// Integrates `f` over `[lo, hi]` by bisection until the Kronrod–Gauss error
/// estimate drops below `max(abs_tol, rel_tol * |I|)`.
pub fn integrate<R: Real, F: Fn(R) -> R>(f: F, lo: R, hi: R, rel_tol: R, abs_tol: R) -> QuadResult<R> {
    const MAX_SEGMENTS: usize = 4000;
    if hi == lo {
        return QuadResult { value: R::zero(), error: R::zero(), evaluations: 0 };
    }
    let (value, error) = kronrod(&f, lo, hi);
    let mut segments = vec![(lo, hi, value, error)];
    let mut evaluations = 15;
    loop {
        let total: R = segments.iter().map(|s| s.2).sum();
        let err: R = segments.iter().map(|s| s.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) || segments.len() >= MAX_SEGMENTS {
            return QuadResult { value: total, error: err, evaluations };
        }
        let worst = segments
            .iter()
            .enumerate()
            .max_by(|a, b| a.1 .3.partial_cmp(&b.1 .3).unwrap_or(std::cmp::Ordering::Equal))
            .map(|(i, _)| i)
            .expect("non-empty");
        let (a, b, _, _) = segments.swap_remove(worst);
        let mid = R::lit(0.5) * (a + b);
        let (v1, e1) = kronrod(&f, a, mid);
        let (v2, e2) = kronrod(&f, mid, b);
        evaluations += 30;
        segments.push((a, mid, v1, e1));
        segments.push((mid, b, v2, e2));
    }
}
