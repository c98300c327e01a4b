//! Adaptive Gauss–Kronrod (7, 15) quadrature, with a nested variant for
//! iterated integrals over regions described by per-coordinate sections.

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
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_DEPTH: u32 = 40;

fn gk15(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Integrates `f` over `[a, b]` to within `max(abs_tol, rel_tol * |I|)`
/// by recursive bisection.
pub fn integrate(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let (whole, err) = gk15(f, a, b);
    refine(f, a, b, whole, err, abs_tol, rel_tol, 0)
}

#[allow(clippy::too_many_arguments)]
fn refine(
    f: &mut dyn FnMut(f64) -> f64,
    a: f64,
    b: f64,
    whole: f64,
    err: f64,
    abs_tol: f64,
    rel_tol: f64,
    depth: u32,
) -> f64 {
    if err <= abs_tol.max(rel_tol * whole.abs()) || depth >= MAX_DEPTH {
        return whole;
    }
    let m = 0.5 * (a + b);
    let (left, el) = gk15(f, a, m);
    let (right, er) = gk15(f, m, b);
    let half_abs = 0.5 * abs_tol;
    refine(f, a, m, left, el, half_abs, rel_tol, depth + 1) + refine(f, m, b, right, er, half_abs, rel_tol, depth + 1)
}

/// Iterated integral of `f` over `d` coordinates. `bounds(k, prefix)` gives
/// the interval for coordinate `k` given the first `k` coordinates.
pub fn integrate_nested(
    d: usize,
    bounds: &dyn Fn(usize, &[f64]) -> (f64, f64),
    f: &dyn Fn(&[f64]) -> f64,
    abs_tol: f64,
    rel_tol: f64,
) -> f64 {
    let mut point = Vec::with_capacity(d);
    nested(d, bounds, f, abs_tol, rel_tol, &mut point)
}

fn nested(
    d: usize,
    bounds: &dyn Fn(usize, &[f64]) -> (f64, f64),
    f: &dyn Fn(&[f64]) -> f64,
    abs_tol: f64,
    rel_tol: f64,
    point: &mut Vec<f64>,
) -> f64 {
    let k = point.len();
    if k == d {
        return f(point);
    }
    let (lo, hi) = bounds(k, point);
    let mut inner = |x: f64| {
        point.push(x);
        let v = nested(d, bounds, f, abs_tol, rel_tol, point);
        point.pop();
        v
    };
    integrate(&mut inner, lo, hi, abs_tol, rel_tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let v = integrate(&mut |x| x.powi(5) - 3.0 * x * x, -1.0, 2.0, 1e-14, 1e-14);
        assert!((v - (63.0 / 6.0 - 9.0)).abs() < 1e-12);
    }

    #[test]
    fn gaussian_integral() {
        let v = integrate(&mut |x: f64| (-x * x).exp(), -10.0, 10.0, 1e-13, 1e-13);
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-11);
    }

    #[test]
    fn empty_interval() {
        assert_eq!(integrate(&mut |_| 1.0, 1.0, 1.0, 1e-10, 1e-10), 0.0);
    }

    #[test]
    fn unit_disc_area() {
        let bounds = |k: usize, p: &[f64]| {
            if k == 0 {
                (-1.0, 1.0)
            } else {
                let r = (1.0 - p[0] * p[0]).max(0.0).sqrt();
                (-r, r)
            }
        };
        let area = integrate_nested(2, &bounds, &|_| 1.0, 1e-12, 1e-10);
        assert!((area - std::f64::consts::PI).abs() < 1e-7, "{area}");
    }
}
