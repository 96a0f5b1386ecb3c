//! Adaptive Gauss–Kronrod quadrature on finite intervals.
//!
//! Used as the independent numerical route against which closed-form
//! potentials, energies and rate constants are checked.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub evals: usize,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
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

/// Integrate `f` over `[a, b]` to within `max(abs_tol, rel_tol * |I|)`.
///
/// Subintervals are bisected greedily (largest error first) up to a budget
/// of 4000 panels; the returned `error` is the summed Kronrod estimate.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Quadrature {
    if a == b {
        return Quadrature { value: 0.0, error: 0.0, evals: 0 };
    }
    let (v, e) = gk15(&f, a, b);
    let mut panels = vec![(a, b, v, e)];
    let mut evals = 15;
    loop {
        let total: f64 = panels.iter().map(|p| p.2).sum();
        let err: f64 = panels.iter().map(|p| p.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) || panels.len() >= 4000 {
            return Quadrature { value: total, error: err, evals };
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("nonempty");
        let (lo, hi, _, _) = panels.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // interval cannot be split further in floating point
            return Quadrature { value: total, error: err, evals };
        }
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        evals += 30;
        panels.push((lo, mid, v1, e1));
        panels.push((mid, hi, v2, e2));
    }
}

/// Integrate over `[a, b]` split at the given interior breakpoints (kinks of `f`).
pub fn integrate_pieces<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
) -> f64 {
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    pts.push(a);
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts.windows(2)
        .map(|w| integrate(&f, w[0], w[1], abs_tol, rel_tol).value)
        .sum()
}

/// Periodic trapezoidal rule for the mean of `f` over one period `[0, 2π)`.
pub fn circle_mean<F: Fn(f64) -> f64>(f: F, nodes: usize) -> f64 {
    let h = std::f64::consts::TAU / nodes as f64;
    (0..nodes).map(|j| f(j as f64 * h)).sum::<f64>() / nodes as f64
}

/// Gauss–Laguerre rule for `∫_0^∞ f(u) e^{-u} du`, exact for polynomials of
/// degree `< 2n`. Returns `(node, log weight)` pairs.
///
/// Nodes come from the Jacobi matrix and are polished by Newton on `L_n`;
/// weights use `x / ((n+1) L_{n+1}(x))²`, which stays accurate where the
/// weights are far below machine epsilon.
pub fn gauss_laguerre(n: usize) -> Vec<(f64, f64)> {
    use nalgebra::DMatrix;
    let mut j = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        j[(i, i)] = (2 * i + 1) as f64;
        if i + 1 < n {
            j[(i, i + 1)] = (i + 1) as f64;
            j[(i + 1, i)] = (i + 1) as f64;
        }
    }
    let mut nodes: Vec<f64> = j.symmetric_eigen().eigenvalues.iter().copied().collect();
    nodes.sort_by(f64::total_cmp);
    // L_k(x) by the three-term recurrence; returns (L_n, L_{n-1})
    let lag = |m: usize, x: f64| {
        let (mut a, mut b) = (1.0, 1.0 - x);
        if m == 0 {
            return (a, 0.0);
        }
        for k in 1..m {
            let c = ((2 * k + 1) as f64 - x) * b / (k + 1) as f64 - k as f64 * a / (k + 1) as f64;
            a = b;
            b = c;
        }
        (b, a)
    };
    nodes
        .into_iter()
        .map(|mut x| {
            for _ in 0..3 {
                let (ln, lm) = lag(n, x);
                // x L_n' = n (L_n - L_{n-1})
                let d = n as f64 * (ln - lm) / x;
                if d != 0.0 {
                    x -= ln / d;
                }
            }
            let (lnp1, _) = lag(n + 1, x);
            let lw = x.ln() - 2.0 * ((n + 1) as f64 * lnp1.abs()).ln();
            (x, lw)
        })
        .collect()
}
