//! Gauss–Kronrod quadrature: adaptive integration, outward tail summation,
//! principal values, and fixed composite panels for repeated transforms.

use crate::error::{Error, Result};

// Kronrod 21-point abscissae (positive half, descending) and weights.
const XK21: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.0,
];
const WK21: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077717084590000,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];
// 10-point Gauss weights for XK21[1], XK21[3], ..., XK21[9].
const WG10: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

const XK15: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WK15: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
// 7-point Gauss weights for XK15[1], XK15[3], XK15[5] and the centre.
const WG7: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_err: f64,
}

impl std::ops::Add for QuadResult {
    type Output = QuadResult;
    fn add(self, rhs: QuadResult) -> QuadResult {
        QuadResult { value: self.value + rhs.value, abs_err: self.abs_err + rhs.abs_err }
    }
}

fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> QuadResult {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WK21[10];
    let mut g = 0.0;
    for i in 0..10 {
        let x = h * XK21[i];
        let s = f(c - x) + f(c + x);
        k += WK21[i] * s;
        if i % 2 == 1 {
            g += WG10[i / 2] * s;
        }
    }
    QuadResult { value: k * h, abs_err: ((k - g) * h).abs() }
}

/// Adaptive Gauss–Kronrod (10/21) integration of `f` over [a, b].
///
/// Bisects the interval with the largest error estimate until the total error is
/// below `max(abs_tol, rel_tol·|I|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<QuadResult> {
    const MAX_INTERVALS: usize = 4000;
    if a == b {
        return Ok(QuadResult { value: 0.0, abs_err: 0.0 });
    }
    let mut intervals = vec![(a, b, gk21(&f, a, b))];
    loop {
        let (value, err) = intervals
            .iter()
            .fold((0.0, 0.0), |(v, e), (_, _, r)| (v + r.value, e + r.abs_err));
        let target = abs_tol.max(rel_tol * value.abs());
        if !value.is_finite() {
            return Err(Error::Quadrature { achieved: f64::INFINITY, requested: target });
        }
        if err <= target {
            return Ok(QuadResult { value, abs_err: err });
        }
        if intervals.len() >= MAX_INTERVALS {
            return Err(Error::Quadrature { achieved: err, requested: target });
        }
        let (idx, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2.abs_err.total_cmp(&y.1 .2.abs_err))
            .expect("non-empty");
        let (lo, hi, _) = intervals.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo.min(hi) || mid >= lo.max(hi) {
            // interval can no longer be split in floating point
            return Err(Error::Quadrature { achieved: err, requested: target });
        }
        intervals.push((lo, mid, gk21(&f, lo, mid)));
        intervals.push((mid, hi, gk21(&f, mid, hi)));
    }
}

/// Integrates a decaying integrand from `start` outward in chunks of signed length
/// `step` until two consecutive chunks contribute less than `abs_tol`.
///
/// Fails if `max_extent` is reached while the tail is still significant.
pub fn integrate_outward<F: Fn(f64) -> f64>(
    f: F,
    start: f64,
    step: f64,
    abs_tol: f64,
    max_extent: f64,
) -> Result<QuadResult> {
    let mut total = QuadResult { value: 0.0, abs_err: 0.0 };
    let mut lo = start;
    let mut quiet = 0;
    while (lo - start).abs() < max_extent {
        let hi = lo + step;
        let (a, b) = if step > 0.0 { (lo, hi) } else { (hi, lo) };
        let chunk = integrate(&f, a, b, 0.1 * abs_tol, 1e-12)?;
        total = total + chunk;
        if chunk.value.abs() < abs_tol {
            quiet += 1;
            if quiet >= 2 {
                return Ok(total);
            }
        } else {
            quiet = 0;
        }
        lo = hi;
    }
    Err(Error::Quadrature { achieved: f64::NAN, requested: abs_tol })
}

/// Principal value p.v.∫ g(x)/(x0 − x) dx over the whole real line.
///
/// On the symmetric window [x0 − half_width, x0 + half_width] the singular kernel
/// is folded into ∫₀ᴸ [g(x0−u) − g(x0+u)]/u du, which is regular; the outer tails
/// are summed outward in chunks of `half_width` up to `max_extent`.
pub fn principal_value<G: Fn(f64) -> f64>(
    g: G,
    x0: f64,
    half_width: f64,
    abs_tol: f64,
    max_extent: f64,
) -> Result<QuadResult> {
    let core = integrate(
        |u| if u == 0.0 { 0.0 } else { (g(x0 - u) - g(x0 + u)) / u },
        0.0,
        half_width,
        0.25 * abs_tol,
        1e-12,
    )?;
    let right = integrate_outward(|x| g(x) / (x0 - x), x0 + half_width, half_width, 0.25 * abs_tol, max_extent)?;
    let left = integrate_outward(|x| g(x) / (x0 - x), x0 - half_width, -half_width, 0.25 * abs_tol, max_extent)?;
    Ok(core + right + left)
}

/// Composite Gauss–Kronrod (7/15) nodes on [0, len], reused for many integrands
/// sampled at the same points.
#[derive(Debug, Clone)]
pub struct Panels {
    pub nodes: Vec<f64>,
    /// Kronrod weights.
    pub wk: Vec<f64>,
    /// Embedded Gauss weights (zero on Kronrod-only nodes).
    pub wg: Vec<f64>,
}

impl Panels {
    pub fn new(len: f64, width: f64) -> Self {
        let n_panels = (len / width).ceil().max(1.0) as usize;
        let w = len / n_panels as f64;
        let mut nodes = Vec::with_capacity(15 * n_panels);
        let mut wk = Vec::with_capacity(15 * n_panels);
        let mut wg = Vec::with_capacity(15 * n_panels);
        for p in 0..n_panels {
            let c = (p as f64 + 0.5) * w;
            let h = 0.5 * w;
            for i in 0..15 {
                let (x, k, g) = if i < 7 {
                    let gw = if i % 2 == 1 { WG7[i / 2] } else { 0.0 };
                    (-XK15[i], WK15[i], gw)
                } else if i == 7 {
                    (0.0, WK15[7], WG7[3])
                } else {
                    let j = 14 - i;
                    let gw = if j % 2 == 1 { WG7[j / 2] } else { 0.0 };
                    (XK15[j], WK15[j], gw)
                };
                nodes.push(c + h * x);
                wk.push(h * k);
                wg.push(h * g);
            }
        }
        Panels { nodes, wk, wg }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}
