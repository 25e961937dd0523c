//! Derivative-free reference minimizers.
//!
//! These scan the objective directly and never touch the Newton/bisection
//! or cubic routes, so they stay valid as independent cross-checks of the
//! closed-form kernel. They are kept in the library (rather than test-only
//! code) because the `check` command runs the same oracle-equivalence
//! audit at the CLI.

use crate::params::{Params, SpaceTimePoint};

const GOLDEN_RATIO: f64 = 0.618_033_988_749_894_9;

fn f(params: &Params, p: SpaceTimePoint, s: f64) -> f64 {
    let u = -p.x + params.b * s + params.c * p.t;
    let road = p.t + params.a * s;
    u * u / (4.0 * road) + (p.y + s) * (p.y + s) / (4.0 * p.t)
}

fn golden_refine(params: &Params, p: SpaceTimePoint, mut lo: f64, mut hi: f64) -> f64 {
    let mut c = hi - GOLDEN_RATIO * (hi - lo);
    let mut d = lo + GOLDEN_RATIO * (hi - lo);
    let mut fc = f(params, p, c);
    let mut fd = f(params, p, d);
    for _ in 0..200 {
        if hi - lo < 1e-14 * (1.0 + hi) {
            break;
        }
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - GOLDEN_RATIO * (hi - lo);
            fc = f(params, p, c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + GOLDEN_RATIO * (hi - lo);
            fd = f(params, p, d);
        }
    }
    0.5 * (lo + hi)
}

/// Quadratic-vertex polish of a scan result. Pure value comparisons
/// cannot localize a quadratic minimum below ~sqrt(eps) relative, so the
/// scan is finished with vertex steps of a parabola fitted at a spacing
/// wide enough for the sampled values to be reliable.
fn vertex_polish(params: &Params, p: SpaceTimePoint, mut s: f64) -> f64 {
    for _ in 0..2 {
        let h = 1e-5 * (1.0 + s);
        let a = (s - h).max(0.0);
        let (fa, fb, fc) = (
            f(params, p, a),
            f(params, p, a + h),
            f(params, p, a + 2.0 * h),
        );
        let denom = fa - 2.0 * fb + fc;
        if denom <= 0.0 {
            break;
        }
        s = (a + h + 0.5 * h * (fa - fc) / denom).max(0.0);
    }
    s
}

/// Golden-section scan for the minimizer of f over s >= 0. Relies only on
/// unimodality (the objective is strictly convex): the cap doubles until
/// the objective has turned upward, which brackets the minimizer.
pub fn golden_minimizer(params: &Params, p: SpaceTimePoint) -> f64 {
    let mut cap = 1.0;
    for _ in 0..200 {
        if f(params, p, cap) > f(params, p, 0.5 * cap) {
            break;
        }
        cap *= 2.0;
    }
    let coarse = golden_refine(params, p, 0.0, cap);
    vertex_polish(params, p, coarse)
}

/// Dense scan of f at fixed step followed by golden-section refinement of
/// the winning bracket. Slow but assumption-free; used to freeze fixtures.
pub fn dense_scan_minimizer(params: &Params, p: SpaceTimePoint, s_max: f64, step: f64) -> f64 {
    let n = (s_max / step).round() as usize;
    let mut best_i = 0usize;
    let mut best_v = f(params, p, 0.0);
    for i in 1..=n {
        let v = f(params, p, i as f64 * step);
        if v < best_v {
            best_v = v;
            best_i = i;
        }
    }
    let lo = best_i.saturating_sub(1) as f64 * step;
    let hi = ((best_i + 1).min(n) as f64 * step).max(lo + step);
    let coarse = golden_refine(params, p, lo, hi);
    vertex_polish(params, p, coarse)
}
