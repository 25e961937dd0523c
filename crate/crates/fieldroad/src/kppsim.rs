//! Parabolic simulators for the two singular limits behind the model.
//!
//! 1. The scaled phase equation
//!
//!    ```text
//!    v_t - eps Lap v + |grad v|^2 + c v_x + 1 - exp(-v / eps) = 0
//!    -a eps v_xx + a v_x^2 + b v_x - v_y = 0        at y = 0
//!    ```
//!
//!    whose solution v_eps approaches the obstacle-problem value v as
//!    eps -> 0. Simulated directly in phase form (the exponential of the
//!    density form underflows at desk scale).
//!
//! 2. The two-layer thin-strip system: a road strip of thickness delta
//!    with longitudinal diffusivity sigma = a/delta and drift
//!    b_tilde = b/delta under a unit-diffusion field, coupled by flux
//!    continuity. As delta -> 0 the road average obeys the boundary
//!    relation a v_xx - b v_x + u_y(., delta+, .) -> 0, and the measured
//!    residual of that relation is the convergence diagnostic.
//!
//! Both limits carry no rate in the theory; the runs expose monotone
//! trends (gap and residual decreasing as the scale parameter drops).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{GridError, GridSpec, Quantity, ScalarField};
use crate::minimize::{solve_minimizer, MinimizeError};
use crate::params::{Params, SpaceTimePoint};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KppError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Domain(#[from] crate::params::DomainError),
    #[error(transparent)]
    Minimize(#[from] MinimizeError),
    #[error("time step {dt} violates the stability bound {bound}")]
    StabilityViolation { dt: f64, bound: f64 },
    #[error("phase iterate dipped to {min} below zero; the scheme assumes v >= 0")]
    NegativePhase { min: f64 },
    #[error("strip of thickness {delta} is under-resolved ({rows} rows)")]
    UnderResolvedStrip { delta: f64, rows: usize },
    #[error("config invalid: {0}")]
    BadConfig(String),
}

/// Configuration of one phase-equation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsRunConfig {
    pub eps: f64,
    pub spec: GridSpec,
    pub t_end: f64,
    pub dt: f64,
    /// Steepness of the cone initial data (shared with the grid solver).
    pub k_init: f64,
}

impl EpsRunConfig {
    /// Picks a time step honoring the parabolic bound (with the road
    /// row's effective tangential diffusivity eps + a eps^2 / dy folded
    /// in) and the gradient-transport bound, with margin, using the
    /// initial steepness as the a-priori gradient scale.
    pub fn with_auto_dt(
        eps: f64,
        spec: GridSpec,
        t_end: f64,
        k_init: f64,
        params: &Params,
    ) -> Result<Self, KppError> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(KppError::BadConfig(format!("eps must be in (0,1), got {eps}")));
        }
        let dt = 0.8 * stability_bound(eps, spec, k_init.max(1.0) * 1.25, params);
        Ok(Self { eps, spec, t_end, dt, k_init })
    }
}

/// Largest stable explicit step at gradient scale `grad` (parabolic plus
/// gradient-transport terms; the road row is solved implicitly and does
/// not restrict the explicit part).
fn stability_bound(eps: f64, spec: GridSpec, grad: f64, params: &Params) -> f64 {
    let (dx, dy) = (spec.dx(), spec.dy());
    let h = dx.min(dy);
    1.0 / (2.0 * eps / (dx * dx)
        + 2.0 * eps / (dy * dy)
        + (2.0 * grad + params.c.abs() + params.b.abs()) / h)
}

/// Upwind one-sided square |grad v|^2 (each axis contributes
/// max(backward, 0)^2 + min(forward, 0)^2).
#[inline]
fn grad_sq_upwind(p_m: f64, p_p: f64) -> f64 {
    let m = p_m.max(0.0);
    let p = p_p.min(0.0);
    m * m + p * p
}

/// Enforces the road row as the static viscous boundary relation
/// -a eps v_xx + a v_x^2 + b v_x - v_y = 0, with v_y the one-sided
/// difference toward the first interior row.
///
/// The displayed relation carries no time derivative, so the road row is
/// slaved to it rather than evolved: a damped quasi-Newton iteration
/// linearizes the drift term around the lagged slope (Newton on
/// a v_x^2 + b v_x), upwinds it by the linearized characteristic, and
/// solves the resulting M-matrix tridiagonal system along the road.
/// Returns the max update of the last sweep as a convergence diagnostic.
fn solve_road_row(
    row0: &mut [f64],
    row1: &[f64],
    params: &Params,
    eps: f64,
    dx: f64,
    dy: f64,
    max_iters: usize,
) -> f64 {
    let nx = row0.len();
    let visc = params.a * eps;
    let mut sub = vec![0.0f64; nx];
    let mut diag = vec![0.0f64; nx];
    let mut sup = vec![0.0f64; nx];
    let mut rhs = vec![0.0f64; nx];
    let mut last_change = f64::INFINITY;
    for _ in 0..max_iters {
        for i in 0..nx {
            let left = if i > 0 { row0[i - 1] } else { row0[i] };
            let right = if i + 1 < nx { row0[i + 1] } else { row0[i] };
            let vx_old = (right - left) / (2.0 * dx);
            let speed = 2.0 * params.a * vx_old + params.b;
            let d2 = visc / (dx * dx);
            diag[i] = 2.0 * d2 + speed.abs() / dx + 1.0 / dy;
            sub[i] = -(d2 + if speed >= 0.0 { speed / dx } else { 0.0 });
            sup[i] = -(d2 + if speed < 0.0 { -speed / dx } else { 0.0 });
            rhs[i] = params.a * vx_old * vx_old + row1[i] / dy;
            // Copy-out ends fold the ghost into the diagonal.
            if i == 0 {
                diag[i] += sub[i];
                sub[i] = 0.0;
            }
            if i == nx - 1 {
                diag[i] += sup[i];
                sup[i] = 0.0;
            }
        }
        // Thomas sweep.
        let mut c_prime = vec![0.0f64; nx];
        let mut d_prime = vec![0.0f64; nx];
        c_prime[0] = sup[0] / diag[0];
        d_prime[0] = rhs[0] / diag[0];
        for i in 1..nx {
            let m = diag[i] - sub[i] * c_prime[i - 1];
            c_prime[i] = sup[i] / m;
            d_prime[i] = (rhs[i] - sub[i] * d_prime[i - 1]) / m;
        }
        let mut change: f64 = 0.0;
        let mut prev = d_prime[nx - 1];
        let relax = 0.7;
        let new_last = (1.0 - relax) * row0[nx - 1] + relax * prev;
        change = change.max((new_last - row0[nx - 1]).abs());
        row0[nx - 1] = new_last;
        for i in (0..nx - 1).rev() {
            prev = d_prime[i] - c_prime[i] * prev;
            let updated = (1.0 - relax) * row0[i] + relax * prev;
            change = change.max((updated - row0[i]).abs());
            row0[i] = updated;
        }
        last_change = change;
        if change < 1e-10 {
            break;
        }
    }
    last_change
}

/// Explicit time stepping of the phase equation to t_end; returns the
/// final iterate.
///
/// Interior rows advance explicitly with the stiff source exp(-v/eps)
/// integrated exactly over each step (with the transport part A frozen,
/// w = exp(v/eps) obeys the linear law eps w' = 1 - A w); the road row
/// is re-slaved to the static boundary relation after every step. The
/// time step adapts to the current gradients, with config.dt acting as
/// the cap that honors the parabolic margin.
pub fn solve_phase_eps(config: &EpsRunConfig, params: &Params) -> Result<ScalarField, KppError> {
    let spec = config.spec;
    if spec.y_min != 0.0 {
        return Err(KppError::BadConfig("phase runs must include the road y = 0".into()));
    }
    let eps = config.eps;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(KppError::BadConfig(format!("eps must be in (0,1), got {eps}")));
    }
    if config.dt > stability_bound(eps, spec, config.k_init, params) * 1.26 {
        return Err(KppError::StabilityViolation {
            dt: config.dt,
            bound: stability_bound(eps, spec, config.k_init, params),
        });
    }
    let (nx, ny) = (spec.nx, spec.ny);
    let (dx, dy) = (spec.dx(), spec.dy());
    let mut state = crate::hj::initial_data(spec, config.k_init)
        .map_err(|_| KppError::BadConfig("origin must lie inside the window".into()))?;
    state.quantity = Quantity::PdeIterate;
    // The steep cone is incompatible with the road relation; replace the
    // road row by the compatible profile before stepping (the continuous
    // problem forms this boundary layer instantaneously).
    {
        let row1: Vec<f64> = (0..nx).map(|i| state.get(i, 1)).collect();
        let mut row0: Vec<f64> = (0..nx).map(|i| state.get(i, 0)).collect();
        solve_road_row(&mut row0, &row1, params, eps, dx, dy, 400);
        for (i, v) in row0.into_iter().enumerate() {
            state.set(i, 0, v);
        }
    }
    let blow_up = -(10.0 + 80.0 * eps);

    let mut t = 0.0;
    while t < config.t_end * (1.0 - 1e-12) {
        let mut grad: f64 = 0.0;
        for j in 0..ny {
            for i in 0..nx {
                if i + 1 < nx {
                    grad = grad.max(((state.get(i + 1, j) - state.get(i, j)) / dx).abs());
                }
                if j + 1 < ny {
                    grad = grad.max(((state.get(i, j + 1) - state.get(i, j)) / dy).abs());
                }
            }
        }
        let dt = config
            .dt
            .min(0.9 * stability_bound(eps, spec, grad, params))
            .min(config.t_end - t);

        let mut next = state.values.clone();
        let state_ref = &state;
        // Interior rows (the road row is re-slaved below).
        next.par_chunks_mut(nx).enumerate().skip(1).for_each(|(j, row)| {
            for (i, out) in row.iter_mut().enumerate() {
                let v = state_ref.get(i, j);
                let left = if i > 0 { state_ref.get(i - 1, j) } else { v };
                let right = if i + 1 < nx { state_ref.get(i + 1, j) } else { v };
                let up = if j + 1 < ny { state_ref.get(i, j + 1) } else { v };
                let below = state_ref.get(i, j - 1);
                let lap = (right - 2.0 * v + left) / (dx * dx)
                    + (up - 2.0 * v + below) / (dy * dy);
                let p1m = (v - left) / dx;
                let p1p = (right - v) / dx;
                let p2m = (v - below) / dy;
                let p2p = (up - v) / dy;
                let grad_sq = grad_sq_upwind(p1m, p1p) + grad_sq_upwind(p2m, p2p);
                let advect = if params.c >= 0.0 { params.c * p1m } else { params.c * p1p };
                // v' = -transport + exp(-v/eps), exactly integrated with
                // the transport frozen: w = exp(v/eps) obeys the linear
                // law eps w' = 1 - transport w for either transport sign,
                // and w stays positive by construction, so the update is
                // saturating rather than explosive where the source is
                // stiff.
                let transport = grad_sq + advect + 1.0 - eps * lap;
                let x = transport * dt / eps;
                *out = if v / eps > 600.0 {
                    // Source dead to double precision; exact transport law.
                    v - dt * transport
                } else if x.abs() < 1e-8 {
                    let w = (v / eps).exp();
                    eps * (w + dt / eps * (1.0 - transport * w)).ln()
                } else {
                    let w_eq = 1.0 / transport;
                    let w = (v / eps).exp();
                    let w_new = w_eq + (w - w_eq) * ((-x).min(500.0)).exp();
                    eps * w_new.ln()
                };
            }
        });
        // Re-slave the road row to the boundary relation.
        {
            let row1: Vec<f64> = next[nx..2 * nx].to_vec();
            let mut row0: Vec<f64> = next[..nx].to_vec();
            solve_road_row(&mut row0, &row1, params, eps, dx, dy, 30);
            next[..nx].copy_from_slice(&row0);
        }
        let min = next.iter().cloned().fold(f64::INFINITY, f64::min);
        if !min.is_finite() || min < blow_up {
            return Err(KppError::NegativePhase { min });
        }
        state.values = next;
        t += dt;
    }
    Ok(state)
}

/// Sup-norm gap between a phase iterate and the closed-form value on the
/// compact interior window that strips a collar of width
/// 4 sqrt(eps t_end) from the truncation edges (the parabolic
/// contamination scale); the road edge is physical and stays included.
pub fn gap_to_closed_form(
    field: &ScalarField,
    params: &Params,
    eps: f64,
    t: f64,
) -> Result<f64, KppError> {
    let spec = field.spec;
    let collar = 4.0 * (eps * t).sqrt();
    let mut gap = 0.0f64;
    for j in 0..spec.ny {
        let y = spec.y(j);
        if y > spec.y_max - collar {
            continue;
        }
        for i in 0..spec.nx {
            let x = spec.x(i);
            if x < spec.x_min + collar || x > spec.x_max - collar {
                continue;
            }
            let exact = solve_minimizer(params, SpaceTimePoint::new(x, y, t)?)?.value;
            gap = gap.max((field.get(i, j) - exact).abs());
        }
    }
    Ok(gap)
}

/// Runs the phase equation and reports the interior sup gap.
pub fn phase_gap(config: &EpsRunConfig, params: &Params) -> Result<f64, KppError> {
    let field = solve_phase_eps(config, params)?;
    gap_to_closed_form(&field, params, config.eps, config.t_end)
}

/// Configuration of one thin-strip run. The scalings sigma = a/delta and
/// b_tilde = b/delta hold exactly by construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripConfig {
    /// Strip thickness.
    pub delta: f64,
    /// Target integrated transport capacity a = sigma delta.
    pub a_target: f64,
    /// Target integrated drift b = b_tilde delta.
    pub b_target: f64,
    /// Horizontal window and outer-field resolution; y_min must be 0 and
    /// the strip is re-meshed at delta/8 internally.
    pub spec: GridSpec,
    pub dt: f64,
    pub t_end: f64,
}

impl StripConfig {
    pub fn sigma(&self) -> f64 {
        self.a_target / self.delta
    }

    pub fn b_tilde(&self) -> f64 {
        self.b_target / self.delta
    }
}

/// Result of one strip run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripReport {
    pub delta: f64,
    /// Sup over x (collar excluded) of
    /// |a v_xx - b v_x + u_y(., delta+, t_end)| on the road average v.
    pub residual: f64,
    /// Relative mismatch of the integrated normal flux across the
    /// interface, measured with one-sided differences.
    pub flux_mismatch: f64,
    pub n_strip_rows: usize,
}

const STRIP_ROWS: usize = 8;

/// Simulates the two-layer system and measures the boundary-relation
/// residual at t_end.
///
/// Vertical diffusion (stiff inside the strip: sigma ~ 1/delta on a
/// delta/8 mesh) is treated implicitly per column with a tridiagonal
/// solve that has the flux-matching interface condition built into the
/// matrix; horizontal diffusion, drift and the logistic reaction step
/// explicitly, which is what the time-step bound reflects.
pub fn solve_thin_strip(config: &StripConfig) -> Result<StripReport, KppError> {
    let spec = config.spec;
    if spec.y_min != 0.0 {
        return Err(KppError::BadConfig("strip runs must start at y = 0".into()));
    }
    if config.delta <= 0.0 || config.delta >= spec.y_max {
        return Err(KppError::BadConfig(format!("delta = {} outside (0, y_max)", config.delta)));
    }
    if STRIP_ROWS < 4 {
        return Err(KppError::UnderResolvedStrip { delta: config.delta, rows: STRIP_ROWS });
    }
    let sigma = config.sigma();
    let b_tilde = config.b_tilde();
    let nx = spec.nx;
    let dx = spec.dx();

    // Vertical mesh: strip rows at delta/8 spacing (interface at index
    // STRIP_ROWS), field rows at the outer spacing up to y_max.
    let dy_in = config.delta / STRIP_ROWS as f64;
    let dy_out = spec.dy();
    let mut ys = Vec::new();
    for k in 0..=STRIP_ROWS {
        ys.push(k as f64 * dy_in);
    }
    let mut y = config.delta + dy_out;
    while y < spec.y_max + 0.5 * dy_out {
        ys.push(y);
        y += dy_out;
    }
    let ny = ys.len();
    let interface = STRIP_ROWS;

    // Explicit-part stability: horizontal diffusion with the strip's
    // sigma, drift, and the unit reaction.
    let bound = 1.0 / (2.0 * sigma.max(1.0) / (dx * dx) + b_tilde.abs() / dx + 1.0);
    if config.dt > bound {
        return Err(KppError::StabilityViolation { dt: config.dt, bound });
    }

    // Initial front profile, constant in y.
    let front = |x: f64| 1.0 / (1.0 + (1.5 * x).exp());
    let idx = |i: usize, j: usize| j * nx + i;
    let mut u: Vec<f64> = (0..nx * ny)
        .map(|n| front(spec.x(n % nx)))
        .collect();

    // Per-row coefficients of the vertical operator.
    let diffusivity = |j: usize| if j < interface { sigma } else { 1.0 };
    let row_dy = |j: usize| if j < interface { dy_in } else { dy_out };
    // Tangential coefficients at the interface are half-volume weighted.
    let half = 0.5 * (dy_in + dy_out);
    let diff_x = |j: usize| -> f64 {
        if j < interface {
            sigma
        } else if j == interface {
            (sigma * 0.5 * dy_in + 0.5 * dy_out) / half
        } else {
            1.0
        }
    };
    let adv_x = |j: usize| -> f64 {
        if j < interface {
            b_tilde
        } else if j == interface {
            b_tilde * 0.5 * dy_in / half
        } else {
            0.0
        }
    };

    // Implicit vertical solve: (I - dt A) u = rhs per column, where A is
    // the flux-form second difference with the transmission condition at
    // the interface, no-flux at the bottom, copy-out at the top.
    // Tridiagonal coefficients are constant in time; precompute them.
    let mut lower = vec![0.0f64; ny];
    let mut diag = vec![0.0f64; ny];
    let mut upper = vec![0.0f64; ny];
    for j in 0..ny {
        let (lo, up_c): (f64, f64) = if j == 0 {
            // Mirror ghost below the road bottom.
            (0.0, 2.0 * sigma / (dy_in * dy_in))
        } else if j == ny - 1 {
            (diffusivity(j) / (row_dy(ny - 1) * row_dy(ny - 1)), 0.0)
        } else if j == interface {
            // Finite volume across the interface half-cells.
            let below = sigma / dy_in / half;
            let above = 1.0 / dy_out / half;
            (below, above)
        } else {
            let d = diffusivity(j);
            let h = row_dy(j);
            (d / (h * h), d / (h * h))
        };
        lower[j] = -config.dt * lo;
        upper[j] = -config.dt * up_c;
        diag[j] = 1.0 + config.dt * (lo + up_c);
    }

    let mut t = 0.0;
    let mut rhs = vec![0.0f64; nx * ny];
    while t < config.t_end * (1.0 - 1e-12) {
        let dt = config.dt.min(config.t_end - t);
        // Explicit tangential + reaction half.
        rhs.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
            let dc = diff_x(j);
            let ac = adv_x(j);
            for (i, slot) in row.iter_mut().enumerate() {
                let v = u[idx(i, j)];
                let left = if i > 0 { u[idx(i - 1, j)] } else { v };
                let right = if i + 1 < nx { u[idx(i + 1, j)] } else { v };
                let uxx = (right - 2.0 * v + left) / (dx * dx);
                let ux = if ac >= 0.0 { (v - left) / dx } else { (right - v) / dx };
                *slot = v + dt * (dc * uxx - ac * ux + v * (1.0 - v));
            }
        });
        // Implicit vertical sweep (Thomas) per column.
        let columns: Vec<Vec<f64>> = (0..nx)
            .into_par_iter()
            .map(|i| {
                let mut c_prime = vec![0.0f64; ny];
                let mut d_prime = vec![0.0f64; ny];
                let scale = dt / config.dt;
                let l = |j: usize| lower[j] * scale;
                let up_ = |j: usize| upper[j] * scale;
                let dg = |j: usize| 1.0 + (diag[j] - 1.0) * scale;
                c_prime[0] = up_(0) / dg(0);
                d_prime[0] = rhs[idx(i, 0)] / dg(0);
                for j in 1..ny {
                    let m = dg(j) - l(j) * c_prime[j - 1];
                    c_prime[j] = up_(j) / m;
                    d_prime[j] = (rhs[idx(i, j)] - l(j) * d_prime[j - 1]) / m;
                }
                let mut col = vec![0.0f64; ny];
                col[ny - 1] = d_prime[ny - 1];
                for j in (0..ny - 1).rev() {
                    col[j] = d_prime[j] - c_prime[j] * col[j + 1];
                }
                col
            })
            .collect();
        for (i, col) in columns.iter().enumerate() {
            for j in 0..ny {
                u[idx(i, j)] = col[j];
            }
        }
        t += dt;
    }

    // Road average by the trapezoid rule over the strip rows.
    let mut vbar = vec![0.0f64; nx];
    for (i, slot) in vbar.iter_mut().enumerate() {
        let mut acc = 0.5 * (u[idx(i, 0)] + u[idx(i, interface)]);
        for j in 1..interface {
            acc += u[idx(i, j)];
        }
        *slot = acc * dy_in / config.delta;
    }

    // Residual of a vbar_xx - b vbar_x + u_y(., delta+, t_end), second
    // order one-sided for the normal derivative, collar-excluded in x.
    let collar = (nx / 10).max(2);
    let mut residual = 0.0f64;
    for i in collar..nx - collar {
        let vxx = (vbar[i + 1] - 2.0 * vbar[i] + vbar[i - 1]) / (dx * dx);
        let vx = (vbar[i + 1] - vbar[i - 1]) / (2.0 * dx);
        let uy = (-3.0 * u[idx(i, interface)] + 4.0 * u[idx(i, interface + 1)]
            - u[idx(i, interface + 2)])
            / (2.0 * dy_out);
        residual = residual.max((config.a_target * vxx - config.b_target * vx + uy).abs());
    }

    // Flux continuity across the interface, integrated over x.
    let mut flux_above = 0.0f64;
    let mut flux_below = 0.0f64;
    for i in 0..nx {
        flux_above += (u[idx(i, interface + 1)] - u[idx(i, interface)]) / dy_out * dx;
        flux_below += sigma * (u[idx(i, interface)] - u[idx(i, interface - 1)]) / dy_in * dx;
    }
    let denom = flux_above.abs().max(flux_below.abs()).max(1e-300);
    let flux_mismatch = (flux_above - flux_below).abs() / denom;

    Ok(StripReport {
        delta: config.delta,
        residual,
        flux_mismatch,
        n_strip_rows: STRIP_ROWS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> Params {
        Params::new(2.0, 2.0, 2.0).unwrap()
    }

    #[test]
    fn phase_run_stays_near_initial_scale_for_large_eps_short_time() {
        let spec = GridSpec::new(-2.0, 2.0, 0.0, 1.5, 81, 31).unwrap();
        let pr = params();
        // eps must be inside (0, 1).
        assert!(EpsRunConfig::with_auto_dt(1.5, spec, 0.01, 10.0, &pr).is_err());
        assert!(EpsRunConfig::with_auto_dt(0.0, spec, 0.01, 10.0, &pr).is_err());
        let cfg = EpsRunConfig::with_auto_dt(0.5, spec, 0.01, 10.0, &pr).unwrap();
        let field = solve_phase_eps(&cfg, &pr).unwrap();
        let max = field.values.iter().cloned().fold(f64::MIN, f64::max);
        assert!(max <= 10.0 + 1e-9);
        assert!(max > 8.0);
    }

    #[test]
    fn stability_violation_is_reported() {
        let spec = GridSpec::new(-2.0, 2.0, 0.0, 1.5, 81, 31).unwrap();
        let pr = params();
        let mut cfg = EpsRunConfig::with_auto_dt(0.2, spec, 0.1, 50.0, &pr).unwrap();
        cfg.dt *= 50.0;
        assert!(matches!(
            solve_phase_eps(&cfg, &pr),
            Err(KppError::StabilityViolation { .. })
        ));
    }

    #[test]
    fn phase_gap_shrinks_with_eps_on_a_coarse_fixture() {
        let pr = params();
        let mut gaps = Vec::new();
        for &eps in &[0.4, 0.2] {
            let spec = GridSpec::new(-4.0, 8.0, 0.0, 4.0, 121, 41).unwrap();
            let cfg = EpsRunConfig::with_auto_dt(eps, spec, 0.5, 50.0, &pr).unwrap();
            gaps.push(phase_gap(&cfg, &pr).unwrap());
        }
        assert!(
            gaps[1] < gaps[0],
            "gap did not shrink: {gaps:?}"
        );
    }

    #[test]
    fn strip_flux_transmission_holds_with_vertical_structure() {
        let spec = GridSpec::new(-4.0, 4.0, 0.0, 2.0, 81, 21).unwrap();
        let cfg = StripConfig {
            delta: 0.1,
            a_target: 2.0,
            b_target: 1.0,
            spec,
            dt: 5e-5,
            t_end: 0.05,
        };
        let report = solve_thin_strip(&cfg).unwrap();
        assert!(report.flux_mismatch < 0.1, "flux mismatch {}", report.flux_mismatch);
    }

    #[test]
    fn strip_residual_decreases_with_delta() {
        let spec = GridSpec::new(-4.0, 4.0, 0.0, 2.0, 81, 21).unwrap();
        let mut residuals = Vec::new();
        for &delta in &[0.2, 0.1] {
            let cfg = StripConfig {
                delta,
                a_target: 2.0,
                b_target: 1.0,
                spec,
                dt: 5e-5,
                t_end: 0.1,
            };
            residuals.push(solve_thin_strip(&cfg).unwrap().residual);
        }
        assert!(
            residuals[1] < residuals[0],
            "residuals did not decrease: {residuals:?}"
        );
    }

    #[test]
    fn strip_rejects_bad_configs() {
        let spec = GridSpec::new(-1.0, 1.0, 0.0, 2.0, 21, 21).unwrap();
        let cfg = StripConfig {
            delta: 3.0,
            a_target: 2.0,
            b_target: 1.0,
            spec,
            dt: 1e-4,
            t_end: 0.1,
        };
        assert!(solve_thin_strip(&cfg).is_err());
        let cfg = StripConfig {
            delta: 0.1,
            a_target: 2.0,
            b_target: 1.0,
            spec,
            dt: 1.0,
            t_end: 0.1,
        };
        assert!(matches!(solve_thin_strip(&cfg), Err(KppError::StabilityViolation { .. })));
    }
}
