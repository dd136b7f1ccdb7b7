//! Nonlinear path following: load-controlled Newton, arc-length steps
//! through limit points, eigenvalue stability monitoring, and branch
//! switching by eigenvector perturbation.
//!
//! The driver is sequential by nature; it talks to the problem through
//! [`ContinuationSystem`], so scalar test systems and full shell models run
//! through the same machinery.

use crate::linalg::{smallest_eigenpairs, LinalgError, TangentMatrix};
use nalgebra::DVector;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("assembly failed: {0}")]
    Assembly(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("Newton did not converge in {0} iterations (|R| ratio {1:.3e})")]
    NoConvergence(usize, f64),
    #[error("arc length underflow: step {step}, radius {ds:.3e} below minimum {ds_min:.3e}")]
    StepUnderflow { step: usize, ds: f64, ds_min: f64 },
    #[error("state vector size mismatch")]
    Size,
}

/// One assembled evaluation of the system in free coordinates.
pub struct SystemEval {
    pub residual: DVector<f64>,
    pub tangent: TangentMatrix,
    pub f_ext: DVector<f64>,
}

/// Scalars recorded per converged step.
#[derive(Debug, Clone, Default)]
pub struct Observables {
    pub volume: f64,
    pub max_disp: f64,
    /// Mid-surface area stretch sqrt(A / Abar), when meaningful.
    pub stretch: f64,
}

pub trait ContinuationSystem: Sync {
    fn n_free(&self) -> usize;
    fn assemble(&self, u: &DVector<f64>, kappa: f64) -> Result<SystemEval, SolveError>;
    /// Residual norm alone; systems with expensive tangents override this
    /// so line searches stay cheap.
    fn residual_norm(&self, u: &DVector<f64>, kappa: f64) -> Result<f64, SolveError> {
        Ok(self.assemble(u, kappa)?.residual.norm())
    }
    fn observe(&self, _u: &DVector<f64>, _kappa: f64) -> Observables {
        Observables::default()
    }
}

#[derive(Debug, Clone)]
pub struct NewtonOptions {
    /// Relative drop of the residual norm that counts as converged (the
    /// working default is the 1% rule).
    pub tol_rel: f64,
    /// Absolute floor relative to the load scale.
    pub tol_abs: f64,
    pub max_iter: usize,
    /// Backtracking line search on the residual norm.
    pub line_search: bool,
    /// Starting diagonal damping (relative to the mean tangent diagonal).
    /// Zero runs plain Newton; failed steps may be retried with a strong
    /// value to relax dynamically through snap events.
    pub initial_damping: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol_rel: 0.01,
            tol_abs: 1e-12,
            max_iter: 25,
            line_search: true,
            initial_damping: 0.0,
        }
    }
}

pub struct NewtonOutcome {
    pub u: DVector<f64>,
    pub iterations: usize,
    pub residual_norm: f64,
}

/// Newton correction at fixed load factor.
///
/// A backtracking line search guards the updates. When even damped Newton
/// directions stop reducing the residual (states with strongly indefinite
/// tangents, e.g. wrinkling membranes), an adaptive diagonal damping term
/// `mu I` switches the iteration to a pseudo-transient descent that follows
/// the stable flow, and anneals away once full steps work again.
pub fn newton_correct<S: ContinuationSystem>(
    system: &S,
    u0: &DVector<f64>,
    kappa: f64,
    opts: &NewtonOptions,
) -> Result<NewtonOutcome, SolveError> {
    let mut u = u0.clone();
    let eval = system.assemble(&u, kappa)?;
    let r0 = eval.residual.norm();
    let scale = eval.f_ext.norm().max(r0).max(1.0);
    let mut r_norm = r0;
    let mut eval = eval;
    if r0 <= opts.tol_abs * scale {
        return Ok(NewtonOutcome {
            u,
            iterations: 0,
            residual_norm: r0,
        });
    }
    let n = eval.tangent.n().max(1);
    let diag_scale = (eval.tangent.trace() / n as f64).abs().max(1e-300);
    let mut mu = opts.initial_damping;
    for it in 1..=opts.max_iter {
        let fact = if mu > 0.0 {
            eval.tangent.plus_diagonal(mu * diag_scale).factorize()?
        } else {
            eval.tangent.factorize()?
        };
        let du = fact.solve(&(-&eval.residual))?;
        // First trial at full step with the full assembly (reused for the
        // next iteration); backtracks probe the cheap residual-only path.
        let mut accepted: Option<(DVector<f64>, Option<SystemEval>, f64)> = None;
        let mut alpha = 1.0;
        let mut used_alpha = 1.0;
        let tries = if opts.line_search { 7 } else { 1 };
        for t in 0..tries {
            let trial = &u + alpha * &du;
            if t == 0 {
                match system.assemble(&trial, kappa) {
                    Ok(ev) => {
                        let rn = ev.residual.norm();
                        let good = rn < r_norm || !opts.line_search;
                        accepted = Some((trial, Some(ev), rn));
                        used_alpha = alpha;
                        if good {
                            break;
                        }
                    }
                    Err(_) => {}
                }
            } else {
                match system.residual_norm(&trial, kappa) {
                    Ok(rn) => {
                        if rn < r_norm {
                            accepted = Some((trial, None, rn));
                            used_alpha = alpha;
                            break;
                        }
                        // Keep the most damped assemblable trial as a
                        // fallback; Newton sometimes has to climb first.
                        accepted = Some((trial, None, rn));
                        used_alpha = alpha;
                    }
                    Err(_) => {}
                }
            }
            alpha *= 0.5;
        }
        let Some((trial, maybe_ev, rn)) = accepted else {
            return Err(SolveError::NoConvergence(it, r_norm / r0));
        };
        let ev = match maybe_ev {
            Some(ev) => ev,
            None => system.assemble(&trial, kappa)?,
        };
        // Damping control: crawling line searches raise mu, healthy full
        // steps anneal it.
        if opts.line_search {
            if used_alpha < 0.2 || rn >= r_norm {
                mu = (mu * 6.0).max(1e-5);
            } else if used_alpha >= 0.99 && rn < 0.5 * r_norm {
                mu *= 0.25;
                if mu < 1e-9 {
                    mu = 0.0;
                }
            }
        }
        u = trial;
        eval = ev;
        r_norm = rn;
        if r_norm <= opts.tol_rel * r0 || r_norm <= opts.tol_abs * scale {
            return Ok(NewtonOutcome {
                u,
                iterations: it,
                residual_norm: r_norm,
            });
        }
    }
    Err(SolveError::NoConvergence(opts.max_iter, r_norm / r0))
}

/// Load-controlled correction with internal ramping: if Newton cannot reach
/// `kappa_to` in one go, the increment is bisected (down to a floor) and the
/// intermediate solutions warm-start the next piece. Inflating a flat
/// membrane needs this; the recorded state is still the one at `kappa_to`.
pub fn newton_correct_ramped<S: ContinuationSystem>(
    system: &S,
    u0: &DVector<f64>,
    kappa_from: f64,
    kappa_to: f64,
    opts: &NewtonOptions,
) -> Result<NewtonOutcome, SolveError> {
    let min_dk = (kappa_to - kappa_from).abs() / 4096.0;
    let mut u = u0.clone();
    let mut kappa = kappa_from;
    let mut dk = kappa_to - kappa_from;
    let mut total_iters = 0;
    let mut last_res = 0.0;
    while (kappa - kappa_to).abs() > 1e-15 * kappa_to.abs().max(1.0) {
        let remaining = kappa_to - kappa;
        let step = if dk.abs() >= remaining.abs() {
            remaining
        } else {
            dk
        };
        let target = kappa + step;
        match newton_correct(system, &u, target, opts) {
            Ok(out) => {
                u = out.u;
                kappa = target;
                total_iters += out.iterations;
                last_res = out.residual_norm;
            }
            Err(SolveError::NoConvergence(..)) | Err(SolveError::Linalg(_)) => {
                // Snap events leave no nearby equilibrium to converge to;
                // retry once as a heavily damped pseudo-dynamic relaxation
                // that can flow into the post-snap basin, then bisect.
                let relax = NewtonOptions {
                    initial_damping: 0.05,
                    max_iter: opts.max_iter.max(200),
                    ..opts.clone()
                };
                match newton_correct(system, &u, target, &relax) {
                    Ok(out) => {
                        u = out.u;
                        kappa = target;
                        total_iters += out.iterations;
                        last_res = out.residual_norm;
                    }
                    Err(_) => {
                        dk *= 0.5;
                        if dk.abs() < min_dk {
                            return Err(SolveError::NoConvergence(total_iters, f64::NAN));
                        }
                    }
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(NewtonOutcome {
        u,
        iterations: total_iters,
        residual_norm: last_res,
    })
}

/// Current point on the equilibrium path.
#[derive(Debug, Clone)]
pub struct ContinuationState {
    pub u: DVector<f64>,
    pub kappa: f64,
    pub ds: f64,
    pub du_prev: DVector<f64>,
    pub dkappa_prev: f64,
    pub step: usize,
}

#[derive(Debug, Clone)]
pub struct ArcLengthOptions {
    /// Load-term weight in the cylindrical constraint; 0 restricts the
    /// radius to the displacement increment alone.
    pub psi: f64,
    pub newton: NewtonOptions,
    /// Constraint satisfaction tolerance relative to ds^2.
    pub constraint_tol: f64,
}

impl Default for ArcLengthOptions {
    fn default() -> Self {
        ArcLengthOptions {
            psi: 0.0,
            newton: NewtonOptions::default(),
            constraint_tol: 1e-8,
        }
    }
}

pub struct ArcStepOutcome {
    pub u: DVector<f64>,
    pub kappa: f64,
    pub iterations: usize,
    pub residual_norm: f64,
}

/// One arc-length step under the cylindrical constraint
/// `du.du + psi^2 dkappa^2 |F_ext|^2 = ds^2`.
///
/// The predictor extrapolates the previous increment (keeping its
/// orientation); the corrector runs bordered Newton iterations with the
/// follower load re-assembled every iteration.
pub fn arc_length_step<S: ContinuationSystem>(
    system: &S,
    state: &ContinuationState,
    ds: f64,
    opts: &ArcLengthOptions,
    extra_guess: Option<&DVector<f64>>,
) -> Result<ArcStepOutcome, SolveError> {
    let psi2 = opts.psi * opts.psi;
    // Predictor: scale the previous increment to the requested radius.
    let prev_norm = {
        let f_norm = 1.0; // folded below with the assembled |F|
        (state.du_prev.norm_squared() + psi2 * state.dkappa_prev.powi(2) * f_norm).sqrt()
    };
    if prev_norm <= 0.0 {
        return Err(SolveError::Assembly(
            "arc-length step needs a previous increment as predictor".into(),
        ));
    }
    let scale0 = ds / prev_norm;
    let mut du = &state.du_prev * scale0;
    let mut dkappa = state.dkappa_prev * scale0;
    if let Some(g) = extra_guess {
        du += g;
    }

    // The 1% rule measures against the predictor's own residual. If an
    // update blows the residual up (or leaves the admissible set), back off
    // half of it before factorizing again; this keeps the corrector alive
    // near critical points without costing extra assemblies on good steps.
    let mut r0: Option<f64> = None;
    let mut prev_r_norm = f64::INFINITY;
    let mut iterations = 0;
    let mut last_update: Option<(DVector<f64>, f64, f64)> = None;
    for it in 1..=opts.newton.max_iter {
        iterations = it;
        let u = &state.u + &du;
        let kappa = state.kappa + dkappa;
        let maybe_eval = system.assemble(&u, kappa);
        let bad = match &maybe_eval {
            Ok(e) => it > 1 && e.residual.norm() > 4.0 * prev_r_norm,
            Err(_) => it > 1,
        };
        if bad {
            if let Some((dir_u, dir_k, alpha)) = last_update.as_mut() {
                if *alpha > 0.1 {
                    let cut = 0.5 * *alpha;
                    du.axpy(-cut, dir_u, 1.0);
                    dkappa -= cut * *dir_k;
                    *alpha -= cut;
                    continue;
                }
            }
        }
        let eval = match maybe_eval {
            Ok(e) => e,
            Err(_) => return Err(SolveError::NoConvergence(it, f64::INFINITY)),
        };
        let r_norm = eval.residual.norm();
        let base = *r0.get_or_insert(r_norm.max(1e-300));
        let f_norm2 = eval.f_ext.norm_squared();
        let c = du.norm_squared() + psi2 * dkappa * dkappa * f_norm2 - ds * ds;
        let scale = eval.f_ext.norm().max(1.0);
        let converged_r =
            r_norm <= opts.newton.tol_rel * base || r_norm <= opts.newton.tol_abs * scale;
        let converged_c = c.abs() <= opts.constraint_tol * ds * ds;
        if converged_r && converged_c {
            return Ok(ArcStepOutcome {
                u,
                kappa,
                iterations: it - 1,
                residual_norm: r_norm,
            });
        }
        prev_r_norm = r_norm;

        let fact = eval.tangent.factorize()?;
        let du_r = fact.solve(&(-&eval.residual))?;
        let du_f = fact.solve(&eval.f_ext)?;
        let denom = 2.0 * du.dot(&du_f) + 2.0 * psi2 * dkappa * f_norm2;
        if denom.abs() < 1e-300 {
            return Err(SolveError::NoConvergence(it, r_norm / base));
        }
        let dk = (-c - 2.0 * du.dot(&du_r)) / denom;
        let dir_u = du_r + dk * &du_f;
        du += &dir_u;
        dkappa += dk;
        if !dkappa.is_finite() || !du.norm().is_finite() {
            return Err(SolveError::NoConvergence(it, f64::INFINITY));
        }
        last_update = Some((dir_u, dk, 1.0));
    }
    Err(SolveError::NoConvergence(iterations, f64::NAN))
}

/// Stability classification of a converged point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StabilityClass {
    Stable,
    /// Lowest mode aligned with the path tangent.
    LimitLike,
    /// Lowest mode orthogonal to the path tangent.
    BifurcationLike,
}

#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<DVector<f64>>,
    pub zero_crossing: bool,
    pub class: StabilityClass,
}

#[derive(Debug, Clone)]
pub struct StabilityOptions {
    /// Number of smallest eigenpairs to extract.
    pub n_modes: usize,
    /// Zero threshold relative to the mean diagonal of the tangent.
    pub zero_tol: f64,
    /// Perturbation amplitude in units of the reference thickness.
    pub beta: f64,
    /// Reference thickness used to scale the branch perturbation.
    pub thickness: f64,
    pub enable_branching: bool,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        StabilityOptions {
            n_modes: 6,
            zero_tol: 1e-6,
            beta: 1.0,
            thickness: 1.0,
            enable_branching: false,
        }
    }
}

/// Eigenvalue check of the (symmetrized) reduced tangent.
pub fn stability_check(
    tangent: &TangentMatrix,
    n_modes: usize,
    zero_tol: f64,
    path_tangent: Option<&DVector<f64>>,
) -> Result<StabilityReport, LinalgError> {
    let n = tangent.n().max(1);
    let (vals, vecs) = smallest_eigenpairs(tangent, n_modes)?;
    let mean_diag = tangent.trace() / n as f64;
    let zero_crossing = vals
        .first()
        .map(|&l| l <= zero_tol * mean_diag.abs().max(1e-300))
        .unwrap_or(false);
    let class = if !zero_crossing {
        StabilityClass::Stable
    } else {
        match (vecs.first(), path_tangent) {
            (Some(v), Some(t)) if t.norm() > 0.0 => {
                let cos = v.dot(t).abs() / (v.norm() * t.norm());
                if cos > 0.5 {
                    StabilityClass::LimitLike
                } else {
                    StabilityClass::BifurcationLike
                }
            }
            _ => StabilityClass::LimitLike,
        }
    };
    Ok(StabilityReport {
        eigenvalues: vals,
        eigenvectors: vecs,
        zero_crossing,
        class,
    })
}

/// Perturbed initial guess `u + s u_e` with `s = beta hbar / |u_e|_inf`, so
/// the largest perturbation component equals `beta` reference thicknesses.
pub fn branch_switch(
    u: &DVector<f64>,
    eigenvector: &DVector<f64>,
    beta: f64,
    thickness: f64,
) -> DVector<f64> {
    let linf = eigenvector.amax();
    if linf == 0.0 || beta == 0.0 {
        return u.clone();
    }
    u + (beta * thickness / linf) * eigenvector
}

/// Perturbation vector alone (for seeding an arc-length corrector).
pub fn branch_perturbation(
    eigenvector: &DVector<f64>,
    beta: f64,
    thickness: f64,
) -> DVector<f64> {
    let linf = eigenvector.amax();
    if linf == 0.0 {
        return eigenvector.clone();
    }
    (beta * thickness / linf) * eigenvector
}

/// Stop rules for the driver, checked after each recorded step.
#[derive(Debug, Clone, Default)]
pub struct StopRules {
    pub target_kappa: Option<f64>,
    pub target_volume: Option<f64>,
    pub target_stretch: Option<f64>,
}

/// How the driver advances along the path after the first increment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stepping {
    /// Arc-length continuation (traverses limit points).
    ArcLength,
    /// Fixed load increments solved by ramped Newton; the right tool for
    /// monotone inflation paths riddled with wrinkling bifurcations.
    LoadControl,
}

#[derive(Debug, Clone)]
pub struct ContinuationConfig {
    /// Load-controlled first increment (and the per-step increment under
    /// `Stepping::LoadControl`).
    pub initial_dkappa: f64,
    pub max_steps: usize,
    pub ds_min: f64,
    pub ds_max: f64,
    /// Step adaptivity aims at this corrector iteration count.
    pub target_iterations: usize,
    pub stepping: Stepping,
    pub arc: ArcLengthOptions,
    pub stability: Option<StabilityOptions>,
    pub stop: StopRules,
    /// Reference pressure: recorded pressure is `kappa * p_ref`.
    pub p_ref: f64,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        ContinuationConfig {
            initial_dkappa: 0.1,
            max_steps: 100,
            ds_min: 1e-12,
            ds_max: f64::INFINITY,
            target_iterations: 5,
            stepping: Stepping::ArcLength,
            arc: ArcLengthOptions::default(),
            stability: None,
            stop: StopRules::default(),
            p_ref: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StepRecord {
    pub step: usize,
    pub branch: usize,
    pub kappa: f64,
    pub pressure: f64,
    pub volume: f64,
    pub max_disp: f64,
    pub stretch: f64,
    pub eigenvalues: Vec<f64>,
    pub newton_iterations: usize,
    pub ds: f64,
    pub stability: Option<StabilityClass>,
    /// Converged state, kept for restarts and snapshots.
    pub u: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StopReason {
    TargetReached,
    MaxSteps,
    StepUnderflow,
    ZeroTarget,
    Failure(String),
}

#[derive(Debug, Clone)]
pub struct PathHistory {
    pub records: Vec<StepRecord>,
    pub stop_reason: StopReason,
    /// Step index (into `records`) where the first zero crossing was seen on
    /// the principal branch.
    pub critical_step: Option<usize>,
    /// Number of corrector failures that forced a step halving.
    pub failed_steps: usize,
}

impl PathHistory {
    pub fn branch(&self, id: usize) -> impl Iterator<Item = &StepRecord> {
        self.records.iter().filter(move |r| r.branch == id)
    }
}

/// Run the full continuation loop: load-controlled bootstrap, arc-length
/// steps with adaptive radius, per-step stability checks, and an optional
/// bifurcated branch restarted from the first zero crossing with an
/// eigenvector perturbation.
pub fn run_continuation<S: ContinuationSystem>(
    system: &S,
    config: &ContinuationConfig,
    mut on_record: impl FnMut(&StepRecord),
) -> Result<PathHistory, SolveError> {
    let n = system.n_free();
    let mut records: Vec<StepRecord> = Vec::new();
    let mut failed_steps = 0usize;
    let mut critical: Option<(usize, ContinuationState, DVector<f64>)> = None;
    let mut critical_record_idx: Option<usize> = None;

    // Step 0: the reference state.
    let u0 = DVector::zeros(n);
    let obs0 = system.observe(&u0, 0.0);
    let rec0 = StepRecord {
        step: 0,
        branch: 0,
        kappa: 0.0,
        pressure: 0.0,
        volume: obs0.volume,
        max_disp: obs0.max_disp,
        stretch: obs0.stretch,
        eigenvalues: Vec::new(),
        newton_iterations: 0,
        ds: 0.0,
        stability: None,
        u: u0.clone(),
    };
    on_record(&rec0);
    records.push(rec0);

    let zero_target = config.stop.target_kappa == Some(0.0);
    if zero_target || config.max_steps == 0 {
        return Ok(PathHistory {
            records,
            stop_reason: if zero_target {
                StopReason::ZeroTarget
            } else {
                StopReason::MaxSteps
            },
            critical_step: None,
            failed_steps: 0,
        });
    }

    // Load-controlled first increment, ramped if the flat start is stiff.
    // The bootstrap gets a generous iteration budget; line-search crawling
    // away from a flat membrane state takes many cheap iterations.
    let bootstrap_opts = NewtonOptions {
        max_iter: config.arc.newton.max_iter.max(150),
        ..config.arc.newton.clone()
    };
    let first = newton_correct_ramped(system, &u0, 0.0, config.initial_dkappa, &bootstrap_opts)?;
    let mut state = ContinuationState {
        du_prev: first.u.clone(),
        dkappa_prev: config.initial_dkappa,
        u: first.u,
        kappa: config.initial_dkappa,
        ds: 0.0,
        step: 1,
    };
    let psi2 = config.arc.psi * config.arc.psi;
    let f_norm = {
        let eval = system.assemble(&state.u, state.kappa)?;
        eval.f_ext.norm()
    };
    let mut ds = (state.du_prev.norm_squared()
        + psi2 * state.dkappa_prev.powi(2) * f_norm * f_norm)
        .sqrt()
        .clamp(config.ds_min, config.ds_max);
    state.ds = ds;

    record_step(
        system,
        config,
        &mut records,
        &mut on_record,
        &state,
        first.iterations,
        0,
        &mut critical,
        &mut critical_record_idx,
    )?;

    let mut stop_reason = StopReason::MaxSteps;
    // Principal branch.
    while state.step < config.max_steps {
        if let Some(reason) = stop_hit(&records, &config.stop) {
            stop_reason = reason;
            break;
        }
        if config.stepping == Stepping::LoadControl {
            let target = state.kappa + config.initial_dkappa;
            match newton_correct_ramped(system, &state.u, state.kappa, target, &bootstrap_opts) {
                Ok(mut out) => {
                    if let Some(stab) = &config.stability {
                        stabilize_state(system, &bootstrap_opts, stab, target, &mut out)?;
                    }
                    let du = &out.u - &state.u;
                    state = ContinuationState {
                        u: out.u,
                        kappa: target,
                        ds: config.initial_dkappa,
                        du_prev: du,
                        dkappa_prev: config.initial_dkappa,
                        step: state.step + 1,
                    };
                    record_step(
                        system,
                        config,
                        &mut records,
                        &mut on_record,
                        &state,
                        out.iterations,
                        0,
                        &mut critical,
                        &mut critical_record_idx,
                    )?;
                }
                Err(SolveError::NoConvergence(..)) => {
                    stop_reason = StopReason::StepUnderflow;
                    break;
                }
                Err(e) => return Err(e),
            }
            continue;
        }
        match arc_length_step(system, &state, ds, &config.arc, None) {
            Ok(out) => {
                let du = &out.u - &state.u;
                let dkappa = out.kappa - state.kappa;
                // Reject steps that converged backward onto the traversed
                // path; the orientation must follow the previous increment.
                let orient = du.dot(&state.du_prev) + dkappa * state.dkappa_prev;
                if orient <= 0.0 {
                    failed_steps += 1;
                    ds *= 0.5;
                    if ds < config.ds_min {
                        stop_reason = StopReason::StepUnderflow;
                        break;
                    }
                    continue;
                }
                state = ContinuationState {
                    u: out.u,
                    kappa: out.kappa,
                    ds,
                    du_prev: du,
                    dkappa_prev: dkappa,
                    step: state.step + 1,
                };
                record_step(
                    system,
                    config,
                    &mut records,
                    &mut on_record,
                    &state,
                    out.iterations,
                    0,
                    &mut critical,
                    &mut critical_record_idx,
                )?;
                // Step adaptivity.
                let ratio = (config.target_iterations as f64
                    / out.iterations.max(1) as f64)
                    .sqrt()
                    .clamp(0.5, 2.0);
                ds = (ds * ratio).clamp(config.ds_min, config.ds_max);
            }
            Err(SolveError::NoConvergence(..)) | Err(SolveError::Assembly(_))
            | Err(SolveError::Linalg(_)) => {
                failed_steps += 1;
                ds *= 0.5;
                if ds < config.ds_min {
                    stop_reason = StopReason::StepUnderflow;
                    break;
                }
            }
            Err(e) => return Err(e),
        }
    }
    if state.step >= config.max_steps && stop_reason == StopReason::MaxSteps {
        if let Some(reason) = stop_hit(&records, &config.stop) {
            stop_reason = reason;
        }
    }

    // Bifurcated branch.
    if let (Some(stab), Some((crit_step, crit_state, eigvec))) =
        (config.stability.as_ref(), critical.take())
    {
        if stab.enable_branching {
            run_branch(
                system,
                config,
                stab,
                crit_state,
                eigvec,
                crit_step,
                &mut records,
                &mut on_record,
                &mut failed_steps,
            );
        }
    }

    Ok(PathHistory {
        records,
        stop_reason,
        critical_step: critical_record_idx,
        failed_steps,
    })
}

/// Escape unstable equilibria under load control: while the tangent has a
/// clearly negative lowest eigenvalue, perturb along that eigenvector and
/// re-solve at the same load, keeping re-solves that raise the eigenvalue.
/// This is how wrinkling branches are entered without arc-length machinery.
fn stabilize_state<S: ContinuationSystem>(
    system: &S,
    newton_opts: &NewtonOptions,
    stab: &StabilityOptions,
    kappa: f64,
    out: &mut NewtonOutcome,
) -> Result<(), SolveError> {
    for _ in 0..6 {
        let eval = system.assemble(&out.u, kappa)?;
        let n = eval.tangent.n().max(1);
        let mean_diag = (eval.tangent.trace() / n as f64).abs().max(1e-300);
        let report = stability_check(&eval.tangent, 1, stab.zero_tol, None)?;
        let lambda_min = report.eigenvalues[0];
        if lambda_min >= -stab.zero_tol * mean_diag {
            break;
        }
        let guess = branch_switch(&out.u, &report.eigenvectors[0], stab.beta, stab.thickness);
        match newton_correct(system, &guess, kappa, newton_opts) {
            Ok(resolved) => {
                let eval2 = system.assemble(&resolved.u, kappa)?;
                let report2 = stability_check(&eval2.tangent, 1, stab.zero_tol, None)?;
                if report2.eigenvalues[0] > lambda_min + 1e-12 * mean_diag {
                    out.iterations += resolved.iterations;
                    out.residual_norm = resolved.residual_norm;
                    out.u = resolved.u;
                } else {
                    break;
                }
            }
            Err(_) => break,
        }
    }
    Ok(())
}

fn stop_hit(records: &[StepRecord], stop: &StopRules) -> Option<StopReason> {
    let last = records.last()?;
    if let Some(k) = stop.target_kappa {
        if last.kappa >= k {
            return Some(StopReason::TargetReached);
        }
    }
    if let Some(v) = stop.target_volume {
        if last.volume >= v {
            return Some(StopReason::TargetReached);
        }
    }
    if let Some(s) = stop.target_stretch {
        if last.stretch >= s {
            return Some(StopReason::TargetReached);
        }
    }
    None
}

#[allow(clippy::too_many_arguments)]
fn record_step<S: ContinuationSystem>(
    system: &S,
    config: &ContinuationConfig,
    records: &mut Vec<StepRecord>,
    on_record: &mut impl FnMut(&StepRecord),
    state: &ContinuationState,
    iterations: usize,
    branch: usize,
    critical: &mut Option<(usize, ContinuationState, DVector<f64>)>,
    critical_record_idx: &mut Option<usize>,
) -> Result<(), SolveError> {
    let obs = system.observe(&state.u, state.kappa);
    let mut eigenvalues = Vec::new();
    let mut stability = None;
    if let Some(stab) = &config.stability {
        let eval = system.assemble(&state.u, state.kappa)?;
        let report = stability_check(
            &eval.tangent,
            stab.n_modes,
            stab.zero_tol,
            Some(&state.du_prev),
        )?;
        eigenvalues = report.eigenvalues.clone();
        stability = Some(report.class.clone());
        if branch == 0 && report.zero_crossing && critical.is_none() {
            *critical = Some((
                state.step,
                state.clone(),
                report.eigenvectors[0].clone(),
            ));
            *critical_record_idx = Some(records.len());
        }
    }
    let rec = StepRecord {
        step: state.step,
        branch,
        kappa: state.kappa,
        pressure: state.kappa * config.p_ref,
        volume: obs.volume,
        max_disp: obs.max_disp,
        stretch: obs.stretch,
        eigenvalues,
        newton_iterations: iterations,
        ds: state.ds,
        stability,
        u: state.u.clone(),
    };
    on_record(&rec);
    records.push(rec);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_branch<S: ContinuationSystem>(
    system: &S,
    config: &ContinuationConfig,
    stab: &StabilityOptions,
    crit_state: ContinuationState,
    eigvec: DVector<f64>,
    crit_step: usize,
    records: &mut Vec<StepRecord>,
    on_record: &mut impl FnMut(&StepRecord),
    failed_steps: &mut usize,
) {
    let mut state = crit_state;
    let mut ds = state.ds.max(config.ds_min);
    let perturbation = branch_perturbation(&eigvec, stab.beta, stab.thickness);
    let mut first = true;
    let mut dummy_critical = None;
    let mut dummy_idx = None;
    let max_branch_steps = config.max_steps;
    let start = crit_step;
    while state.step < start + max_branch_steps {
        if let Some(last) = records.last() {
            if last.branch == 1 {
                if stop_hit(std::slice::from_ref(last), &config.stop).is_some() {
                    break;
                }
            }
        }
        let guess = if first { Some(&perturbation) } else { None };
        match arc_length_step(system, &state, ds, &config.arc, guess) {
            Ok(out) => {
                let du = &out.u - &state.u;
                let dkappa = out.kappa - state.kappa;
                state = ContinuationState {
                    u: out.u,
                    kappa: out.kappa,
                    ds,
                    du_prev: du,
                    dkappa_prev: dkappa,
                    step: state.step + 1,
                };
                if record_step(
                    system,
                    config,
                    records,
                    on_record,
                    &state,
                    out.iterations,
                    1,
                    &mut dummy_critical,
                    &mut dummy_idx,
                )
                .is_err()
                {
                    break;
                }
                first = false;
                let ratio = (config.target_iterations as f64
                    / out.iterations.max(1) as f64)
                    .sqrt()
                    .clamp(0.5, 2.0);
                ds = (ds * ratio).clamp(config.ds_min, config.ds_max);
            }
            Err(_) => {
                *failed_steps += 1;
                ds *= 0.5;
                if ds < config.ds_min {
                    break;
                }
            }
        }
    }
}
