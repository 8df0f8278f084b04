//! Flip-flop maximum likelihood estimation for the matrix normal and
//! proportional covariance models.
//!
//! The concentration matrix is `Ψ = Ψ₁ ⊗ Ψ₂`, with the convention
//! `tr(Ψ·vec(Y)·vec(Y)†) = tr(Ψ₁·Y·Ψ₂·Y†)`. Each half-step maximizes the
//! log-likelihood exactly in one factor, so the objective never decreases.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::candec::decompose_representation;
use crate::error::{Error, Result};
use crate::linalg;
use crate::rep::RepTuple;
use crate::scalar::{Field, FieldKind};
use crate::seeding;
use crate::stability::{scaling_semistability, star_exact_stability, QuiverKind, ScalingOptions, StabilityLevel};
use crate::thresholds::{MleBehavior, Model};

#[derive(Debug, Clone, Copy)]
pub struct MleOptions {
    /// Relative objective change that counts as converged.
    pub tol: f64,
    /// Relative stationarity residual required for convergence.
    pub tau_stat: f64,
    /// Relative Frobenius distance under which two products agree.
    pub tau_unique: f64,
    pub max_iter: usize,
    /// Objective value above which the likelihood is declared unbounded.
    pub guard_objective: f64,
    /// Condition number of an iterate above which it is declared degenerate.
    pub guard_condition: f64,
    /// An update matrix with smallest eigenvalue below `tau_collapse·trace`
    /// is numerically singular.
    pub tau_collapse: f64,
    pub n_starts: usize,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            tau_stat: 1e-8,
            tau_unique: 1e-6,
            max_iter: 5000,
            guard_objective: 1e12,
            guard_condition: 1e14,
            tau_collapse: crate::stability::TAU_COLLAPSE,
            n_starts: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationPair<T: Field> {
    pub psi1: DMatrix<T>,
    pub psi2: DMatrix<T>,
}

impl<T: Field> ConcentrationPair<T> {
    pub fn identity(p: usize, q: usize) -> Self {
        Self {
            psi1: DMatrix::identity(p, p),
            psi2: DMatrix::identity(q, q),
        }
    }

    /// `W·W† + 10⁻²·I` with Gaussian `W` on both sides (diagonal `Ψ₂` for the
    /// proportional covariance model).
    pub fn random<R: Rng + ?Sized>(p: usize, q: usize, model: Model, rng: &mut R) -> Self {
        let mut pd = |n: usize| {
            let w = DMatrix::<T>::from_fn(n, n, |_, _| T::sample_gaussian(rng));
            &w * w.adjoint() + DMatrix::<T>::identity(n, n) * T::from_real(1e-2)
        };
        let psi1 = pd(p);
        let mut psi2 = pd(q);
        if model == Model::ProportionalCovariance {
            psi2 = DMatrix::from_diagonal(&psi2.diagonal());
        }
        Self { psi1, psi2 }
    }

    /// The full `pq × pq` concentration `Ψ₁ ⊗ Ψ₂`.
    pub fn product(&self) -> DMatrix<T> {
        self.psi1.kronecker(&self.psi2)
    }

    pub fn is_positive_definite(&self) -> bool {
        [&self.psi1, &self.psi2].iter().all(|m| {
            linalg::is_finite(m)
                && (*m - m.adjoint()).norm() <= 1e-10 * m.norm().max(1.0)
                && linalg::hermitian_eigenvalues(m)[0] > 0.0
        })
    }

    /// Rescales to `det Ψ₁ = 1`, which leaves `Ψ₁ ⊗ Ψ₂` unchanged.
    fn normalize(&mut self) {
        let p = self.psi1.nrows() as f64;
        let logdet: f64 = linalg::hermitian_eigenvalues(&self.psi1).iter().map(|l| l.ln()).sum();
        let c = (-logdet / p).exp();
        self.psi1 *= T::from_real(c);
        self.psi2 *= T::from_real(1.0 / c);
    }
}

fn logdet<T: Field>(m: &DMatrix<T>) -> f64 {
    linalg::hermitian_eigenvalues(m).iter().map(|l| l.ln()).sum()
}

fn left_gram<T: Field>(y: &RepTuple<T>, psi2: &DMatrix<T>) -> DMatrix<T> {
    let mut acc = DMatrix::zeros(y.p(), y.p());
    for yi in y.matrices() {
        acc += yi * psi2 * yi.adjoint();
    }
    linalg::hermitian_part(&acc)
}

fn right_gram<T: Field>(y: &RepTuple<T>, psi1: &DMatrix<T>) -> DMatrix<T> {
    let mut acc = DMatrix::zeros(y.q(), y.q());
    for yi in y.matrices() {
        acc += yi.adjoint() * psi1 * yi;
    }
    linalg::hermitian_part(&acc)
}

/// `½·[m·q·log det Ψ₁ + m·p·log det Ψ₂ − Σ tr(Ψ₁·Y_i·Ψ₂·Y_i†)]`.
pub fn log_likelihood<T: Field>(y: &RepTuple<T>, pair: &ConcentrationPair<T>) -> Result<f64> {
    let (p, q) = (y.p(), y.q());
    if pair.psi1.shape() != (p, p) || pair.psi2.shape() != (q, q) {
        return Err(Error::Shape(format!(
            "concentration pair of shape {:?}, {:?} for a {p}×{q} sample",
            pair.psi1.shape(),
            pair.psi2.shape()
        )));
    }
    if !pair.is_positive_definite() {
        return Err(Error::Domain("concentration pair is not positive definite".into()));
    }
    Ok(objective(y, pair))
}

fn objective<T: Field>(y: &RepTuple<T>, pair: &ConcentrationPair<T>) -> f64 {
    let (p, q, m) = (y.p() as f64, y.q() as f64, y.m() as f64);
    let quad = linalg::trace_re(&(&pair.psi1 * left_gram(y, &pair.psi2)));
    0.5 * (m * q * logdet(&pair.psi1) + m * p * logdet(&pair.psi2) - quad)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum MleStatus {
    Converged,
    Diverged,
    MaxIterReached,
}

impl std::fmt::Display for MleStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MleStatus::Converged => "converged",
            MleStatus::Diverged => "diverged",
            MleStatus::MaxIterReached => "max-iter",
        })
    }
}

#[derive(Debug, Clone)]
pub struct MleResult<T: Field> {
    pub status: MleStatus,
    /// Set when converged.
    pub pair: Option<ConcentrationPair<T>>,
    /// The final iterate, whatever the status.
    pub last: ConcentrationPair<T>,
    pub loglik: f64,
    pub iterations: usize,
    /// Objective after each sweep: the first is evaluated directly, the rest
    /// accumulate the exact gain of each block step.
    pub history: Vec<f64>,
    pub stationarity_residual: f64,
}

enum Update<T: Field> {
    Ok(DMatrix<T>),
    Singular { rank: usize },
}

/// `c·M⁻¹` for a Hermitian update matrix, or the numerical rank when `M` is
/// singular relative to its trace.
fn inverse_update<T: Field>(m: &DMatrix<T>, c: f64, tau: f64, diagonal: bool) -> Update<T> {
    let n = m.nrows();
    if diagonal {
        let d: Vec<f64> = (0..n).map(|j| m[(j, j)].real()).collect();
        let tr: f64 = d.iter().sum();
        let rank = d.iter().filter(|&&x| x > tau * tr).count();
        if rank < n || !tr.is_finite() {
            return Update::Singular { rank };
        }
        return Update::Ok(linalg::diag_real(&d.iter().map(|x| c / x).collect::<Vec<_>>()));
    }
    let eig = linalg::hermitian_eigenvalues(m);
    let tr: f64 = eig.iter().sum();
    let rank = eig.iter().filter(|&&x| x > tau * tr).count();
    if rank < n || !tr.is_finite() {
        return Update::Singular { rank };
    }
    Update::Ok(linalg::hermitian_part(&linalg::hermitian_apply(m, |l| c / l)))
}

/// Objective gain of replacing `old` by its block maximizer `c·G⁻¹`:
/// `½·c·Σ (xᵢ − 1 − ln xᵢ)` over the eigenvalues of `old^½·G·old^½ / c`.
/// Near convergence the iterates are badly conditioned and differencing two
/// objective values loses everything below `cond·ε`; the gain is second
/// order in `xᵢ − 1` and keeps its accuracy.
fn block_gain<T: Field>(old: &DMatrix<T>, gram: &DMatrix<T>, c: f64, diagonal: bool) -> f64 {
    let x: Vec<f64> = if diagonal {
        (0..old.nrows()).map(|j| old[(j, j)].real() * gram[(j, j)].real() / c).collect()
    } else {
        let half = linalg::hermitian_apply(old, f64::sqrt);
        linalg::hermitian_eigenvalues(&linalg::hermitian_part(&(&half * gram * &half)))
            .into_iter()
            .map(|l| l / c)
            .collect()
    };
    0.5 * c * x.into_iter().map(|x| excess(x - 1.0)).sum::<f64>()
}

/// `u − ln(1 + u)`, with the series where the two terms cancel.
fn excess(u: f64) -> f64 {
    if u.abs() < 1e-3 {
        u * u * (0.5 - u * (1.0 / 3.0 - u * (0.25 - u * (0.2 - u * (1.0 / 6.0 - u / 7.0)))))
    } else {
        u - u.ln_1p()
    }
}

fn condition<T: Field>(m: &DMatrix<T>) -> f64 {
    let e = linalg::hermitian_eigenvalues(m);
    e[e.len() - 1] / e[0]
}

pub fn flip_flop<T: Field>(
    y: &RepTuple<T>,
    model: Model,
    init: &ConcentrationPair<T>,
    opts: &MleOptions,
) -> Result<MleResult<T>> {
    let (p, q, m) = (y.p(), y.q(), y.m());
    if !init.is_positive_definite() || init.psi1.shape() != (p, p) || init.psi2.shape() != (q, q) {
        return Err(Error::Domain("initial concentration pair is not positive definite".into()));
    }
    let diag = model == Model::ProportionalCovariance;
    let (cq, cp) = ((m * q) as f64, (m * p) as f64);
    let mut pair = init.clone();
    if diag {
        pair.psi2 = DMatrix::from_diagonal(&pair.psi2.diagonal());
    }
    let mut history = Vec::new();
    let mut residual = f64::INFINITY;

    let finish = |status, pair: ConcentrationPair<T>, history: Vec<f64>, residual, iterations| {
        let loglik = history.last().copied().unwrap_or(f64::NEG_INFINITY);
        MleResult {
            status,
            pair: (status == MleStatus::Converged).then(|| pair.clone()),
            last: pair,
            loglik,
            iterations,
            history,
            stationarity_residual: residual,
        }
    };

    for it in 0..opts.max_iter {
        let ml = left_gram(y, &pair.psi2);
        let old1 = std::mem::replace(
            &mut pair.psi1,
            match inverse_update(&ml, cq, opts.tau_collapse, false) {
                Update::Ok(psi1) => psi1,
                Update::Singular { rank } if it == 0 => return Err(Error::DegenerateSample { rank, dim: p }),
                Update::Singular { .. } => return Ok(finish(MleStatus::Diverged, pair, history, residual, it)),
            },
        );
        let mr = right_gram(y, &pair.psi1);
        let old2 = std::mem::replace(
            &mut pair.psi2,
            match inverse_update(&mr, cp, opts.tau_collapse, diag) {
                Update::Ok(psi2) => psi2,
                Update::Singular { rank } if it == 0 => return Err(Error::DegenerateSample { rank, dim: q }),
                Update::Singular { .. } => return Ok(finish(MleStatus::Diverged, pair, history, residual, it)),
            },
        );
        // rescaling leaves the objective unchanged
        pair.normalize();

        // The first value is evaluated directly, later ones add the exact
        // gains of the two block steps.
        let value = match history.last() {
            None => objective(y, &pair),
            Some(&prev) => prev + block_gain(&old1, &ml, cq, false) + block_gain(&old2, &mr, cp, diag),
        };
        let cond = condition(&pair.psi1).max(condition(&pair.psi2));
        if !value.is_finite() || value > opts.guard_objective || !(cond <= opts.guard_condition) {
            history.push(value);
            return Ok(finish(MleStatus::Diverged, pair, history, residual, it + 1));
        }

        // Ψ₂ is optimal for Ψ₁, so only the Ψ₁ equation can be off
        let target = linalg::hermitian_apply(&pair.psi1, |l| cq / l);
        let ml = left_gram(y, &pair.psi2);
        residual = (&target - &ml).norm() / target.norm();

        let previous = history.last().copied();
        history.push(value);
        if let Some(prev) = previous {
            let change = (value - prev).abs() / value.abs().max(1.0);
            if change < opts.tol && residual < opts.tau_stat {
                return Ok(finish(MleStatus::Converged, pair, history, residual, it + 1));
            }
        }
    }
    Ok(finish(MleStatus::MaxIterReached, pair, history, residual, opts.max_iter))
}

#[derive(Debug, Clone)]
pub enum ProbeOutcome<T: Field> {
    AllAgree { product: DMatrix<T> },
    Disagree { first: DMatrix<T>, second: DMatrix<T>, distance: f64 },
    NotApplicable,
}

impl<T: Field> ProbeOutcome<T> {
    pub fn label(&self) -> &'static str {
        match self {
            ProbeOutcome::AllAgree { .. } => "all-agree",
            ProbeOutcome::Disagree { .. } => "disagree",
            ProbeOutcome::NotApplicable => "not-applicable",
        }
    }
}

fn relative_distance<T: Field>(a: &DMatrix<T>, b: &DMatrix<T>) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(f64::MIN_POSITIVE)
}

/// Stationarity demanded of probe runs, relative to `tau_unique`. Slowly
/// converging runs stop with product errors far above their residual, so the
/// runs are driven well past `tau_stat` before products are compared.
const PROBE_STAT_FACTOR: f64 = 1e-5;
/// Iteration budget of probe runs, relative to `max_iter`. Samples close to
/// the null cone can need tens of thousands of sweeps.
const PROBE_ITER_FACTOR: usize = 10;

/// Runs flip-flop from `n_starts` random positive-definite starts (in
/// parallel) and compares the products `Ψ₁ ⊗ Ψ₂` pairwise.
pub fn uniqueness_probe<T: Field>(
    y: &RepTuple<T>,
    model: Model,
    n_starts: usize,
    seed: u64,
    opts: &MleOptions,
) -> Result<ProbeOutcome<T>> {
    if n_starts < 2 {
        return Err(Error::Config(format!("uniqueness probe needs at least 2 starts, got {n_starts}")));
    }
    let (p, q) = (y.p(), y.q());
    let run_opts = MleOptions {
        tau_stat: opts.tau_stat.min(opts.tau_unique * PROBE_STAT_FACTOR),
        max_iter: opts.max_iter.saturating_mul(PROBE_ITER_FACTOR),
        ..*opts
    };
    let runs: Vec<Result<MleResult<T>>> = (0..n_starts)
        .into_par_iter()
        .map(|k| {
            let mut rng = seeding::rng_for(seed, &[k as u64]);
            let init = ConcentrationPair::random(p, q, model, &mut rng);
            flip_flop(y, model, &init, &run_opts)
        })
        .collect();
    let mut products = Vec::with_capacity(n_starts);
    for run in runs {
        let run = match run {
            Ok(r) => r,
            Err(Error::DegenerateSample { .. }) => return Ok(ProbeOutcome::NotApplicable),
            Err(e) => return Err(e),
        };
        if run.status == MleStatus::Diverged {
            return Ok(ProbeOutcome::NotApplicable);
        }
        products.push(run.last.product());
    }
    for i in 0..products.len() {
        for j in i + 1..products.len() {
            let distance = relative_distance(&products[i], &products[j]);
            if distance > opts.tau_unique {
                return Ok(ProbeOutcome::Disagree {
                    first: products[i].clone(),
                    second: products[j].clone(),
                    distance,
                });
            }
        }
    }
    Ok(ProbeOutcome::AllAgree {
        product: products.swap_remove(0),
    })
}

/// What the numerical evidence says about one sample.
#[derive(Debug, Clone, Serialize)]
pub struct EmpiricalVerdict {
    pub behavior: MleBehavior,
    pub semistability: StabilityLevel,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flip_flop: Option<MleStatus>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe: Option<&'static str>,
    /// For real samples declared unique: whether the real splitting found a
    /// single summand.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub real_indecomposable: Option<bool>,
    /// False when the sub-checks contradict each other.
    pub consistent: bool,
    /// Flip-flop sweeps from the identity start (0 when not run).
    pub iterations: usize,
}

/// Combines semistability, flip-flop and the uniqueness probe into an
/// empirical MLE verdict.
///
/// Semistability comes from operator scaling for the matrix normal model and
/// from the exact arm-rank test for the proportional covariance model.
pub fn classify_empirical<T: Field>(
    y: &RepTuple<T>,
    model: Model,
    seed: u64,
    opts: &MleOptions,
) -> Result<EmpiricalVerdict> {
    let semistability = match model {
        Model::MatrixNormal => scaling_semistability(y, &ScalingOptions::default())?.level,
        Model::ProportionalCovariance => star_exact_stability(y)?.level,
    };
    let mut verdict = EmpiricalVerdict {
        behavior: MleBehavior::LikelihoodUnbounded,
        semistability,
        flip_flop: None,
        probe: None,
        real_indecomposable: None,
        consistent: true,
        iterations: 0,
    };
    if semistability == StabilityLevel::Unstable {
        return Ok(verdict);
    }

    let init = ConcentrationPair::identity(y.p(), y.q());
    let run = match flip_flop(y, model, &init, opts) {
        Ok(run) => run,
        Err(Error::DegenerateSample { .. }) => {
            verdict.consistent = false;
            return Ok(verdict);
        }
        Err(e) => return Err(e),
    };
    verdict.flip_flop = Some(run.status);
    verdict.iterations = run.iterations;
    if run.status == MleStatus::Diverged {
        verdict.consistent = false;
        return Ok(verdict);
    }

    let probe = uniqueness_probe(y, model, opts.n_starts, seed, opts)?;
    verdict.probe = Some(probe.label());
    verdict.behavior = match probe {
        ProbeOutcome::AllAgree { .. } => MleBehavior::MleExistsUniqueAS,
        ProbeOutcome::Disagree { .. } => MleBehavior::MleExistsNotAlmostSurelyUnique,
        ProbeOutcome::NotApplicable => {
            verdict.consistent = false;
            MleBehavior::MleExistsNotAlmostSurelyUnique
        }
    };

    if T::KIND == FieldKind::Real && verdict.behavior == MleBehavior::MleExistsUniqueAS {
        let mut rng = seeding::rng_for(seed, &[u64::MAX]);
        let single = match decompose_representation(y, QuiverKind::from(model), &mut rng) {
            Ok(split) => split.len() == 1,
            Err(_) => false,
        };
        verdict.real_indecomposable = Some(single);
        verdict.consistent &= single;
    }
    Ok(verdict)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn opts() -> MleOptions {
        MleOptions::default()
    }

    #[test]
    fn log_likelihood_examples() {
        let y = RepTuple::from_row_slices(1, 1, &[&[3.0]]).unwrap();
        let pair = ConcentrationPair::identity(1, 1);
        assert_eq!(log_likelihood(&y, &pair).unwrap(), -4.5);

        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let y = RepTuple::<f64>::gaussian(3, 2, 2, &mut rng);
        let id = ConcentrationPair::identity(3, 2);
        let expected = -0.5 * y.norm_squared();
        assert!((log_likelihood(&y, &id).unwrap() - expected).abs() < 1e-12);

        let pair = ConcentrationPair::<f64>::random(3, 2, Model::MatrixNormal, &mut rng);
        let scaled = ConcentrationPair {
            psi1: &pair.psi1 * 2.0,
            psi2: &pair.psi2 * 0.5,
        };
        let (a, b) = (log_likelihood(&y, &pair).unwrap(), log_likelihood(&y, &scaled).unwrap());
        assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));
    }

    #[test]
    fn log_likelihood_rejects_indefinite() {
        let y = RepTuple::from_row_slices(1, 1, &[&[1.0]]).unwrap();
        let pair = ConcentrationPair {
            psi1: DMatrix::from_element(1, 1, -1.0),
            psi2: DMatrix::identity(1, 1),
        };
        assert!(matches!(log_likelihood(&y, &pair), Err(Error::Domain(_))));
    }

    #[test]
    fn scalar_closed_form() {
        let ys = [0.7, -1.3, 2.1];
        let y = RepTuple::from_row_slices(1, 1, &[&ys[0..1], &ys[1..2], &ys[2..3]]).unwrap();
        let r = flip_flop(&y, Model::MatrixNormal, &ConcentrationPair::identity(1, 1), &opts()).unwrap();
        assert_eq!(r.status, MleStatus::Converged);
        let pair = r.pair.unwrap();
        let expected = 3.0 / ys.iter().map(|v| v * v).sum::<f64>();
        assert!((pair.psi1[(0, 0)] * pair.psi2[(0, 0)] - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn generic_stable_sample_converges() {
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        let y = RepTuple::<f64>::gaussian(5, 4, 2, &mut rng);
        let r = flip_flop(&y, Model::MatrixNormal, &ConcentrationPair::identity(5, 4), &opts()).unwrap();
        assert_eq!(r.status, MleStatus::Converged);
        assert!(r.stationarity_residual < 1e-8);
        for w in r.history.windows(2) {
            assert!(w[1] >= w[0] - 1e-12 * w[0].abs().max(1.0));
        }
        // the Ψ₂ equation holds as well
        let pair = r.pair.unwrap();
        let lhs = linalg::hermitian_apply(&pair.psi2, |l| 10.0 / l);
        let rhs = right_gram(&y, &pair.psi1);
        assert!((&lhs - &rhs).norm() / lhs.norm() < 1e-8);
    }

    #[test]
    fn accumulated_history_matches_direct_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(64);
        let y = RepTuple::<f64>::gaussian(4, 3, 3, &mut rng);
        let init = ConcentrationPair::identity(4, 3);
        let full = flip_flop(&y, Model::MatrixNormal, &init, &opts()).unwrap();
        for k in [1, 2, 5, 20] {
            let short = MleOptions { max_iter: k, ..opts() };
            let r = flip_flop(&y, Model::MatrixNormal, &init, &short).unwrap();
            let direct = log_likelihood(&y, &r.last).unwrap();
            assert!((full.history[k - 1] - direct).abs() < 1e-10 * direct.abs().max(1.0));
        }
        let direct = log_likelihood(&y, &full.last).unwrap();
        assert!((full.loglik - direct).abs() < 1e-10 * direct.abs().max(1.0));
    }

    #[test]
    fn excess_is_accurate_near_zero() {
        for u in [1e-9f64, -1e-9, 1e-4, -1e-4, 5e-4, 0.3, -0.3, 4.0] {
            let series: f64 = (2..60).map(|k| (-u).powi(k) / k as f64).sum();
            let want = if u.abs() < 0.5 { series } else { u - (1.0 + u).ln() };
            assert!((excess(u) - want).abs() <= 1e-13 * want.abs(), "{u}");
        }
    }

    #[test]
    fn generic_unstable_sample_diverges() {
        let mut rng = ChaCha8Rng::seed_from_u64(63);
        let y = RepTuple::<f64>::gaussian(7, 4, 2, &mut rng);
        let r = flip_flop(&y, Model::MatrixNormal, &ConcentrationPair::identity(7, 4), &opts()).unwrap();
        assert_eq!(r.status, MleStatus::Diverged);
    }

    #[test]
    fn degenerate_sample() {
        let y = RepTuple::<f64>::zeros(2, 2, 1);
        let r = flip_flop(&y, Model::MatrixNormal, &ConcentrationPair::identity(2, 2), &opts());
        assert!(matches!(r, Err(Error::DegenerateSample { .. })));
    }

    #[test]
    fn probe_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(64);
        let y = RepTuple::<f64>::gaussian(5, 4, 2, &mut rng);
        let probe = uniqueness_probe(&y, Model::MatrixNormal, 20, 1, &opts()).unwrap();
        assert!(matches!(probe, ProbeOutcome::AllAgree { .. }));
        let y = RepTuple::<f64>::gaussian(6, 4, 2, &mut rng);
        let probe = uniqueness_probe(&y, Model::MatrixNormal, 20, 1, &opts()).unwrap();
        assert!(matches!(probe, ProbeOutcome::Disagree { .. }));
        let y = RepTuple::from_row_slices(1, 1, &[&[1.5]]).unwrap();
        let probe = uniqueness_probe(&y, Model::MatrixNormal, 4, 1, &opts()).unwrap();
        assert!(matches!(probe, ProbeOutcome::AllAgree { .. }));
    }

    #[test]
    fn empirical_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(65);
        let cases = [
            ((5, 4), MleBehavior::MleExistsUniqueAS),
            ((8, 4), MleBehavior::MleExistsNotAlmostSurelyUnique),
            ((7, 4), MleBehavior::LikelihoodUnbounded),
        ];
        for ((p, q), expected) in cases {
            let y = RepTuple::<f64>::gaussian(p, q, 2, &mut rng);
            let v = classify_empirical(&y, Model::MatrixNormal, 3, &opts()).unwrap();
            assert_eq!(v.behavior, expected, "({p},{q},2)");
            assert!(v.consistent);
        }
    }

    #[test]
    fn proportional_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(66);
        // mq > p: unique; mq = p with q > 1: not unique; mq < p: unbounded
        let cases = [
            ((3, 2, 2), MleBehavior::MleExistsUniqueAS),
            ((4, 2, 2), MleBehavior::MleExistsNotAlmostSurelyUnique),
            ((5, 2, 2), MleBehavior::LikelihoodUnbounded),
        ];
        for ((p, q, m), expected) in cases {
            let y = RepTuple::<f64>::gaussian(p, q, m, &mut rng);
            let v = classify_empirical(&y, Model::ProportionalCovariance, 4, &opts()).unwrap();
            assert_eq!(v.behavior, expected, "({p},{q},{m})");
        }
    }

    #[test]
    fn equivariance_of_the_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(67);
        let y = RepTuple::<Complex64>::gaussian(5, 4, 2, &mut rng);
        let g = DMatrix::<Complex64>::from_fn(5, 5, |_, _| Complex64::sample_gaussian(&mut rng));
        let h = DMatrix::<Complex64>::from_fn(4, 4, |_, _| Complex64::sample_gaussian(&mut rng));
        let y2 = y.transform(&g, &h).unwrap();
        let solve = |y: &RepTuple<Complex64>| {
            flip_flop(y, Model::MatrixNormal, &ConcentrationPair::identity(5, 4), &opts())
                .unwrap()
                .pair
                .unwrap()
        };
        let (a, b) = (solve(&y), solve(&y2));
        let g_inv = g.clone().try_inverse().unwrap();
        let predicted = ConcentrationPair {
            psi1: g_inv.adjoint() * &a.psi1 * &g_inv,
            psi2: &h * &a.psi2 * h.adjoint(),
        };
        let (pp, bp) = (predicted.product(), b.product());
        assert!(relative_distance(&pp, &bp) < 1e-6);
    }
}
