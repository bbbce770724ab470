//! (μ/μ_w, λ)-CMA-ES with rank-one and rank-μ covariance updates, default
//! strategy parameters after Hansen's tutorial.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CmaOptions {
    pub sigma0: f64,
    /// Box constraints; candidates outside are resampled, never evaluated.
    pub bounds: Option<Vec<[f64; 2]>>,
    pub max_generations: usize,
    /// Stop once the best-ever value falls below this.
    pub target: Option<f64>,
    /// Stop once `sigma * sqrt(max diag C)` falls below this.
    pub tol_x: f64,
    pub seed: u64,
    /// Worker threads for objective evaluation within a generation.
    pub threads: usize,
    /// Population size; `None` uses `4 + floor(3 ln n)`.
    pub lambda: Option<usize>,
}

impl Default for CmaOptions {
    fn default() -> Self {
        Self { sigma0: 0.3, bounds: None, max_generations: 1000, target: None, tol_x: 1e-14, seed: 0, threads: 1, lambda: None }
    }
}

/// Search distribution and evolution paths.
#[derive(Debug, Clone, PartialEq)]
pub struct CmaEsState {
    pub mean: DVector<f64>,
    pub sigma: f64,
    pub covariance: DMatrix<f64>,
    pub p_sigma: DVector<f64>,
    pub p_c: DVector<f64>,
    pub lambda: usize,
    pub generation: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRecord {
    pub generation: usize,
    pub evaluations: usize,
    pub generation_best: f64,
    pub best_ever: f64,
    pub sigma: f64,
    pub mean: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CmaResult {
    pub x_best: Vec<f64>,
    pub f_best: f64,
    /// `sigma * sqrt(diag C)` of the final distribution.
    pub std: Vec<f64>,
    pub history: Vec<GenerationRecord>,
    pub restarts: usize,
    pub state: CmaEsState,
}

struct Strategy {
    n: usize,
    lambda: usize,
    mu: usize,
    weights: Vec<f64>,
    mu_eff: f64,
    c_sigma: f64,
    d_sigma: f64,
    c_c: f64,
    c_1: f64,
    c_mu: f64,
    chi_n: f64,
}

impl Strategy {
    fn new(n: usize, lambda: Option<usize>) -> Self {
        let nf = n as f64;
        let lambda = lambda.unwrap_or(4 + (3.0 * nf.ln()).floor() as usize).max(4);
        let mu = lambda / 2;
        let raw: Vec<f64> = (1..=mu).map(|i| (mu as f64 + 0.5).ln() - (i as f64).ln()).collect();
        let sum: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / sum).collect();
        let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        let c_sigma = (mu_eff + 2.0) / (nf + mu_eff + 5.0);
        let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        let c_c = (4.0 + mu_eff / nf) / (nf + 4.0 + 2.0 * mu_eff / nf);
        let c_1 = 2.0 / ((nf + 1.3).powi(2) + mu_eff);
        let c_mu = (1.0 - c_1).min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((nf + 2.0).powi(2) + mu_eff));
        let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));
        Self { n, lambda, mu, weights, mu_eff, c_sigma, d_sigma, c_c, c_1, c_mu, chi_n }
    }
}

fn in_bounds(x: &DVector<f64>, bounds: &Option<Vec<[f64; 2]>>) -> bool {
    match bounds {
        None => true,
        Some(b) => x.iter().zip(b).all(|(v, [lo, hi])| v >= lo && v <= hi),
    }
}

/// `B` and `D` with `C = B diag(D²) Bᵀ`; fails if C is not positive definite.
fn decompose(c: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let sym = (c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    if eig.eigenvalues.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(Error::DegenerateCovariance);
    }
    Ok((eig.eigenvectors, eig.eigenvalues.map(f64::sqrt)))
}

fn evaluate<F>(objective: &F, xs: &[DVector<f64>], threads: usize) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if threads <= 1 || xs.len() < 2 {
        return xs.iter().map(|x| objective(x.as_slice())).collect();
    }
    let chunk = xs.len().div_ceil(threads);
    let mut out = vec![0.0; xs.len()];
    std::thread::scope(|scope| {
        for (xs, out) in xs.chunks(chunk).zip(out.chunks_mut(chunk)) {
            scope.spawn(move || {
                for (x, o) in xs.iter().zip(out.iter_mut()) {
                    *o = objective(x.as_slice());
                }
            });
        }
    });
    out
}

/// Minimizes `objective` from `x0`. Non-finite objective values rank last.
/// Deterministic for a given seed, independent of `threads`.
pub fn cma_es_minimize<F>(objective: F, x0: &[f64], opts: &CmaOptions) -> Result<CmaResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let n = x0.len();
    if n == 0 || !(opts.sigma0 > 0.0) || opts.max_generations == 0 {
        return Err(Error::InvalidConfig("CMA-ES needs n >= 1, sigma0 > 0 and at least one generation".into()));
    }
    if let Some(b) = &opts.bounds {
        if b.len() != n {
            return Err(Error::ShapeMismatch { expected: n, got: b.len() });
        }
    }
    let s = Strategy::new(n, opts.lambda);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut state = CmaEsState {
        mean: DVector::from_column_slice(x0),
        sigma: opts.sigma0,
        covariance: DMatrix::identity(n, n),
        p_sigma: DVector::zeros(n),
        p_c: DVector::zeros(n),
        lambda: s.lambda,
        generation: 0,
        seed: opts.seed,
    };
    let mut x_best = state.mean.clone();
    let mut f_best = f64::INFINITY;
    let mut history = Vec::new();
    let mut evaluations = 0;
    let mut restarts = 0;

    while state.generation < opts.max_generations {
        let (b, d) = match decompose(&state.covariance) {
            Ok(bd) => bd,
            Err(_) => {
                restarts += 1;
                log::warn!("CMA-ES covariance degenerate at generation {}; restarting with doubled sigma", state.generation);
                state.sigma *= 2.0;
                state.covariance = DMatrix::identity(n, n);
                state.p_sigma.fill(0.0);
                state.p_c.fill(0.0);
                state.mean = x_best.clone();
                if restarts > 20 {
                    return Err(Error::DegenerateCovariance);
                }
                continue;
            }
        };

        let mut ys = Vec::with_capacity(s.lambda);
        let mut xs = Vec::with_capacity(s.lambda);
        for _ in 0..s.lambda {
            let mut accepted = None;
            for _ in 0..1000 {
                let z = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
                let y = &b * d.component_mul(&z);
                let x = &state.mean + &y * state.sigma;
                if in_bounds(&x, &opts.bounds) {
                    accepted = Some((y, x));
                    break;
                }
            }
            let (y, x) = accepted.unwrap_or_else(|| {
                let bounds = opts.bounds.as_ref().expect("rejection only happens with bounds");
                let x = DVector::from_fn(n, |i, _| state.mean[i].clamp(bounds[i][0], bounds[i][1]));
                (DVector::zeros(n), x)
            });
            ys.push(y);
            xs.push(x);
        }
        let fs = evaluate(&objective, &xs, opts.threads);
        evaluations += fs.len();

        let mut order: Vec<usize> = (0..s.lambda).collect();
        let key = |f: f64| if f.is_nan() { f64::INFINITY } else { f };
        order.sort_by(|&i, &j| key(fs[i]).total_cmp(&key(fs[j])).then(i.cmp(&j)));
        let gen_best = key(fs[order[0]]);
        if gen_best < f_best {
            f_best = gen_best;
            x_best = xs[order[0]].clone();
        }

        let y_w = order[..s.mu].iter().zip(&s.weights).fold(DVector::zeros(n), |acc, (&i, &w)| acc + &ys[i] * w);
        state.mean += &y_w * state.sigma;

        let inv_sqrt_c = &b * DMatrix::from_diagonal(&d.map(|v| 1.0 / v)) * b.transpose();
        let cs = s.c_sigma;
        state.p_sigma = &state.p_sigma * (1.0 - cs) + (&inv_sqrt_c * &y_w) * (cs * (2.0 - cs) * s.mu_eff).sqrt();
        let gen1 = (state.generation + 1) as f64;
        let ps_norm = state.p_sigma.norm();
        let h_sigma = ps_norm / (1.0 - (1.0 - cs).powf(2.0 * gen1)).sqrt() < (1.4 + 2.0 / (s.n as f64 + 1.0)) * s.chi_n;
        let hs = if h_sigma { 1.0 } else { 0.0 };
        let cc = s.c_c;
        state.p_c = &state.p_c * (1.0 - cc) + &y_w * (hs * (cc * (2.0 - cc) * s.mu_eff).sqrt());

        let rank_mu = order[..s.mu]
            .iter()
            .zip(&s.weights)
            .fold(DMatrix::zeros(n, n), |acc, (&i, &w)| acc + &ys[i] * ys[i].transpose() * w);
        let rank_one = &state.p_c * state.p_c.transpose();
        let old = state.covariance.clone();
        state.covariance = &old * (1.0 - s.c_1 - s.c_mu)
            + (rank_one + &old * ((1.0 - hs) * cc * (2.0 - cc))) * s.c_1
            + rank_mu * s.c_mu;
        state.sigma *= ((cs / s.d_sigma) * (ps_norm / s.chi_n - 1.0)).exp();
        state.generation += 1;

        history.push(GenerationRecord {
            generation: state.generation,
            evaluations,
            generation_best: gen_best,
            best_ever: f_best,
            sigma: state.sigma,
            mean: state.mean.iter().copied().collect(),
        });

        if opts.target.is_some_and(|t| f_best < t) {
            break;
        }
        let spread = state.sigma * state.covariance.diagonal().max().sqrt();
        if spread < opts.tol_x || !spread.is_finite() {
            break;
        }
    }

    let std = state.covariance.diagonal().iter().map(|c| state.sigma * c.max(0.0).sqrt()).collect();
    Ok(CmaResult { x_best: x_best.iter().copied().collect(), f_best, std, history, restarts, state })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(x: &[f64]) -> f64 {
        (x[0] - 1.5).powi(2) + (x[1] + 0.5).powi(2)
    }

    fn rosenbrock(x: &[f64]) -> f64 {
        100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2)
    }

    #[test]
    fn default_population_for_two_dimensions() {
        let s = Strategy::new(2, None);
        assert_eq!((s.lambda, s.mu), (6, 3));
        assert!((s.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sphere_converges() {
        let opts = CmaOptions { max_generations: 200, seed: 3, ..Default::default() };
        let r = cma_es_minimize(sphere, &[0.0, 0.0], &opts).unwrap();
        let d = ((r.x_best[0] - 1.5).powi(2) + (r.x_best[1] + 0.5).powi(2)).sqrt();
        assert!(d < 1e-6, "distance {d}");
    }

    #[test]
    fn rosenbrock_converges() {
        let opts = CmaOptions { max_generations: 2000, seed: 5, target: Some(1e-10), ..Default::default() };
        let r = cma_es_minimize(rosenbrock, &[-1.0, 1.0], &opts).unwrap();
        assert!(r.f_best < 1e-6, "f {}", r.f_best);
    }

    #[test]
    fn seeded_runs_are_identical_and_thread_count_is_irrelevant() {
        let a = cma_es_minimize(rosenbrock, &[0.0, 0.0], &CmaOptions { max_generations: 50, seed: 9, ..Default::default() }).unwrap();
        let b = cma_es_minimize(rosenbrock, &[0.0, 0.0], &CmaOptions { max_generations: 50, seed: 9, threads: 3, ..Default::default() })
            .unwrap();
        assert_eq!(a.history, b.history);
    }

    #[test]
    fn constant_shift_changes_no_iterate() {
        let opts = CmaOptions { max_generations: 40, seed: 1, ..Default::default() };
        let a = cma_es_minimize(sphere, &[0.0, 0.0], &opts).unwrap();
        let b = cma_es_minimize(|x: &[f64]| sphere(x) + 17.0, &[0.0, 0.0], &opts).unwrap();
        for (ra, rb) in a.history.iter().zip(&b.history) {
            assert_eq!(ra.mean, rb.mean);
            assert_eq!(ra.sigma, rb.sigma);
        }
    }

    #[test]
    fn best_ever_is_monotone() {
        let r = cma_es_minimize(rosenbrock, &[2.0, -1.0], &CmaOptions { max_generations: 300, seed: 2, ..Default::default() }).unwrap();
        for w in r.history.windows(2) {
            assert!(w[1].best_ever <= w[0].best_ever);
        }
    }

    #[test]
    fn bounded_candidates_are_never_evaluated_outside() {
        let seen = std::sync::Mutex::new(Vec::new());
        let f = |x: &[f64]| {
            seen.lock().unwrap().push(x.to_vec());
            (x[0] - 0.1).powi(2) + (x[1] - 0.1).powi(2)
        };
        let opts = CmaOptions { bounds: Some(vec![[1e-6, 10.0]; 2]), sigma0: 1.0, max_generations: 60, seed: 4, ..Default::default() };
        cma_es_minimize(f, &[0.5, 0.5], &opts).unwrap();
        assert!(seen.into_inner().unwrap().iter().all(|x| x.iter().all(|&v| v > 0.0)));
    }
}
