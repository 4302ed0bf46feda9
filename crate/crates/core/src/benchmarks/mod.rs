//! Benchmark problem constructors, data ingestion, and synthetic
//! generators.

mod data;
mod generators;

pub use data::{load_libsvm, save_dataset, Dataset, Provenance, SparseRow};
pub use generators::{gen_tanh_synthetic, SyntheticSpec};

use std::sync::Arc;

use crate::error::{CoreError, Result};
use crate::linalg;
use crate::problem::{CompositeObjective, KnownSolution, ProblemInstance};
use crate::prox::Regularizer;
use crate::rng::SplitMix64;
use crate::solvers::{refine_minimizer, DomainGuard};

/// A ready-to-run composite problem with its recommended parameters and a
/// failure detector for solvers whose inner iterates can leave dom(f).
#[derive(Clone, Debug)]
pub struct BenchmarkBundle {
    pub name: String,
    pub objective: CompositeObjective,
    pub known_solution: Option<KnownSolution>,
    pub recommended_lambda: f64,
    pub default_start: Vec<f64>,
    pub domain_guard: Option<DomainGuard>,
}

impl BenchmarkBundle {
    pub fn lipschitz(&self) -> f64 {
        self.objective.problem.lipschitz
    }

    pub fn n(&self) -> usize {
        self.objective.problem.n
    }

    pub fn dim(&self) -> usize {
        self.objective.problem.dim
    }
}

/// One-dimensional toy problem with 100 components
/// f(w, i) = [sin(i pi / 100) w^2 + log^2(w + i/10)] / 2 and phi the
/// indicator of the nonnegative half-line.
///
/// The components are undefined for w <= -1/10, so runs are guarded at
/// that threshold. No global Lipschitz modulus exists (the log term's
/// curvature blows up toward the domain boundary); the Lipschitz field is
/// the infinity sentinel and theory-tuned schedules are unavailable.
pub fn make_toy_1d() -> BenchmarkBundle {
    let n = 100usize;
    let value = Arc::new(move |w: &[f64], i: usize| -> Result<f64> {
        let idx = (i + 1) as f64;
        let shifted = w[0] + idx / 10.0;
        if shifted <= 0.0 {
            return Err(CoreError::DomainViolation {
                index: i,
                message: format!("log argument {shifted} <= 0"),
            });
        }
        let s = (idx * std::f64::consts::PI / 100.0).sin();
        Ok((s * w[0] * w[0] + shifted.ln().powi(2)) / 2.0)
    });
    let grad = Arc::new(move |w: &[f64], i: usize, out: &mut [f64]| -> Result<()> {
        let idx = (i + 1) as f64;
        let shifted = w[0] + idx / 10.0;
        if shifted <= 0.0 {
            return Err(CoreError::DomainViolation {
                index: i,
                message: format!("log argument {shifted} <= 0"),
            });
        }
        let s = (idx * std::f64::consts::PI / 100.0).sin();
        out[0] = s * w[0] + shifted.ln() / shifted;
        Ok(())
    });
    let problem = ProblemInstance::new(n, 1, value, grad, f64::INFINITY, 0.0);
    BenchmarkBundle {
        name: "toy1d".to_string(),
        objective: CompositeObjective::new(problem, Regularizer::Nonneg),
        known_solution: None,
        recommended_lambda: 1.0,
        default_start: vec![10.0],
        domain_guard: Some(DomainGuard {
            fires: Arc::new(|w: &[f64]| w[0] <= -0.1),
            description: "w <= -0.1 (components undefined)".to_string(),
        }),
    }
}

/// Feature distribution for the simplex interpolation problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureDist {
    Uniform,
    /// Student's t with 1.5 degrees of freedom.
    StudentT,
}

impl FeatureDist {
    pub fn parse(s: &str) -> Result<FeatureDist> {
        match s {
            "uniform" => Ok(FeatureDist::Uniform),
            "student-t" | "student_t" | "studentt" => Ok(FeatureDist::StudentT),
            other => Err(CoreError::InvalidParameter(format!("unknown distribution '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FeatureDist::Uniform => "uniform",
            FeatureDist::StudentT => "student-t",
        }
    }

    fn sample(&self, rng: &mut SplitMix64) -> f64 {
        match self {
            FeatureDist::Uniform => rng.next_f64(),
            FeatureDist::StudentT => rng.student_t(1.5),
        }
    }
}

/// Strongly convex simplex-constrained least squares built so that all
/// component gradients coincide at the optimum:
/// f(w, i) = (a_i' w - b_i)^2 / 2 + c' w, phi = indicator of the simplex.
///
/// The planted solution puts mass 1/support_size on a random support,
/// b = A w*, and c vanishes on the support so that -grad f(w*) = -c lies
/// in the simplex normal cone at w*. The feature matrix is redrawn (up to
/// 100 times) until A'A passes a Cholesky positive-definiteness check.
pub fn make_simplex_interpolation(
    n: usize,
    d: usize,
    support_size: usize,
    dist: FeatureDist,
    seed: u64,
) -> Result<BenchmarkBundle> {
    if support_size == 0 || support_size > d {
        return Err(CoreError::InvalidParameter(format!(
            "support_size = {support_size} out of range [1, {d}]"
        )));
    }
    if n < d {
        return Err(CoreError::InvalidParameter(format!(
            "need n >= d for an invertible A'A (n = {n}, d = {d})"
        )));
    }
    let mut rng = SplitMix64::new(seed);

    let mut a: Vec<Vec<f64>> = Vec::new();
    let mut ok = false;
    for _ in 0..100 {
        a = (0..n)
            .map(|_| (0..d).map(|_| dist.sample(&mut rng)).collect())
            .collect();
        if gram_is_positive_definite(&a, d) {
            ok = true;
            break;
        }
    }
    if !ok {
        return Err(CoreError::Construction(
            "failed to draw a feature matrix with invertible A'A in 100 attempts".to_string(),
        ));
    }

    // random support; mass split evenly so the point lies on the simplex
    let mut indices: Vec<usize> = (0..d).collect();
    rng.shuffle(&mut indices);
    let support: Vec<usize> = indices[..support_size].to_vec();
    let mut w_star = vec![0.0; d];
    for &j in &support {
        w_star[j] = 1.0 / support_size as f64;
    }

    let b: Vec<f64> = a.iter().map(|row| linalg::dot(row, &w_star)).collect();
    let mut c = vec![0.0; d];
    for j in 0..d {
        if !support.contains(&j) {
            c[j] = rng.next_f64();
        }
    }

    let lipschitz = lambda_max_gram(&a, d) / n as f64;

    let rows = Arc::new(a);
    let bvec = Arc::new(b);
    let cvec = Arc::new(c);
    let (rows_g, b_g, c_g) = (rows.clone(), bvec.clone(), cvec.clone());
    let value = Arc::new(move |w: &[f64], i: usize| -> Result<f64> {
        let r = linalg::dot(&rows[i], w) - bvec[i];
        Ok(0.5 * r * r + linalg::dot(&cvec, w))
    });
    let grad = Arc::new(move |w: &[f64], i: usize, out: &mut [f64]| -> Result<()> {
        let r = linalg::dot(&rows_g[i], w) - b_g[i];
        for (o, (aij, cj)) in out.iter_mut().zip(rows_g[i].iter().zip(c_g.iter())) {
            *o = r * aij + cj;
        }
        Ok(())
    });

    // c' w* = 0 by construction, so psi* = 0; f(., i) >= 0 on the simplex
    let known = KnownSolution {
        point: w_star.clone(),
        psi_star: Some(0.0),
        sigma_star_sq: Some(0.0),
        mu: None,
        interpolating: true,
    };
    let problem = ProblemInstance::new(n, d, value, grad, lipschitz, 0.0)
        .with_known_solution(known.clone());

    let mut start = vec![0.0; d];
    start[d - 1] = 1.0;

    Ok(BenchmarkBundle {
        name: format!("simplex-{}", dist.name()),
        objective: CompositeObjective::new(problem, Regularizer::Simplex),
        known_solution: Some(known),
        recommended_lambda: 1.0 / lipschitz,
        default_start: start,
        domain_guard: None,
    })
}

/// Nonconvex binary classification
/// f(w, i) = 1 - tanh(b_i a_i' w), phi = nu ||.||_1.
///
/// Labels must be in {-1, 0, +1}; zeros are remapped to -1. The Lipschitz
/// modulus is estimated from the data via [`estimate_lipschitz`].
pub fn make_tanh_classification(data: &Dataset, nu: f64) -> Result<BenchmarkBundle> {
    if nu < 0.0 {
        return Err(CoreError::InvalidParameter("nu must be nonnegative".to_string()));
    }
    if data.n() == 0 {
        return Err(CoreError::Data("dataset is empty".to_string()));
    }
    let mut labels = Vec::with_capacity(data.n());
    for (row, &raw) in data.labels.iter().enumerate() {
        let l = if raw == 0.0 {
            -1.0
        } else if raw == 1.0 || raw == -1.0 {
            raw
        } else {
            return Err(CoreError::Data(format!(
                "label {raw} at row {row} is outside {{-1, 0, +1}}"
            )));
        };
        labels.push(l);
    }

    let lipschitz = estimate_lipschitz(data)?;
    let d = data.dim;
    let rows = Arc::new(data.rows.clone());
    let lab = Arc::new(labels);
    let (rows_g, lab_g) = (rows.clone(), lab.clone());

    let value = Arc::new(move |w: &[f64], i: usize| -> Result<f64> {
        let m = lab[i] * rows[i].dot(w);
        Ok(1.0 - m.tanh())
    });
    let grad = Arc::new(move |w: &[f64], i: usize, out: &mut [f64]| -> Result<()> {
        let m = lab_g[i] * rows_g[i].dot(w);
        // d/dw [1 - tanh(b a'w)] = -b sech^2(b a'w) a
        let sech2 = {
            let c = m.cosh();
            1.0 / (c * c)
        };
        out.iter_mut().for_each(|o| *o = 0.0);
        rows_g[i].scatter(-lab_g[i] * sech2, out);
        Ok(())
    });

    // 1 - tanh is positive with infimum 0
    let problem = ProblemInstance::new(data.n(), d, value, grad, lipschitz, 0.0);
    Ok(BenchmarkBundle {
        name: "tanh".to_string(),
        objective: CompositeObjective::new(problem, Regularizer::L1 { nu }),
        known_solution: None,
        recommended_lambda: 1.0,
        default_start: vec![0.0; d],
        domain_guard: None,
    })
}

/// l1-regularized least squares with a controlled Gram spectrum:
/// f(w, i) = (a_i' w - b_i)^2 / 2, phi = nu ||.||_1. The reference
/// minimizer is refined by proximal gradient descent to ||G_lambda|| <= 1e-12
/// and stored as the known solution.
pub fn make_quadratic_l1(
    n: usize,
    d: usize,
    condition_number: f64,
    nu: f64,
    seed: u64,
) -> Result<BenchmarkBundle> {
    if condition_number < 1.0 {
        return Err(CoreError::InvalidParameter("condition_number must be >= 1".to_string()));
    }
    if n < d {
        return Err(CoreError::InvalidParameter("need n >= d".to_string()));
    }
    let mut rng = SplitMix64::new(seed);

    // column scalings t_j spaced geometrically; the Gram spectrum of
    // A = Z diag(t) concentrates near t^2 for n >> d, giving an
    // approximately prescribed condition number
    let scales: Vec<f64> = (0..d)
        .map(|j| {
            if d == 1 {
                1.0
            } else {
                condition_number.powf(0.5 * (j as f64 / (d - 1) as f64 - 1.0))
            }
        })
        .collect();
    let a: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|j| rng.normal() * scales[j]).collect())
        .collect();
    let w_gen: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
    let b: Vec<f64> = a
        .iter()
        .map(|row| linalg::dot(row, &w_gen) + 0.1 * rng.normal())
        .collect();

    let lipschitz = a
        .iter()
        .map(|row| linalg::norm_sq(row))
        .fold(0.0f64, f64::max);

    let rows = Arc::new(a);
    let bvec = Arc::new(b);
    let (rows_g, b_g) = (rows.clone(), bvec.clone());
    let value = Arc::new(move |w: &[f64], i: usize| -> Result<f64> {
        let r = linalg::dot(&rows[i], w) - bvec[i];
        Ok(0.5 * r * r)
    });
    let grad = Arc::new(move |w: &[f64], i: usize, out: &mut [f64]| -> Result<()> {
        let r = linalg::dot(&rows_g[i], w) - b_g[i];
        for (o, aij) in out.iter_mut().zip(rows_g[i].iter()) {
            *o = r * aij;
        }
        Ok(())
    });

    let problem = ProblemInstance::new(n, d, value, grad, lipschitz, 0.0);
    let objective = CompositeObjective::new(problem, Regularizer::L1 { nu });

    let lambda = 1.0 / lipschitz;
    let (w_ref, res) = refine_minimizer(&objective, &vec![0.0; d], lambda, 1e-12, 200_000)?;
    if res > 1e-12 {
        return Err(CoreError::Construction(format!(
            "reference solve stalled at ||G_lambda|| = {res:e}"
        )));
    }
    let psi_star = objective.eval_psi(&w_ref)?;
    let known = KnownSolution {
        point: w_ref,
        psi_star: Some(psi_star),
        sigma_star_sq: None,
        mu: None,
        interpolating: false,
    };
    let problem = objective.problem.clone().with_known_solution(known.clone());

    Ok(BenchmarkBundle {
        name: "quadratic-l1".to_string(),
        objective: CompositeObjective::new(problem, objective.regularizer),
        known_solution: Some(known),
        recommended_lambda: lambda,
        default_start: vec![0.0; d],
        domain_guard: None,
    })
}

/// Data-driven Lipschitz estimate: 0.8 * lambda_max(A A') / n, with the
/// top eigenvalue obtained by power iteration on A'A (same nonzero
/// spectrum). Returns 0 for an all-zero matrix.
pub fn estimate_lipschitz(data: &Dataset) -> Result<f64> {
    if data.n() == 0 {
        return Err(CoreError::Data("cannot estimate a Lipschitz modulus from no rows".to_string()));
    }
    let lmax = lambda_max_sparse(&data.rows, data.dim);
    Ok(0.8 * lmax / data.n() as f64)
}

/// Power iteration for lambda_max(A'A), dense rows.
fn lambda_max_gram(rows: &[Vec<f64>], d: usize) -> f64 {
    let mut v: Vec<f64> = {
        let mut r = SplitMix64::new(0x9d2c_5680);
        (0..d).map(|_| r.normal()).collect()
    };
    let mut lam = 0.0f64;
    let mut prev = f64::INFINITY;
    for _ in 0..200 {
        // u = A'(A v)
        let mut u = vec![0.0; d];
        for row in rows {
            let s = linalg::dot(row, &v);
            linalg::axpy(s, row, &mut u);
        }
        lam = linalg::norm(&u);
        if lam == 0.0 {
            return 0.0;
        }
        for (vi, ui) in v.iter_mut().zip(&u) {
            *vi = ui / lam;
        }
        if ((lam - prev) / lam).abs() < 1e-10 {
            break;
        }
        prev = lam;
    }
    lam
}

/// Power iteration for lambda_max(A'A), sparse rows.
fn lambda_max_sparse(rows: &[SparseRow], d: usize) -> f64 {
    let mut v: Vec<f64> = {
        let mut r = SplitMix64::new(0x9d2c_5680);
        (0..d).map(|_| r.normal()).collect()
    };
    let mut lam = 0.0f64;
    let mut prev = f64::INFINITY;
    for _ in 0..200 {
        let mut u = vec![0.0; d];
        for row in rows {
            let s = row.dot(&v);
            row.scatter(s, &mut u);
        }
        lam = linalg::norm(&u);
        if lam == 0.0 {
            return 0.0;
        }
        for (vi, ui) in v.iter_mut().zip(&u) {
            *vi = ui / lam;
        }
        if ((lam - prev) / lam).abs() < 1e-10 {
            break;
        }
        prev = lam;
    }
    lam
}

/// Cholesky positive-definiteness probe of A'A (scaled by 1/n).
fn gram_is_positive_definite(rows: &[Vec<f64>], d: usize) -> bool {
    let n = rows.len() as f64;
    let mut gram = vec![vec![0.0; d]; d];
    for row in rows {
        for i in 0..d {
            for j in i..d {
                gram[i][j] += row[i] * row[j] / n;
            }
        }
    }
    // in-place Cholesky on the upper triangle
    let tol = 1e-12 * (0..d).map(|i| gram[i][i]).fold(0.0f64, f64::max).max(1e-300);
    for i in 0..d {
        for k in 0..i {
            let f = gram[k][i];
            for j in i..d {
                gram[i][j] -= f * gram[k][j];
            }
        }
        let diag = gram[i][i];
        if diag <= tol {
            return false;
        }
        let root = diag.sqrt();
        for j in i..d {
            gram[i][j] /= root;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::finite_difference_check;

    #[test]
    fn toy_component_values() {
        let bundle = make_toy_1d();
        let p = &bundle.objective.problem;
        // f(w=1, i=100) = [sin(pi) + ln(11)^2] / 2
        let sin_pi = (100.0 * std::f64::consts::PI / 100.0).sin();
        let expected = (sin_pi + 11f64.ln().powi(2)) / 2.0;
        let got = p.component_value(&[1.0], 99).unwrap();
        assert!((got - expected).abs() < 1e-14, "{got} vs {expected}");
        assert!((got - 2.87495).abs() < 1e-4);
    }

    #[test]
    fn toy_phi_outside_domain() {
        let bundle = make_toy_1d();
        assert_eq!(bundle.objective.regularizer.value(&[-1.0]), f64::INFINITY);
    }

    #[test]
    fn toy_component_gradient() {
        // i = 10, w = 1: sin(0.1 pi) + ln(2)/2
        let bundle = make_toy_1d();
        let g = bundle.objective.problem.component_grad(&[1.0], 9).unwrap();
        let expected = (0.1 * std::f64::consts::PI).sin() + 2f64.ln() / 2.0;
        assert!((g[0] - expected).abs() < 1e-14);
        assert!((g[0] - 0.655591).abs() < 1e-6);
    }

    #[test]
    fn toy_oracle_domain_violation() {
        let bundle = make_toy_1d();
        let p = &bundle.objective.problem;
        assert!(matches!(
            p.component_value(&[-0.15], 0),
            Err(CoreError::DomainViolation { index: 0, .. })
        ));
    }

    #[test]
    fn simplex_solution_structure() {
        let bundle = make_simplex_interpolation(60, 12, 5, FeatureDist::Uniform, 7).unwrap();
        let sol = bundle.known_solution.as_ref().unwrap();
        let support: Vec<f64> = sol.point.iter().copied().filter(|&x| x != 0.0).collect();
        assert_eq!(support.len(), 5);
        assert!(support.iter().all(|&x| (x - 0.2).abs() < 1e-15));
        assert!((sol.point.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn simplex_interpolation_zero_variance() {
        let bundle = make_simplex_interpolation(60, 12, 5, FeatureDist::Uniform, 8).unwrap();
        let sol = bundle.known_solution.as_ref().unwrap();
        let var = bundle.objective.problem.component_variance(&sol.point).unwrap();
        assert!(var <= 1e-18, "sigma*^2 = {var:e}");
        // residuals vanish exactly: b = A w*
        let f = bundle.objective.problem.eval_f(&sol.point).unwrap();
        assert!(f.abs() < 1e-20, "psi* = {f:e}");
    }

    #[test]
    fn simplex_normal_cone_condition() {
        let bundle = make_simplex_interpolation(60, 12, 5, FeatureDist::Uniform, 9).unwrap();
        let sol = bundle.known_solution.as_ref().unwrap();
        let grad_star = bundle.objective.problem.eval_full_grad(&sol.point).unwrap();
        let mut rng = SplitMix64::new(4);
        for _ in 0..100 {
            // random simplex point via normalized exponentials
            let mut y: Vec<f64> = (0..12)
                .map(|_| -rng.next_f64().max(f64::MIN_POSITIVE).ln())
                .collect();
            let s: f64 = y.iter().sum();
            y.iter_mut().for_each(|v| *v /= s);
            let inner: f64 = y
                .iter()
                .zip(&sol.point)
                .zip(&grad_star)
                .map(|((yi, wi), gi)| gi * (yi - wi))
                .sum();
            assert!(inner >= -1e-12, "normal cone violated: {inner}");
        }
    }

    #[test]
    fn simplex_rejects_bad_support() {
        assert!(make_simplex_interpolation(20, 4, 5, FeatureDist::Uniform, 1).is_err());
    }

    #[test]
    fn tanh_values_and_gradients() {
        let data = gen_tanh_synthetic(&SyntheticSpec::new(8, 3, 5)).unwrap();
        let bundle = make_tanh_classification(&data, 0.01).unwrap();
        let p = &bundle.objective.problem;
        // w = 0: every component value is 1, psi(0) = 1
        let w0 = vec![0.0; 3];
        assert!((p.eval_f(&w0).unwrap() - 1.0).abs() < 1e-15);
        assert!((bundle.objective.eval_psi(&w0).unwrap() - 1.0).abs() < 1e-15);
        // grad at 0 is -b_i a_i
        let g = p.component_grad(&w0, 0).unwrap();
        let mut expected = vec![0.0; 3];
        data.rows[0].scatter(-data.labels[0], &mut expected);
        for (a, b) in g.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn tanh_single_sample_value() {
        // a = (1, 0), b = +1, w = (1, 0): 1 - tanh(1)
        let data = Dataset {
            rows: vec![SparseRow::from_dense(&[1.0, 0.0])],
            labels: vec![1.0],
            dim: 2,
            provenance: Provenance::Synthetic,
        };
        let bundle = make_tanh_classification(&data, 0.0).unwrap();
        let v = bundle.objective.problem.component_value(&[1.0, 0.0], 0).unwrap();
        assert!((v - (1.0 - 1f64.tanh())).abs() < 1e-15);
        assert!((v - 0.238406).abs() < 1e-6);
    }

    #[test]
    fn tanh_rejects_bad_labels() {
        let data = Dataset {
            rows: vec![SparseRow::from_dense(&[1.0])],
            labels: vec![2.0],
            dim: 1,
            provenance: Provenance::Synthetic,
        };
        assert!(make_tanh_classification(&data, 0.01).is_err());
    }

    #[test]
    fn lipschitz_identity_matrix() {
        let data = Dataset {
            rows: vec![
                SparseRow::from_dense(&[1.0, 0.0]),
                SparseRow::from_dense(&[0.0, 1.0]),
            ],
            labels: vec![1.0, -1.0],
            dim: 2,
            provenance: Provenance::Synthetic,
        };
        let l = estimate_lipschitz(&data).unwrap();
        assert!((l - 0.4).abs() < 1e-9, "{l}");
    }

    #[test]
    fn lipschitz_single_row() {
        let data = Dataset {
            rows: vec![SparseRow::from_dense(&[3.0, 4.0])],
            labels: vec![1.0],
            dim: 2,
            provenance: Provenance::Synthetic,
        };
        let l = estimate_lipschitz(&data).unwrap();
        assert!((l - 20.0).abs() < 1e-7, "{l}");
    }

    #[test]
    fn lipschitz_quadratic_scaling() {
        let rows = vec![
            SparseRow::from_dense(&[1.0, 2.0]),
            SparseRow::from_dense(&[-0.5, 1.0]),
            SparseRow::from_dense(&[2.0, 0.3]),
        ];
        let scaled: Vec<SparseRow> = rows
            .iter()
            .map(|r| {
                let mut dense = vec![0.0; 2];
                r.scatter(2.0, &mut dense);
                SparseRow::from_dense(&dense)
            })
            .collect();
        let d1 = Dataset { rows, labels: vec![1.0; 3], dim: 2, provenance: Provenance::Synthetic };
        let d2 = Dataset { rows: scaled, labels: vec![1.0; 3], dim: 2, provenance: Provenance::Synthetic };
        let l1 = estimate_lipschitz(&d1).unwrap();
        let l2 = estimate_lipschitz(&d2).unwrap();
        assert!((l2 / l1 - 4.0).abs() < 1e-6);
    }

    #[test]
    fn lipschitz_zero_matrix() {
        let data = Dataset {
            rows: vec![SparseRow::from_dense(&[0.0, 0.0])],
            labels: vec![1.0],
            dim: 2,
            provenance: Provenance::Synthetic,
        };
        assert_eq!(estimate_lipschitz(&data).unwrap(), 0.0);
    }

    #[test]
    fn quadratic_l1_scalar_fixed_point() {
        // d=1, n=1 style check via the dedicated constructor is awkward
        // (it requires n >= d and adds noise); verify the refined solution
        // satisfies the stationarity condition instead.
        let bundle = make_quadratic_l1(30, 5, 10.0, 0.01, 3).unwrap();
        let sol = bundle.known_solution.as_ref().unwrap();
        let g = crate::stationarity::natural_residual(
            &bundle.objective,
            &sol.point,
            bundle.recommended_lambda,
        )
        .unwrap();
        assert!(linalg::norm(&g) <= 1e-11);
    }

    #[test]
    fn all_bundles_pass_gradient_checks() {
        let mut rng = SplitMix64::new(2024);
        let data = gen_tanh_synthetic(&SyntheticSpec::new(24, 6, 11)).unwrap();
        let bundles = vec![
            make_toy_1d(),
            make_simplex_interpolation(40, 8, 4, FeatureDist::Uniform, 21).unwrap(),
            make_simplex_interpolation(40, 8, 4, FeatureDist::StudentT, 22).unwrap(),
            make_tanh_classification(&data, 0.01).unwrap(),
            make_quadratic_l1(40, 8, 5.0, 0.01, 23).unwrap(),
        ];
        for b in &bundles {
            let rep = finite_difference_check(
                &b.objective.problem,
                &b.objective.regularizer,
                20,
                1e-6,
                &mut rng,
            )
            .unwrap();
            assert!(
                rep.passed(),
                "{}: max relative error {}",
                b.name,
                rep.max_relative_error
            );
        }
    }
}
