//! Bleimann-Butzer-Hahn-type operators on `[0, inf)^m`.
//!
//! The classical operator of degree `n` in one variable sends `f` to
//!
//! ```text
//! (H_n f)(x) = (1+x)^-n * sum_k f(k / (n-k+1)) * C(n,k) * x^k
//! ```
//!
//! which is the expectation of `f` over the node lattice under a binomial
//! law with parameter `p = x/(1+x)`. The multivariate version takes the
//! product law over `m` independent coordinates, and the perturbed family
//! multiplies the whole operator by a sequence value `u_n`.
//!
//! Weights are never built from factorials. Starting from the modal index
//! and walking outward with the ratio recurrence
//! `w_{k+1}/w_k = ((n-k)/(k+1)) * p/(1-p)` keeps every intermediate value
//! in `[0, 1]`, so the computation stays finite for degrees and
//! parameters far beyond where `C(n,k)` overflows (n = 10^4 at p = 0.999
//! is routine).

use thiserror::Error;

use crate::accum::{compensated_sum, CompensatedSum};
use crate::functions::{p_transform, AxisFn, Target};
use crate::summability::SequenceSpec;

/// Largest transformed coordinate accepted for evaluation points. Beyond
/// this the binomial law concentrates on the last node and the weight
/// recurrence loses its meaning well before p reaches 1.
pub const MAX_POINT_P: f64 = 0.999;

/// Errors from operator evaluation.
#[derive(Debug, Error)]
pub enum OperatorError {
    #[error("binomial parameter p={p} outside [0, 1)")]
    DomainError { p: f64 },

    #[error("node index k={k} outside 0..={n}")]
    IndexError { k: usize, n: usize },

    #[error("operator degree must be at least 1")]
    InvalidDegree,

    #[error("function value {value} at a probed node is not finite")]
    NonFiniteValue { value: f64 },

    #[error("perturbation value u_{n} = {value} is negative")]
    NegativePerturbation { n: usize, value: f64 },

    #[error("perturbation value u_{n} = {value} is not finite")]
    NonFinitePerturbation { n: usize, value: f64 },

    #[error("dimension mismatch: expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("coordinate x={x} is negative or not finite")]
    InvalidCoordinate { x: f64 },

    #[error("coordinate x={x} maps to p={p} beyond the supported range {MAX_POINT_P}")]
    DegeneratePoint { x: f64, p: f64 },
}

/// Normalised binomial weights `w_k = C(n,k) p^k (1-p)^(n-k)` for
/// `k = 0..=n`, built by the mode-anchored ratio recurrence.
#[derive(Clone, Debug)]
pub struct BinomialWeights {
    n: usize,
    p: f64,
    values: Vec<f64>,
}

impl BinomialWeights {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Computes the binomial weight vector for degree `n` and parameter `p`.
///
/// The modal weight is set to 1 and neighbours follow the ratio
/// recurrence outward, so every unnormalised weight lies in `[0, 1]`;
/// normalising by the compensated total then yields weights that sum to 1
/// at correctly rounded accuracy. Entries far from the mode may underflow
/// to zero, which is harmless: their true mass is below the underflow
/// threshold.
pub fn binomial_weights(n: usize, p: f64) -> Result<BinomialWeights, OperatorError> {
    if !(0.0..1.0).contains(&p) {
        return Err(OperatorError::DomainError { p });
    }
    let mut values = vec![0.0f64; n + 1];
    let mode = (((n + 1) as f64) * p).floor() as usize;
    let mode = mode.min(n);
    values[mode] = 1.0;
    let odds = p / (1.0 - p);
    for k in (1..=mode).rev() {
        // w_{k-1} = w_k * k / ((n-k+1) * odds); mode > 0 implies p > 0.
        values[k - 1] = values[k] * (k as f64) / ((n - k + 1) as f64) / odds;
    }
    for k in mode..n {
        values[k + 1] = values[k] * ((n - k) as f64) / ((k + 1) as f64) * odds;
    }
    let total = compensated_sum(values.iter().copied());
    debug_assert!(total >= 1.0, "modal weight alone contributes 1");
    for v in &mut values {
        *v /= total;
    }
    Ok(BinomialWeights { n, p, values })
}

/// The node `node(n, k) = k / (n - k + 1)`; its transform is `k/(n+1)`.
pub fn node(n: usize, k: usize) -> Result<f64, OperatorError> {
    if k > n {
        return Err(OperatorError::IndexError { k, n });
    }
    Ok(node_value(n, k))
}

#[inline]
fn node_value(n: usize, k: usize) -> f64 {
    k as f64 / (n - k + 1) as f64
}

/// Validates a point in `[0, inf)^m` and returns its transformed
/// coordinates.
pub(crate) fn point_params(point: &[f64]) -> Result<Vec<f64>, OperatorError> {
    point
        .iter()
        .map(|&x| {
            if !x.is_finite() || x < 0.0 {
                return Err(OperatorError::InvalidCoordinate { x });
            }
            let p = p_transform(x);
            if p >= MAX_POINT_P {
                return Err(OperatorError::DegeneratePoint { x, p });
            }
            Ok(p)
        })
        .collect()
}

/// One-axis reduction `sum_k g(node(n,k)) w_k`.
pub(crate) fn axis_reduction(g: &AxisFn, w: &BinomialWeights) -> Result<f64, OperatorError> {
    let n = w.n();
    let mut acc = CompensatedSum::new();
    for (k, &wk) in w.values().iter().enumerate() {
        let value = g(node_value(n, k));
        if !value.is_finite() {
            return Err(OperatorError::NonFiniteValue { value });
        }
        acc.add(value * wk);
    }
    Ok(acc.value())
}

/// The reduction of the constant 1: the compensated weight total, which
/// is 1 up to the final rounding of the normalisation.
pub(crate) fn ones_reduction(w: &BinomialWeights) -> f64 {
    compensated_sum(w.values().iter().copied())
}

/// Combines per-axis reductions of a separable product.
pub(crate) fn combine_product(factors: &[f64]) -> f64 {
    factors.iter().product()
}

/// Combines per-axis reductions of a separable sum: each axis reduction
/// is weighted by the ones-reductions of all other axes.
pub(crate) fn combine_sum(reductions: &[f64], ones: &[f64]) -> f64 {
    let mut acc = CompensatedSum::new();
    for (i, &reduction) in reductions.iter().enumerate() {
        let mut term = reduction;
        for (l, &one) in ones.iter().enumerate() {
            if l != i {
                term *= one;
            }
        }
        acc.add(term);
    }
    acc.value()
}

/// Dense evaluation: the full tensor sum over the node lattice.
pub(crate) fn dense_eval(
    f: &(dyn Fn(&[f64]) -> f64 + Send + Sync),
    weights: &[&BinomialWeights],
) -> Result<f64, OperatorError> {
    let m = weights.len();
    let n = weights[0].n();
    let mut idx = vec![0usize; m];
    let mut coords = vec![0.0f64; m];
    let mut acc = CompensatedSum::new();
    loop {
        let mut wprod = 1.0f64;
        for i in 0..m {
            coords[i] = node_value(n, idx[i]);
            wprod *= weights[i].values()[idx[i]];
        }
        if wprod != 0.0 {
            let value = f(&coords);
            if !value.is_finite() {
                return Err(OperatorError::NonFiniteValue { value });
            }
            acc.add(value * wprod);
        }
        // Advance the multi-index, last coordinate fastest.
        let mut axis = m;
        loop {
            if axis == 0 {
                return Ok(acc.value());
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] <= n {
                break;
            }
            idx[axis] = 0;
        }
    }
}

fn eval_with_weights(
    f: &Target,
    weights: &[&BinomialWeights],
) -> Result<f64, OperatorError> {
    match f {
        Target::Product { axes } => {
            let mut factors = Vec::with_capacity(axes.len());
            for (g, w) in axes.iter().zip(weights) {
                factors.push(axis_reduction(g, w)?);
            }
            Ok(combine_product(&factors))
        }
        Target::Sum { axes } => {
            let mut reductions = Vec::with_capacity(axes.len());
            for (g, w) in axes.iter().zip(weights) {
                reductions.push(axis_reduction(g, w)?);
            }
            let ones: Vec<f64> = weights.iter().map(|w| ones_reduction(w)).collect();
            Ok(combine_sum(&reductions, &ones))
        }
        Target::Dense { f, .. } => dense_eval(f.as_ref(), weights),
    }
}

/// Evaluates the classical multivariate operator of degree `n` at a
/// point.
pub fn bbh_eval(n: usize, f: &Target, point: &[f64]) -> Result<f64, OperatorError> {
    if n == 0 {
        return Err(OperatorError::InvalidDegree);
    }
    let m = f.dimension();
    if point.len() != m {
        return Err(OperatorError::DimensionMismatch {
            expected: m,
            got: point.len(),
        });
    }
    let params = point_params(point)?;
    let weights: Vec<BinomialWeights> = params
        .iter()
        .map(|&p| binomial_weights(n, p))
        .collect::<Result<_, _>>()?;
    let refs: Vec<&BinomialWeights> = weights.iter().collect();
    eval_with_weights(f, &refs)
}

/// Evaluates the perturbed two-variable operator `u_n * (H_n f)` at a
/// point. Kept as a named entry point because this is the family whose
/// convergence is A-statistical but not classical.
pub fn tn_eval(
    n: usize,
    u: &SequenceSpec,
    f: &Target,
    point: &[f64],
) -> Result<f64, OperatorError> {
    if point.len() != 2 || f.dimension() != 2 {
        return Err(OperatorError::DimensionMismatch {
            expected: 2,
            got: point.len().max(f.dimension()),
        });
    }
    let scale = perturbation_value(u, n)?;
    Ok(scale * bbh_eval(n, f, point)?)
}

fn perturbation_value(u: &SequenceSpec, n: usize) -> Result<f64, OperatorError> {
    let value = u.value(n);
    if !value.is_finite() {
        return Err(OperatorError::NonFinitePerturbation { n, value });
    }
    if value < 0.0 {
        return Err(OperatorError::NegativePerturbation { n, value });
    }
    Ok(value)
}

/// A positive linear operator family: the classical operator, optionally
/// scaled per degree by a non-negative perturbation sequence.
#[derive(Clone, Debug)]
pub struct OperatorFamily {
    m: usize,
    perturbation: Option<SequenceSpec>,
}

impl OperatorFamily {
    /// The classical family in `m` variables.
    pub fn bbh(m: usize) -> Self {
        assert!(m >= 1, "operator dimension must be at least 1");
        Self {
            m,
            perturbation: None,
        }
    }

    /// The perturbed family `u_n * H_n` in `m` variables.
    pub fn perturbed(m: usize, u: SequenceSpec) -> Self {
        assert!(m >= 1, "operator dimension must be at least 1");
        Self {
            m,
            perturbation: Some(u),
        }
    }

    pub fn dimension(&self) -> usize {
        self.m
    }

    pub fn perturbation(&self) -> Option<&SequenceSpec> {
        self.perturbation.as_ref()
    }

    pub fn label(&self) -> String {
        match &self.perturbation {
            None => format!("bbh(m={})", self.m),
            Some(u) => format!("tn(m={}, u={})", self.m, u.name()),
        }
    }

    /// The scalar multiplying the classical operator at degree `n`.
    pub fn scale(&self, n: usize) -> Result<f64, OperatorError> {
        match &self.perturbation {
            None => Ok(1.0),
            Some(u) => perturbation_value(u, n),
        }
    }

    /// Applies the degree-`n` member at a point.
    pub fn apply(&self, n: usize, f: &Target, point: &[f64]) -> Result<f64, OperatorError> {
        if f.dimension() != self.m {
            return Err(OperatorError::DimensionMismatch {
                expected: self.m,
                got: f.dimension(),
            });
        }
        Ok(self.scale(n)? * bbh_eval(n, f, point)?)
    }
}

/// Closed forms for the perturbed two-variable family on the standard
/// test functions, with `p = x/(1+x)`, `q = y/(1+y)`:
///
/// * `f_0 = 1` maps to `u_n`,
/// * `f_1 = p` maps to `u_n * (n/(n+1)) * p` (and `f_2` symmetrically),
/// * `f_3 = p^2 + q^2` maps to
///   `u_n * (n(n-1)/(n+1)^2) (p^2+q^2) + u_n * (n/(n+1)^2) (p+q)`.
///
/// These are what the operator evaluation is tested against, and what the
/// counterexample report uses to sweep degrees cheaply.
pub fn closed_form_f0(_n: usize, u_n: f64) -> f64 {
    u_n
}

pub fn closed_form_f1(n: usize, u_n: f64, x: f64) -> f64 {
    let nf = n as f64;
    nf * u_n / (nf + 1.0) * p_transform(x)
}

pub fn closed_form_f2(n: usize, u_n: f64, y: f64) -> f64 {
    closed_form_f1(n, u_n, y)
}

pub fn closed_form_f3(n: usize, u_n: f64, x: f64, y: f64) -> f64 {
    let c = ClosedFormCoefficients::new(n, u_n);
    let px = p_transform(x);
    let py = p_transform(y);
    c.quadratic * (px * px + py * py) + c.linear * (px + py)
}

/// Degree-dependent coefficients of the `f_3` closed form and the error
/// quantities built from them.
#[derive(Clone, Copy, Debug)]
pub struct ClosedFormCoefficients {
    pub n: usize,
    pub u_n: f64,
    /// Coefficient of `p^2 + q^2`: `n(n-1) u_n / (n+1)^2`.
    pub quadratic: f64,
    /// Coefficient of `p + q`: `n u_n / (n+1)^2`.
    pub linear: f64,
}

impl ClosedFormCoefficients {
    pub fn new(n: usize, u_n: f64) -> Self {
        assert!(n >= 1, "closed forms need degree at least 1");
        let nf = n as f64;
        let denom = (nf + 1.0) * (nf + 1.0);
        Self {
            n,
            u_n,
            quadratic: nf * (nf - 1.0) * u_n / denom,
            linear: nf * u_n / denom,
        }
    }

    /// `alpha_n = |n(n-1) u_n / (n+1)^2 - 1|`: distance of the quadratic
    /// coefficient from 1.
    pub fn alpha(&self) -> f64 {
        (self.quadratic - 1.0).abs()
    }

    /// `beta_n = n u_n / (n+1)^2`: the stray linear coefficient.
    pub fn beta(&self) -> f64 {
        self.linear
    }

    /// Sup-norm bound for the `f_3` error: since `p^2 + q^2 < 2` and
    /// `p + q < 2` on the domain, `|T_n f_3 - f_3| <= 2 alpha_n + 2 beta_n`.
    pub fn f3_error_bound(&self) -> f64 {
        2.0 * (self.alpha() + self.beta())
    }
}

/// Sup-norm distance of the `f_1` closed-form coefficient from 1:
/// `|n u_n / (n+1) - 1|`, which the grid error attains at the largest
/// transformed coordinate.
pub fn f1_coefficient_gap(n: usize, u_n: f64) -> f64 {
    let nf = n as f64;
    (nf * u_n / (nf + 1.0) - 1.0).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{axis_one, axis_ratio, axis_ratio_squared};

    /// Brute-force reference: binomial weights via the naive product
    /// formula, usable for small n only.
    fn naive_weights(n: usize, p: f64) -> Vec<f64> {
        (0..=n)
            .map(|k| {
                let mut c = 1.0f64;
                for i in 0..k {
                    c = c * (n - i) as f64 / (i + 1) as f64;
                }
                c * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
            })
            .collect()
    }

    #[test]
    fn weights_match_naive_formula_at_small_n() {
        for n in [1usize, 2, 5, 10, 20] {
            for p in [0.0, 0.1, 0.5, 0.9, 0.99] {
                let fast = binomial_weights(n, p).unwrap();
                let slow = naive_weights(n, p);
                for (k, (&a, b)) in fast.values().iter().zip(slow).enumerate() {
                    assert!(
                        (a - b).abs() <= 1e-14,
                        "n={n} p={p} k={k}: {a} vs {b}"
                    );
                }
            }
        }
    }

    #[test]
    fn weights_survive_extreme_parameters() {
        let w = binomial_weights(10_000, 0.999).unwrap();
        assert!(w.values().iter().all(|v| v.is_finite() && *v >= 0.0));
        let total = compensated_sum(w.values().iter().copied());
        assert!((total - 1.0).abs() <= 1e-12, "total {total}");
        // The law concentrates near k = n at this parameter.
        let peak = w
            .values()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert!(peak > 9_970, "peak at {peak}");
    }

    #[test]
    fn weights_degenerate_at_p_zero() {
        let w = binomial_weights(50, 0.0).unwrap();
        assert_eq!(w.values()[0], 1.0);
        assert!(w.values()[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn weights_reject_bad_parameters() {
        assert!(matches!(
            binomial_weights(5, 1.0),
            Err(OperatorError::DomainError { .. })
        ));
        assert!(matches!(
            binomial_weights(5, -0.1),
            Err(OperatorError::DomainError { .. })
        ));
        assert!(matches!(
            binomial_weights(5, f64::NAN),
            Err(OperatorError::DomainError { .. })
        ));
    }

    #[test]
    fn node_values_and_transform_identity() {
        assert_eq!(node(3, 0).unwrap(), 0.0);
        assert_eq!(node(3, 2).unwrap(), 1.0);
        assert_eq!(node(3, 3).unwrap(), 3.0);
        assert!(matches!(
            node(3, 4),
            Err(OperatorError::IndexError { k: 4, n: 3 })
        ));
        // node/(1+node) = k/(n+1) held to rounding error.
        for n in 1..=40 {
            for k in 0..=n {
                let h = node(n, k).unwrap();
                let lhs = p_transform(h);
                let rhs = k as f64 / (n + 1) as f64;
                assert!((lhs - rhs).abs() <= 4.0 * f64::EPSILON, "n={n} k={k}");
            }
        }
    }

    /// Direct double-sum evaluation of the two-variable operator.
    #[allow(clippy::needless_range_loop)] // textbook double-sum shape
    fn brute_force_2d(n: usize, f: impl Fn(f64, f64) -> f64, x: f64, y: f64) -> f64 {
        let px = x / (1.0 + x);
        let py = y / (1.0 + y);
        let wx = naive_weights(n, px);
        let wy = naive_weights(n, py);
        let mut total = 0.0;
        for k in 0..=n {
            for l in 0..=n {
                let xs = k as f64 / (n - k + 1) as f64;
                let ys = l as f64 / (n - l + 1) as f64;
                total += f(xs, ys) * wx[k] * wy[l];
            }
        }
        total
    }

    #[test]
    fn bbh_matches_hand_value_m1() {
        // Degree 3 on u/(1+u) at x = 1: sum_k (k/4) C(3,k) / 8 = 0.375.
        let f = Target::separable_product(vec![axis_ratio()]);
        let got = bbh_eval(3, &f, &[1.0]).unwrap();
        assert!((got - 0.375).abs() <= 1e-15);
    }

    type Reference2d = Box<dyn Fn(f64, f64) -> f64>;

    #[test]
    fn bbh_matches_brute_force_2d() {
        let targets: Vec<(Target, Reference2d)> = vec![
            (
                Target::separable_product(vec![axis_one(), axis_one()]),
                Box::new(|_, _| 1.0),
            ),
            (
                Target::separable_product(vec![axis_ratio(), axis_one()]),
                Box::new(|x, _| x / (1.0 + x)),
            ),
            (
                Target::separable_sum(vec![axis_ratio_squared(), axis_ratio_squared()]),
                Box::new(|x, y| {
                    let p = x / (1.0 + x);
                    let q = y / (1.0 + y);
                    p * p + q * q
                }),
            ),
        ];
        for n in [1usize, 2, 5, 9] {
            for &(x, y) in &[(0.0, 0.0), (1.0, 1.0), (0.5, 2.0), (10.0, 0.1)] {
                for (target, reference) in &targets {
                    let got = bbh_eval(n, target, &[x, y]).unwrap();
                    let want = brute_force_2d(n, reference, x, y);
                    assert!(
                        (got - want).abs() <= 1e-13,
                        "n={n} x={x} y={y}: {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn tn_matches_closed_forms_spot_checks() {
        let ones = SequenceSpec::ones();
        let f1 = Target::separable_product(vec![axis_ratio(), axis_one()]);
        // Degree 9, u = 1, x = 1: (9/10) * 0.5 = 0.45.
        let got = tn_eval(9, &ones, &f1, &[1.0, 3.0]).unwrap();
        assert!((got - 0.45).abs() <= 1e-14);
        assert!((closed_form_f1(9, 1.0, 1.0) - 0.45).abs() <= 1e-16);
        // Degree 2, u = 1: coefficient 2/3 at p = 1/2.
        assert!((closed_form_f1(2, 1.0, 1.0) - 1.0 / 3.0).abs() <= 1e-16);
        // f3 closed form at n = 2, x = y = 1: (2/9)(1/2) + (2/9)(1) = 1/3.
        assert!((closed_form_f3(2, 1.0, 1.0, 1.0) - 1.0 / 3.0).abs() <= 1e-15);
    }

    #[test]
    fn closed_form_coefficients_hand_values() {
        let c = ClosedFormCoefficients::new(1, 1.0);
        assert_eq!(c.alpha(), 1.0);
        assert_eq!(c.beta(), 0.25);
        assert_eq!(c.f3_error_bound(), 2.5);
        // At large degree with u = 1 both quantities are small.
        let c = ClosedFormCoefficients::new(1000, 1.0);
        assert!(c.alpha() < 3.0e-3);
        assert!(c.beta() < 1.0e-3);
        assert!(c.f3_error_bound() < 1e-2);
    }

    #[test]
    fn perturbation_validation() {
        let f0 = Target::separable_product(vec![axis_one(), axis_one()]);
        let neg = SequenceSpec::new("neg", |_| -1.0, None);
        assert!(matches!(
            tn_eval(3, &neg, &f0, &[0.5, 0.5]),
            Err(OperatorError::NegativePerturbation { n: 3, .. })
        ));
        let inf = SequenceSpec::new("inf", |_| f64::INFINITY, None);
        assert!(matches!(
            tn_eval(3, &inf, &f0, &[0.5, 0.5]),
            Err(OperatorError::NonFinitePerturbation { .. })
        ));
    }

    #[test]
    fn point_validation() {
        let f = Target::separable_product(vec![axis_one(), axis_one()]);
        assert!(matches!(
            bbh_eval(3, &f, &[-0.5, 0.0]),
            Err(OperatorError::InvalidCoordinate { .. })
        ));
        assert!(matches!(
            bbh_eval(3, &f, &[1e6, 0.0]),
            Err(OperatorError::DegeneratePoint { .. })
        ));
        assert!(matches!(
            bbh_eval(3, &f, &[0.5]),
            Err(OperatorError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            bbh_eval(0, &f, &[0.5, 0.5]),
            Err(OperatorError::InvalidDegree)
        ));
    }

    #[test]
    fn family_scale_and_apply() {
        let u = SequenceSpec::square_perturbation(2.0).unwrap();
        let family = OperatorFamily::perturbed(2, u);
        assert_eq!(family.scale(9).unwrap(), 2.0);
        assert_eq!(family.scale(10).unwrap(), 1.0);
        let f0 = Target::separable_product(vec![axis_one(), axis_one()]);
        // T_n f_0 = u_n exactly up to weight normalisation.
        let got = family.apply(9, &f0, &[0.7, 1.3]).unwrap();
        assert!((got - 2.0).abs() <= 1e-14);
        let classical = OperatorFamily::bbh(2);
        assert_eq!(classical.scale(9).unwrap(), 1.0);
    }
}
