//! Surrogate/oracle routing and the error and speedup metrics used to judge it.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dataset::NormalizationStats;
use crate::sensitivity::{self, PerturbationSpec, SensitivityProfile};
use crate::{Differentiable, Error, Result, Surrogate};

/// `RMSE / (y_max - y_min)`.
pub fn nrmse(predictions: &[f64], targets: &[f64], y_min: f64, y_max: f64) -> Result<f64> {
    if !(y_max > y_min) {
        return Err(Error::DegenerateRange { y_min, y_max });
    }
    if predictions.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if predictions.len() != targets.len() {
        return Err(Error::invalid("predictions and targets differ in length"));
    }
    let sse: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, y)| (y - p) * (y - p))
        .sum();
    Ok((sse / predictions.len() as f64).sqrt() / (y_max - y_min))
}

/// Percent error decrease `(pre - post) / pre * 100`; negative when `post` is worse.
pub fn decr_err(pre: f64, post: f64) -> Result<f64> {
    if !(pre > 0.0) {
        return Err(Error::invalid("pre-routing error must be positive"));
    }
    Ok((pre - post) / pre * 100.0)
}

/// `T_o / T_s`.
pub fn speedup_pure(t_oracle: f64, t_surrogate: f64) -> Result<f64> {
    if !(t_surrogate > 0.0) || t_oracle < 0.0 {
        return Err(Error::invalid("surrogate time must be positive"));
    }
    Ok(t_oracle / t_surrogate)
}

/// `T_o / (T_d + p T_s + (1 - p) T_o)`.
pub fn speedup_hybrid(t_oracle: f64, t_surrogate: f64, t_detector: f64, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid("surrogate fraction must lie in [0, 1]"));
    }
    if t_oracle < 0.0 || t_surrogate < 0.0 || t_detector < 0.0 {
        return Err(Error::invalid("times must be nonnegative"));
    }
    let denom = t_detector + p * t_surrogate + (1.0 - p) * t_oracle;
    if !(denom > 0.0) {
        return Err(Error::invalid("hybrid cost is zero"));
    }
    Ok(t_oracle / denom)
}

/// Anything that turns a sensitivity profile into an OOD risk in `[0, 1]`.
pub trait RiskScorer {
    fn risk(&self, profile: &SensitivityProfile) -> Result<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RouterConfig {
    pub risk_threshold: f64,
    pub perturbation: PerturbationSpec,
}

impl Default for RouterConfig {
    fn default() -> Self {
        RouterConfig {
            risk_threshold: 0.5,
            perturbation: PerturbationSpec::default(),
        }
    }
}

impl RouterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.risk_threshold) {
            return Err(Error::invalid("risk threshold must lie in [0, 1]"));
        }
        self.perturbation.validate()
    }

    /// Risk at or above the threshold goes to the oracle.
    pub fn route(&self, risk: f64) -> Route {
        if risk < self.risk_threshold {
            Route::Surrogate
        } else {
            Route::Oracle
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Surrogate,
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoutedPrediction {
    pub value: f64,
    pub surrogate_value: f64,
    pub route: Route,
    pub risk: f64,
}

/// Routes one raw design point. `spec` fixes the perturbation cloud for it.
pub fn route_predict<S, R, O>(
    x: &[f64],
    norm: &NormalizationStats,
    surrogate: &S,
    scorer: &R,
    oracle: O,
    threshold: f64,
    spec: &PerturbationSpec,
) -> Result<RoutedPrediction>
where
    S: Differentiable + ?Sized,
    R: RiskScorer + ?Sized,
    O: Fn(&[f64]) -> Result<f64>,
{
    let z = norm.apply(x)?;
    let surrogate_value = surrogate.predict(&z)?;
    let risk = scorer.risk(&sensitivity::profile(surrogate, &z, spec)?)?;
    let route = RouterConfig {
        risk_threshold: threshold,
        perturbation: *spec,
    }
    .route(risk);
    let value = match route {
        Route::Surrogate => surrogate_value,
        Route::Oracle => oracle(x)?,
    };
    Ok(RoutedPrediction {
        value,
        surrogate_value,
        route,
        risk,
    })
}

/// Per-call costs in seconds plus the surrogate-routed fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingModel {
    pub t_oracle: f64,
    /// Bare surrogate inference.
    pub t_surrogate: f64,
    /// Profiling plus risk scoring.
    pub t_detector: f64,
    pub p: f64,
}

/// Cross-tabulation of routes against OOD labels (OOD positive).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteConfusion {
    pub caught_ood: usize,
    pub missed_ood: usize,
    pub false_alarms: usize,
    pub accepted_id: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub id: usize,
    pub risk: f64,
    pub route: Route,
    pub is_ood: bool,
    pub surrogate_error: f64,
    pub hybrid_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridReport {
    pub n: usize,
    pub n_surrogate: usize,
    pub n_oracle: usize,
    pub risk_threshold: f64,
    pub nrmse_pure: f64,
    pub nrmse_hybrid: f64,
    /// `None` when the pure surrogate is already exact.
    pub decr_err: Option<f64>,
    pub confusion: RouteConfusion,
    pub trace: Vec<TraceRow>,
}

/// Wall-clock measurements collected alongside a [`HybridReport`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridTiming {
    pub timing: TimingModel,
    pub speedup_pure: f64,
    pub speedup_hybrid: f64,
}

/// Routes every test point in order and aggregates errors against `targets`.
/// NRMSE uses `y_range` for both the pure and hybrid figures.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_hybrid<S, R, O>(
    inputs: &[Vec<f64>],
    targets: &[f64],
    is_ood: &[bool],
    norm: &NormalizationStats,
    surrogate: &S,
    scorer: &R,
    oracle: O,
    oracle_seconds: f64,
    router: &RouterConfig,
    y_range: (f64, f64),
) -> Result<(HybridReport, HybridTiming)>
where
    S: Differentiable + ?Sized,
    R: RiskScorer + ?Sized,
    O: Fn(&[f64]) -> Result<f64>,
{
    evaluate_routes(
        inputs,
        targets,
        is_ood,
        norm,
        surrogate,
        |i, z, _| {
            let profile = sensitivity::profile(surrogate, z, &router.perturbation.for_point(i))?;
            scorer.risk(&profile)
        },
        oracle,
        oracle_seconds,
        router,
        y_range,
    )
}

/// [`evaluate_hybrid`] with an arbitrary risk function of
/// `(index, standardized input, surrogate prediction)`; its wall time is
/// booked as detector time.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_routes<S, F, O>(
    inputs: &[Vec<f64>],
    targets: &[f64],
    is_ood: &[bool],
    norm: &NormalizationStats,
    surrogate: &S,
    mut risk_of: F,
    oracle: O,
    oracle_seconds: f64,
    router: &RouterConfig,
    y_range: (f64, f64),
) -> Result<(HybridReport, HybridTiming)>
where
    S: Surrogate + ?Sized,
    F: FnMut(usize, &[f64], f64) -> Result<f64>,
    O: Fn(&[f64]) -> Result<f64>,
{
    router.validate()?;
    if inputs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if inputs.len() != targets.len() || inputs.len() != is_ood.len() {
        return Err(Error::invalid("inputs, targets and labels differ in length"));
    }
    let n = inputs.len();
    let mut t_surrogate = 0.0;
    let mut t_detector = 0.0;
    let mut pure = Vec::with_capacity(n);
    let mut hybrid = Vec::with_capacity(n);
    let mut trace = Vec::with_capacity(n);
    let mut confusion = RouteConfusion::default();
    for (i, x) in inputs.iter().enumerate() {
        let z = norm.apply(x)?;
        let start = Instant::now();
        let surrogate_value = surrogate.predict(&z)?;
        t_surrogate += start.elapsed().as_secs_f64();

        let start = Instant::now();
        let risk = risk_of(i, &z, surrogate_value)?;
        t_detector += start.elapsed().as_secs_f64();

        let route = router.route(risk);
        let value = match route {
            Route::Surrogate => surrogate_value,
            Route::Oracle => oracle(x)?,
        };
        match (route, is_ood[i]) {
            (Route::Oracle, true) => confusion.caught_ood += 1,
            (Route::Surrogate, true) => confusion.missed_ood += 1,
            (Route::Oracle, false) => confusion.false_alarms += 1,
            (Route::Surrogate, false) => confusion.accepted_id += 1,
        }
        trace.push(TraceRow {
            id: i,
            risk,
            route,
            is_ood: is_ood[i],
            surrogate_error: (targets[i] - surrogate_value).abs(),
            hybrid_error: (targets[i] - value).abs(),
        });
        pure.push(surrogate_value);
        hybrid.push(value);
    }
    let nrmse_pure = nrmse(&pure, targets, y_range.0, y_range.1)?;
    let nrmse_hybrid = nrmse(&hybrid, targets, y_range.0, y_range.1)?;
    let n_surrogate = confusion.accepted_id + confusion.missed_ood;
    let p = n_surrogate as f64 / n as f64;
    let timing = TimingModel {
        t_oracle: oracle_seconds,
        t_surrogate: t_surrogate / n as f64,
        t_detector: t_detector / n as f64,
        p,
    };
    // a measured zero (coarse clocks) would make the ratio infinite
    let t_s = timing.t_surrogate.max(1e-9);
    let report = HybridReport {
        n,
        n_surrogate,
        n_oracle: n - n_surrogate,
        risk_threshold: router.risk_threshold,
        nrmse_pure,
        nrmse_hybrid,
        decr_err: decr_err(nrmse_pure, nrmse_hybrid).ok(),
        confusion,
        trace,
    };
    let timing = HybridTiming {
        speedup_pure: speedup_pure(oracle_seconds, t_s)?,
        speedup_hybrid: speedup_hybrid(oracle_seconds, t_s, timing.t_detector, p)?,
        timing,
    };
    Ok((report, timing))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fnn::FnnModel;
    use crate::stats;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn nrmse_hand_cases() {
        assert_eq!(nrmse(&[1.0, 2.0], &[1.0, 2.0], 0.0, 1.0).unwrap(), 0.0);
        assert_eq!(nrmse(&[0.5, 0.5], &[0.0, 1.0], 0.0, 1.0).unwrap(), 0.5);
        assert!(matches!(
            nrmse(&[0.5], &[0.0], 1.0, 1.0),
            Err(Error::DegenerateRange { .. })
        ));
        assert!(nrmse(&[], &[], 0.0, 1.0).is_err());
    }

    #[test]
    fn nrmse_matches_recomputation() {
        let mut rng = stats::rng(10);
        let p: Vec<f64> = (0..10).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let y: Vec<f64> = (0..10).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let mut acc = 0.0;
        for i in 0..10 {
            acc += (p[i] - y[i]).powi(2);
        }
        let want = (acc / 10.0).sqrt() / 4.0;
        assert!((nrmse(&p, &y, -2.0, 2.0).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn published_decreases_and_speedups() {
        assert!((decr_err(0.0319, 0.0169).unwrap() - 47.02).abs() < 0.05);
        assert!((decr_err(0.1698, 0.1677).unwrap() - 1.24).abs() < 0.05);
        assert_eq!(decr_err(0.3, 0.3).unwrap(), 0.0);
        assert!(decr_err(0.0, 0.1).is_err());
        let s = speedup_pure(10678.0, 0.29926).unwrap();
        assert!((s / 3.57e4 - 1.0).abs() < 0.01);
        let s = speedup_pure(10678.0, 0.00081).unwrap();
        assert!((s / 1.32e7 - 1.0).abs() < 0.01);
        assert!(speedup_pure(1.0, 0.0).is_err());
        assert_eq!(
            speedup_hybrid(10678.0, 0.5, 0.0, 1.0).unwrap(),
            speedup_pure(10678.0, 0.5).unwrap()
        );
    }

    proptest! {
        #[test]
        fn hybrid_speedup_bounded_and_monotone(
            t_o in 1.0f64..1e4, frac in 1e-6f64..0.9, t_d in 0.0f64..10.0, p in 0.0f64..1.0, dp in 0.0f64..1.0,
        ) {
            let t_s = t_o * frac;
            let h = speedup_hybrid(t_o, t_s, t_d, p).unwrap();
            prop_assert!(h <= speedup_pure(t_o, t_s).unwrap() * (1.0 + 1e-12));
            let q = (p + dp).min(1.0);
            prop_assert!(speedup_hybrid(t_o, t_s, t_d, q).unwrap() >= h * (1.0 - 1e-12));
        }
    }

    struct Fixed(f64);

    impl RiskScorer for Fixed {
        fn risk(&self, _: &SensitivityProfile) -> Result<f64> {
            Ok(self.0)
        }
    }

    fn setup() -> (Vec<Vec<f64>>, Vec<f64>, NormalizationStats, FnnModel) {
        let mut rng = stats::rng(3);
        let xs: Vec<Vec<f64>> = (0..40).map(|_| vec![rng.gen(), rng.gen()]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| oracle(x).unwrap()).collect();
        let norm = NormalizationStats::fit(&xs, &ys).unwrap();
        (xs, ys, norm, FnnModel::random(2, &[8, 8], 4).unwrap())
    }

    fn oracle(x: &[f64]) -> Result<f64> {
        Ok(x[0] * x[0] + 2.0 * x[1])
    }

    #[test]
    fn route_boundaries() {
        let r = RouterConfig { risk_threshold: 0.5, ..Default::default() };
        assert_eq!(r.route(0.5), Route::Oracle);
        assert_eq!(r.route(0.4999), Route::Surrogate);
        let r = RouterConfig { risk_threshold: 1.0, ..Default::default() };
        assert_eq!(r.route(0.999_999), Route::Surrogate);
        assert_eq!(r.route(1.0), Route::Oracle);
        assert!(RouterConfig { risk_threshold: 1.0 + 1e-9, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn single_route_predict() {
        let (xs, _, norm, m) = setup();
        let spec = PerturbationSpec::default();
        let hf = route_predict(&xs[0], &norm, &m, &Fixed(0.7), oracle, 0.5, &spec).unwrap();
        assert_eq!(hf.route, Route::Oracle);
        assert_eq!(hf.value, oracle(&xs[0]).unwrap());
        let s = route_predict(&xs[0], &norm, &m, &Fixed(0.2), oracle, 0.5, &spec).unwrap();
        assert_eq!(s.value, s.surrogate_value);
        let failing = |_: &[f64]| -> Result<f64> { Err(Error::invalid("down")) };
        assert!(route_predict(&xs[0], &norm, &m, &Fixed(0.9), failing, 0.5, &spec).is_err());
    }

    #[test]
    fn all_to_oracle_is_exact() {
        let (xs, ys, norm, m) = setup();
        let labels = vec![false; xs.len()];
        let router = RouterConfig { risk_threshold: 0.0, ..Default::default() };
        let (rep, t) = evaluate_hybrid(&xs, &ys, &labels, &norm, &m, &Fixed(0.0), oracle, 100.0, &router, (norm.y_min, norm.y_max)).unwrap();
        assert_eq!(rep.n_oracle, xs.len());
        assert_eq!(rep.nrmse_hybrid, 0.0);
        assert_eq!(rep.decr_err, Some(100.0));
        assert_eq!(t.timing.p, 0.0);
    }

    #[test]
    fn all_to_surrogate_keeps_error() {
        let (xs, ys, norm, m) = setup();
        let labels = vec![false; xs.len()];
        let router = RouterConfig::default();
        let (rep, t) = evaluate_hybrid(&xs, &ys, &labels, &norm, &m, &Fixed(0.1), oracle, 100.0, &router, (norm.y_min, norm.y_max)).unwrap();
        assert_eq!(rep.n_surrogate, xs.len());
        assert_eq!(rep.nrmse_pure, rep.nrmse_hybrid);
        assert_eq!(t.timing.p, 1.0);
    }

    struct ByRisk(Vec<f64>, std::cell::Cell<usize>);

    impl RiskScorer for ByRisk {
        fn risk(&self, _: &SensitivityProfile) -> Result<f64> {
            let i = self.1.get();
            self.1.set(i + 1);
            Ok(self.0[i])
        }
    }

    #[test]
    fn confusion_matches_cross_tab_and_dominance() {
        let (xs, ys, norm, m) = setup();
        let mut rng = stats::rng(17);
        let risks: Vec<f64> = (0..xs.len()).map(|_| rng.gen()).collect();
        let labels: Vec<bool> = (0..xs.len()).map(|_| rng.gen_bool(0.3)).collect();
        let mut last_oracle = 0;
        for thr in [1.0, 0.8, 0.5, 0.2, 0.0] {
            let scorer = ByRisk(risks.clone(), std::cell::Cell::new(0));
            let router = RouterConfig { risk_threshold: thr, ..Default::default() };
            let (rep, _) = evaluate_hybrid(&xs, &ys, &labels, &norm, &m, &scorer, oracle, 100.0, &router, (norm.y_min, norm.y_max)).unwrap();
            let mut want = RouteConfusion::default();
            for i in 0..xs.len() {
                let hf = risks[i] >= thr;
                match (hf, labels[i]) {
                    (true, true) => want.caught_ood += 1,
                    (false, true) => want.missed_ood += 1,
                    (true, false) => want.false_alarms += 1,
                    (false, false) => want.accepted_id += 1,
                }
            }
            assert_eq!(rep.confusion, want);
            assert_eq!(rep.n_surrogate + rep.n_oracle, rep.n);
            assert!(rep.nrmse_hybrid <= rep.nrmse_pure);
            assert!(rep.n_oracle >= last_oracle);
            last_oracle = rep.n_oracle;
        }
    }
}
