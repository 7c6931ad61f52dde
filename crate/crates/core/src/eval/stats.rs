//! Student t and Fisher F distributions through the regularized incomplete
//! beta function, and the tests built on them.

use crate::error::{Error, Result};

const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// ln Gamma(x) for x > 0 (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + 7.5;
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Continued fraction of the incomplete beta function (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=10_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn beta_reg(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// Two-sided tail `P(|T| >= |t|)` of Student's t with `df` degrees of freedom.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    beta_reg(df / 2.0, 0.5, df / (df + t * t))
}

pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    let tail = 0.5 * student_t_two_sided(t, df);
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Inverse of [`student_t_cdf`] by bisection on the monotone tail.
pub fn student_t_quantile(p: f64, df: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) || !(df > 0.0) {
        return Err(Error::Contract(format!(
            "t quantile needs 0 < p < 1 and df > 0 (got p = {p}, df = {df})"
        )));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    let upper = p > 0.5;
    // two-sided tail mass matching p
    let target = if upper { 2.0 * (1.0 - p) } else { 2.0 * p };
    let mut hi = 1.0;
    while student_t_two_sided(hi, df) > target {
        hi *= 2.0;
        if hi > 1e300 {
            break;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if student_t_two_sided(mid, df) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    let t = 0.5 * (lo + hi);
    Ok(if upper { t } else { -t })
}

/// Survival function `P(F >= f)` of the F distribution.
pub fn f_survival(f: f64, d1: f64, d2: f64) -> f64 {
    if f <= 0.0 {
        return 1.0;
    }
    if f.is_infinite() {
        return 0.0;
    }
    beta_reg(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f))
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

/// `mean +- t_{1 - alpha/2, n-1} s / sqrt(n)`.
pub fn confidence_interval(samples: &[f64], alpha: f64) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(Error::Contract(format!(
            "a confidence interval needs at least 2 samples (got {})",
            samples.len()
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Contract(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let n = samples.len() as f64;
    let m = mean(samples);
    let s = sample_variance(samples).sqrt();
    if s == 0.0 {
        return Ok((m, m));
    }
    let half = student_t_quantile(1.0 - alpha / 2.0, n - 1.0)? * s / n.sqrt();
    Ok((m - half, m + half))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnovaResult {
    pub f: f64,
    pub p: f64,
    pub df_between: f64,
    pub df_within: f64,
}

fn check_groups(groups: &[Vec<f64>], what: &str) -> Result<()> {
    if groups.len() < 2 {
        return Err(Error::Contract(format!("{what} needs at least 2 groups (got {})", groups.len())));
    }
    if let Some(i) = groups.iter().position(|g| g.len() < 2) {
        return Err(Error::Contract(format!("{what}: group {i} has fewer than 2 samples")));
    }
    Ok(())
}

/// Relative tolerance under which two group means count as equal.
const EQUAL_MEANS: f64 = 1e-12;

pub fn anova_one_way(groups: &[Vec<f64>]) -> Result<AnovaResult> {
    check_groups(groups, "ANOVA")?;
    let total: usize = groups.iter().map(Vec::len).sum();
    let df_between = (groups.len() - 1) as f64;
    let df_within = (total - groups.len()) as f64;
    let grand = groups.iter().flatten().sum::<f64>() / total as f64;
    let means: Vec<f64> = groups.iter().map(|g| mean(g)).collect();
    let scale = grand.abs().max(1.0);
    let ss_between: f64 = if means.iter().all(|m| (m - grand).abs() <= EQUAL_MEANS * scale) {
        0.0
    } else {
        groups.iter().zip(&means).map(|(g, m)| g.len() as f64 * (m - grand).powi(2)).sum()
    };
    let ss_within: f64 = groups
        .iter()
        .zip(&means)
        .map(|(g, m)| g.iter().map(|x| (x - m).powi(2)).sum::<f64>())
        .sum();
    let f = if ss_between == 0.0 {
        0.0
    } else if ss_within == 0.0 {
        f64::INFINITY
    } else {
        (ss_between / df_between) / (ss_within / df_within)
    };
    Ok(AnovaResult {
        f,
        p: f_survival(f, df_between, df_within),
        df_between,
        df_within,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchResult {
    pub t: f64,
    pub df: f64,
    pub p: f64,
}

/// Two-sided unequal-variance t-test.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<WelchResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Contract("Welch t-test needs at least 2 samples per group".into()));
    }
    let (ma, mb) = (mean(a), mean(b));
    let (va, vb) = (sample_variance(a) / a.len() as f64, sample_variance(b) / b.len() as f64);
    let diff = ma - mb;
    if diff.abs() <= EQUAL_MEANS * ma.abs().max(mb.abs()).max(1.0) {
        let df = (a.len() + b.len() - 2) as f64;
        return Ok(WelchResult { t: 0.0, df, p: 1.0 });
    }
    let se2 = va + vb;
    if se2 == 0.0 {
        let df = (a.len() + b.len() - 2) as f64;
        return Ok(WelchResult {
            t: diff.signum() * f64::INFINITY,
            df,
            p: 0.0,
        });
    }
    let t = diff / se2.sqrt();
    let df = se2 * se2 / (va * va / (a.len() - 1) as f64 + vb * vb / (b.len() - 1) as f64);
    Ok(WelchResult {
        t,
        df,
        p: student_t_two_sided(t, df),
    })
}

/// Symmetric matrix of Welch p-values; the diagonal is `None`.
pub fn pairwise_t_tests(groups: &[Vec<f64>]) -> Result<Vec<Vec<Option<f64>>>> {
    if let Some(i) = groups.iter().position(|g| g.len() < 2) {
        return Err(Error::Contract(format!("t-tests: group {i} has fewer than 2 samples")));
    }
    let g = groups.len();
    let mut m = vec![vec![None; g]; g];
    for i in 0..g {
        for j in i + 1..g {
            let p = welch_t_test(&groups[i], &groups[j])?.p;
            m[i][j] = Some(p);
            m[j][i] = Some(p);
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ContinuousCDF, FisherSnedecor, StudentsT};

    #[test]
    fn t_quantiles_match_tables() {
        assert!((student_t_quantile(0.975, 1.0).unwrap() - 12.7062).abs() < 1e-4);
        assert!((student_t_quantile(0.975, 4.0).unwrap() - 2.7764).abs() < 1e-4);
        // more digits of the published values
        assert!((student_t_quantile(0.975, 1.0).unwrap() - 12.706_204_736).abs() < 1e-6);
        assert!((student_t_quantile(0.975, 4.0).unwrap() - 2.776_445_105).abs() < 1e-6);
        assert!((student_t_quantile(0.995, 10.0).unwrap() - 3.169_272_673).abs() < 1e-6);
    }

    #[test]
    fn distributions_agree_with_statrs() {
        for &df in &[1.0, 2.0, 3.5, 4.0, 9.0, 30.0, 200.0] {
            let oracle = StudentsT::new(0.0, 1.0, df).unwrap();
            for &t in &[-40.0, -3.0, -1.0, -0.1, 0.0, 0.4, 2.0, 7.5] {
                assert!((student_t_cdf(t, df) - oracle.cdf(t)).abs() < 1e-9, "t {t} df {df}");
            }
            for &p in &[0.001, 0.05, 0.3, 0.5, 0.9, 0.975, 0.9999] {
                let q = student_t_quantile(p, df).unwrap();
                assert!((student_t_cdf(q, df) - p).abs() < 1e-9);
                assert!((q - oracle.inverse_cdf(p)).abs() < 1e-6 * q.abs().max(1.0), "p {p} df {df}");
            }
        }
        for &(d1, d2) in &[(1.0, 1.0), (2.0, 12.0), (7.0, 32.0), (11.0, 48.0), (3.0, 4.5)] {
            let oracle = FisherSnedecor::new(d1, d2).unwrap();
            for &f in &[0.01, 0.5, 1.0, 2.5, 8.0, 60.0] {
                assert!((f_survival(f, d1, d2) - oracle.sf(f)).abs() < 1e-9, "f {f} ({d1}, {d2})");
            }
        }
    }

    #[test]
    fn ln_gamma_on_integers_and_halves() {
        let mut fact = 1.0f64;
        for n in 1..30 {
            assert!((ln_gamma(n as f64) - fact.ln()).abs() < 1e-12 * fact.ln().max(1.0));
            fact *= n as f64;
        }
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-14);
    }

    #[test]
    fn confidence_interval_examples() {
        assert_eq!(confidence_interval(&[0.9; 5], 0.05).unwrap(), (0.9, 0.9));
        let (lo, hi) = confidence_interval(&[0.0, 1.0], 0.05).unwrap();
        assert!((lo + 5.853).abs() < 1e-3 && (hi - 6.853).abs() < 1e-3, "{lo} {hi}");
        let xs = [0.91, 0.88, 0.95, 0.9, 0.93];
        let m = 0.914;
        let s = (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / 4.0).sqrt();
        let half = 2.7764 * s / 5f64.sqrt();
        let (lo, hi) = confidence_interval(&xs, 0.05).unwrap();
        assert!((lo - (m - half)).abs() < 1e-5 && (hi - (m + half)).abs() < 1e-5);
        assert!(confidence_interval(&[1.0], 0.05).is_err());
    }

    #[test]
    fn confidence_interval_symmetric_and_monotone_in_alpha() {
        let xs = [0.2, 0.5, 0.4, 0.9, 0.1, 0.3];
        let m = xs.iter().sum::<f64>() / 6.0;
        let mut width = 0.0;
        for alpha in [0.5, 0.2, 0.1, 0.05, 0.01, 0.001] {
            let (lo, hi) = confidence_interval(&xs, alpha).unwrap();
            assert!(((m - lo) - (hi - m)).abs() < 1e-12);
            assert!(hi - lo > width);
            width = hi - lo;
        }
    }

    #[test]
    fn anova_examples() {
        let r = anova_one_way(&[vec![3.0; 4], vec![3.0; 4], vec![3.0; 3]]).unwrap();
        assert_eq!((r.f, r.p), (0.0, 1.0));
        let r = anova_one_way(&[vec![0.0, 1e-9, 0.0], vec![1.0, 1.0 + 1e-9, 1.0]]).unwrap();
        assert!(r.p < 1e-6);
        // equal means, positive homogeneous within-group variance
        let r = anova_one_way(&[vec![1.0, 2.0, 3.0], vec![2.0, 3.0, 1.0], vec![3.0, 1.0, 2.0]]).unwrap();
        assert_eq!(r.p, 1.0);
        assert!(anova_one_way(&[vec![1.0, 2.0]]).is_err());
        assert!(anova_one_way(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    /// Three fertilizer groups; F and p recomputed through statrs.
    #[test]
    fn anova_against_independent_reference() {
        let groups = vec![
            vec![6.0, 8.0, 4.0, 5.0, 3.0, 4.0],
            vec![8.0, 12.0, 9.0, 11.0, 6.0, 8.0],
            vec![13.0, 9.0, 11.0, 8.0, 7.0, 12.0],
        ];
        let r = anova_one_way(&groups).unwrap();
        // sums of squares by hand: grand mean 8, group means 5, 9, 10
        let ssb = 6.0 * (9.0 + 1.0 + 4.0);
        let ssw = (1.0 + 9.0 + 1.0 + 0.0 + 4.0 + 1.0) + (1.0 + 9.0 + 0.0 + 4.0 + 9.0 + 1.0) + (9.0 + 1.0 + 1.0 + 4.0 + 9.0 + 4.0);
        let f = (ssb / 2.0) / (ssw / 15.0);
        assert!((r.f - f).abs() < 1e-12);
        let p = FisherSnedecor::new(2.0, 15.0).unwrap().sf(f);
        assert!((r.p - p).abs() < 1e-4 && (r.p - p).abs() < 1e-9);
    }

    #[test]
    fn welch_against_independent_reference() {
        let a = [0.91, 0.88, 0.95, 0.90, 0.93];
        let b = [0.84, 0.89, 0.80, 0.86, 0.83];
        let r = welch_t_test(&a, &b).unwrap();
        let m = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
        let v = |x: &[f64]| {
            let mu = m(x);
            x.iter().map(|y| (y - mu).powi(2)).sum::<f64>() / (x.len() - 1) as f64 / x.len() as f64
        };
        let t = (m(&a) - m(&b)) / (v(&a) + v(&b)).sqrt();
        let df = (v(&a) + v(&b)).powi(2) / (v(&a).powi(2) / 4.0 + v(&b).powi(2) / 4.0);
        let p = 2.0 * StudentsT::new(0.0, 1.0, df).unwrap().sf(t.abs());
        assert!((r.t - t).abs() < 1e-12 && (r.df - df).abs() < 1e-9);
        assert!((r.p - p).abs() < 1e-9, "{} {p}", r.p);
    }

    #[test]
    fn pairwise_examples() {
        let g = vec![vec![0.5, 0.6, 0.7], vec![0.5, 0.6, 0.7]];
        assert_eq!(pairwise_t_tests(&g).unwrap()[0][1], Some(1.0));
        let jitter = |base: f64| (0..5).map(|i| base + 1e-9 * i as f64).collect::<Vec<_>>();
        let m = pairwise_t_tests(&[jitter(0.0), jitter(1.0)]).unwrap();
        assert!(m[0][1].unwrap() < 1e-6);
        assert!(pairwise_t_tests(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn pairwise_matrix_is_symmetric() {
        let mut rng = crate::seed::rng(3);
        use rand::Rng;
        let groups: Vec<Vec<f64>> = (0..8).map(|_| (0..5).map(|_| rng.random::<f64>()).collect()).collect();
        let m = pairwise_t_tests(&groups).unwrap();
        assert_eq!(m.len(), 8);
        for i in 0..8 {
            assert!(m[i][i].is_none());
            for j in 0..8 {
                if i != j {
                    assert!((m[i][j].unwrap() - m[j][i].unwrap()).abs() <= 1e-12);
                }
            }
        }
    }
}
