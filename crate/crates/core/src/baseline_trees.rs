//! One-dimensional binomial reference pricers.
//!
//! These trees bracket the four-branch lattice from below: each keeps a
//! single driver and a two-point branch, so their prices are cheap oracles
//! for collapse limits and convergence checks. Five geometries are covered:
//!
//! - additive: price factors `1 + mu dt +- c sqrt(dt)` with the natural
//!   up-probability carried into the risk-neutral weight through the
//!   market price of risk;
//! - crr: driftless exponential factors `exp(+-sigma sqrt(dt))` with the
//!   exactly repricing weight;
//! - jarrow-rudd: exponential factors with natural drift `mu` and the
//!   exactly repricing weight;
//! - skew-offset: exponential factors whose exponents share a constant
//!   offset `delta`, weighted by the drift-expansion probability;
//! - reflected: a driver walking on the integers whose absolute value
//!   scales the price move, recombining on `|level|`; the origin state
//!   carries one effective branch and generally misprices the asset.

use crate::error::{Error, Result};

/// Marginal scales with magnitude below this leave the two branches
/// indistinguishable.
pub const SCALE_FLOOR: f64 = 1e-10;

/// Symmetric exponent components below this collapse the offset tree's
/// branches onto each other.
pub const SYMMETRIC_COMPONENT_MIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Additive { p_up: f64, mu: f64, sigma: f64 },
    Crr { sigma: f64 },
    JarrowRudd { mu: f64, sigma: f64 },
    SkewOffset { mu: f64, sigma: f64, delta: f64 },
    Reflected { mu: f64, sigma: f64 },
}

/// A validated single-asset binomial pricer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineTree {
    r: f64,
    dt: f64,
    kind: Kind,
}

/// Price plus the diagnostics accumulated during one backward sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct TreePricing {
    price: f64,
    warnings: Vec<String>,
}

impl TreePricing {
    pub fn price(&self) -> f64 {
        self.price
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }
}

fn require_finite(value: f64, name: &str) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid_input(format!("{name} must be finite")))
    }
}

fn validate_common(r: f64, dt: f64, sigma: f64) -> Result<()> {
    require_finite(r, "r")?;
    require_finite(dt, "dt")?;
    require_finite(sigma, "sigma")?;
    if dt <= 0.0 {
        return Err(Error::invalid_input("dt must be positive"));
    }
    if sigma.abs() < SCALE_FLOOR {
        return Err(Error::invalid_input(
            "sigma magnitude too small to separate the branches",
        ));
    }
    Ok(())
}

impl BaselineTree {
    /// Tree with additive factors `1 + mu dt +- sqrt((1-p)/p) sigma sqrt(dt)`
    /// and risk-neutral weight `p - theta sqrt(p (1-p) dt)`,
    /// `theta = (mu - r) / sigma`.
    pub fn additive(p_up: f64, mu: f64, sigma: f64, r: f64, dt: f64) -> Result<Self> {
        validate_common(r, dt, sigma)?;
        require_finite(mu, "mu")?;
        require_finite(p_up, "p_up")?;
        if !(p_up > 0.0 && p_up < 1.0) {
            return Err(Error::invalid_input("p_up must lie strictly inside (0, 1)"));
        }
        let tree = Self { r, dt, kind: Kind::Additive { p_up, mu, sigma } };
        let (up, down) = tree.branch_factors()?;
        if up <= 0.0 || down <= 0.0 {
            return Err(Error::invalid_input(
                "additive factors must stay positive; shrink sigma sqrt(dt) or rebalance p_up",
            ));
        }
        Ok(tree)
    }

    /// Driftless exponential tree with weight
    /// `(exp(r dt) - d) / (u - d)`, `u = exp(sigma sqrt(dt)) = 1/d`.
    pub fn crr(sigma: f64, r: f64, dt: f64) -> Result<Self> {
        validate_common(r, dt, sigma)?;
        Ok(Self { r, dt, kind: Kind::Crr { sigma } })
    }

    /// Exponential tree with natural drift `mu` and weight
    /// `(exp((r - mu) dt) - d) / (u - d)`, `u = exp(sigma sqrt(dt)) = 1/d`.
    pub fn jarrow_rudd(mu: f64, sigma: f64, r: f64, dt: f64) -> Result<Self> {
        validate_common(r, dt, sigma)?;
        require_finite(mu, "mu")?;
        Ok(Self { r, dt, kind: Kind::JarrowRudd { mu, sigma } })
    }

    /// Exponential tree with exponents `sigma (delta +- sqrt(1 - delta^2))
    /// sqrt(dt)` and the drift-expansion weight `(1 - theta sqrt(dt)) / 2`,
    /// `theta = (mu - sigma^2/2 - r) / sigma`.
    pub fn skew_offset(mu: f64, sigma: f64, delta: f64, r: f64, dt: f64) -> Result<Self> {
        validate_common(r, dt, sigma)?;
        require_finite(mu, "mu")?;
        require_finite(delta, "delta")?;
        if delta.abs() > 1.0 {
            return Err(Error::invalid_input("delta must lie in [-1, 1]"));
        }
        if (1.0 - delta * delta).sqrt() < SYMMETRIC_COMPONENT_MIN {
            return Err(Error::DegenerateMarket {
                message: format!(
                    "offset {delta} leaves no symmetric exponent component; the branches coincide"
                ),
            });
        }
        Ok(Self { r, dt, kind: Kind::SkewOffset { mu, sigma, delta } })
    }

    /// Tree whose driver walks on the integers and whose price move scales
    /// with the change in `|level|`; recombines on `|level|`.
    pub fn reflected(mu: f64, sigma: f64, r: f64, dt: f64) -> Result<Self> {
        validate_common(r, dt, sigma)?;
        require_finite(mu, "mu")?;
        Ok(Self { r, dt, kind: Kind::Reflected { mu, sigma } })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Kind label used by configuration and output files.
    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            Kind::Additive { .. } => "additive",
            Kind::Crr { .. } => "crr",
            Kind::JarrowRudd { .. } => "jarrow-rudd",
            Kind::SkewOffset { .. } => "skew-offset",
            Kind::Reflected { .. } => "reflected",
        }
    }

    fn discount(&self) -> f64 {
        (-self.r * self.dt).exp()
    }

    /// Up/down price multipliers for the level-independent kinds.
    pub fn branch_factors(&self) -> Result<(f64, f64)> {
        let sq = self.dt.sqrt();
        match self.kind {
            Kind::Additive { p_up, mu, sigma } => {
                let spread_up = ((1.0 - p_up) / p_up).sqrt();
                let spread_dn = (p_up / (1.0 - p_up)).sqrt();
                Ok((
                    1.0 + mu * self.dt + spread_up * sigma * sq,
                    1.0 + mu * self.dt - spread_dn * sigma * sq,
                ))
            }
            Kind::Crr { sigma } => Ok(((sigma * sq).exp(), (-sigma * sq).exp())),
            Kind::JarrowRudd { mu, sigma } => Ok((
                (mu * self.dt + sigma * sq).exp(),
                (mu * self.dt - sigma * sq).exp(),
            )),
            Kind::SkewOffset { mu, sigma, delta } => {
                let sym = (1.0 - delta * delta).sqrt();
                Ok((
                    (mu * self.dt + sigma * (delta + sym) * sq).exp(),
                    (mu * self.dt + sigma * (delta - sym) * sq).exp(),
                ))
            }
            Kind::Reflected { .. } => Err(Error::invalid_input(
                "reflected branch factors depend on the driver level; use branch_factors_at",
            )),
        }
    }

    /// Up/down price multipliers at signed driver level `level`
    /// (up meaning `level + 1`). Level-independent kinds ignore `level`.
    pub fn branch_factors_at(&self, level: i64) -> Result<(f64, f64)> {
        match self.kind {
            Kind::Reflected { mu, sigma } => {
                let sq = self.dt.sqrt();
                let e_up = ((level + 1).abs() - level.abs()) as f64;
                let e_dn = ((level - 1).abs() - level.abs()) as f64;
                Ok((
                    (mu * self.dt + sigma * e_up * sq).exp(),
                    (mu * self.dt + sigma * e_dn * sq).exp(),
                ))
            }
            _ => self.branch_factors(),
        }
    }

    /// Risk-neutral up-branch weight for the level-independent kinds.
    pub fn up_probability(&self) -> Result<f64> {
        let sq = self.dt.sqrt();
        match self.kind {
            Kind::Additive { p_up, mu, sigma } => {
                let theta = (mu - self.r) / sigma;
                Ok(p_up - theta * (p_up * (1.0 - p_up)).sqrt() * sq)
            }
            Kind::Crr { .. } => {
                let (up, down) = self.branch_factors()?;
                Ok(((self.r * self.dt).exp() - down) / (up - down))
            }
            Kind::JarrowRudd { mu, sigma } => {
                let up = (sigma * sq).exp();
                let down = (-sigma * sq).exp();
                Ok((((self.r - mu) * self.dt).exp() - down) / (up - down))
            }
            Kind::SkewOffset { mu, sigma, .. } => {
                let theta = (mu - sigma * sigma / 2.0 - self.r) / sigma;
                Ok((1.0 - theta * sq) / 2.0)
            }
            Kind::Reflected { .. } => Err(Error::invalid_input(
                "reflected branch weight depends on the driver level; use up_probability_at",
            )),
        }
    }

    /// Risk-neutral up-branch weight at signed driver level `level`.
    /// Level-independent kinds ignore `level`; the reflected kind solves
    /// `exp(-r dt) (q f_up + (1 - q) f_dn) = 1` for the level's factors.
    pub fn up_probability_at(&self, level: i64) -> Result<f64> {
        match self.kind {
            Kind::Reflected { mu, sigma } => {
                if level == 0 {
                    return Err(Error::DegenerateMarket {
                        message: "both branches leave the reflecting state with one price \
                                  factor; the branch weight is undetermined"
                            .to_string(),
                    });
                }
                let sq = self.dt.sqrt();
                let e_up = (((level + 1).abs() - level.abs()) as f64 * sigma * sq).exp();
                let e_dn = (((level - 1).abs() - level.abs()) as f64 * sigma * sq).exp();
                let target = ((self.r - mu) * self.dt).exp();
                Ok((target - e_dn) / (e_up - e_dn))
            }
            _ => self.up_probability(),
        }
    }

    /// Relative asset-repricing error through the reflecting state, where
    /// one effective branch makes exact repricing impossible.
    pub fn reflecting_state_mispricing(&self) -> Result<f64> {
        match self.kind {
            Kind::Reflected { mu, sigma } => {
                let c = ((self.r - mu) * self.dt).exp();
                Ok((c / (sigma * self.dt.sqrt()).exp() - 1.0).abs())
            }
            _ => Err(Error::invalid_input(
                "only the reflected tree has a reflecting state",
            )),
        }
    }

    /// European price by backward induction over `n_steps` steps.
    pub fn price_european<F: Fn(f64) -> f64>(
        &self,
        s0: f64,
        n_steps: usize,
        payoff: F,
    ) -> Result<TreePricing> {
        require_finite(s0, "s0")?;
        if s0 <= 0.0 {
            return Err(Error::invalid_input("s0 must be positive"));
        }
        if n_steps == 0 {
            return Err(Error::invalid_input("n_steps must be at least 1"));
        }
        match self.kind {
            Kind::Reflected { .. } => self.price_reflected(s0, n_steps, payoff),
            _ => self.price_level_independent(s0, n_steps, payoff),
        }
    }

    fn price_level_independent<F: Fn(f64) -> f64>(
        &self,
        s0: f64,
        n_steps: usize,
        payoff: F,
    ) -> Result<TreePricing> {
        let (up, down) = self.branch_factors()?;
        let q = self.up_probability()?;
        let disc = self.discount();
        let mut warnings = Vec::new();
        push_weight_warning(&mut warnings, q);

        let (log_up, log_down) = (up.ln(), down.ln());
        let mut values: Vec<f64> = (0..=n_steps)
            .map(|j| {
                let exponent = j as f64 * log_up + (n_steps - j) as f64 * log_down;
                payoff(s0 * exponent.exp())
            })
            .collect();
        for k in (0..n_steps).rev() {
            for j in 0..=k {
                values[j] = disc * (values[j] + q * (values[j + 1] - values[j]));
            }
            values.truncate(k + 1);
        }
        Ok(TreePricing { price: values[0], warnings })
    }

    /// Folded induction on `m = |level|`. From `m > 0` the up branch moves
    /// to `m + 1` with the level-positive weight; mirror levels carry the
    /// complementary weight onto mirrored successors, so the fold is exact.
    /// From `m = 0` both branches carry the same factor and value.
    fn price_reflected<F: Fn(f64) -> f64>(
        &self,
        s0: f64,
        n_steps: usize,
        payoff: F,
    ) -> Result<TreePricing> {
        let Kind::Reflected { mu, sigma } = self.kind else {
            unreachable!("reflected pricer called on a level-independent tree");
        };
        let q = self.up_probability_at(1)?;
        let disc = self.discount();
        let sq = self.dt.sqrt();
        let mut warnings = Vec::new();
        push_weight_warning(&mut warnings, q);
        warnings.push(format!(
            "reflecting state carries one effective branch; asset repricing misses \
             by relative error {:.6e}",
            self.reflecting_state_mispricing()?,
        ));

        let mut values: Vec<f64> = (0..half_levels(n_steps))
            .map(|i| {
                let m = ((n_steps % 2) + 2 * i) as f64;
                payoff(s0 * (n_steps as f64 * mu * self.dt + sigma * m * sq).exp())
            })
            .collect();
        for k in (0..n_steps).rev() {
            let parity = k % 2;
            let next: Vec<f64> = (0..half_levels(k))
                .map(|i| {
                    if parity == 0 && i == 0 {
                        return disc * values[0];
                    }
                    let i_up = i + parity;
                    let i_dn = i + parity - 1;
                    disc * (values[i_dn] + q * (values[i_up] - values[i_dn]))
                })
                .collect();
            values = next;
        }
        Ok(TreePricing { price: values[0], warnings })
    }
}

/// Distinct `|level|` values at step `k`.
fn half_levels(k: usize) -> usize {
    k / 2 + 1
}

fn push_weight_warning(warnings: &mut Vec<String>, q: f64) {
    if !(q > 0.0 && q < 1.0) {
        warnings.push(format!(
            "arbitrage: up-branch weight {q:.6e} leaves (0, 1)"
        ));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DT_DAY: f64 = 1.0 / 252.0;

    fn assert_rel(actual: f64, expected: f64, tol: f64) {
        let scale = expected.abs().max(1.0);
        assert!(
            (actual - expected).abs() <= tol * scale,
            "actual {actual:.17e} expected {expected:.17e} tol {tol:.1e}"
        );
    }

    fn call(strike: f64) -> impl Fn(f64) -> f64 {
        move |s| (s - strike).max(0.0)
    }

    fn put(strike: f64) -> impl Fn(f64) -> f64 {
        move |s| (strike - s).max(0.0)
    }

    /// 2^n path enumeration for the level-independent kinds.
    fn enumerate_level_independent(
        tree: &BaselineTree,
        s0: f64,
        n: usize,
        payoff: &dyn Fn(f64) -> f64,
    ) -> f64 {
        let (up, down) = tree.branch_factors().unwrap();
        let q = tree.up_probability().unwrap();
        let disc = (-tree.r() * tree.dt() * n as f64).exp();
        let mut total = 0.0;
        for path in 0u64..(1 << n) {
            let mut s = s0;
            let mut weight = 1.0;
            for step in 0..n {
                if path >> step & 1 == 1 {
                    s *= up;
                    weight *= q;
                } else {
                    s *= down;
                    weight *= 1.0 - q;
                }
            }
            total += weight * payoff(s);
        }
        disc * total
    }

    /// 2^n path enumeration for the reflected tree on signed levels; the
    /// reflecting state splits its identical branches half and half.
    fn enumerate_reflected(
        tree: &BaselineTree,
        s0: f64,
        n: usize,
        payoff: &dyn Fn(f64) -> f64,
    ) -> f64 {
        let disc = (-tree.r() * tree.dt() * n as f64).exp();
        let mut total = 0.0;
        for path in 0u64..(1 << n) {
            let mut level: i64 = 0;
            let mut s = s0;
            let mut weight = 1.0;
            for step in 0..n {
                let up = path >> step & 1 == 1;
                let (f_up, f_dn) = tree.branch_factors_at(level).unwrap();
                let q_up = if level == 0 {
                    0.5
                } else {
                    tree.up_probability_at(level).unwrap()
                };
                s *= if up { f_up } else { f_dn };
                weight *= if up { q_up } else { 1.0 - q_up };
                level += if up { 1 } else { -1 };
            }
            total += weight * payoff(s);
        }
        disc * total
    }

    #[test]
    fn additive_factors_and_weight_match_reference() {
        let tree = BaselineTree::additive(0.55, 0.08, 0.25, 0.02, 1.0 / 52.0).unwrap();
        let (up, down) = tree.branch_factors().unwrap();
        assert_rel(up, 1.0328975369137274, 1e-14);
        assert_rel(down, 0.96321070274646988, 1e-14);
        assert_rel(tree.up_probability().unwrap(), 0.5334424082018596, 1e-14);
    }

    #[test]
    fn crr_weight_matches_reference_and_drift_expansion() {
        let tree = BaselineTree::crr(0.2, 0.01, DT_DAY).unwrap();
        let q = tree.up_probability().unwrap();
        assert_rel(q, 0.49842517927588804, 1e-14);
        assert_rel(q, 0.49842514802912822, 1e-7);
    }

    #[test]
    fn jarrow_rudd_weight_matches_reference() {
        let tree = BaselineTree::jarrow_rudd(0.0, 0.2, 0.0, DT_DAY).unwrap();
        assert_rel(tree.up_probability().unwrap(), 0.49685033772034569, 1e-14);
    }

    #[test]
    fn skew_offset_weight_and_factors_match_reference() {
        let tree = BaselineTree::skew_offset(0.1, 0.2, 0.3, 0.03, DT_DAY).unwrap();
        assert_rel(tree.up_probability().unwrap(), 0.4921257401456411, 1e-14);
        let (up, down) = tree.branch_factors().unwrap();
        let drift = 0.1 * DT_DAY;
        assert_rel(up, (drift + 0.015798148981638903).exp(), 1e-13);
        assert_rel(down, (drift - 0.0082388595214543587).exp(), 1e-13);
    }

    #[test]
    fn skew_offset_at_zero_offset_matches_drifted_exponential_tree() {
        let offset = BaselineTree::skew_offset(0.1, 0.2, 0.0, 0.03, DT_DAY).unwrap();
        let plain = BaselineTree::jarrow_rudd(0.1, 0.2, 0.03, DT_DAY).unwrap();
        assert_eq!(
            offset.branch_factors().unwrap(),
            plain.branch_factors().unwrap()
        );
        // The expansion weight keeps `- sigma^2 / 2` in its drift where the
        // exact weight expands with `+ sigma^2 / 2`, so the two differ by
        // `sigma sqrt(dt) / 2` at leading order.
        let gap = offset.up_probability().unwrap() - plain.up_probability().unwrap();
        let leading = 0.5 * 0.2 * DT_DAY.sqrt();
        assert!(
            (gap - leading).abs() <= DT_DAY,
            "weight gap {gap:.6e} vs leading term {leading:.6e}"
        );
    }

    #[test]
    fn reflected_weights_match_reference() {
        let tree = BaselineTree::reflected(0.05, 0.3, 0.02, 1.0 / 12.0).unwrap();
        let q_pos = tree.up_probability_at(2).unwrap();
        let q_neg = tree.up_probability_at(-3).unwrap();
        assert_rel(q_pos, 0.46396516075888952, 1e-14);
        assert_rel(q_neg, 0.53603483924111048, 1e-14);
        assert_rel(q_pos + q_neg, 1.0, 1e-14);
        assert_eq!(q_pos, tree.up_probability_at(7).unwrap());
        assert_eq!(q_neg, tree.up_probability_at(-1).unwrap());
    }

    #[test]
    fn reflecting_state_has_one_branch_and_reports_mispricing() {
        let tree = BaselineTree::reflected(0.05, 0.3, 0.02, 1.0 / 12.0).unwrap();
        let (f_up, f_dn) = tree.branch_factors_at(0).unwrap();
        assert_eq!(f_up, f_dn);
        assert_rel(
            f_up,
            (0.05 / 12.0f64).exp() * 1.0904631784921236,
            1e-13,
        );
        assert!(matches!(
            tree.up_probability_at(0),
            Err(Error::DegenerateMarket { .. })
        ));
        assert_rel(
            tree.reflecting_state_mispricing().unwrap(),
            0.08524823022745915,
            1e-13,
        );

        let one_step = tree.price_european(100.0, 1, call(100.0)).unwrap();
        let disc = (-tree.r() * tree.dt()).exp();
        assert_eq!(one_step.price(), disc * (100.0 * f_up - 100.0));
        assert!(one_step
            .warnings()
            .iter()
            .any(|w| w.contains("reflecting state") && w.contains("8.524823e-2")));
    }

    #[test]
    fn reflected_price_matches_path_enumeration() {
        let tree = BaselineTree::reflected(0.05, 0.3, 0.02, 1.0 / 12.0).unwrap();
        let payoffs: [&(dyn Fn(f64) -> f64); 2] = [&call(102.0), &put(98.0)];
        for payoff in payoffs {
            for n in [1usize, 2, 3, 7] {
                let folded = tree.price_european(100.0, n, payoff).unwrap().price();
                let brute = enumerate_reflected(&tree, 100.0, n, payoff);
                assert_rel(folded, brute, 1e-12);
            }
        }
    }

    #[test]
    fn level_independent_prices_match_path_enumeration() {
        let trees = [
            BaselineTree::additive(0.55, 0.08, 0.25, 0.02, 1.0 / 52.0).unwrap(),
            BaselineTree::crr(0.2, 0.01, 0.05).unwrap(),
            BaselineTree::jarrow_rudd(0.07, 0.2, 0.01, 0.05).unwrap(),
            BaselineTree::skew_offset(0.1, 0.2, 0.3, 0.03, 0.05).unwrap(),
        ];
        for tree in &trees {
            let folded = tree.price_european(100.0, 5, call(101.0)).unwrap().price();
            let brute = enumerate_level_independent(tree, 100.0, 5, &call(101.0));
            assert_rel(folded, brute, 1e-12);
        }
    }

    #[test]
    fn constant_payoff_discounts_exactly() {
        let trees = [
            BaselineTree::additive(0.55, 0.08, 0.25, 0.02, 1.0 / 52.0).unwrap(),
            BaselineTree::crr(0.2, 0.01, DT_DAY).unwrap(),
            BaselineTree::jarrow_rudd(0.07, 0.2, 0.01, DT_DAY).unwrap(),
            BaselineTree::skew_offset(0.1, 0.2, 0.3, 0.03, DT_DAY).unwrap(),
            BaselineTree::reflected(0.05, 0.3, 0.02, 1.0 / 12.0).unwrap(),
        ];
        for tree in &trees {
            let n = 9;
            let result = tree.price_european(100.0, n, |_| 7.5).unwrap();
            let expected = 7.5 * (-tree.r() * tree.dt() * n as f64).exp();
            assert_rel(result.price(), expected, 1e-12);
        }
    }

    #[test]
    fn drifted_exponential_tree_converges_to_lognormal_closed_form() {
        // S = K = 100, sigma = 0.2, r = 0.01, T = 1. At-the-money errors
        // oscillate inside an O(1/n) envelope, so the refined grids are
        // compared against the coarsest rather than against each other.
        let reference_call = 8.4333186901096088;
        let errors: Vec<f64> = [64usize, 256, 1024]
            .into_iter()
            .map(|n| {
                let dt = 1.0 / n as f64;
                let tree = BaselineTree::jarrow_rudd(0.07, 0.2, 0.01, dt).unwrap();
                let price = tree.price_european(100.0, n, call(100.0)).unwrap().price();
                let error = (price - reference_call).abs() / reference_call;
                assert!(
                    error * n as f64 <= 0.3,
                    "error {error:.3e} leaves the envelope at n = {n}"
                );
                error
            })
            .collect();
        assert!(errors[1] < errors[0] && errors[2] < errors[0]);
        assert!(errors[2] < 1e-3, "n = 1024 relative error {:.3e}", errors[2]);
    }

    #[test]
    fn exactly_repricing_kinds_satisfy_put_call_parity() {
        let n = 50;
        let (s0, strike) = (100.0, 95.0);
        let trees = [
            BaselineTree::crr(0.2, 0.01, DT_DAY).unwrap(),
            BaselineTree::jarrow_rudd(0.07, 0.2, 0.01, DT_DAY).unwrap(),
        ];
        for tree in &trees {
            let c = tree.price_european(s0, n, call(strike)).unwrap().price();
            let p = tree.price_european(s0, n, put(strike)).unwrap().price();
            let forward = s0 - strike * (-tree.r() * tree.dt() * n as f64).exp();
            assert_rel(c - p, forward, 1e-12);
        }
    }

    #[test]
    fn weight_outside_unit_interval_warns() {
        let tree = BaselineTree::crr(0.2, 10.0, DT_DAY).unwrap();
        assert!(tree.up_probability().unwrap() > 1.0);
        let result = tree.price_european(100.0, 3, call(100.0)).unwrap();
        assert!(result.warnings().iter().any(|w| w.starts_with("arbitrage:")));

        let calm = BaselineTree::crr(0.2, 0.01, DT_DAY).unwrap();
        let clean = calm.price_european(100.0, 3, call(100.0)).unwrap();
        assert!(clean.warnings().is_empty());
    }

    #[test]
    fn constructor_rejects_invalid_parameters() {
        assert!(BaselineTree::additive(0.0, 0.08, 0.25, 0.02, 0.25).is_err());
        assert!(BaselineTree::additive(1.0, 0.08, 0.25, 0.02, 0.25).is_err());
        // p_up = 0.9 makes the down spread 3 sigma sqrt(dt); the down factor
        // goes negative.
        assert!(BaselineTree::additive(0.9, 0.0, 1.0, 0.0, 0.25).is_err());
        assert!(BaselineTree::crr(0.0, 0.01, DT_DAY).is_err());
        assert!(BaselineTree::crr(0.2, 0.01, 0.0).is_err());
        assert!(BaselineTree::crr(0.2, f64::NAN, DT_DAY).is_err());
        assert!(matches!(
            BaselineTree::skew_offset(0.1, 0.2, 1.0, 0.03, DT_DAY),
            Err(Error::DegenerateMarket { .. })
        ));
        assert!(BaselineTree::skew_offset(0.1, 0.2, 1.5, 0.03, DT_DAY).is_err());
    }

    #[test]
    fn pricing_rejects_invalid_market_state() {
        let tree = BaselineTree::crr(0.2, 0.01, DT_DAY).unwrap();
        assert!(tree.price_european(0.0, 3, call(100.0)).is_err());
        assert!(tree.price_european(-5.0, 3, call(100.0)).is_err());
        assert!(tree.price_european(100.0, 0, call(100.0)).is_err());
    }

    #[test]
    fn kind_names_are_stable() {
        let names: Vec<&str> = [
            BaselineTree::additive(0.55, 0.08, 0.25, 0.02, 0.25).unwrap(),
            BaselineTree::crr(0.2, 0.01, 0.25).unwrap(),
            BaselineTree::jarrow_rudd(0.07, 0.2, 0.01, 0.25).unwrap(),
            BaselineTree::skew_offset(0.1, 0.2, 0.3, 0.03, 0.25).unwrap(),
            BaselineTree::reflected(0.05, 0.3, 0.02, 0.25).unwrap(),
        ]
        .iter()
        .map(|t| t.kind_name())
        .collect();
        assert_eq!(
            names,
            ["additive", "crr", "jarrow-rudd", "skew-offset", "reflected"]
        );
    }
}
