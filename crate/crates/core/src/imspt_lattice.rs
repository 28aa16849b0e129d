//! Four-branch recombining lattice pricing for a three-asset skew market.
//!
//! Each step draws two independent signs. The first drives a symmetric
//! component, the second moves a reflected component whose absolute value
//! injects the skew. Three risky assets plus the bond span the four branches,
//! so every claim is replicable and branch weights follow from the
//! replication system rather than from a distributional assumption.
//!
//! Branch weights depend on the node only through the sign of the second
//! driver level, so a pricing sweep caches three quadruples. The `j2 = 0`
//! class is rank-deficient (both second-driver moves exit upward) and is
//! solved in least squares; its repricing residual is reported, not hidden.

use crate::error::{Error, Result};
use crate::numerics::{det3, det4, solve_small};
use rayon::prelude::*;

/// Layers with at least this many nodes update in parallel.
const PARALLEL_LAYER_MIN: usize = 4096;

/// |delta| at or below this collapses the four branches to two distinct
/// columns; `price_european` then dispatches to the two-state solver.
pub const DELTA_COLLAPSE_THRESHOLD: f64 = 1e-6;

/// Relative replication-determinant magnitude below this raises
/// [`Error::DegenerateMarket`].
pub const DETERMINANT_RELATIVE_THRESHOLD: f64 = 1e-12;

/// Relative separation required between any two marginal scales.
pub const SIGMA_SEPARATION_MIN: f64 = 1e-10;

/// Drift, marginal scale, and spot price of one risky asset.
///
/// `sigma` is a signed coefficient, not a volatility: the driving process is
/// asymmetric, so the sign changes the asset's exposure to the skew.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssetSpec {
    /// Drift per year.
    pub mu: f64,
    /// Marginal scale per square-root year; the sign is meaningful.
    pub sigma: f64,
    /// Spot price, strictly positive.
    pub s0: f64,
}

/// A three-asset skew market with a shared skew parameter and step grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketSpec {
    assets: [AssetSpec; 3],
    delta: f64,
    r: f64,
    dt: f64,
    n_steps: usize,
    warnings: Vec<String>,
}

impl MarketSpec {
    /// Validates and builds a market.
    ///
    /// Requires finite parameters, `|delta| < 1`, `dt > 0`, `n_steps >= 1`,
    /// positive spots, and pairwise separation of the marginal scales; tied
    /// scales make the replication system singular at every node and raise
    /// [`Error::DegenerateMarket`]. A negative riskless rate is permitted and
    /// recorded as a warning.
    pub fn new(
        assets: [AssetSpec; 3],
        delta: f64,
        r: f64,
        dt: f64,
        n_steps: usize,
    ) -> Result<Self> {
        for (i, a) in assets.iter().enumerate() {
            if !a.mu.is_finite() || !a.sigma.is_finite() {
                return Err(Error::invalid_input(format!(
                    "asset {i}: non-finite mu or sigma"
                )));
            }
            if !(a.s0 > 0.0 && a.s0.is_finite()) {
                return Err(Error::invalid_input(format!(
                    "asset {i}: spot {} is not a positive finite value",
                    a.s0
                )));
            }
        }
        for i in 0..3 {
            for j in (i + 1)..3 {
                let scale = 1.0f64.max(assets[i].sigma.abs()).max(assets[j].sigma.abs());
                if (assets[i].sigma - assets[j].sigma).abs() <= SIGMA_SEPARATION_MIN * scale {
                    return Err(Error::DegenerateMarket {
                        message: format!(
                            "assets {i} and {j} have indistinguishable marginal scales ({} vs {})",
                            assets[i].sigma, assets[j].sigma
                        ),
                    });
                }
            }
        }
        if !(delta.is_finite() && delta.abs() < 1.0) {
            return Err(Error::invalid_input(format!(
                "delta {delta} outside (-1, 1)"
            )));
        }
        if !r.is_finite() {
            return Err(Error::invalid_input("riskless rate must be finite"));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid_input(format!("step size {dt} must be positive")));
        }
        if n_steps == 0 {
            return Err(Error::invalid_input("n_steps must be at least 1"));
        }
        let mut warnings = Vec::new();
        if r < 0.0 {
            warnings.push(format!("negative riskless rate r = {r}"));
        }
        Ok(Self { assets, delta, r, dt, n_steps, warnings })
    }

    pub fn assets(&self) -> &[AssetSpec; 3] {
        &self.assets
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Maturity in years, `dt * n_steps`.
    pub fn maturity(&self) -> f64 {
        self.dt * self.n_steps as f64
    }

    /// Construction-time warnings (currently only a negative riskless rate).
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Same market with a different step count (used by surface sweeps).
    pub fn with_n_steps(&self, n_steps: usize) -> Result<Self> {
        Self::new(self.assets, self.delta, self.r, self.dt, n_steps)
    }
}

/// A lattice state: step `k` and the two driver levels.
///
/// Both levels are partial sums of `k` independent signs, so `|j| <= k` and
/// `j` has the parity of `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeNode {
    k: usize,
    j1: i64,
    j2: i64,
}

impl LatticeNode {
    /// Validates the range and parity invariants.
    pub fn new(k: usize, j1: i64, j2: i64) -> Result<Self> {
        let k_i = k as i64;
        for (name, j) in [("j1", j1), ("j2", j2)] {
            if j.abs() > k_i {
                return Err(Error::invalid_input(format!(
                    "{name} = {j} out of range at step {k}"
                )));
            }
            if (j - k_i) % 2 != 0 {
                return Err(Error::invalid_input(format!(
                    "{name} = {j} has wrong parity at step {k}"
                )));
            }
        }
        Ok(Self { k, j1, j2 })
    }

    /// The root node (0, 0, 0).
    pub fn origin() -> Self {
        Self { k: 0, j1: 0, j2: 0 }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn j1(&self) -> i64 {
        self.j1
    }

    pub fn j2(&self) -> i64 {
        self.j2
    }
}

/// One value per branch of the four-branch step.
///
/// Branch names give the first-driver sign then the second-driver sign:
/// `uu` = (+, +), `ud` = (+, -), `du` = (-, +), `dd` = (-, -).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BranchQuadruple<T> {
    pub uu: T,
    pub ud: T,
    pub du: T,
    pub dd: T,
}

impl<T> BranchQuadruple<T> {
    pub fn new(uu: T, ud: T, du: T, dd: T) -> Self {
        Self { uu, ud, du, dd }
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> BranchQuadruple<U> {
        BranchQuadruple {
            uu: f(&self.uu),
            ud: f(&self.ud),
            du: f(&self.du),
            dd: f(&self.dd),
        }
    }
}

impl<T: Copy> BranchQuadruple<T> {
    /// Branch values in the fixed order (uu, ud, du, dd).
    pub fn to_array(self) -> [T; 4] {
        [self.uu, self.ud, self.du, self.dd]
    }

    pub fn from_array(values: [T; 4]) -> Self {
        Self { uu: values[0], ud: values[1], du: values[2], dd: values[3] }
    }
}

impl BranchQuadruple<f64> {
    pub fn sum(&self) -> f64 {
        self.uu + self.ud + self.du + self.dd
    }

    pub fn min(&self) -> f64 {
        self.uu.min(self.ud).min(self.du).min(self.dd)
    }

    pub fn max(&self) -> f64 {
        self.uu.max(self.ud).max(self.du).max(self.dd)
    }
}

/// Risk-neutral branch weights for one second-driver sign class.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchProbabilities {
    q: BranchQuadruple<f64>,
    zeta_sign: i8,
    least_squares: bool,
}

impl BranchProbabilities {
    pub(crate) fn new(q: BranchQuadruple<f64>, zeta_sign: i8, least_squares: bool) -> Self {
        Self { q, zeta_sign, least_squares }
    }

    pub fn q(&self) -> &BranchQuadruple<f64> {
        &self.q
    }

    /// Sign of the second-driver level this quadruple applies to.
    pub fn zeta_sign(&self) -> i8 {
        self.zeta_sign
    }

    /// True when the weights come from the rank-deficient `j2 = 0` solve,
    /// which reprices the assets only in least squares.
    pub fn is_least_squares(&self) -> bool {
        self.least_squares
    }

    pub fn normalization(&self) -> f64 {
        self.q.sum()
    }

    pub fn min(&self) -> f64 {
        self.q.min()
    }

    pub fn max(&self) -> f64 {
        self.q.max()
    }

    /// True when every weight lies in [0, 1]; violations are priced as-is
    /// but recorded as arbitrage warnings.
    pub fn in_unit_interval(&self) -> bool {
        self.q.min() >= 0.0 && self.q.max() <= 1.0
    }
}

/// Replicating positions in the three risky assets and the bond.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HedgingDeltas {
    /// Units held of each risky asset.
    pub asset: [f64; 3],
    /// Bond position completing the replication.
    pub bond: f64,
}

/// Which rainbow payoff a surface or CLI run prices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptionKind {
    Put,
    Call,
}

/// A recorded per-node quantity from a pricing sweep.
///
/// Nodes are reported at their canonical representative `j2 >= 0`; the
/// lattice value at `(k, j1, -j2)` equals the value at `(k, j1, j2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeRecord<T> {
    pub k: usize,
    pub j1: i64,
    pub j2_abs: i64,
    pub value: T,
}

/// Diagnostics accumulated over one backward-induction sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct PricingDiagnostics {
    /// Smallest branch weight encountered.
    pub min_probability: f64,
    /// Largest branch weight encountered.
    pub max_probability: f64,
    /// Worst per-asset repricing residual |e^{-r dt} E[growth] - 1| over the
    /// sign classes used.
    pub max_martingale_residual: f64,
    /// Arbitrage and construction warnings.
    pub warnings: Vec<String>,
}

/// Origin price plus optional per-node detail and sweep diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct PricingResult {
    price_at_origin: f64,
    node_values: Option<Vec<NodeRecord<f64>>>,
    node_deltas: Option<Vec<NodeRecord<[f64; 3]>>>,
    diagnostics: PricingDiagnostics,
}

impl PricingResult {
    pub fn price_at_origin(&self) -> f64 {
        self.price_at_origin
    }

    /// Per-node option values, populated by the recording entry point.
    pub fn node_values(&self) -> Option<&[NodeRecord<f64>]> {
        self.node_values.as_deref()
    }

    /// Per-node hedging deltas, populated by the recording entry point.
    pub fn node_deltas(&self) -> Option<&[NodeRecord<[f64; 3]>]> {
        self.node_deltas.as_deref()
    }

    pub fn diagnostics(&self) -> &PricingDiagnostics {
        &self.diagnostics
    }
}

/// One maturity-moneyness cell of a price surface.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceCell {
    /// Maturity in steps of one day.
    pub maturity_days: u32,
    /// Strike divided by the payoff-side spot extreme.
    pub moneyness: f64,
    /// Absolute strike.
    pub strike: f64,
    /// Lattice price; NaN when the cell failed, with the reason recorded.
    pub price: f64,
    /// Cell-level warnings (arbitrage flags, failures).
    pub warnings: Vec<String>,
}

/// Maturity-major grid of priced cells.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSurface {
    cells: Vec<SurfaceCell>,
}

impl PriceSurface {
    pub fn new(cells: Vec<SurfaceCell>) -> Self {
        Self { cells }
    }

    pub fn cells(&self) -> &[SurfaceCell] {
        &self.cells
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// Second-driver level shift `|j2 + step| - |j2|` for a level of the given
/// sign. Depends on the level only through its sign; at zero both exits
/// shift by +1, which is where the skew enters the lattice.
fn second_driver_shift(j2_sign: i8, up: bool) -> f64 {
    match (j2_sign, up) {
        (0, _) => 1.0,
        (s, true) if s > 0 => 1.0,
        (s, false) if s > 0 => -1.0,
        (_, true) => -1.0,
        (_, false) => 1.0,
    }
}

fn sign_of(j2: i64) -> i8 {
    j2.signum() as i8
}

/// Per-branch coefficient of `sigma * sqrt(dt)` in the log-price increment:
/// the first-driver move contributes +-sqrt(1 - delta^2), the second-driver
/// move contributes delta times its level shift.
fn branch_exponent_coefficients(j2_sign: i8, delta: f64) -> BranchQuadruple<f64> {
    let sym = (1.0 - delta * delta).sqrt();
    let e_up = second_driver_shift(j2_sign, true);
    let e_dn = second_driver_shift(j2_sign, false);
    BranchQuadruple::new(
        sym + delta * e_up,
        sym + delta * e_dn,
        -sym + delta * e_up,
        -sym + delta * e_dn,
    )
}

fn asset_prices_raw(k: usize, j1: i64, j2_abs: i64, spec: &MarketSpec) -> [f64; 3] {
    let sym = (1.0 - spec.delta * spec.delta).sqrt();
    let sqrt_dt = spec.dt.sqrt();
    let level = sym * j1 as f64 + spec.delta * j2_abs as f64;
    let t = k as f64 * spec.dt;
    let mut out = [0.0; 3];
    for (o, a) in out.iter_mut().zip(&spec.assets) {
        *o = a.s0 * (a.mu * t + a.sigma * sqrt_dt * level).exp();
    }
    out
}

/// Asset prices at a lattice node:
/// `s0 * exp(mu k dt + sigma sqrt(dt) (sqrt(1 - delta^2) j1 + delta |j2|))`.
pub fn node_asset_prices(node: &LatticeNode, spec: &MarketSpec) -> [f64; 3] {
    asset_prices_raw(node.k(), node.j1(), node.j2().abs(), spec)
}

fn growth_factors(j2_sign: i8, spec: &MarketSpec) -> BranchQuadruple<[f64; 3]> {
    let coeff = branch_exponent_coefficients(j2_sign, spec.delta);
    let sqrt_dt = spec.dt.sqrt();
    coeff.map(|a| {
        let mut g = [0.0; 3];
        for (gi, asset) in g.iter_mut().zip(&spec.assets) {
            *gi = (asset.mu * spec.dt + asset.sigma * a * sqrt_dt).exp();
        }
        g
    })
}

/// One-step multiplicative growth factor of each asset on each branch:
/// `exp(mu dt + sigma a sqrt(dt))` with the branch coefficient `a`
/// combining the first-driver sign and the second-driver level shift.
/// Depends on `j2` only through its sign.
pub fn psi_factors(j2: i64, spec: &MarketSpec) -> BranchQuadruple<[f64; 3]> {
    growth_factors(sign_of(j2), spec)
}

/// Branch columns of the replication system with the common drift factor
/// divided out: `exp(sigma a sqrt(dt))` per asset and branch.
fn reduced_columns(j2_sign: i8, spec: &MarketSpec) -> BranchQuadruple<[f64; 3]> {
    let coeff = branch_exponent_coefficients(j2_sign, spec.delta);
    let sqrt_dt = spec.dt.sqrt();
    coeff.map(|a| {
        let mut e = [0.0; 3];
        for (ei, asset) in e.iter_mut().zip(&spec.assets) {
            *ei = (asset.sigma * a * sqrt_dt).exp();
        }
        e
    })
}

/// Per-asset replication targets `exp((r - mu) dt)`.
fn replication_targets(spec: &MarketSpec) -> [f64; 3] {
    let mut c = [0.0; 3];
    for (ci, a) in c.iter_mut().zip(&spec.assets) {
        *ci = ((spec.r - a.mu) * spec.dt).exp();
    }
    c
}

fn row_scale<const N: usize>(rows: &[[f64; N]; N]) -> f64 {
    rows.iter()
        .map(|r| r.iter().fold(0.0f64, |m, v| m.max(v.abs())))
        .product::<f64>()
        .max(f64::MIN_POSITIVE)
}

fn solve_four_branch(spec: &MarketSpec, j2_sign: i8) -> Result<BranchQuadruple<f64>> {
    let e = reduced_columns(j2_sign, spec);
    let c = replication_targets(spec);
    let rows: [[f64; 4]; 4] = [
        [1.0; 4],
        [e.uu[0], e.ud[0], e.du[0], e.dd[0]],
        [e.uu[1], e.ud[1], e.du[1], e.dd[1]],
        [e.uu[2], e.ud[2], e.du[2], e.dd[2]],
    ];
    let det = det4(rows);
    let scale = row_scale(&rows);
    if !(det.abs() > DETERMINANT_RELATIVE_THRESHOLD * scale) {
        return Err(Error::DegenerateMarket {
            message: format!(
                "four-branch replication determinant {det:.3e} below {DETERMINANT_RELATIVE_THRESHOLD:.0e} of row scale {scale:.3e}"
            ),
        });
    }
    let q = solve_small(rows, [1.0, c[0], c[1], c[2]]).ok_or_else(|| Error::DegenerateMarket {
        message: "four-branch replication system is singular".into(),
    })?;
    Ok(BranchQuadruple::from_array(q))
}

/// Weight on the two upward first-driver branches at a zero second-driver
/// level: both second-driver exits raise the level, so only two distinct
/// branch columns remain and the three assets are repriced in least squares.
fn zero_class_up_weight(spec: &MarketSpec) -> Result<f64> {
    let e = reduced_columns(0, spec);
    let c = replication_targets(spec);
    let mut num = 0.0;
    let mut den = 0.0;
    let mut entry_scale = 0.0f64;
    for i in 0..3 {
        let d = e.uu[i] - e.dd[i];
        num += (c[i] - e.dd[i]) * d;
        den += d * d;
        entry_scale = entry_scale.max(e.uu[i].abs()).max(e.dd[i].abs());
    }
    let floor = DETERMINANT_RELATIVE_THRESHOLD * (entry_scale * entry_scale).max(f64::MIN_POSITIVE);
    if !(den > floor) {
        return Err(Error::DegenerateMarket {
            message: format!("two-column replication columns coincide (separation {den:.3e})"),
        });
    }
    Ok(num / den)
}

/// Branch weights for a negative level from the positive-level weights: an
/// up second-driver move from a negative level lands where a down move from
/// the mirrored positive level lands, so the second-driver roles swap
/// within each first-driver pair.
fn mirror_swap(q: BranchQuadruple<f64>) -> BranchQuadruple<f64> {
    BranchQuadruple::new(q.ud, q.uu, q.dd, q.du)
}

/// Risk-neutral branch weights for the sign class of `j2`.
///
/// The weights make the bond and all three discounted assets have
/// one-step expectation equal to their current value; they depend on `j2`
/// only through its sign, so a pricing sweep needs at most three quadruples.
/// Negative levels reuse the positive-level solution with the second-driver
/// branch roles swapped. The zero level is rank-deficient and solved in
/// least squares.
///
/// Errors with [`Error::DegenerateMarket`] when the replication system is
/// too close to singular, including every |delta| at or below
/// [`DELTA_COLLAPSE_THRESHOLD`] (where [`price_european`] switches to the
/// collapsed two-branch solver instead).
pub fn rn_probabilities(j2: i64, spec: &MarketSpec) -> Result<BranchProbabilities> {
    if spec.delta.abs() <= DELTA_COLLAPSE_THRESHOLD {
        return Err(Error::DegenerateMarket {
            message: format!(
                "|delta| = {:e} collapses the four branches to two; the collapsed solver applies",
                spec.delta.abs()
            ),
        });
    }
    match sign_of(j2) {
        0 => {
            let qu = zero_class_up_weight(spec)?;
            let half_up = 0.5 * qu;
            let half_dn = 0.5 * (1.0 - qu);
            Ok(BranchProbabilities::new(
                BranchQuadruple::new(half_up, half_up, half_dn, half_dn),
                0,
                true,
            ))
        }
        s => {
            let plus = solve_four_branch(spec, 1)?;
            let q = if s > 0 { plus } else { mirror_swap(plus) };
            Ok(BranchProbabilities::new(q, s, false))
        }
    }
}

/// Per-asset repricing residuals `|e^{-r dt} E_q[growth] - 1|` for one
/// branch-weight quadruple.
fn class_residuals(q: &BranchQuadruple<f64>, j2_sign: i8, spec: &MarketSpec) -> [f64; 3] {
    let g = growth_factors(j2_sign, spec);
    let disc = (-spec.r * spec.dt).exp();
    let mut out = [0.0; 3];
    for (i, o) in out.iter_mut().enumerate() {
        let e = q.uu * g.uu[i] + q.ud * g.ud[i] + q.du * g.du[i] + q.dd * g.dd[i];
        *o = (disc * e - 1.0).abs();
    }
    out
}

/// Per-sign-class asset repricing residuals of the branch measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MartingaleReport {
    plus: [f64; 3],
    zero: [f64; 3],
    minus: [f64; 3],
}

impl MartingaleReport {
    pub fn plus(&self) -> [f64; 3] {
        self.plus
    }

    pub fn zero(&self) -> [f64; 3] {
        self.zero
    }

    pub fn minus(&self) -> [f64; 3] {
        self.minus
    }

    /// Worst residual over all classes and assets.
    pub fn max(&self) -> f64 {
        self.plus
            .iter()
            .chain(&self.zero)
            .chain(&self.minus)
            .fold(0.0f64, |m, r| m.max(*r))
    }
}

/// Audits the branch measure: for each second-driver sign class and asset,
/// `e^{-r dt}` times the expected growth factor must be 1. The sign classes
/// hold this to solver precision whatever the weights' signs; the zero
/// class reports its least-squares mismatch.
pub fn martingale_residuals(spec: &MarketSpec) -> Result<MartingaleReport> {
    let plus = rn_probabilities(1, spec)?;
    let zero = rn_probabilities(0, spec)?;
    let minus = rn_probabilities(-1, spec)?;
    Ok(MartingaleReport {
        plus: class_residuals(plus.q(), 1, spec),
        zero: class_residuals(zero.q(), 0, spec),
        minus: class_residuals(minus.q(), -1, spec),
    })
}

fn replication_deltas(
    prices: &[f64; 3],
    growth: &BranchQuadruple<[f64; 3]>,
    values: &BranchQuadruple<f64>,
    spec: &MarketSpec,
) -> Result<HedgingDeltas> {
    let mut rows = [[0.0; 3]; 3];
    for (row, g) in rows.iter_mut().zip([growth.uu, growth.ud, growth.du]) {
        for i in 0..3 {
            row[i] = prices[i] * (g[i] - growth.dd[i]);
        }
    }
    let rhs = [
        values.uu - values.dd,
        values.ud - values.dd,
        values.du - values.dd,
    ];
    let det = det3(rows);
    let scale = row_scale(&rows);
    if !(det.abs() > DETERMINANT_RELATIVE_THRESHOLD * scale) {
        return Err(Error::DegenerateMarket {
            message: format!(
                "hedging determinant {det:.3e} below {DETERMINANT_RELATIVE_THRESHOLD:.0e} of row scale {scale:.3e}"
            ),
        });
    }
    let asset = solve_small(rows, rhs).ok_or_else(|| Error::DegenerateMarket {
        message: "hedging system is singular".into(),
    })?;
    let exposure: f64 = (0..3).map(|i| asset[i] * prices[i] * growth.dd[i]).sum();
    let bond = (-spec.r * spec.dt).exp() * (values.dd - exposure);
    Ok(HedgingDeltas { asset, bond })
}

/// Replicating asset positions and bond for one step out of `node`, given
/// the option values on the four successor branches.
///
/// Solves the three equations that equate the replicating portfolio to the
/// option on each branch (differences against the dd branch), then backs
/// the bond out of the dd branch. Errors with [`Error::DegenerateMarket`]
/// when the successor price spreads are too close to collinear; a zero
/// second-driver level always is, because its branch pairs share successor
/// prices.
pub fn hedging_deltas(
    node: &LatticeNode,
    successor_values: &BranchQuadruple<f64>,
    spec: &MarketSpec,
) -> Result<HedgingDeltas> {
    if node.k() >= spec.n_steps {
        return Err(Error::invalid_input(format!(
            "node at step {} has no successors on a {}-step lattice",
            node.k(),
            spec.n_steps
        )));
    }
    let prices = node_asset_prices(node, spec);
    let growth = growth_factors(sign_of(node.j2()), spec);
    replication_deltas(&prices, &growth, successor_values, spec)
}

/// A rainbow option payoff on the extreme of the three terminal prices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RainbowPayoff {
    kind: OptionKind,
    strike: f64,
}

impl RainbowPayoff {
    /// Requires a strictly positive, finite strike.
    pub fn new(kind: OptionKind, strike: f64) -> Result<Self> {
        if !(strike > 0.0 && strike.is_finite()) {
            return Err(Error::invalid_input(format!(
                "strike {strike} must be positive and finite"
            )));
        }
        Ok(Self { kind, strike })
    }

    pub fn kind(&self) -> OptionKind {
        self.kind
    }

    pub fn strike(&self) -> f64 {
        self.strike
    }

    /// Terminal payoff: a put pays against the minimum price, a call
    /// against the maximum.
    pub fn value(&self, s: [f64; 3]) -> f64 {
        match self.kind {
            OptionKind::Put => (self.strike - s[0].min(s[1]).min(s[2])).max(0.0),
            OptionKind::Call => (s[0].max(s[1]).max(s[2]) - self.strike).max(0.0),
        }
    }
}

/// Put on the minimum of the three terminal prices.
pub fn payoff_rainbow_put(strike: f64) -> Result<RainbowPayoff> {
    RainbowPayoff::new(OptionKind::Put, strike)
}

/// Call on the maximum of the three terminal prices.
pub fn payoff_rainbow_call(strike: f64) -> Result<RainbowPayoff> {
    RainbowPayoff::new(OptionKind::Call, strike)
}

/// Count of stored |j2| levels at step `k` (parity-matching values 0..=k).
fn half_levels(k: usize) -> usize {
    k / 2 + 1
}

fn layer_len(k: usize) -> usize {
    (k + 1) * half_levels(k)
}

/// Indices into layer `k + 1`'s |j2| axis for the up and down second-driver
/// moves from level `m` (stored at index `i2`) of layer `k`; at `m = 0`
/// both moves land on level 1.
fn successor_half_indices(k: usize, m: usize, i2: usize) -> (usize, usize) {
    if k % 2 == 0 {
        if m == 0 {
            (0, 0)
        } else {
            (i2, i2 - 1)
        }
    } else {
        (i2 + 1, i2)
    }
}

fn snapshot_layer(k: usize, values: &[f64]) -> Vec<NodeRecord<f64>> {
    let wm = half_levels(k);
    values
        .iter()
        .enumerate()
        .map(|(idx, &value)| NodeRecord {
            k,
            j1: 2 * (idx / wm) as i64 - k as i64,
            j2_abs: ((k % 2) + 2 * (idx % wm)) as i64,
            value,
        })
        .collect()
}

/// Prices a European claim on the three terminal prices by backward
/// induction over the recombining (first-driver level, |second-driver
/// level|) half-lattice.
///
/// Interior values take the discounted branch-weighted combination of the
/// four successor values, in the difference form
/// `f_dd + sum_x q_x (f_x - f_dd)`, which keeps a constant claim exactly
/// constant even when the weights are large. Weights come from
/// [`rn_probabilities`] once per sign class. Markets with |delta| at or
/// below [`DELTA_COLLAPSE_THRESHOLD`] drop the second driver and price on
/// the two-branch lattice instead. Layers update in parallel past
/// [`PARALLEL_LAYER_MIN`] nodes.
///
/// Diagnostics carry the extreme branch weights over the classes used, the
/// worst asset repricing residual, and warnings; weights outside [0, 1]
/// prefix their warning with `arbitrage:`.
pub fn price_european<F>(payoff: F, spec: &MarketSpec) -> Result<PricingResult>
where
    F: Fn([f64; 3]) -> f64 + Sync,
{
    sweep(&payoff, spec, false)
}

/// [`price_european`] plus per-node records: option values at every node
/// (canonical representative `j2 >= 0`) and hedging deltas at nodes with a
/// nonzero second-driver level (the zero level's hedge system is
/// rank-deficient). Records are ordered by step, then first-driver level,
/// then |second-driver level|. The collapsed two-branch solver records
/// values with the smallest parity-valid |j2| and no deltas.
pub fn price_european_full<F>(payoff: F, spec: &MarketSpec) -> Result<PricingResult>
where
    F: Fn([f64; 3]) -> f64 + Sync,
{
    sweep(&payoff, spec, true)
}

fn sweep<F>(payoff: &F, spec: &MarketSpec, record: bool) -> Result<PricingResult>
where
    F: Fn([f64; 3]) -> f64 + Sync,
{
    if spec.delta.abs() <= DELTA_COLLAPSE_THRESHOLD {
        return collapsed_sweep(payoff, spec, record);
    }
    let zero = rn_probabilities(0, spec)?;
    let plus = rn_probabilities(1, spec)?;
    let n = spec.n_steps;
    let disc = (-spec.r * spec.dt).exp();

    let mut warnings = spec.warnings.clone();
    let zero_res = class_residuals(zero.q(), 0, spec);
    let worst_zero = zero_res.iter().fold(0.0f64, |m, r| m.max(*r));
    warnings.push(format!(
        "zero second-driver level reprices assets in least squares (worst residual {worst_zero:.3e})"
    ));
    if !zero.in_unit_interval() {
        warnings.push(arbitrage_warning(&zero));
    }
    let mut min_probability = zero.min();
    let mut max_probability = zero.max();
    let mut max_martingale_residual = worst_zero;
    if n >= 2 {
        let plus_res = class_residuals(plus.q(), 1, spec);
        min_probability = min_probability.min(plus.min());
        max_probability = max_probability.max(plus.max());
        max_martingale_residual =
            plus_res.iter().fold(max_martingale_residual, |m, r| m.max(*r));
        if !plus.in_unit_interval() {
            warnings.push(arbitrage_warning(&plus));
        }
    }

    let terminal = |idx: usize| {
        let wm = half_levels(n);
        let j1 = 2 * (idx / wm) as i64 - n as i64;
        let m = ((n % 2) + 2 * (idx % wm)) as i64;
        payoff(asset_prices_raw(n, j1, m, spec))
    };
    let mut layer: Vec<f64> = if layer_len(n) >= PARALLEL_LAYER_MIN {
        (0..layer_len(n)).into_par_iter().map(terminal).collect()
    } else {
        (0..layer_len(n)).map(terminal).collect()
    };

    let mut layer_values: Vec<Vec<NodeRecord<f64>>> = Vec::new();
    let mut layer_deltas: Vec<Vec<NodeRecord<[f64; 3]>>> = Vec::new();
    if record {
        layer_values.resize_with(n + 1, Vec::new);
        layer_deltas.resize_with(n, Vec::new);
        layer_values[n] = snapshot_layer(n, &layer);
    }
    let growth_plus = growth_factors(1, spec);
    let q_zero = *zero.q();
    let q_plus = *plus.q();

    for k in (0..n).rev() {
        let wm = half_levels(k);
        let wm_next = half_levels(k + 1);
        let prev = &layer;
        let step = |idx: usize| -> f64 {
            let i1 = idx / wm;
            let i2 = idx % wm;
            let m = (k % 2) + 2 * i2;
            let (i2_up, i2_dn) = successor_half_indices(k, m, i2);
            let up = (i1 + 1) * wm_next;
            let dn = i1 * wm_next;
            let f_uu = prev[up + i2_up];
            let f_ud = prev[up + i2_dn];
            let f_du = prev[dn + i2_up];
            let f_dd = prev[dn + i2_dn];
            let q = if m == 0 { &q_zero } else { &q_plus };
            disc * (f_dd + q.uu * (f_uu - f_dd) + q.ud * (f_ud - f_dd) + q.du * (f_du - f_dd))
        };
        let next: Vec<f64> = if layer_len(k) >= PARALLEL_LAYER_MIN {
            (0..layer_len(k)).into_par_iter().map(step).collect()
        } else {
            (0..layer_len(k)).map(step).collect()
        };
        if record {
            let mut deltas = Vec::new();
            for idx in 0..layer_len(k) {
                let i1 = idx / wm;
                let i2 = idx % wm;
                let m = (k % 2) + 2 * i2;
                if m == 0 {
                    continue;
                }
                let j1 = 2 * i1 as i64 - k as i64;
                let (i2_up, i2_dn) = successor_half_indices(k, m, i2);
                let up = (i1 + 1) * wm_next;
                let dn = i1 * wm_next;
                let values = BranchQuadruple::new(
                    prev[up + i2_up],
                    prev[up + i2_dn],
                    prev[dn + i2_up],
                    prev[dn + i2_dn],
                );
                let prices = asset_prices_raw(k, j1, m as i64, spec);
                let d = replication_deltas(&prices, &growth_plus, &values, spec)?;
                deltas.push(NodeRecord {
                    k,
                    j1,
                    j2_abs: m as i64,
                    value: d.asset,
                });
            }
            layer_deltas[k] = deltas;
        }
        layer = next;
        if record {
            layer_values[k] = snapshot_layer(k, &layer);
        }
    }

    Ok(PricingResult {
        price_at_origin: layer[0],
        node_values: record.then(|| layer_values.into_iter().flatten().collect()),
        node_deltas: record.then(|| layer_deltas.into_iter().flatten().collect()),
        diagnostics: PricingDiagnostics {
            min_probability,
            max_probability,
            max_martingale_residual,
            warnings,
        },
    })
}

fn arbitrage_warning(bp: &BranchProbabilities) -> String {
    format!(
        "arbitrage: branch weights for second-driver sign {} leave [0, 1] (min {:.6e}, max {:.6e})",
        bp.zeta_sign(),
        bp.min(),
        bp.max()
    )
}

/// Two-branch fallback for |delta| at or below the collapse threshold: the
/// second-driver channel is dropped, assets move on the first driver alone,
/// and one up-weight reprices the three assets in least squares (with a
/// single asset this reduces to the classical lognormal-tree weight).
fn collapsed_sweep<F>(payoff: &F, spec: &MarketSpec, record: bool) -> Result<PricingResult>
where
    F: Fn([f64; 3]) -> f64 + Sync,
{
    let sym = (1.0 - spec.delta * spec.delta).sqrt();
    let sqrt_dt = spec.dt.sqrt();
    let c = replication_targets(spec);
    let mut e_up = [0.0; 3];
    let mut e_dn = [0.0; 3];
    let mut g_up = [0.0; 3];
    let mut g_dn = [0.0; 3];
    for (i, a) in spec.assets.iter().enumerate() {
        e_up[i] = (a.sigma * sym * sqrt_dt).exp();
        e_dn[i] = (-(a.sigma * sym * sqrt_dt)).exp();
        g_up[i] = (a.mu * spec.dt + a.sigma * sym * sqrt_dt).exp();
        g_dn[i] = (a.mu * spec.dt - a.sigma * sym * sqrt_dt).exp();
    }
    let mut num = 0.0;
    let mut den = 0.0;
    let mut entry_scale = 0.0f64;
    for i in 0..3 {
        let d = e_up[i] - e_dn[i];
        num += (c[i] - e_dn[i]) * d;
        den += d * d;
        entry_scale = entry_scale.max(e_up[i].abs()).max(e_dn[i].abs());
    }
    let floor = DETERMINANT_RELATIVE_THRESHOLD * (entry_scale * entry_scale).max(f64::MIN_POSITIVE);
    if !(den > floor) {
        return Err(Error::DegenerateMarket {
            message: format!("two-branch columns coincide (separation {den:.3e})"),
        });
    }
    let q_up = num / den;
    let disc = (-spec.r * spec.dt).exp();

    let mut worst = 0.0f64;
    for i in 0..3 {
        worst = worst.max((disc * (q_up * g_up[i] + (1.0 - q_up) * g_dn[i]) - 1.0).abs());
    }
    let mut warnings = spec.warnings.clone();
    warnings.push(format!(
        "collapsed to two branches (|delta| <= {DELTA_COLLAPSE_THRESHOLD:e}); assets reprice in least squares (worst residual {worst:.3e})"
    ));
    if !(0.0..=1.0).contains(&q_up) {
        warnings.push(format!(
            "arbitrage: two-branch up-weight {q_up:.6e} leaves [0, 1]"
        ));
    }

    let n = spec.n_steps;
    let mut layer: Vec<f64> = (0..=n)
        .map(|i1| payoff(asset_prices_raw(n, 2 * i1 as i64 - n as i64, 0, spec)))
        .collect();
    let snapshot = |k: usize, values: &[f64]| -> Vec<NodeRecord<f64>> {
        values
            .iter()
            .enumerate()
            .map(|(i1, &value)| NodeRecord {
                k,
                j1: 2 * i1 as i64 - k as i64,
                j2_abs: (k % 2) as i64,
                value,
            })
            .collect()
    };
    let mut layer_values: Vec<Vec<NodeRecord<f64>>> = Vec::new();
    if record {
        layer_values.resize_with(n + 1, Vec::new);
        layer_values[n] = snapshot(n, &layer);
    }
    for k in (0..n).rev() {
        let next: Vec<f64> = (0..=k)
            .map(|i1| {
                let f_dn = layer[i1];
                let f_up = layer[i1 + 1];
                disc * (f_dn + q_up * (f_up - f_dn))
            })
            .collect();
        layer = next;
        if record {
            layer_values[k] = snapshot(k, &layer);
        }
    }

    Ok(PricingResult {
        price_at_origin: layer[0],
        node_values: record.then(|| layer_values.into_iter().flatten().collect()),
        node_deltas: None,
        diagnostics: PricingDiagnostics {
            min_probability: q_up.min(1.0 - q_up),
            max_probability: q_up.max(1.0 - q_up),
            max_martingale_residual: worst,
            warnings,
        },
    })
}

/// Prices a maturity-by-moneyness grid of rainbow options, one lattice step
/// per maturity day.
///
/// Strikes derive from moneyness against the payoff-side spot extreme:
/// `K = M * min(s0)` for puts, `K = M * max(s0)` for calls. Maturities must
/// lie in [1, 100] days and moneyness in [0.5, 1.5]. Cells are independent
/// jobs evaluated in parallel; a failed cell records a NaN price and the
/// failure reason instead of aborting the sweep. Cell warnings keep only
/// arbitrage flags and failures.
pub fn price_surface(
    kind: OptionKind,
    spec: &MarketSpec,
    maturities_days: &[u32],
    moneyness: &[f64],
) -> Result<PriceSurface> {
    if maturities_days.is_empty() || moneyness.is_empty() {
        return Err(Error::invalid_input("surface grid axes must be nonempty"));
    }
    for &d in maturities_days {
        if !(1..=100).contains(&d) {
            return Err(Error::invalid_input(format!(
                "maturity {d} days outside [1, 100]"
            )));
        }
    }
    for &m in moneyness {
        if !(m.is_finite() && (0.5..=1.5).contains(&m)) {
            return Err(Error::invalid_input(format!(
                "moneyness {m} outside [0.5, 1.5]"
            )));
        }
    }
    let spots = spec.assets.map(|a| a.s0);
    let extreme = match kind {
        OptionKind::Put => spots[0].min(spots[1]).min(spots[2]),
        OptionKind::Call => spots[0].max(spots[1]).max(spots[2]),
    };
    let jobs: Vec<(u32, f64)> = maturities_days
        .iter()
        .flat_map(|&t| moneyness.iter().map(move |&m| (t, m)))
        .collect();
    let cells: Vec<SurfaceCell> = jobs
        .into_par_iter()
        .map(|(days, m)| {
            let strike = m * extreme;
            let outcome = RainbowPayoff::new(kind, strike)
                .and_then(|payoff| {
                    let cell_spec = spec.with_n_steps(days as usize)?;
                    price_european(|s| payoff.value(s), &cell_spec)
                })
                .map(|result| {
                    let warnings = result
                        .diagnostics
                        .warnings
                        .iter()
                        .filter(|w| w.starts_with("arbitrage"))
                        .cloned()
                        .collect();
                    (result.price_at_origin, warnings)
                });
            match outcome {
                Ok((price, warnings)) => SurfaceCell {
                    maturity_days: days,
                    moneyness: m,
                    strike,
                    price,
                    warnings,
                },
                Err(e) => SurfaceCell {
                    maturity_days: days,
                    moneyness: m,
                    strike,
                    price: f64::NAN,
                    warnings: vec![format!("pricing failed: {e}")],
                },
            }
        })
        .collect();
    Ok(PriceSurface::new(cells))
}

/// The riskless rate implied by a pair of (drift, scale) asset
/// parameterizations sharing one driver. Diverges as the scales approach
/// each other; [`Error::DegenerateMarket`] is raised below the separation
/// threshold.
pub fn fb_rate(asset1: (f64, f64), asset2: (f64, f64)) -> Result<f64> {
    let (mu1, sigma1) = asset1;
    let (mu2, sigma2) = asset2;
    for v in [mu1, sigma1, mu2, sigma2] {
        if !v.is_finite() {
            return Err(Error::invalid_input("drift and scale must be finite"));
        }
    }
    let scale = 1.0f64.max(sigma1.abs()).max(sigma2.abs());
    if (sigma1 - sigma2).abs() <= SIGMA_SEPARATION_MIN * scale {
        return Err(Error::DegenerateMarket {
            message: format!("scales {sigma1} and {sigma2} are too close to imply a rate"),
        });
    }
    Ok((mu2 * sigma1 - mu1 * sigma2 + 0.5 * (sigma2 * sigma2 - sigma1 * sigma1))
        / (sigma1 - sigma2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_assets() -> [AssetSpec; 3] {
        [
            AssetSpec { mu: 0.32, sigma: -0.090, s0: 432.51 },
            AssetSpec { mu: 0.31, sigma: -0.23, s0: 52.25 },
            AssetSpec { mu: -0.069, sigma: 2.8, s0: 76.09 },
        ]
    }

    #[test]
    fn market_spec_accepts_reference_market() {
        let spec = MarketSpec::new(reference_assets(), 0.102, 0.0, 1.0 / 252.0, 60).unwrap();
        assert_eq!(spec.n_steps(), 60);
        assert!(spec.warnings().is_empty());
        assert!((spec.maturity() - 60.0 / 252.0).abs() < 1e-15);
    }

    #[test]
    fn market_spec_rejects_bad_parameters() {
        let assets = reference_assets();
        assert!(MarketSpec::new(assets, 1.0, 0.0, 0.5, 1).is_err());
        assert!(MarketSpec::new(assets, -1.2, 0.0, 0.5, 1).is_err());
        assert!(MarketSpec::new(assets, 0.1, 0.0, 0.0, 1).is_err());
        assert!(MarketSpec::new(assets, 0.1, 0.0, -0.5, 1).is_err());
        assert!(MarketSpec::new(assets, 0.1, 0.0, 0.5, 0).is_err());
        assert!(MarketSpec::new(assets, 0.1, f64::NAN, 0.5, 1).is_err());

        let mut bad_spot = assets;
        bad_spot[2].s0 = 0.0;
        assert!(MarketSpec::new(bad_spot, 0.1, 0.0, 0.5, 1).is_err());
    }

    #[test]
    fn market_spec_rejects_tied_scales() {
        let mut assets = reference_assets();
        assets[1].sigma = assets[0].sigma;
        let err = MarketSpec::new(assets, 0.102, 0.0, 1.0 / 252.0, 60).unwrap_err();
        assert!(matches!(err, Error::DegenerateMarket { .. }));

        let mut near = reference_assets();
        near[1].sigma = near[0].sigma + 1e-12;
        assert!(MarketSpec::new(near, 0.102, 0.0, 1.0 / 252.0, 60).is_err());
    }

    #[test]
    fn market_spec_warns_on_negative_rate() {
        let spec = MarketSpec::new(reference_assets(), 0.102, -0.01, 1.0 / 252.0, 60).unwrap();
        assert_eq!(spec.warnings().len(), 1);
        assert!(spec.warnings()[0].contains("negative riskless rate"));
    }

    #[test]
    fn lattice_node_validates_range_and_parity() {
        assert!(LatticeNode::new(3, 1, -3).is_ok());
        assert!(LatticeNode::new(3, 4, 1).is_err());
        assert!(LatticeNode::new(3, 2, 1).is_err());
        assert!(LatticeNode::new(3, 1, 0).is_err());
        assert_eq!(LatticeNode::origin(), LatticeNode::new(0, 0, 0).unwrap());
    }

    #[test]
    fn branch_quadruple_helpers() {
        let q = BranchQuadruple::new(0.1, 0.2, 0.3, 0.4);
        assert_eq!(q.to_array(), [0.1, 0.2, 0.3, 0.4]);
        assert_eq!(BranchQuadruple::from_array(q.to_array()), q);
        assert!((q.sum() - 1.0).abs() < 1e-15);
        assert_eq!(q.min(), 0.1);
        assert_eq!(q.max(), 0.4);
        let doubled = q.map(|v| 2.0 * v);
        assert_eq!(doubled.to_array(), [0.2, 0.4, 0.6, 0.8]);
    }

    #[test]
    fn branch_probabilities_flags() {
        let inside = BranchProbabilities::new(
            BranchQuadruple::new(0.25, 0.25, 0.25, 0.25),
            1,
            false,
        );
        assert!(inside.in_unit_interval());
        assert_eq!(inside.normalization(), 1.0);
        assert!(!inside.is_least_squares());

        let outside = BranchProbabilities::new(
            BranchQuadruple::new(1.2, -0.1, -0.05, -0.05),
            -1,
            false,
        );
        assert!(!outside.in_unit_interval());
        assert!((outside.normalization() - 1.0).abs() < 1e-15);
    }

    fn reference_spec(n_steps: usize) -> MarketSpec {
        MarketSpec::new(reference_assets(), 0.102, 0.0, 1.0 / 252.0, n_steps).unwrap()
    }

    // Drifts satisfy mu = r + 0.3 * sigma - sigma^2 / 2, which keeps every
    // branch weight inside (0, 1) at this delta and step size.
    fn balanced_assets() -> [AssetSpec; 3] {
        [
            AssetSpec { mu: -0.06, sigma: 0.8, s0: 100.0 },
            AssetSpec { mu: -0.255, sigma: -0.5, s0: 80.0 },
            AssetSpec { mu: -0.435, sigma: 1.3, s0: 120.0 },
        ]
    }

    fn balanced_spec(n_steps: usize) -> MarketSpec {
        MarketSpec::new(balanced_assets(), 0.3, 0.02, 0.25, n_steps).unwrap()
    }

    fn near_collapse_spec(n_steps: usize) -> MarketSpec {
        MarketSpec::new(
            [
                AssetSpec { mu: 0.01, sigma: 0.3, s0: 100.0 },
                AssetSpec { mu: 0.02, sigma: -0.25, s0: 90.0 },
                AssetSpec { mu: 0.03, sigma: 0.5, s0: 110.0 },
            ],
            2e-6,
            0.01,
            0.01,
            n_steps,
        )
        .unwrap()
    }

    fn assert_rel(actual: f64, expected: f64, tol: f64) {
        let err = (actual - expected).abs() / expected.abs().max(1.0);
        assert!(
            err <= tol,
            "actual {actual:.17e} vs expected {expected:.17e} (rel err {err:.3e} > {tol:.1e})"
        );
    }

    fn brute_force_price<F: Fn([f64; 3]) -> f64>(payoff: &F, spec: &MarketSpec) -> f64 {
        let n = spec.n_steps();
        let classes = [
            rn_probabilities(-1, spec).unwrap(),
            rn_probabilities(0, spec).unwrap(),
            rn_probabilities(1, spec).unwrap(),
        ];
        let mut acc = 0.0;
        for path in 0..4usize.pow(n as u32) {
            let mut j1 = 0i64;
            let mut j2 = 0i64;
            let mut weight = 1.0;
            let mut code = path;
            for _ in 0..n {
                let digit = code & 3;
                code >>= 2;
                let q = classes[(j2.signum() + 1) as usize].q().to_array();
                weight *= q[digit];
                let (d1, d2) = match digit {
                    0 => (1, 1),
                    1 => (1, -1),
                    2 => (-1, 1),
                    _ => (-1, -1),
                };
                j1 += d1;
                j2 += d2;
            }
            let node = LatticeNode::new(n, j1, j2).unwrap();
            acc += weight * payoff(node_asset_prices(&node, spec));
        }
        acc * (-spec.r() * spec.maturity()).exp()
    }

    #[test]
    fn node_prices_at_origin_are_spots() {
        for spec in [reference_spec(3), balanced_spec(3)] {
            let prices = node_asset_prices(&LatticeNode::origin(), &spec);
            for (p, a) in prices.iter().zip(spec.assets()) {
                assert_eq!(*p, a.s0);
            }
        }
    }

    #[test]
    fn node_prices_match_reference_value() {
        let spec = reference_spec(60);
        let prices = node_asset_prices(&LatticeNode::new(1, 1, 1).unwrap(), &spec);
        assert_rel(prices[0], 430.37507920789687, 1e-12);
    }

    #[test]
    fn node_prices_ignore_second_driver_without_skew() {
        let spec = MarketSpec::new(balanced_assets(), 0.0, 0.02, 0.25, 4).unwrap();
        let a = node_asset_prices(&LatticeNode::new(2, 0, 2).unwrap(), &spec);
        let b = node_asset_prices(&LatticeNode::new(2, 0, 0).unwrap(), &spec);
        let c = node_asset_prices(&LatticeNode::new(2, 0, -2).unwrap(), &spec);
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn growth_factor_geometry() {
        let spec = balanced_spec(4);
        let at_zero = psi_factors(0, &spec);
        assert_eq!(at_zero.uu, at_zero.ud);
        assert_eq!(at_zero.du, at_zero.dd);

        let plus = psi_factors(3, &spec);
        let minus = psi_factors(-3, &spec);
        assert_eq!(minus.uu, plus.ud);
        assert_eq!(minus.ud, plus.uu);
        assert_eq!(minus.du, plus.dd);
        assert_eq!(minus.dd, plus.du);

        let flat = MarketSpec::new(balanced_assets(), 0.0, 0.02, 0.25, 4).unwrap();
        let g = psi_factors(1, &flat);
        assert_eq!(g.uu, g.ud);
        assert_eq!(g.du, g.dd);
    }

    #[test]
    fn growth_factors_chain_node_prices() {
        let spec = balanced_spec(6);
        let node = LatticeNode::new(2, 0, 2).unwrap();
        let here = node_asset_prices(&node, &spec);
        let g = psi_factors(node.j2(), &spec);
        let succ = node_asset_prices(&LatticeNode::new(3, 1, 3).unwrap(), &spec);
        for i in 0..3 {
            assert_rel(here[i] * g.uu[i], succ[i], 1e-12);
        }
        let succ_dd = node_asset_prices(&LatticeNode::new(3, -1, 1).unwrap(), &spec);
        for i in 0..3 {
            assert_rel(here[i] * g.dd[i], succ_dd[i], 1e-12);
        }
    }

    #[test]
    fn plus_class_weights_match_reference() {
        let spec = reference_spec(60);
        let bp = rn_probabilities(1, &spec).unwrap();
        let expected = [
            -567.12276497103198,
            705.01738716327861,
            -770.85855953476665,
            633.96393734252001,
        ];
        let q = bp.q().to_array();
        for (actual, want) in q.iter().zip(expected) {
            assert_rel(*actual, want, 1e-8);
        }
        let l1: f64 = q.iter().map(|v| v.abs()).sum();
        assert_rel(l1, 2676.9626490115972, 1e-8);
        assert!((bp.normalization() - 1.0).abs() <= 1e-10);
        assert!(!bp.in_unit_interval());
        assert!(!bp.is_least_squares());
        assert_eq!(bp.zeta_sign(), 1);
    }

    #[test]
    fn minus_class_swaps_plus_class() {
        let spec = reference_spec(60);
        let plus = rn_probabilities(1, &spec).unwrap();
        let minus = rn_probabilities(-1, &spec).unwrap();
        assert_eq!(minus.q().uu, plus.q().ud);
        assert_eq!(minus.q().ud, plus.q().uu);
        assert_eq!(minus.q().du, plus.q().dd);
        assert_eq!(minus.q().dd, plus.q().du);
        assert_eq!(minus.zeta_sign(), -1);
    }

    #[test]
    fn zero_class_least_squares_weight_matches_reference() {
        let spec = reference_spec(60);
        let bp = rn_probabilities(0, &spec).unwrap();
        assert!(bp.is_least_squares());
        assert_eq!(bp.zeta_sign(), 0);
        assert_eq!(bp.q().uu, bp.q().ud);
        assert_eq!(bp.q().du, bp.q().dd);
        let qu = bp.q().uu + bp.q().ud;
        assert_rel(qu, 0.40717714776485264, 1e-12);
        assert!((bp.normalization() - 1.0).abs() <= 1e-14);
    }

    #[test]
    fn sign_class_weights_reprice_assets() {
        let spec = balanced_spec(4);
        let report = martingale_residuals(&spec).unwrap();
        for r in report.plus().iter().chain(&report.minus()) {
            assert!(*r <= 1e-12, "sign-class residual {r:.3e}");
        }
        assert!(report.max() >= report.zero()[0]);
    }

    #[test]
    fn martingale_report_matches_reference() {
        let spec = reference_spec(60);
        let report = martingale_residuals(&spec).unwrap();
        let expected_zero = [0.00175546, 0.00253135, 0.000257602];
        for (actual, want) in report.zero().iter().zip(expected_zero) {
            assert!(
                (actual - want).abs() <= 1e-8,
                "zero-class residual {actual:.9e} vs {want:.9e}"
            );
        }
        for r in report.plus().iter().chain(&report.minus()) {
            assert!(*r <= 1e-9, "sign-class residual {r:.3e}");
        }
        assert_rel(report.max(), 0.00253135, 1e-5);
    }

    #[test]
    fn extreme_rate_breaks_positivity_not_repricing() {
        let spec = MarketSpec::new(balanced_assets(), 0.35, 10.0, 0.25, 2).unwrap();
        let bp = rn_probabilities(1, &spec).unwrap();
        assert!(!bp.in_unit_interval());
        assert!((bp.normalization() - 1.0).abs() <= 1e-10);
        let report = martingale_residuals(&spec).unwrap();
        for r in report.plus().iter().chain(&report.minus()) {
            assert!(*r <= 1e-9);
        }
        let result = price_european(|s| (120.0 - s[0]).max(0.0), &spec).unwrap();
        assert!(result
            .diagnostics()
            .warnings
            .iter()
            .any(|w| w.starts_with("arbitrage")));
    }

    #[test]
    fn rn_probabilities_rejects_collapsed_delta() {
        for delta in [0.0, 1e-8, 1e-6] {
            let spec = MarketSpec::new(balanced_assets(), delta, 0.02, 0.25, 2).unwrap();
            let err = rn_probabilities(1, &spec).unwrap_err();
            assert!(matches!(err, Error::DegenerateMarket { .. }));
        }
    }

    #[test]
    fn rn_probabilities_degenerate_when_columns_collide() {
        let spec = near_collapse_spec(3);
        let err = rn_probabilities(1, &spec).unwrap_err();
        assert!(matches!(err, Error::DegenerateMarket { .. }));
        let err = price_european(|s| s[0], &spec).unwrap_err();
        assert!(matches!(err, Error::DegenerateMarket { .. }));
    }

    #[test]
    fn martingale_residuals_reject_collapsed_delta() {
        let spec = MarketSpec::new(balanced_assets(), 1e-7, 0.02, 0.25, 2).unwrap();
        assert!(matches!(
            martingale_residuals(&spec).unwrap_err(),
            Error::DegenerateMarket { .. }
        ));
    }

    #[test]
    fn hedging_deltas_replicate_an_asset() {
        let spec = balanced_spec(4);
        let node = LatticeNode::new(1, 1, 1).unwrap();
        let prices = node_asset_prices(&node, &spec);
        let g = psi_factors(node.j2(), &spec);
        let successors = BranchQuadruple::new(
            prices[0] * g.uu[0],
            prices[0] * g.ud[0],
            prices[0] * g.du[0],
            prices[0] * g.dd[0],
        );
        let h = hedging_deltas(&node, &successors, &spec).unwrap();
        assert!((h.asset[0] - 1.0).abs() <= 1e-9);
        assert!(h.asset[1].abs() <= 1e-9);
        assert!(h.asset[2].abs() <= 1e-9);
        assert!(h.bond.abs() <= 1e-9 * prices[0]);
    }

    #[test]
    fn hedging_deltas_zero_out_constant_claim() {
        let spec = balanced_spec(4);
        let node = LatticeNode::new(1, -1, 1).unwrap();
        let c = 17.25;
        let h = hedging_deltas(&node, &BranchQuadruple::new(c, c, c, c), &spec).unwrap();
        for d in h.asset {
            assert!(d.abs() <= 1e-10);
        }
        assert_rel(h.bond, (-spec.r() * spec.dt()).exp() * c, 1e-12);
    }

    #[test]
    fn hedging_deltas_equalize_branch_portfolios() {
        let spec = balanced_spec(6);
        let claims = BranchQuadruple::new(12.5, 3.75, 9.25, 1.5);
        for (k, j1, j2) in [(1, 1, 1), (2, 0, 2), (3, -1, -3), (4, 2, -2)] {
            let node = LatticeNode::new(k, j1, j2).unwrap();
            let h = hedging_deltas(&node, &claims, &spec).unwrap();
            let prices = node_asset_prices(&node, &spec);
            let g = psi_factors(node.j2(), &spec);
            let portfolio = |growth: [f64; 3], f: f64| -> f64 {
                (0..3).map(|i| h.asset[i] * prices[i] * growth[i]).sum::<f64>() - f
            };
            let p = [
                portfolio(g.uu, claims.uu),
                portfolio(g.ud, claims.ud),
                portfolio(g.du, claims.du),
                portfolio(g.dd, claims.dd),
            ];
            let spread = p.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v))
                - p.iter().fold(f64::INFINITY, |m, v| m.min(*v));
            assert!(
                spread <= 1e-10 * p[0].abs().max(1.0),
                "portfolio spread {spread:.3e} at ({k}, {j1}, {j2})"
            );
        }
    }

    #[test]
    fn hedging_deltas_degenerate_at_zero_level() {
        let spec = balanced_spec(4);
        let node = LatticeNode::new(2, 0, 0).unwrap();
        let values = BranchQuadruple::new(4.0, 3.0, 2.0, 1.0);
        assert!(matches!(
            hedging_deltas(&node, &values, &spec).unwrap_err(),
            Error::DegenerateMarket { .. }
        ));
        let beyond = LatticeNode::new(4, 0, 0).unwrap();
        assert!(matches!(
            hedging_deltas(&beyond, &values, &spec).unwrap_err(),
            Error::InvalidInput { .. }
        ));
    }

    #[test]
    fn rainbow_payoff_values() {
        let put = payoff_rainbow_put(100.0).unwrap();
        assert_eq!(put.value([120.0, 110.0, 105.0]), 0.0);
        assert_eq!(put.value([120.0, 90.0, 105.0]), 10.0);
        let call = payoff_rainbow_call(100.0).unwrap();
        assert_eq!(call.value([120.0, 90.0, 105.0]), 20.0);
        assert_eq!(call.value([80.0, 90.0, 95.0]), 0.0);
        assert!(payoff_rainbow_put(0.0).is_err());
        assert!(payoff_rainbow_call(-5.0).is_err());
        assert!(payoff_rainbow_put(f64::NAN).is_err());
    }

    #[test]
    fn constant_payoff_discounts_exactly() {
        let c = 7.25;
        let zero_rate = price_european(|_| c, &reference_spec(60)).unwrap();
        assert_eq!(zero_rate.price_at_origin(), c);

        let spec = balanced_spec(7);
        let priced = price_european(|_| c, &spec).unwrap();
        assert_rel(
            priced.price_at_origin(),
            c * (-spec.r() * spec.maturity()).exp(),
            1e-12,
        );
    }

    #[test]
    fn lattice_price_matches_path_enumeration() {
        let put = payoff_rainbow_put(85.0).unwrap();
        let call = payoff_rainbow_call(115.0).unwrap();
        for n in [1, 2, 3, 5] {
            let spec = balanced_spec(n);
            let payoffs: [&(dyn Fn([f64; 3]) -> f64 + Sync); 3] =
                [&|s| put.value(s), &|s| call.value(s), &|s| s[1]];
            for payoff in payoffs {
                let lattice = price_european(|s| payoff(s), &spec).unwrap();
                let brute = brute_force_price(&payoff, &spec);
                assert!(
                    (lattice.price_at_origin() - brute).abs() <= 1e-10 * brute.abs().max(1.0),
                    "n = {n}: lattice {:.17e} vs brute {brute:.17e}",
                    lattice.price_at_origin()
                );
            }
        }
    }

    #[test]
    fn collapsed_dispatch_matches_two_state_induction() {
        let spec = MarketSpec::new(balanced_assets(), 0.0, 0.02, 0.25, 6).unwrap();
        let put = payoff_rainbow_put(85.0).unwrap();
        let result = price_european(|s| put.value(s), &spec).unwrap();
        assert!(result
            .diagnostics()
            .warnings
            .iter()
            .any(|w| w.contains("collapsed")));

        let sqrt_dt = spec.dt().sqrt();
        let sym = (1.0 - spec.delta() * spec.delta()).sqrt();
        let mut num = 0.0;
        let mut den = 0.0;
        for a in spec.assets() {
            let e_up = (a.sigma * sym * sqrt_dt).exp();
            let e_dn = (-(a.sigma * sym * sqrt_dt)).exp();
            let c = ((spec.r() - a.mu) * spec.dt()).exp();
            let d = e_up - e_dn;
            num += (c - e_dn) * d;
            den += d * d;
        }
        let q_up = num / den;
        let disc = (-spec.r() * spec.dt()).exp();
        let n = spec.n_steps();
        let mut layer: Vec<f64> = (0..=n)
            .map(|i1| {
                let j1 = 2 * i1 as i64 - n as i64;
                let t = n as f64 * spec.dt();
                let mut s = [0.0; 3];
                for (si, a) in s.iter_mut().zip(spec.assets()) {
                    *si = a.s0 * (a.mu * t + a.sigma * sqrt_dt * (sym * j1 as f64)).exp();
                }
                put.value(s)
            })
            .collect();
        for k in (0..n).rev() {
            layer = (0..=k)
                .map(|i1| disc * (layer[i1] + q_up * (layer[i1 + 1] - layer[i1])))
                .collect();
        }
        assert_eq!(result.price_at_origin(), layer[0]);

        let full = price_european_full(|s| put.value(s), &spec).unwrap();
        assert!(full.node_deltas().is_none());
        let records = full.node_values().unwrap();
        assert_eq!(records.len(), (n + 1) * (n + 2) / 2);

        let tiny = MarketSpec::new(balanced_assets(), 1e-7, 0.02, 0.25, 6).unwrap();
        let tiny_result = price_european(|s| put.value(s), &tiny).unwrap();
        assert!(tiny_result
            .diagnostics()
            .warnings
            .iter()
            .any(|w| w.contains("collapsed")));
    }

    #[test]
    fn put_price_monotone_in_strike_with_bounds() {
        for n in [2, 5, 9] {
            let spec = balanced_spec(n);
            let cap = (-spec.r() * spec.maturity()).exp();
            let mut previous = -1.0;
            for i in 0..21 {
                let strike = 40.0 + 4.0 * i as f64;
                let put = payoff_rainbow_put(strike).unwrap();
                let price = price_european(|s| put.value(s), &spec)
                    .unwrap()
                    .price_at_origin();
                assert!(price >= 0.0);
                assert!(price <= strike * cap + 1e-9);
                assert!(
                    price >= previous - 1e-9,
                    "put price fell from {previous:.12e} to {price:.12e} at strike {strike}"
                );
                previous = price;
            }
        }
    }

    #[test]
    fn call_price_monotone_in_strike() {
        for n in [2, 5, 9] {
            let spec = balanced_spec(n);
            let mut previous = f64::INFINITY;
            for i in 0..21 {
                let strike = 60.0 + 6.0 * i as f64;
                let call = payoff_rainbow_call(strike).unwrap();
                let price = price_european(|s| call.value(s), &spec)
                    .unwrap()
                    .price_at_origin();
                assert!(price >= 0.0);
                assert!(
                    price <= previous + 1e-9,
                    "call price rose from {previous:.12e} to {price:.12e} at strike {strike}"
                );
                previous = price;
            }
        }
    }

    #[test]
    fn pricing_is_deterministic_across_runs() {
        let spec = balanced_spec(92);
        let put = payoff_rainbow_put(85.0).unwrap();
        let a = price_european(|s| put.value(s), &spec).unwrap();
        let b = price_european(|s| put.value(s), &spec).unwrap();
        assert_eq!(a.price_at_origin(), b.price_at_origin());
        assert!(a.price_at_origin().is_finite());
    }

    #[test]
    fn full_sweep_records_expected_nodes() {
        let spec = balanced_spec(4);
        let put = payoff_rainbow_put(85.0).unwrap();
        let plain = price_european(|s| put.value(s), &spec).unwrap();
        let full = price_european_full(|s| put.value(s), &spec).unwrap();
        assert_eq!(full.price_at_origin(), plain.price_at_origin());

        let values = full.node_values().unwrap();
        assert_eq!(values.len(), 1 + 2 + 6 + 8 + 15);
        assert_eq!(values[0].k, 0);
        assert_eq!(values[0].j1, 0);
        assert_eq!(values[0].j2_abs, 0);
        assert_eq!(values[0].value, full.price_at_origin());
        for pair in values.windows(2) {
            let key = |r: &NodeRecord<f64>| (r.k, r.j1, r.j2_abs);
            assert!(key(&pair[0]) < key(&pair[1]));
        }

        let deltas = full.node_deltas().unwrap();
        assert_eq!(deltas.len(), 2 + 3 + 8);
        for d in deltas {
            assert!(d.j2_abs >= 1);
            assert!(d.k >= 1 && d.k < 4);
        }
    }

    #[test]
    fn price_surface_grid_shape_and_monotonicity() {
        let spec = balanced_spec(1);
        let days = [2u32, 5, 8];
        let moneyness = [0.5, 1.0, 1.5];

        let puts = price_surface(OptionKind::Put, &spec, &days, &moneyness).unwrap();
        assert_eq!(puts.cells().len(), 9);
        for (i, cell) in puts.cells().iter().enumerate() {
            assert_eq!(cell.maturity_days, days[i / 3]);
            assert_eq!(cell.moneyness, moneyness[i % 3]);
            assert_rel(cell.strike, cell.moneyness * 80.0, 1e-15);
            assert!(cell.price.is_finite() && cell.price >= 0.0);
            assert!(cell.warnings.is_empty(), "warnings: {:?}", cell.warnings);
        }
        for row in puts.cells().chunks(3) {
            assert!(row[0].price <= row[1].price + 1e-9);
            assert!(row[1].price <= row[2].price + 1e-9);
        }

        let calls = price_surface(OptionKind::Call, &spec, &days, &moneyness).unwrap();
        for (i, cell) in calls.cells().iter().enumerate() {
            assert_rel(cell.strike, moneyness[i % 3] * 120.0, 1e-15);
            assert!(cell.price.is_finite() && cell.price >= 0.0);
        }
        for row in calls.cells().chunks(3) {
            assert!(row[0].price >= row[1].price - 1e-9);
            assert!(row[1].price >= row[2].price - 1e-9);
        }
    }

    #[test]
    fn price_surface_records_failed_cells() {
        let spec = near_collapse_spec(1);
        let surface = price_surface(OptionKind::Put, &spec, &[2, 3], &[1.0]).unwrap();
        assert_eq!(surface.cells().len(), 2);
        for cell in surface.cells() {
            assert!(cell.price.is_nan());
            assert!(cell.warnings.iter().any(|w| w.contains("failed")));
        }
    }

    #[test]
    fn price_surface_validates_grid() {
        let spec = balanced_spec(1);
        assert!(price_surface(OptionKind::Put, &spec, &[], &[1.0]).is_err());
        assert!(price_surface(OptionKind::Put, &spec, &[5], &[]).is_err());
        assert!(price_surface(OptionKind::Put, &spec, &[0], &[1.0]).is_err());
        assert!(price_surface(OptionKind::Put, &spec, &[101], &[1.0]).is_err());
        assert!(price_surface(OptionKind::Put, &spec, &[5], &[0.4]).is_err());
        assert!(price_surface(OptionKind::Put, &spec, &[5], &[1.6]).is_err());
    }

    #[test]
    fn fb_rate_matches_reference_values() {
        assert_rel(fb_rate((0.05, 0.2), (0.08, 0.35)).unwrap(), -0.265, 1e-12);
        assert_rel(fb_rate((0.12, 0.5), (-0.03, 0.1)).unwrap(), -0.3675, 1e-12);
        assert_rel(fb_rate((0.0, -0.2), (0.1, 0.3)).unwrap(), -0.01, 1e-12);
    }

    #[test]
    fn fb_rate_is_argument_order_invariant() {
        for (a, b) in [
            ((0.05, 0.2), (0.08, 0.35)),
            ((-0.12, 0.5), (0.03, -0.1)),
            ((0.31, -0.23), (0.32, -0.09)),
        ] {
            assert_eq!(fb_rate(a, b).unwrap(), fb_rate(b, a).unwrap());
        }
    }

    #[test]
    fn fb_rate_half_square_drift_identity() {
        for (s1, s2) in [(0.2, 0.35), (-0.3, 0.5), (0.7, -0.1)] {
            let r = fb_rate((0.5 * s1 * s1, s1), (0.5 * s2 * s2, s2)).unwrap();
            let expected = -0.5 * (s1 * s2 + s1 + s2);
            assert!((r - expected).abs() <= 1e-12);
        }
    }

    #[test]
    fn fb_rate_rejects_close_scales() {
        assert!(matches!(
            fb_rate((0.1, 0.3), (0.2, 0.3)).unwrap_err(),
            Error::DegenerateMarket { .. }
        ));
        assert!(matches!(
            fb_rate((0.1, 0.3), (0.2, 0.3 + 1e-12)).unwrap_err(),
            Error::DegenerateMarket { .. }
        ));
        assert!(fb_rate((0.1, f64::NAN), (0.2, 0.3)).is_err());
    }
}
