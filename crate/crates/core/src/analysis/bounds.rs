//! Per-policy delay expressions at fixed routing distance, and the
//! black-or-white composite bound on regular trees.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::report::{ResultRow, ValueKind};
use super::urp_delay;
use crate::catalog::{tppc_cut_index, Catalog, CutRounding};
use crate::error::{Error, Result};
use crate::placement::lbnd_delay_given_distance;
use crate::scalar::{kahan_sum, KahanSum, Real};
use crate::topology::{regular_tree_node_count, Topology, TopologyKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum BoundPolicy {
    Urp,
    Ppp,
    Tpp,
    TppC,
    Lbnd,
}

impl BoundPolicy {
    pub const ALL: [BoundPolicy; 5] = [
        BoundPolicy::Urp,
        BoundPolicy::Ppp,
        BoundPolicy::Tpp,
        BoundPolicy::TppC,
        BoundPolicy::Lbnd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoundPolicy::Urp => "URP",
            BoundPolicy::Ppp => "PPP",
            BoundPolicy::Tpp => "TPP",
            BoundPolicy::TppC => "TPPC",
            BoundPolicy::Lbnd => "LBND",
        }
    }

    /// What the evaluated number means for the policy's true delay.
    pub fn value_kind(self) -> ValueKind {
        match self {
            BoundPolicy::Urp => ValueKind::Exact,
            BoundPolicy::Lbnd => ValueKind::LowerBound,
            _ => ValueKind::UpperBound,
        }
    }
}

impl fmt::Display for BoundPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "").as_str() {
            "URP" => Ok(BoundPolicy::Urp),
            "PPP" => Ok(BoundPolicy::Ppp),
            "TPP" => Ok(BoundPolicy::Tpp),
            "TPPC" => Ok(BoundPolicy::TppC),
            "LBND" => Ok(BoundPolicy::Lbnd),
            _ => Err(Error::invalid(format!("unknown policy {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaRegime {
    Gt2,
    Eq2,
    Between1And2,
    Eq1,
    Lt1,
}

impl AlphaRegime {
    /// Regime of `alpha`; values within `1e-9` of 1 or 2 count as equal.
    pub fn of(alpha: f64) -> Self {
        const TOL: f64 = 1e-9;
        if (alpha - 2.0).abs() <= TOL {
            AlphaRegime::Eq2
        } else if (alpha - 1.0).abs() <= TOL {
            AlphaRegime::Eq1
        } else if alpha > 2.0 {
            AlphaRegime::Gt2
        } else if alpha > 1.0 {
            AlphaRegime::Between1And2
        } else {
            AlphaRegime::Lt1
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AlphaRegime::Gt2 => "gt2",
            AlphaRegime::Eq2 => "eq2",
            AlphaRegime::Between1And2 => "between1and2",
            AlphaRegime::Eq1 => "eq1",
            AlphaRegime::Lt1 => "lt1",
        }
    }
}

/// Order of growth of the delay for a policy and popularity regime.
/// `tppc_truncated` selects the TPP-C column with `s * d_bar < |C|`.
fn order_expr(policy: BoundPolicy, regime: AlphaRegime, tppc_truncated: bool) -> &'static str {
    use AlphaRegime::*;
    use BoundPolicy::*;
    match (policy, regime) {
        (Urp, _) => "Theta(min[d, |C|/s])",
        (Ppp, Gt2 | Between1And2) => "O(min[(ds)^(1/alpha)/s, |C|/s])",
        (Ppp, Eq2) => "O(min[sqrt(d/s), |C|/s])",
        (Ppp, Eq1 | Lt1) => "Theta(min[d, |C|/s])",
        (Lbnd, Gt2) => "Theta(1)",
        (Lbnd, Eq2) => "Theta(log(min[sd, |C|])/s)",
        (Lbnd, Between1And2) => "Theta(min[sd, |C|]^(2-alpha)/s)",
        (Lbnd, Eq1) => "Theta(min[d, |C|/(s log|C|)])",
        (Lbnd, Lt1) => "Theta(min[d, |C|/s])",
        (TppC, Gt2) if tppc_truncated => "O(d/(s dbar)^(alpha-1))",
        (TppC, Eq2) if tppc_truncated => "O(max[log^2(dbar), d/dbar]/s)",
        (TppC, Between1And2) if tppc_truncated => "O((s dbar)^(1-alpha) max[dbar, d])",
        (TppC, Eq1) if tppc_truncated => "O(max[dbar/log|C|, d])",
        (TppC, Lt1) if tppc_truncated => "O(max[dbar (s dbar/|C|)^(1-alpha), d])",
        (Tpp | TppC, Gt2) => "Theta(1)",
        (Tpp | TppC, Eq2) => "O(min[d, log^2|C|/s, log|C| log(sd)/s])",
        (Tpp | TppC, Between1And2) => {
            "O(min[d, |C|^(2-alpha)/s, |C|^((2-alpha)(alpha-1)/alpha) d^(2/alpha-1)/s^(2-2/alpha)])"
        }
        (Tpp | TppC, Eq1) => "O(min[d, |C|/(s log|C|)])",
        (Tpp | TppC, Lt1) => "O(min[d, |C|/s])",
    }
}

/// Evaluated delay expression of one policy at distance `d`.
#[derive(Clone, Debug, Serialize)]
pub struct BoundReport<F> {
    pub policy: BoundPolicy,
    pub alpha_regime: AlphaRegime,
    pub alpha: F,
    pub content_count: usize,
    pub s: usize,
    pub d: F,
    pub d_bar: Option<F>,
    pub exact_value: F,
    pub kind: ValueKind,
    /// Split point: minimizing `i*` for PPP/TPP, the TPP-C cut, `z` for LBND.
    pub cut_index: Option<usize>,
    pub order_expr: &'static str,
}

impl<F: Real> BoundReport<F> {
    pub fn to_row(&self) -> ResultRow {
        ResultRow {
            policy: self.policy.name().to_string(),
            alpha: self.alpha.as_f64(),
            content_count: self.content_count,
            s: self.s,
            d: Some(self.d.as_f64()),
            d_bar: self.d_bar.map(Real::as_f64),
            value: self.exact_value.as_f64(),
            kind: self.kind,
            ..ResultRow::default()
        }
    }
}

/// Evaluates `policy`'s delay expression with ceiling TPP-C rounding.
pub fn policy_bound<F: Real>(
    cat: &Catalog<F>,
    policy: BoundPolicy,
    s: usize,
    d: F,
    d_bar: Option<F>,
) -> Result<BoundReport<F>> {
    policy_bound_with(cat, policy, s, d, d_bar, CutRounding::Ceil)
}

pub fn policy_bound_with<F: Real>(
    cat: &Catalog<F>,
    policy: BoundPolicy,
    s: usize,
    d: F,
    d_bar: Option<F>,
    rounding: CutRounding,
) -> Result<BoundReport<F>> {
    if s == 0 {
        return Err(Error::invalid("cache budget s must be >= 1"));
    }
    if !(d >= F::one()) || !d.is_finite() {
        return Err(Error::invalid(format!("distance must be >= 1, got {d}")));
    }
    let n = cat.len();
    let mut truncated = false;
    let (value, cut) = match policy {
        BoundPolicy::Urp => (urp_delay(n, s, d), None),
        BoundPolicy::Ppp => {
            let (v, i) = argmin_split(n, |i| ppp_term(cat, s, d, i));
            (v, Some(i))
        }
        BoundPolicy::Tpp => {
            let (v, i) = tpp_argmin(cat, s, d);
            (v, Some(i))
        }
        BoundPolicy::TppC => {
            let d_bar =
                d_bar.ok_or_else(|| Error::invalid("TPP-C needs the average distance d_bar"))?;
            if !(d_bar >= F::one()) {
                return Err(Error::invalid(format!("d_bar must be >= 1, got {d_bar}")));
            }
            let cut = tppc_cut_index(n, s, d_bar.as_f64(), rounding);
            truncated = cut < n;
            (tppc_bound(cat, s, d, cut), Some(cut))
        }
        BoundPolicy::Lbnd => {
            let z = lbnd_depth(n, s, d);
            (lbnd_real(cat, s, d)?, Some(z))
        }
    };
    Ok(BoundReport {
        policy,
        alpha_regime: AlphaRegime::of(cat.alpha().as_f64()),
        alpha: cat.alpha(),
        content_count: n,
        s,
        d,
        d_bar,
        exact_value: value,
        kind: policy.value_kind(),
        cut_index: cut,
        order_expr: order_expr(policy, AlphaRegime::of(cat.alpha().as_f64()), truncated),
    })
}

fn lbnd_depth<F: Real>(n: usize, s: usize, d: F) -> usize {
    let layers = n.div_ceil(s);
    let d = d.floor().to_usize().unwrap_or(usize::MAX);
    d.min(layers)
}

/// `sum_i p_i min(ceil(i/s), d)`; for integer `d` this is the LBND delay.
fn lbnd_real<F: Real>(cat: &Catalog<F>, s: usize, d: F) -> Result<F> {
    if d.fract() == F::zero() {
        if let Some(d) = d.to_usize() {
            return lbnd_delay_given_distance(cat, s, d);
        }
    }
    Ok(kahan_sum(cat.popularity().iter().enumerate().rev().map(
        |(idx, &p)| p * F::from_usize_lossy(idx / s + 1).min(d),
    )))
}

fn argmin_split<F: Real>(n: usize, value: impl Fn(usize) -> F) -> (F, usize) {
    let mut best = (value(1), 1);
    for i in 2..=n {
        let v = value(i);
        if v < best.0 {
            best = (v, i);
        }
    }
    best
}

fn ppp_term<F: Real>(cat: &Catalog<F>, s: usize, d: F, i_star: usize) -> F {
    F::one() + F::from_usize_lossy(i_star) / F::from_usize_lossy(s) + d * cat.tail_mass(i_star)
}

/// `1 + i*/s + d sum_{i > i*} p_i`.
pub fn ppp_bound_at<F: Real>(cat: &Catalog<F>, s: usize, d: F, i_star: usize) -> Result<F> {
    check_split(cat.len(), s, i_star)?;
    Ok(ppp_term(cat, s, d, i_star))
}

fn check_split(n: usize, s: usize, i_star: usize) -> Result<()> {
    if s == 0 || i_star == 0 || i_star > n {
        return Err(Error::invalid(format!(
            "need s >= 1 and 1 <= i* <= {n}, got s={s}, i*={i_star}"
        )));
    }
    Ok(())
}

fn half_weights<F: Real>(cat: &Catalog<F>, upto: usize) -> impl Iterator<Item = F> {
    let half = cat.alpha() / F::lit(2.0);
    (1..=upto).map(move |i| F::from_usize_lossy(i).powf(-half))
}

/// `1 + (K / (s K')) sum_{i <= i*} i^-(alpha/2) + d sum_{i > i*} p_i`.
pub fn tpp_bound_at<F: Real>(cat: &Catalog<F>, s: usize, d: F, i_star: usize) -> Result<F> {
    check_split(cat.len(), s, i_star)?;
    let full = kahan_sum(half_weights(cat, cat.len()));
    let head = kahan_sum(half_weights(cat, i_star));
    let coef = cat.normalizer() * full / F::from_usize_lossy(s);
    Ok(F::one() + coef * head + d * cat.tail_mass(i_star))
}

fn tpp_argmin<F: Real>(cat: &Catalog<F>, s: usize, d: F) -> (F, usize) {
    let full = kahan_sum(half_weights(cat, cat.len()));
    let coef = cat.normalizer() * full / F::from_usize_lossy(s);
    let mut head = KahanSum::new();
    let mut best = (F::infinity(), 1);
    for (k, w) in half_weights(cat, cat.len()).enumerate() {
        head.add(w);
        let i_star = k + 1;
        let v = F::one() + coef * head.value() + d * cat.tail_mass(i_star);
        if v < best.0 {
            best = (v, i_star);
        }
    }
    best
}

/// `1 + K/(s M^2) + d sum_{i > cut} p_i` with `1/M = sum_{i <= cut} i^-(alpha/2)`.
fn tppc_bound<F: Real>(cat: &Catalog<F>, s: usize, d: F, cut: usize) -> F {
    let inv_m = kahan_sum(half_weights(cat, cut));
    F::one() + cat.normalizer() * inv_m * inv_m / F::from_usize_lossy(s) + d * cat.tail_mass(cut)
}

/// The `i*` the asymptotic TPP analysis picks for each popularity regime,
/// rounded down and clamped to `1..=|C|`.
pub fn prescribed_tpp_cut(alpha: f64, content_count: usize, s: usize, d: f64) -> usize {
    let c = content_count as f64;
    let sd = s as f64 * d;
    let raw = match AlphaRegime::of(alpha) {
        AlphaRegime::Gt2 => c,
        AlphaRegime::Eq2 => sd / c.ln(),
        AlphaRegime::Between1And2 => sd.powf(2.0 / alpha) / c.powf(2.0 / alpha - 1.0),
        AlphaRegime::Eq1 => sd * sd / c,
        AlphaRegime::Lt1 => sd,
    };
    let raw = if raw.is_nan() { c } else { raw };
    (raw.min(c).floor() as usize).clamp(1, content_count)
}

/// One cut layer of the black-or-white sweep.
#[derive(Clone, Debug, Serialize)]
pub struct BowPoint<F> {
    /// Depth of the white region, `h - cut_layer`.
    pub m: usize,
    pub cut_layer: usize,
    pub black_nodes: usize,
    /// Per-node budget of a black node (floor of the equal split).
    pub black_budget: usize,
    pub delta_black: F,
    /// `2m + 2 delta_black`.
    pub bound: F,
}

fn tree_params(t: &Topology) -> Result<(usize, usize)> {
    match *t.kind() {
        TopologyKind::RegularTree { r, h } => Ok((r, h)),
        _ => Err(Error::invalid("black-or-white bound needs a regular tree")),
    }
}

/// Equal share of `total_budget` over the black nodes of layers `0..=c`.
pub fn bow_black_budget(r: usize, cut_layer: usize, total_budget: usize) -> Result<usize> {
    let black = regular_tree_node_count(r, cut_layer);
    if total_budget < black {
        return Err(Error::InfeasibleBudget(format!(
            "total budget {total_budget} is smaller than the {black} black nodes of layers 0..={cut_layer}"
        )));
    }
    Ok(total_budget / black)
}

/// `2m + 2 Delta_black(m)` where `Delta_black` is the TPP-C expression with
/// the black per-node budget and `d = d_bar = c` (at least 1).
pub fn bow_composite_bound<F: Real>(
    cat: &Catalog<F>,
    tree: &Topology,
    total_budget: usize,
    m: usize,
) -> Result<BowPoint<F>> {
    let (r, h) = tree_params(tree)?;
    if m > h {
        return Err(Error::invalid(format!(
            "white depth m={m} exceeds tree height {h}"
        )));
    }
    let c = h - m;
    let s = bow_black_budget(r, c, total_budget)?;
    let depth = F::from_usize_lossy(c.max(1));
    let delta_black = policy_bound(cat, BoundPolicy::TppC, s, depth, Some(depth))?.exact_value;
    let two = F::lit(2.0);
    Ok(BowPoint {
        m,
        cut_layer: c,
        black_nodes: regular_tree_node_count(r, c),
        black_budget: s,
        delta_black,
        bound: two * F::from_usize_lossy(m) + two * delta_black,
    })
}

/// Evaluates every feasible `m` in `0..=h` and returns the points with the
/// index of the minimizing one (lowest `m` on ties).
pub fn bow_sweep<F: Real>(
    cat: &Catalog<F>,
    tree: &Topology,
    total_budget: usize,
) -> Result<(Vec<BowPoint<F>>, usize)> {
    let (_, h) = tree_params(tree)?;
    let points: Vec<BowPoint<F>> = (0..=h)
        .filter_map(|m| bow_composite_bound(cat, tree, total_budget, m).ok())
        .collect();
    let best = points
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.bound.partial_cmp(&b.1.bound).expect("finite bound"))
        .map(|(i, _)| i)
        .ok_or_else(|| {
            Error::InfeasibleBudget(format!("no feasible cut layer for budget {total_budget}"))
        })?;
    Ok((points, best))
}
