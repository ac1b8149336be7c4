//! Content catalog with Zipf popularity and the static placement
//! distributions derived from it.
//!
//! Content indices are 0-based throughout the API; popularity rank is
//! `index + 1`, so index 0 is the most popular content.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{kahan_sum, prefix_sums, Real};

/// Zipf popularity `p_i = K / i^alpha` over `|C|` contents.
#[derive(Clone, Debug)]
pub struct Catalog<F> {
    alpha: F,
    popularity: Vec<F>,
    /// `cumulative[k] = p_1 + ... + p_k`, length `|C| + 1`.
    cumulative: Vec<F>,
    /// `tail[k] = p_{k+1} + ... + p_{|C|}`, summed from the small end.
    tail: Vec<F>,
    normalizer: F,
}

impl<F: Real> Catalog<F> {
    pub fn new(content_count: usize, alpha: F) -> Result<Self> {
        make_catalog(content_count, alpha)
    }

    pub fn len(&self) -> usize {
        self.popularity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.popularity.is_empty()
    }

    pub fn alpha(&self) -> F {
        self.alpha
    }

    /// The constant `K` with `1/K = sum_i i^-alpha`.
    pub fn normalizer(&self) -> F {
        self.normalizer
    }

    pub fn popularity(&self) -> &[F] {
        &self.popularity
    }

    /// Popularity of the content at 0-based `index`.
    pub fn p(&self, index: usize) -> F {
        self.popularity[index]
    }

    /// Mass of the `k` most popular contents.
    pub fn head_mass(&self, k: usize) -> F {
        self.cumulative[k.min(self.len())]
    }

    /// Mass of every content ranked below `k`, i.e. `sum_{i > k} p_i`.
    pub fn tail_mass(&self, k: usize) -> F {
        self.tail[k.min(self.len())]
    }

    /// `(sum_i sqrt(p_i))^2`, the minimum of `sum_i p_i / q_i` over
    /// probability vectors `q`.
    pub fn cs_constant(&self) -> F {
        let root_sum = kahan_sum(self.popularity.iter().map(|p| p.sqrt()));
        root_sum * root_sum
    }

    /// Draws a 0-based content index with probability `p_i` by inverting the
    /// cumulative distribution.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u = F::lit(rng.random::<f64>());
        let idx = self.cumulative[1..].partition_point(|&c| c <= u);
        idx.min(self.len() - 1)
    }
}

/// Builds the catalog for `content_count` contents with Zipf exponent `alpha`.
pub fn make_catalog<F: Real>(content_count: usize, alpha: F) -> Result<Catalog<F>> {
    if content_count == 0 {
        return Err(Error::invalid("catalog needs at least one content"));
    }
    if !(alpha > F::zero()) || !alpha.is_finite() {
        return Err(Error::invalid(format!(
            "Zipf exponent must be positive, got {alpha}"
        )));
    }
    let weights: Vec<F> = (1..=content_count)
        .map(|i| F::from_usize_lossy(i).powf(-alpha))
        .collect();
    // summing from the smallest terms keeps the error of long tails small
    let inv_k = kahan_sum(weights.iter().rev().copied());
    let normalizer = F::one() / inv_k;
    let popularity: Vec<F> = weights.iter().map(|&w| w * normalizer).collect();
    let cumulative = prefix_sums(&popularity);
    let mut tail = vec![F::zero(); content_count + 1];
    let mut acc = crate::scalar::KahanSum::new();
    for k in (0..content_count).rev() {
        acc.add(popularity[k]);
        tail[k] = acc.value();
    }
    Ok(Catalog {
        alpha,
        popularity,
        cumulative,
        tail,
        normalizer,
    })
}

/// How `s * d_bar` is turned into the integer cut index of TPP-C.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutRounding {
    #[default]
    Ceil,
    Round,
    Floor,
}

impl CutRounding {
    pub fn apply(self, x: f64) -> usize {
        let v = match self {
            CutRounding::Ceil => x.ceil(),
            CutRounding::Round => x.round(),
            CutRounding::Floor => x.floor(),
        };
        v.max(1.0) as usize
    }
}

/// Static placement policies that cache contents by drawing from a
/// per-content probability vector `q`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlacementPolicy {
    /// Uniform `q_i = 1/|C|`.
    Urp,
    /// `q = p`.
    Ppp,
    /// `q_i ∝ i^-(alpha/2)` over the whole catalog.
    Tpp,
    /// TPP restricted to the `min(round(s * d_bar), |C|)` most popular contents.
    TppC { s: usize, d_bar: f64 },
    /// `q_i ∝ i^-beta` for an arbitrary tilt.
    Tilted { beta: f64 },
}

impl PlacementPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            PlacementPolicy::Urp => "URP",
            PlacementPolicy::Ppp => "PPP",
            PlacementPolicy::Tpp => "TPP",
            PlacementPolicy::TppC { .. } => "TPPC",
            PlacementPolicy::Tilted { .. } => "TILTED",
        }
    }
}

/// Per-content caching probabilities used to fill every node independently.
#[derive(Clone, Debug, Serialize)]
pub struct PlacementDistribution<F> {
    policy: String,
    q: Vec<F>,
    beta: F,
    cut_index: usize,
    /// `1 / sum_{i <= cut} i^-beta`; this is `K'` for TPP and `M` for TPP-C.
    normalizer: F,
    /// Draw contents without replacement when realizing a node.
    #[serde(skip)]
    without_replacement: bool,
}

impl<F: Real> PlacementDistribution<F> {
    /// Wraps an arbitrary probability vector. Zero entries never get cached.
    pub fn from_weights(q: Vec<F>) -> Result<Self> {
        if q.is_empty() {
            return Err(Error::invalid("placement vector is empty"));
        }
        if q.iter().any(|&x| !(x >= F::zero()) || !x.is_finite()) {
            return Err(Error::invalid(
                "placement probabilities must be finite and non-negative",
            ));
        }
        let total = kahan_sum(q.iter().copied());
        if (total - F::one()).abs() > sum_tolerance::<F>() {
            return Err(Error::invalid(format!(
                "placement probabilities sum to {total}, expected 1"
            )));
        }
        let cut_index = q.iter().rposition(|&x| x > F::zero()).map_or(0, |i| i + 1);
        Ok(PlacementDistribution {
            policy: "CUSTOM".into(),
            q,
            beta: F::nan(),
            cut_index,
            normalizer: F::nan(),
            without_replacement: false,
        })
    }

    pub fn policy(&self) -> &str {
        &self.policy
    }

    pub fn q(&self) -> &[F] {
        &self.q
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    /// Tilt exponent; NaN for custom vectors.
    pub fn beta(&self) -> F {
        self.beta
    }

    /// Number of contents with positive caching probability (a prefix for
    /// every built-in policy).
    pub fn cut_index(&self) -> usize {
        self.cut_index
    }

    pub fn normalizer(&self) -> F {
        self.normalizer
    }

    pub fn without_replacement(&self) -> bool {
        self.without_replacement
    }
}

fn sum_tolerance<F: Real>() -> F {
    F::lit(1e-9).max(F::epsilon() * F::lit(64.0))
}

/// Placement distribution with the default (ceiling) cut rounding.
pub fn placement_distribution<F: Real>(
    cat: &Catalog<F>,
    policy: PlacementPolicy,
) -> Result<PlacementDistribution<F>> {
    placement_distribution_with(cat, policy, CutRounding::Ceil)
}

pub fn placement_distribution_with<F: Real>(
    cat: &Catalog<F>,
    policy: PlacementPolicy,
    rounding: CutRounding,
) -> Result<PlacementDistribution<F>> {
    let n = cat.len();
    let half = cat.alpha() / F::lit(2.0);
    let (beta, cut) = match policy {
        PlacementPolicy::Urp => (F::zero(), n),
        PlacementPolicy::Ppp => (cat.alpha(), n),
        PlacementPolicy::Tpp => (half, n),
        PlacementPolicy::TppC { s, d_bar } => {
            if s == 0 {
                return Err(Error::invalid("TPP-C needs s >= 1"));
            }
            if !(d_bar >= 1.0) || !d_bar.is_finite() {
                return Err(Error::invalid(format!(
                    "TPP-C needs d_bar >= 1, got {d_bar}"
                )));
            }
            (half, tppc_cut_index(n, s, d_bar, rounding))
        }
        PlacementPolicy::Tilted { beta } => {
            if !(beta >= 0.0) || !beta.is_finite() {
                return Err(Error::invalid(format!(
                    "tilt exponent must be >= 0, got {beta}"
                )));
            }
            (F::lit(beta), n)
        }
    };
    let weights: Vec<F> = (1..=cut)
        .map(|i| F::from_usize_lossy(i).powf(-beta))
        .collect();
    let normalizer = F::one() / kahan_sum(weights.iter().rev().copied());
    let mut q: Vec<F> = weights.into_iter().map(|w| w * normalizer).collect();
    q.resize(n, F::zero());
    Ok(PlacementDistribution {
        policy: policy.name().to_string(),
        q,
        beta,
        cut_index: cut,
        normalizer,
        without_replacement: matches!(policy, PlacementPolicy::Urp),
    })
}

/// `min(rounding(s * d_bar), |C|)`, at least 1.
pub fn tppc_cut_index(content_count: usize, s: usize, d_bar: f64, rounding: CutRounding) -> usize {
    rounding.apply(s as f64 * d_bar).min(content_count)
}

/// `sum_i p_i / q_i`. Errors if some `q_i` is zero where `p_i` is positive.
pub fn cs_bound<F: Real>(cat: &Catalog<F>, q: &[F]) -> Result<F> {
    if q.len() != cat.len() {
        return Err(Error::LengthMismatch {
            expected: cat.len(),
            actual: q.len(),
        });
    }
    let mut terms = Vec::with_capacity(q.len());
    for (i, (&p, &qi)) in cat.popularity().iter().zip(q).enumerate() {
        if qi <= F::zero() {
            return Err(Error::ZeroPlacementMass { index: i });
        }
        terms.push(p / qi);
    }
    Ok(kahan_sum(terms))
}
