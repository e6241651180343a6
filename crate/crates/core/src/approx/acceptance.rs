use num_bigint::BigInt;
use num_traits::Zero;

use crate::model::Variant;
use crate::numeric::{ratio_to_f64, Binomials};
use crate::statecount::CountTable;

/// `|NB(x,k)| / |Ω_S(x)|`.
pub fn p_accept_ees(counts: &CountTable, x: usize, k: usize) -> f64 {
    if x + counts.widths()[k] > counts.capacity() {
        return 0.0;
    }
    counts.nb_fraction(x, k)
}

/// EES plus the fragmentation-blocking share, discounted by how far `x`
/// is from the mean occupancy `x̄`.
pub fn p_accept_soc(counts: &CountTable, x: usize, k: usize, mean_occupancy: f64) -> f64 {
    let c = counts.capacity();
    if x + counts.widths()[k] > c {
        return 0.0;
    }
    let factor = if x == 0 || mean_occupancy <= 0.0 {
        0.0
    } else {
        (-(mean_occupancy / c as f64) * (x as f64 / mean_occupancy).ln().abs()).exp()
    };
    counts.nb_fraction(x, k) + counts.fb_fraction(x, k) * factor
}

fn binom_f64(capacity: usize) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(capacity + 1);
    for n in 0..=capacity {
        let mut row = vec![1.0; n + 1];
        for k in 1..n {
            row[k] = rows[n - 1][k - 1] + rows[n - 1][k];
        }
        rows.push(row);
    }
    rows
}

fn choose(table: &[Vec<f64>], n: i64, k: i64) -> f64 {
    if n < 0 || k < 0 || k > n {
        0.0
    } else {
        table[n as usize][k as usize]
    }
}

/// Distribution of the number of slices free on every link of a route,
/// when each link's free slices are a uniformly random subset. Index `n`
/// holds `g_n`.
pub fn uniform_overlap_pmf(capacity: usize, occupancy: &[usize]) -> Vec<f64> {
    let table = binom_f64(capacity);
    overlap_with(&table, capacity, occupancy)
}

fn overlap_with(table: &[Vec<f64>], capacity: usize, occupancy: &[usize]) -> Vec<f64> {
    let c = capacity as i64;
    let mut g = vec![0.0; capacity + 1];
    let Some((&first, rest)) = occupancy.split_first() else {
        g[capacity] = 1.0;
        return g;
    };
    g[capacity - first] = 1.0;
    for &y in rest {
        let y = y as i64;
        let mut next = vec![0.0; capacity + 1];
        let denom = choose(table, c, c - y);
        for (i, &gi) in g.iter().enumerate() {
            if gi == 0.0 {
                continue;
            }
            // i slices free so far, x = C - i occupied
            let x = c - i as i64;
            for (n, slot) in next.iter_mut().enumerate().take(i + 1) {
                let p = choose(table, i as i64, n as i64) * choose(table, x, c - y - n as i64) / denom;
                *slot += p * gi;
            }
        }
        g = next;
    }
    g
}

/// `p_k^Uni(n)`: probability that `n` uniformly placed free slices among
/// `capacity` contain a run of at least `width`, for every `n`.
fn uniform_given_free(capacity: usize, width: usize, binom: &Binomials) -> Vec<f64> {
    let c = capacity as i64;
    let d = width as i64;
    (0..=c)
        .map(|n| {
            let occupied = c - n;
            let mut acc = BigInt::zero();
            for i in 1..=occupied + 1 {
                let term = BigInt::from(binom.get(occupied + 1, i) * binom.get(c - i * d, occupied));
                if i % 2 == 1 {
                    acc += term;
                } else {
                    acc -= term;
                }
            }
            ratio_to_f64(&acc, &binom.get(c, n))
        })
        .collect()
}

/// Uniform-occupancy acceptance of a route with occupancies `x_r`.
pub fn p_accept_uniform_route(capacity: usize, width: usize, occupancy: &[usize]) -> f64 {
    let given = uniform_given_free(capacity, width, &Binomials::new(capacity + 1));
    let g = uniform_overlap_pmf(capacity, occupancy);
    g.iter().zip(&given).skip(width).map(|(g, p)| g * p).sum()
}

/// Uniform-occupancy acceptance of one link; routes with spectrum
/// conversion take the product over their links.
pub fn p_accept_uniform_link_sc(capacity: usize, width: usize, x: usize) -> f64 {
    if x > capacity {
        return 0.0;
    }
    uniform_given_free(capacity, width, &Binomials::new(capacity + 1))[capacity - x]
}

/// `[∏ p_i]^l` without conversion, `∏ p_i` with it.
pub fn p_accept_route(link_probs: &[f64], spectrum_conversion: bool) -> f64 {
    let prod: f64 = link_probs.iter().product();
    if spectrum_conversion {
        prod
    } else {
        prod.powi(link_probs.len() as i32)
    }
}

/// Per-link and per-route acceptance probabilities for one variant.
#[derive(Debug, Clone)]
pub struct AcceptanceModel {
    variant: Variant,
    spectrum_conversion: bool,
    capacity: usize,
    widths: Vec<usize>,
    counts: Option<CountTable>,
    /// `[k][n]`, Uniform only.
    given_free: Vec<Vec<f64>>,
    /// `[k][x1][x2]`: two-hop route acceptance, Uniform without conversion.
    pair: Vec<Vec<Vec<f64>>>,
}

impl AcceptanceModel {
    /// `counts` is required for EES and SOC.
    pub fn new(
        variant: Variant,
        spectrum_conversion: bool,
        capacity: usize,
        widths: &[usize],
        counts: Option<CountTable>,
    ) -> Self {
        let mut model = AcceptanceModel {
            variant,
            spectrum_conversion,
            capacity,
            widths: widths.to_vec(),
            counts,
            given_free: Vec::new(),
            pair: Vec::new(),
        };
        match variant {
            Variant::Ees | Variant::Soc => {
                assert!(model.counts.is_some(), "EES and SOC need state counts");
            }
            Variant::Uniform => {
                let binom = Binomials::new(capacity + 1);
                model.given_free = widths.iter().map(|&d| uniform_given_free(capacity, d, &binom)).collect();
                if !spectrum_conversion {
                    let table = binom_f64(capacity);
                    model.pair = (0..widths.len())
                        .map(|k| {
                            (0..=capacity)
                                .map(|x1| {
                                    (0..=capacity)
                                        .map(|x2| {
                                            let g = overlap_with(&table, capacity, &[x1, x2]);
                                            model.dot_given_free(k, &g)
                                        })
                                        .collect()
                                })
                                .collect()
                        })
                        .collect();
                }
            }
        }
        model
    }

    fn dot_given_free(&self, k: usize, g: &[f64]) -> f64 {
        g.iter().zip(&self.given_free[k]).skip(self.widths[k]).map(|(g, p)| g * p).sum()
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn spectrum_conversion(&self) -> bool {
        self.spectrum_conversion
    }

    pub fn counts(&self) -> Option<&CountTable> {
        self.counts.as_ref()
    }

    /// Single-link acceptance at occupancy `x`.
    pub fn link(&self, x: usize, k: usize, mean_occupancy: f64) -> f64 {
        if x + self.widths[k] > self.capacity {
            return 0.0;
        }
        match self.variant {
            Variant::Ees => p_accept_ees(self.counts.as_ref().unwrap(), x, k),
            Variant::Soc => p_accept_soc(self.counts.as_ref().unwrap(), x, k, mean_occupancy),
            Variant::Uniform => self.given_free[k][self.capacity - x],
        }
    }

    /// Whether a route of `hops` links is evaluated through the two-hop
    /// Uniform table rather than a per-link product.
    pub fn uses_pair_table(&self, hops: usize) -> bool {
        self.variant == Variant::Uniform && !self.spectrum_conversion && hops == 2
    }

    /// Two-hop Uniform acceptance from the precomputed table.
    pub fn pair(&self, k: usize, x1: usize, x2: usize) -> f64 {
        self.pair[k][x1][x2]
    }

    /// Route acceptance given every route link's occupancy.
    pub fn route(&self, occupancy: &[usize], mean_occupancy: &[f64], k: usize) -> f64 {
        if self.variant == Variant::Uniform && !self.spectrum_conversion {
            if occupancy.len() == 2 {
                return self.pair(k, occupancy[0], occupancy[1]);
            }
            if occupancy.len() == 1 {
                return self.link(occupancy[0], k, 0.0);
            }
        }
        let probs: Vec<f64> = occupancy.iter().zip(mean_occupancy).map(|(&x, &m)| self.link(x, k, m)).collect();
        p_accept_route(&probs, self.spectrum_conversion)
    }
}
