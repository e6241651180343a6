//! Benchmark inputs shared by the bench targets.

use eon_core::scenarios::{single_link, two_link};
use eon_core::ScenarioConfig;

/// Single link used for the counting and fixed-point timings.
pub fn large_link() -> ScenarioConfig {
    single_link(100, &[3, 4, 6], 12.0)
}

/// Two-link chain small enough for the exact chain.
pub fn chain() -> ScenarioConfig {
    two_link(10, &[3, 4], 0.1)
}

/// `chain()` with a short simulation budget.
pub fn short_sim() -> ScenarioConfig {
    let mut c = chain().at_load(1.2);
    c.settings.requests = 100_000;
    c
}
