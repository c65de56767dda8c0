//! Demo bindings: three interactive operations behind a JSON-string API.
//!
//! The JSON layer is plain Rust and fully testable on any target; the
//! wasm-bindgen exports are a thin shim compiled only for wasm32. Build
//! with `wasm-pack build --target web crates/wasm` (or cargo +
//! wasm-bindgen-cli) and serve `www/`.

mod demo;

pub use demo::{delta_histogram_json, sample_points_json, solve_curve_json};

#[cfg(target_arch = "wasm32")]
mod bindings {
    use wasm_bindgen::prelude::*;

    #[wasm_bindgen(start)]
    pub fn start() {
        console_error_panic_hook::set_once();
    }

    /// Residual curve and selected point for one univariate solve.
    #[wasm_bindgen]
    pub fn solve_curve(input: &str) -> String {
        crate::solve_curve_json(input)
    }

    /// Per-outcome selection over a seeded sample: (X, xi) pairs.
    #[wasm_bindgen]
    pub fn sample_points(input: &str) -> String {
        crate::sample_points_json(input)
    }

    /// Delta-method replication: standardized histogram and KS distance.
    #[wasm_bindgen]
    pub fn delta_histogram(input: &str) -> String {
        crate::delta_histogram_json(input)
    }
}
