//! Fixtures shared by the benchmarks.

use speedkit_core::synth::{self, Roadside, SyntheticScene};

/// A roadside pass with `frames` annotated frames and distortion `k`.
pub fn scene(frames: u32, k: f64) -> SyntheticScene {
    let mut spec = Roadside { frames, m: 2, noise_px: 1.0, seed: 1, ..Roadside::default() }.scene();
    spec.camera.distortion_k = k;
    synth::generate_scene(&spec).expect("fixture scene generates")
}

#[cfg(test)]
mod tests {
    #[test]
    fn fixtures_estimate() {
        for frames in [2, 10, 30] {
            let s = super::scene(frames, -0.08);
            assert!(s.estimate().unwrap().estimate.contains(s.ground_truth.mps()));
        }
    }
}
