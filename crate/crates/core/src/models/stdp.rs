//! Pair-based STDP with exponential traces and a closed-form skip-ahead.

use super::constants::StdpConstants;

/// Weight plus pre- and post-synaptic traces; 12 bytes.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[repr(C)]
pub struct StdpSynapse {
    pub w: f32,
    pub x_pre: f32,
    pub x_post: f32,
}

const TABLE_LEN: usize = 65;

#[derive(Clone, Debug)]
pub struct StdpParams {
    pub eta_plus: f32,
    pub eta_minus: f32,
    pub w_max: f32,
    // decay_*[k] = exp(-k * dt / tau), precomputed in f64.
    decay_pre: [f32; TABLE_LEN],
    decay_post: [f32; TABLE_LEN],
    step_over_tau_pre: f64,
    step_over_tau_post: f64,
}

impl StdpParams {
    /// Derives learning rates and bounds from the initial weight.
    pub fn new(c: &StdpConstants, dt_ms: f64, w_init: f64) -> Self {
        let eta_minus = c.eta_minus * w_init;
        let pre = dt_ms / c.tau_plus_ms;
        let post = dt_ms / c.tau_minus_ms;
        let table = |r: f64| std::array::from_fn(|k| (-(k as f64) * r).exp() as f32);
        StdpParams {
            eta_plus: (eta_minus * c.asymmetry) as f32,
            eta_minus: eta_minus as f32,
            w_max: (w_init * c.w_max_factor) as f32,
            decay_pre: table(pre),
            decay_post: table(post),
            step_over_tau_pre: pre,
            step_over_tau_post: post,
        }
    }

    #[inline]
    fn decay(table: &[f32; TABLE_LEN], ratio: f64, steps: u32) -> f32 {
        match table.get(steps as usize) {
            Some(&d) => d,
            None => (-(steps as f64) * ratio).exp() as f32,
        }
    }

    /// Skips `n_steps - 1` silent steps in closed form, then applies one step
    /// with the given flags. Post-synaptic potentiation is applied before
    /// pre-synaptic depression within the step.
    #[inline]
    pub fn update(&self, s: &mut StdpSynapse, pre: bool, post: bool, n_steps: u32) {
        debug_assert!(n_steps >= 1);
        if n_steps > 1 {
            let skip = n_steps - 1;
            s.x_pre *= Self::decay(&self.decay_pre, self.step_over_tau_pre, skip);
            s.x_post *= Self::decay(&self.decay_post, self.step_over_tau_post, skip);
        }
        s.x_pre *= self.decay_pre[1];
        s.x_post *= self.decay_post[1];
        if post {
            s.w = (s.w + self.eta_plus * s.x_pre).clamp(0.0, self.w_max);
            s.x_post += 1.0;
        }
        if pre {
            s.w = (s.w - self.eta_minus * s.x_post).clamp(0.0, self.w_max);
            s.x_pre += 1.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params() -> StdpParams {
        StdpParams::new(&StdpConstants::default(), 0.1, 0.5)
    }

    fn rel(a: f32, b: f32) -> f32 {
        let scale = a.abs().max(b.abs());
        if scale == 0.0 {
            0.0
        } else {
            (a - b).abs() / scale
        }
    }

    #[test]
    fn state_is_twelve_bytes() {
        assert_eq!(std::mem::size_of::<StdpSynapse>(), 12);
    }

    #[test]
    fn silent_steps_only_decay() {
        let p = params();
        let mut s = StdpSynapse { w: 0.4, x_pre: 1.0, x_post: 2.0 };
        p.update(&mut s, false, false, 10);
        assert_eq!(s.w, 0.4);
        let expect = (-10.0f64 * 0.1 / 20.0).exp();
        assert!((s.x_pre as f64 - expect).abs() < 1e-6);
        assert!((s.x_post as f64 - 2.0 * expect).abs() < 2e-6);
    }

    #[test]
    fn pre_then_post_potentiates() {
        let p = params();
        let mut s = StdpSynapse { w: 0.5, x_pre: 0.0, x_post: 0.0 };
        p.update(&mut s, true, false, 1);
        assert_eq!(s.w, 0.5);
        p.update(&mut s, false, true, 1);
        let expect = 0.5 + p.eta_plus as f64 * (-0.1f64 / 20.0).exp();
        assert!((s.w as f64 - expect).abs() < 1e-6, "{} vs {}", s.w, expect);
    }

    #[test]
    fn weight_is_clipped() {
        let p = params();
        let mut s = StdpSynapse { w: p.w_max, x_pre: 50.0, x_post: 0.0 };
        p.update(&mut s, false, true, 1);
        assert_eq!(s.w, p.w_max);
        let mut s = StdpSynapse { w: 0.0, x_pre: 0.0, x_post: 50.0 };
        p.update(&mut s, true, false, 1);
        assert_eq!(s.w, 0.0);
    }

    proptest! {
        #[test]
        fn skip_ahead_matches_single_steps(
            w in 0.0f32..1.0, x_pre in 0.0f32..3.0, x_post in 0.0f32..3.0,
            pre in any::<bool>(), post in any::<bool>(), n in 1u32..200,
        ) {
            let p = params();
            let init = StdpSynapse { w, x_pre, x_post };
            let mut a = init;
            p.update(&mut a, pre, post, n);
            let mut b = init;
            for _ in 1..n {
                p.update(&mut b, false, false, 1);
            }
            p.update(&mut b, pre, post, 1);
            prop_assert!((a.w - b.w).abs() <= 1e-6 * p.w_max, "w {} vs {}", a.w, b.w);
            prop_assert!(rel(a.x_pre, b.x_pre) <= 2e-5 || (a.x_pre - b.x_pre).abs() < 1e-7);
            prop_assert!(rel(a.x_post, b.x_post) <= 2e-5 || (a.x_post - b.x_post).abs() < 1e-7);
        }

        #[test]
        fn weights_stay_bounded(flags in proptest::collection::vec((any::<bool>(), any::<bool>(), 1u32..70), 1..500)) {
            let p = params();
            let mut s = StdpSynapse { w: 0.5, ..Default::default() };
            for (pre, post, n) in flags {
                p.update(&mut s, pre, post, n);
                prop_assert!(s.w >= 0.0 && s.w <= p.w_max);
                prop_assert!(s.x_pre >= 0.0 && s.x_post >= 0.0);
            }
        }
    }
}
