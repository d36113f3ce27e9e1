use exclusion_lab::kernel_profile::{
    burgers_profile, characteristic_speeds, integrated_profile, validate_kernel,
};
use exclusion_lab::{JumpKernel, StepProfileParams};
use proptest::prelude::*;

/// Kernels with support in [-3, 3] built from positive weights.
fn kernel_strategy() -> impl Strategy<Value = JumpKernel> {
    prop::collection::vec((-3i64..=3, 0.05f64..1.0), 1..5).prop_filter_map(
        "zero-displacement-only kernels are rejected",
        |entries| {
            let total: f64 = entries.iter().map(|e| e.1).sum();
            let normalized: Vec<(i64, f64)> = entries.iter().map(|&(z, w)| (z, w / total)).collect();
            validate_kernel(&normalized).ok()
        },
    )
}

fn params_strategy() -> impl Strategy<Value = StepProfileParams> {
    (0.0f64..=1.0, 0.0f64..=1.0).prop_map(|(a, b)| {
        let (lambda, rho) = if a >= b { (a, b) } else { (b, a) };
        StepProfileParams::new(lambda, rho).unwrap()
    })
}

/// Points where f may fail to be smooth, written out independently of the
/// library: the fan edges for positive drift, the shock position otherwise.
fn breakpoints(alpha: f64, lambda: f64, rho: f64) -> Vec<f64> {
    if alpha > 0.0 {
        vec![alpha * (1.0 - 2.0 * lambda), alpha * (1.0 - 2.0 * rho)]
    } else {
        vec![alpha * (1.0 - lambda - rho)]
    }
}

/// Composite midpoint rule with step at most `h`, split at the breakpoints
/// so that every panel sees a linear integrand.
fn quadrature(u: f64, v: f64, h: f64, f: impl Fn(f64) -> f64, cuts: &[f64]) -> f64 {
    let mut nodes = vec![u];
    nodes.extend(cuts.iter().copied().filter(|&c| u < c && c < v));
    nodes.push(v);
    nodes.sort_by(f64::total_cmp);
    let mut total = 0.0;
    for pair in nodes.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let steps = ((b - a) / h).ceil().max(1.0) as usize;
        let dx = (b - a) / steps as f64;
        total += (0..steps)
            .map(|i| f(a + (i as f64 + 0.5) * dx))
            .sum::<f64>()
            * dx;
    }
    total
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn profile_is_non_increasing_and_bounded(kernel in kernel_strategy(), params in params_strategy()) {
        let mut prev = f64::INFINITY;
        for i in 0..1000 {
            let u = -8.0 + 16.0 * i as f64 / 999.0;
            let f = burgers_profile(u, &kernel, &params);
            prop_assert!(f <= prev, "f increased at u={u}");
            prop_assert!(params.rho() <= f && f <= params.lambda(), "f({u}) = {f} out of range");
            prev = f;
        }
    }

    #[test]
    fn integral_is_additive(
        kernel in kernel_strategy(),
        params in params_strategy(),
        mut pts in prop::array::uniform3(-6.0f64..6.0),
    ) {
        pts.sort_by(f64::total_cmp);
        let [u, v, w] = pts;
        prop_assume!(u < v && v < w);
        let lhs = integrated_profile(u, v, &kernel, &params).unwrap()
            + integrated_profile(v, w, &kernel, &params).unwrap();
        let rhs = integrated_profile(u, w, &kernel, &params).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12, "{lhs} vs {rhs}");
    }

    #[test]
    fn integral_matches_quadrature(
        kernel in kernel_strategy(),
        params in params_strategy(),
        a in -5.0f64..5.0,
        width in 0.01f64..4.0,
    ) {
        let (u, v) = (a, a + width);
        let closed = integrated_profile(u, v, &kernel, &params).unwrap();
        let cuts = breakpoints(kernel.drift(), params.lambda(), params.rho());
        let numeric = quadrature(u, v, 1e-4, |s| burgers_profile(s, &kernel, &params), &cuts);
        prop_assert!((closed - numeric).abs() <= 1e-6, "closed {closed}, quadrature {numeric}");
    }

    #[test]
    fn particle_hole_duality(kernel in kernel_strategy(), params in params_strategy()) {
        let dual = params.hole_dual();
        prop_assert_eq!(dual.lambda(), 1.0 - params.rho());
        prop_assert_eq!(dual.rho(), 1.0 - params.lambda());
        let alpha = kernel.drift();
        let cuts = breakpoints(alpha, params.lambda(), params.rho());
        for i in 0..400 {
            let u = -6.0 + 12.0 * i as f64 / 399.0 + 1e-7;
            if cuts.iter().any(|c| (u - c).abs() < 1e-6) {
                continue;
            }
            let f = burgers_profile(u, &kernel, &params);
            let g = burgers_profile(-u, &kernel, &dual);
            prop_assert!((f - (1.0 - g)).abs() <= 1e-12, "u={u}: f={f}, 1-f̌(-u)={}", 1.0 - g);
        }
    }

    #[test]
    fn speeds_bracket_the_non_constant_region(kernel in kernel_strategy(), params in params_strategy()) {
        let (left, right) = characteristic_speeds(&kernel, &params);
        prop_assert!(left <= right);
        prop_assert_eq!(burgers_profile(left - 1.0, &kernel, &params), params.lambda());
        prop_assert_eq!(burgers_profile(right + 1.0, &kernel, &params), params.rho());
    }

    #[test]
    fn kernels_not_summing_to_one_are_rejected(scale in 0.5f64..0.999) {
        prop_assert!(validate_kernel(&[(1, 0.6 * scale), (-1, 0.4 * scale)]).is_err());
    }

    #[test]
    fn kernel_literal_round_trips(kernel in kernel_strategy()) {
        let text = kernel.to_string();
        let back: JumpKernel = text.parse().unwrap();
        prop_assert_eq!(back.support().len(), kernel.support().len());
        prop_assert!((back.drift() - kernel.drift()).abs() < 1e-12);
    }
}

#[test]
fn reference_values_against_quadrature() {
    let cases = [
        ("1:1", 1.0, 0.0, -1.0, 1.0, 1.0),
        ("-1:1", 0.9, 0.4, 0.0, 1.0, 0.55),
        ("1:1", 1.0, 0.0, 0.5, 1.0, 0.0625),
    ];
    for (lit, lambda, rho, u, v, expected) in cases {
        let kernel: JumpKernel = lit.parse().unwrap();
        let params = StepProfileParams::new(lambda, rho).unwrap();
        let closed = integrated_profile(u, v, &kernel, &params).unwrap();
        // plain midpoint rule without splitting: the oracle of record
        let n = ((v - u) / 1e-4).round() as usize;
        let h = (v - u) / n as f64;
        let numeric: f64 = (0..n)
            .map(|i| burgers_profile(u + (i as f64 + 0.5) * h, &kernel, &params))
            .sum::<f64>()
            * h;
        assert!((closed - expected).abs() < 1e-12, "{lit}: {closed}");
        assert!((closed - numeric).abs() < 1e-6, "{lit}: {closed} vs {numeric}");
    }
}
