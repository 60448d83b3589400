use bbm_core::airy::{ai, ai_deriv, airy_zero, AiryZeroTable, GAMMA_1};
use bbm_core::quad::integrate;

// Reference values from the DLMF tables.
const TABLE: [(f64, f64, f64); 5] = [
    (-5.0, 0.350_761_009_024_114_2, 0.327_192_818_554_443_5),
    (-1.0, 0.535_560_883_292_352_1, -0.010_160_567_116_645_7),
    (0.0, 0.355_028_053_887_817_2, -0.258_819_403_792_806_8),
    (1.0, 0.135_292_416_312_881_4, -0.159_147_441_296_793_2),
    (5.0, 1.083_444_281_360_744e-4, -2.474_138_908_684_624e-4),
];

#[test]
fn tabulated_values() {
    for (x, v, d) in TABLE {
        let got = ai(x).unwrap();
        let got_d = ai_deriv(x).unwrap();
        assert!((got - v).abs() <= 1e-14 + 1e-13 * v.abs(), "Ai({x}) = {got}, want {v}");
        assert!(
            (got_d - d).abs() <= 1e-14 + 1e-13 * d.abs(),
            "Ai'({x}) = {got_d}, want {d}"
        );
    }
}

#[test]
fn tabulated_zeros() {
    let want = [
        -2.338_107_410_459_767,
        -4.087_949_444_130_97,
        -5.520_559_828_095_551,
        -6.786_708_090_071_759,
        -7.944_133_587_120_853,
    ];
    let table = AiryZeroTable::new(5).unwrap();
    for (k, &w) in want.iter().enumerate() {
        let z = airy_zero(k + 1).unwrap();
        assert!((z - w).abs() < 1e-12, "zero {}: {z} vs {w}", k + 1);
        assert_eq!(table.get(k + 1), Some(z));
    }
    assert!((airy_zero(1).unwrap() - GAMMA_1).abs() < 1e-15);
}

#[test]
fn moments_on_the_half_line() {
    let f = |x: f64| ai(x).unwrap();
    let m0 = integrate(f, 0.0, 40.0, 1e-12, 0.0).unwrap().value;
    assert!((m0 - 1.0 / 3.0).abs() < 1e-12, "{m0}");
    // ∫_0^∞ x Ai(x) dx = -Ai'(0).
    let m1 = integrate(|x| x * f(x), 0.0, 40.0, 1e-12, 0.0).unwrap().value;
    assert!((m1 - 0.258_819_403_792_806_8).abs() < 1e-12, "{m1}");
}

#[test]
fn derivative_integrates_back() {
    // ∫_a^b Ai'(x) dx = Ai(b) - Ai(a) across the oscillatory region.
    for (a, b) in [(-20.0, -3.0), (-8.0, 2.0), (GAMMA_1, 10.0)] {
        let lhs = integrate(|x| ai_deriv(x).unwrap(), a, b, 1e-12, 1e-13).unwrap().value;
        let rhs = ai(b).unwrap() - ai(a).unwrap();
        assert!((lhs - rhs).abs() < 1e-11, "[{a}, {b}]: {lhs} vs {rhs}");
    }
}

#[test]
fn second_derivative_satisfies_the_ode() {
    // Ai'' = x Ai, checked through a centered difference of Ai'.
    let h = 1e-5;
    let mut x = -15.0;
    while x <= 15.0 {
        let second = (ai_deriv(x + h).unwrap() - ai_deriv(x - h).unwrap()) / (2.0 * h);
        let want = x * ai(x).unwrap();
        assert!((second - want).abs() < 1e-8, "x = {x}: {second} vs {want}");
        x += 0.37;
    }
}

#[test]
fn outside_the_window_is_an_error() {
    assert!(ai(-40.5).is_err());
    assert!(ai(41.0).is_err());
    assert!(ai(f64::NAN).is_err());
}
