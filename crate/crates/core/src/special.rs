//! Gamma function via a 14-term Lanczos series (g = 671/128).

const LANCZOS_G_SHIFT: f64 = 5.242_187_5;
const LANCZOS_C0: f64 = 0.999_999_999_999_997_1;
const LANCZOS_COEF: [f64; 14] = [
    57.156_235_665_862_92,
    -59.597_960_355_475_49,
    14.136_097_974_741_747,
    -0.491_913_816_097_620_2,
    0.339_946_499_848_118_9e-4,
    0.465_236_289_270_485_8e-4,
    -0.983_744_753_048_795_6e-4,
    0.158_088_703_224_912_5e-3,
    -0.210_264_441_724_104_9e-3,
    0.217_439_618_115_212_64e-3,
    -0.164_318_106_536_763_9e-3,
    0.844_182_239_838_527_4e-4,
    -0.261_908_384_015_814_1e-4,
    0.368_991_826_595_316_2e-5,
];
const SQRT_TWO_PI: f64 = 2.506_628_274_631_000_5;

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NAN;
    }
    let tmp = x + LANCZOS_G_SHIFT;
    let tmp = (x + 0.5) * tmp.ln() - tmp;
    let mut ser = LANCZOS_C0;
    let mut y = x;
    for c in LANCZOS_COEF {
        y += 1.0;
        ser += c / y;
    }
    tmp + (SQRT_TWO_PI * ser / x).ln()
}

/// `Γ(x)` for `x > 0`. Relative error stays below 1e-13 on (0, 20].
pub fn gamma(x: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NAN;
    }
    // Recurse small arguments upward where the series is most accurate.
    if x < 1.0 {
        return gamma(x + 1.0) / x;
    }
    ln_gamma(x).exp()
}
