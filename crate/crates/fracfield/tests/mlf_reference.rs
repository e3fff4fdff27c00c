//! Regression values for the Mittag-Leffler evaluator.
//!
//! Each reference was computed offline at 30+ significant digits by two
//! independent routes: the power series summed in 400-digit arithmetic and
//! the real integral representation (or, beyond the series' reach, the
//! integral representation against the algebraic asymptotic expansion).
//! The two agreed to at least 1e-16 relative in every case.

#![allow(clippy::excessive_precision)]

use fracfield::mlf::{mittag_leffler, ml_eval_with, MlMethod, MlQuery};

const REFERENCE: &[(f64, f64, f64, f64)] = &[
    (0.5, 0.5, -1.0, 0.136_606_007_391_949_28),
    (0.3, 1.0, -0.5, 0.632_649_005_943_599_02),
    (0.3, 1.0, -3.0, 0.211_802_633_196_435_78),
    (0.3, 1.0, -40.0, 0.018_979_521_266_478_697),
    (0.5, 1.0, -10.0, 0.056_140_992_743_822_586),
    (0.7, 1.0, -5.0, 0.077_569_357_764_769_810),
    (0.7, 1.0, -25.0, 0.013_806_344_377_170_001),
    (0.9, 1.0, -2.0, 0.163_528_300_016_930_04),
    (0.9, 1.0, -15.0, 0.007_928_602_432_344_447),
    (0.9, 1.0, -45.0, 0.002_426_575_804_948_216_5),
    (0.3, 0.3, -2.0, 0.032_062_399_218_847_495),
    (0.5, 0.5, -8.0, 0.004_308_253_940_708_865_2),
    (0.7, 0.7, -20.0, 0.000_632_997_246_009_697_83),
    (0.9, 0.9, -6.0, 0.005_891_134_264_662_593),
    (0.5, 1.5, -3.0, 0.273_666_282_939_536_68),
    (0.7, 1.7, -12.0, 0.080_853_235_972_879_22),
    (0.3, 2.0, -5.0, 0.182_227_832_471_950_28),
    (0.5, 1.0, 3.0, 16_205.988_853_999_587),
    (0.3, 1.0, 1.5, 158.078_870_590_783_53),
    (0.9, 1.0, 20.0, 1.452_600_326_526_738_7e12),
    (0.7, 0.7, 2.5, 85.801_050_911_283_63),
    (1.5, 1.0, -4.0, -0.272_424_878_909_940_54),
    (1.5, 1.0, 2.0, 3.348_700_896_318_395_4),
];

#[test]
fn matches_high_precision_references() {
    for &(alpha, beta, z, expected) in REFERENCE {
        let got = mittag_leffler(alpha, beta, z).unwrap();
        let rel = ((got - expected) / expected).abs();
        assert!(
            rel < 1e-10,
            "E_{{{alpha},{beta}}}({z}) = {got:e}, expected {expected:e} (rel {rel:e})"
        );
    }
}

#[test]
fn orders_between_one_and_two_on_the_negative_axis() {
    // 500-digit series sums
    let refs = [
        (1.2, 1.0, -30.0, -0.006_189_775_580_038_953_224_7),
        (1.5, 1.0, -104.0, -0.002_689_137_114_475_155_589_2),
        (1.51, 2.82, -103.759_347_543_173_63, 0.010_772_482_583_007_750_058),
        (1.8, 0.5, -500.0, 0.022_593_507_603_660_664_071),
        (1.05, 1.7, -60.0, 0.012_112_042_838_779_587_936),
        (1.95, 1.0, -3000.0, -0.051_555_504_761_339_991_548),
        (1.5, 1.7, -12.0, -0.014_390_316_650_941_954_009),
        (1.3, 0.3, -200.0, 0.000_017_787_747_380_421_582_533),
        (1.7, 1.7, -1000.0, -3.973_665_612_607_021_887_4e-7),
    ];
    for (alpha, beta, z, expect) in refs {
        let got = mittag_leffler(alpha, beta, z).unwrap();
        let tol = if z.abs() <= 50.0 { 1e-10 } else { 1e-7 };
        assert!(
            ((got - expect) / expect).abs() <= tol,
            "E_{{{alpha},{beta}}}({z}) = {got}, want {expect}"
        );
        let forced = ml_eval_with(MlQuery::new(alpha, beta, z).unwrap(), MlMethod::Integral).unwrap();
        assert!(((forced - expect) / expect).abs() <= 1e-9, "integral route: {forced}");
    }
}
