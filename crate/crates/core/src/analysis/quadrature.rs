//! Adaptive Gauss–Kronrod (7/15) quadrature.

#![allow(clippy::excessive_precision)]

// Kronrod abscissae (nonnegative half) and weights; every odd-indexed abscissa is a
// 7-point Gauss node.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_DEPTH: usize = 60;

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, lo: f64, hi: f64) -> (f64, f64) {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kron += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kron * half, ((kron - gauss) * half).abs())
}

/// `∫_lo^hi f` to within `max(abs_tol, rel_tol · |result|)` (estimated), by recursive
/// bisection with the tolerance split proportionally to interval width.
pub fn integrate<F: FnMut(f64) -> f64>(f: &mut F, lo: f64, hi: f64, abs_tol: f64, rel_tol: f64) -> f64 {
    let (whole, _) = kronrod(f, lo, hi);
    let tol = abs_tol.max(rel_tol * whole.abs()).max(f64::MIN_POSITIVE);
    recurse(f, lo, hi, tol / (hi - lo), 0)
}

fn recurse<F: FnMut(f64) -> f64>(f: &mut F, lo: f64, hi: f64, tol_density: f64, depth: usize) -> f64 {
    let (value, err) = kronrod(f, lo, hi);
    if err <= tol_density * (hi - lo) || depth >= MAX_DEPTH {
        return value;
    }
    let mid = 0.5 * (lo + hi);
    recurse(f, lo, mid, tol_density, depth + 1) + recurse(f, mid, hi, tol_density, depth + 1)
}
