use crate::error::{Error, Result};
use crate::scalar::Real;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
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
// Gauss weights for the odd-indexed Kronrod nodes 1, 3, 5 and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Segment<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

fn gk15<T: Real>(f: &mut impl FnMut(T) -> Result<T>, a: T, b: T) -> Result<Segment<T>> {
    let half = (b - a) * T::lit(0.5);
    let centre = a + half;
    let fc = f(centre)?;
    let mut kronrod = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = half * T::lit(XGK[j]);
        let s = f(centre - dx)? + f(centre + dx)?;
        kronrod += s * T::lit(WGK[j]);
        if j % 2 == 1 {
            gauss += s * T::lit(WG[j / 2]);
        }
    }
    Ok(Segment {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    })
}

/// Adaptive Gauss–Kronrod (7/15) integration of `f` over `[a, b]`.
///
/// Splits the segment with the largest error estimate until the summed
/// estimate is below `max(abs_tol, rel_tol·|I|)`.
pub fn integrate<T: Real>(
    mut f: impl FnMut(T) -> Result<T>,
    a: T,
    b: T,
    rel_tol: T,
    abs_tol: T,
    max_segments: usize,
) -> Result<T> {
    let mut segments = vec![gk15(&mut f, a, b)?];
    loop {
        let total: T = segments.iter().map(|s| s.value).sum();
        let error: T = segments.iter().map(|s| s.error).sum();
        if !total.is_finite() || !error.is_finite() {
            return Err(Error::IntegrationFailure("non-finite integrand".into()));
        }
        if error <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(total);
        }
        if segments.len() >= max_segments {
            return Err(Error::IntegrationFailure(format!(
                "error estimate {:e} above tolerance after {} segments",
                error.as_f64(),
                segments.len()
            )));
        }
        let worst = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.partial_cmp(&y.1.error).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        let seg = segments.swap_remove(worst);
        let mid = seg.a + (seg.b - seg.a) * T::lit(0.5);
        segments.push(gk15(&mut f, seg.a, mid)?);
        segments.push(gk15(&mut f, mid, seg.b)?);
    }
}
