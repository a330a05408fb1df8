//! Correlation adaptometry on a synthetic parameter matrix whose columns
//! share a common profile through period 36 and are independent noise after.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sezsim::adaptometry::split_contrast;
use sezsim::{
    correlation_matrix, detect_structure_change, integral_indicator, IndicatorVariant,
    ParameterMatrix,
};

fn synthetic(last_common: usize) -> ParameterMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 12;
    let profile: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
    let values = DMatrix::from_fn(n, 60, |j, t| {
        let e: f64 = rng.random_range(-1.0..1.0);
        if t < last_common {
            profile[j] + 0.5 * e
        } else {
            5.0 * e
        }
    });
    ParameterMatrix::new(
        "synthetic",
        (1..=n).map(|i| format!("p{i}")).collect(),
        values,
    )
    .unwrap()
}

fn main() -> sezsim::Result<()> {
    for (label, last) in [("with break", 36), ("without break", 60)] {
        let r = correlation_matrix(&synthetic(last))?;
        let g = integral_indicator(&r, IndicatorVariant::TotalAbs);
        let breaks = detect_structure_change(&r, 0.3);
        println!("{label:>14}: G = {:8.2}, breaks {breaks:?}", g.scalar);
        if let Some(&b) = breaks.first() {
            println!("{:>14}  contrast at {b}: {:.3}", "", split_contrast(&r, b));
        }
        let series: Vec<String> = [1, 12, 24, 36, 37, 48, 60]
            .iter()
            .map(|&t| format!("G({t})={:.1}", g.series[t - 1]))
            .collect();
        println!("{:>14}  {}", "", series.join("  "));
    }
    Ok(())
}
