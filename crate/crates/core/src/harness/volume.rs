use rayon::prelude::*;

use super::rng::stream_rng;
use crate::error::{Error, Result};
use crate::systems::Rect;

/// Monte-Carlo volume of `{x ∈ region : member(x)}` from `samples` uniform
/// draws; draw `i` uses stream `i` of `seed`.
pub fn volume_estimate<F>(member: F, region: &Rect, samples: usize, seed: u64) -> Result<f64>
where
    F: Fn(&[f64]) -> bool + Sync,
{
    if samples == 0 {
        return Err(Error::InvalidParameter(
            "volume estimation needs at least one sample".into(),
        ));
    }
    region.validate()?;
    let hits = (0..samples as u64)
        .into_par_iter()
        .filter(|&i| member(&region.sample(&mut stream_rng(seed, i))))
        .count();
    Ok(hits as f64 / samples as f64 * region.volume())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_tests() {
        let region = Rect::new(vec![-1.0, 0.0], vec![1.0, 3.0]).unwrap();
        assert_eq!(volume_estimate(|_| true, &region, 10, 1).unwrap(), 6.0);
        assert_eq!(volume_estimate(|_| false, &region, 10, 1).unwrap(), 0.0);
    }
}
