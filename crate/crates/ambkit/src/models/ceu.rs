use crate::error::{Error, Result};
use crate::setfn::{Capacity, EventSet};

/// Choquet integral of `utils` with respect to `nu`.
///
/// Negative utils are handled by shifting to a nonnegative profile and
/// shifting the result back, which is exact by comonotone additivity.
pub fn ceu_evaluate(nu: &Capacity, utils: &[f64]) -> Result<f64> {
    if utils.len() != nu.k() {
        return Err(Error::Domain(format!(
            "act has {} states, capacity has {}",
            utils.len(),
            nu.k()
        )));
    }
    let shift = utils.iter().copied().fold(0.0f64, f64::min);
    let mut order: Vec<usize> = (0..utils.len()).collect();
    order.sort_by(|&i, &j| utils[j].total_cmp(&utils[i]).then(i.cmp(&j)));
    let mut upper = EventSet::EMPTY;
    let mut v = 0.0;
    for (n, &i) in order.iter().enumerate() {
        upper = upper.with(i);
        let here = utils[i] - shift;
        let next = order.get(n + 1).map_or(0.0, |&j| utils[j] - shift);
        if here > next {
            v += nu.value(upper) * (here - next);
        }
    }
    Ok(v + shift)
}
