use crate::error::{Error, Result};
use crate::nn::Mlp;
use crate::scalar::Scalar;

/// Sample-size weighted average `sum_k (n_k / n) w_k` of the participants'
/// parameters, where `n` is the total over participants.
pub fn aggregate<T: Scalar>(updates: &[(Mlp<T>, usize)]) -> Result<Mlp<T>> {
    let (first, _) = updates
        .first()
        .ok_or_else(|| Error::Contract("aggregation needs at least one update".into()))?;
    for (k, (params, _)) in updates.iter().enumerate() {
        if !first.same_shape(params) {
            return Err(Error::shape(
                format!("aggregation update {k}"),
                format!("{:?}", first.sizes()),
                format!("{:?}", params.sizes()),
            ));
        }
    }
    let total: usize = updates.iter().map(|(_, n)| n).sum();
    if total == 0 {
        return Err(Error::Contract("aggregation weights sum to zero".into()));
    }
    if let [(only, _)] = updates {
        return Ok(only.clone());
    }
    let total = T::of_usize(total);
    let mut out = first.zeros_like();
    for (params, n) in updates {
        out.add_scaled(T::of_usize(*n) / total, params);
    }
    Ok(out)
}
