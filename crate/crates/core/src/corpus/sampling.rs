use rand::Rng;

use super::SplitBundle;
use crate::{Error, Result};

/// Draws `k` warm items uniformly, with replacement, from the items `user`
/// has no training interaction with.
pub fn sample_negatives<R: Rng + ?Sized>(
    bundle: &SplitBundle,
    user: usize,
    k: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if user >= bundle.n_users {
        return Err(Error::OutOfBounds {
            index: user,
            len: bundle.n_users,
        });
    }
    let warm = &bundle.warm_items;
    let positives = &bundle.user_pos[user];
    let eligible = warm.len() - positives.len();
    if eligible == 0 {
        return Err(Error::NoNegative(user));
    }

    // Rejection sampling is cheap while positives are a minority of the warm pool.
    if positives.len() * 2 <= warm.len() {
        let mut out = Vec::with_capacity(k);
        while out.len() < k {
            let item = warm[rng.gen_range(0..warm.len())];
            if positives.binary_search(&item).is_err() {
                out.push(item);
            }
        }
        return Ok(out);
    }

    let pool: Vec<usize> = warm
        .iter()
        .copied()
        .filter(|i| positives.binary_search(i).is_err())
        .collect();
    Ok((0..k).map(|_| pool[rng.gen_range(0..pool.len())]).collect())
}
