//! Uniformly random pool responses.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::UtterancePair;
use crate::error::{Error, Result};
use crate::Tokens;

fn check(pool: &[UtterancePair]) -> Result<()> {
    if pool.is_empty() {
        return Err(Error::Data("random baseline needs a non-empty pool".into()));
    }
    Ok(())
}

/// One seeded draw.
pub fn rnd(pool: &[UtterancePair], seed: u64) -> Result<&Tokens> {
    check(pool)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(&pool[rng.random_range(0..pool.len())].reference)
}

/// `count` draws from one seeded stream, as pair ids.
pub fn rnd_ids(pool: &[UtterancePair], count: usize, seed: u64) -> Result<Vec<usize>> {
    check(pool)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count).map(|_| rng.random_range(0..pool.len())).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::split_tokens;

    fn pool(n: usize) -> Vec<UtterancePair> {
        (0..n)
            .map(|i| UtterancePair {
                source: split_tokens("q"),
                reference: vec![format!("r{i}")],
                dialogue_id: String::new(),
                turn_index: 0,
                context: vec![],
            })
            .collect()
    }

    #[test]
    fn single_pair_pool() {
        assert_eq!(rnd(&pool(1), 99).unwrap(), &vec!["r0".to_owned()]);
    }

    #[test]
    fn seeded() {
        let p = pool(50);
        assert_eq!(rnd(&p, 5).unwrap(), rnd(&p, 5).unwrap());
        assert_eq!(rnd_ids(&p, 20, 5).unwrap(), rnd_ids(&p, 20, 5).unwrap());
    }

    #[test]
    fn empty_pool_is_an_error() {
        assert!(rnd(&[], 1).is_err());
        assert!(rnd_ids(&[], 3, 1).is_err());
    }

    #[test]
    fn draws_are_uniform() {
        let p = pool(4);
        let mut by_seed = [0usize; 4];
        for seed in 0..10_000 {
            let r = rnd(&p, seed).unwrap();
            by_seed[r[0][1..].parse::<usize>().unwrap()] += 1;
        }
        let mut by_stream = [0usize; 4];
        for id in rnd_ids(&p, 10_000, 17).unwrap() {
            by_stream[id] += 1;
        }
        for c in by_seed.into_iter().chain(by_stream) {
            assert!((2350..=2650).contains(&c), "{c}");
        }
    }
}
