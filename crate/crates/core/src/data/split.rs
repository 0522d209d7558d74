use std::collections::BTreeSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::SignalRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct DisjointSplit {
    pub train: Vec<SignalRecord>,
    pub validation: Vec<SignalRecord>,
    pub held_out_listeners: BTreeSet<String>,
    pub held_out_systems: BTreeSet<String>,
}

#[derive(Debug, Clone, Default)]
pub struct RandomSplit {
    pub train: Vec<SignalRecord>,
    pub validation: Vec<SignalRecord>,
}

/// Holds out every record whose listener or system is among a random
/// selection of `n_listeners` listeners and `n_systems` systems.
///
/// Candidates are drawn from the sorted distinct IDs, listeners first, from a
/// single ChaCha8 stream seeded with `seed`. Record order is preserved in both
/// outputs.
pub fn build_disjoint_validation(
    records: &[SignalRecord],
    n_listeners: usize,
    n_systems: usize,
    seed: u64,
) -> Result<DisjointSplit> {
    let listeners: Vec<&str> = records
        .iter()
        .map(|r| r.listener_id.as_str())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let systems: Vec<&str> = records
        .iter()
        .map(|r| r.system_id.as_str())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if listeners.len() < n_listeners || systems.len() < n_systems {
        return Err(Error::Split(format!(
            "need {n_listeners} listeners and {n_systems} systems, found {} and {} \
             (short by {} listeners, {} systems)",
            listeners.len(),
            systems.len(),
            n_listeners.saturating_sub(listeners.len()),
            n_systems.saturating_sub(systems.len()),
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let held_out_listeners: BTreeSet<String> = listeners
        .choose_multiple(&mut rng, n_listeners)
        .map(|s| s.to_string())
        .collect();
    let held_out_systems: BTreeSet<String> = systems
        .choose_multiple(&mut rng, n_systems)
        .map(|s| s.to_string())
        .collect();

    let (validation, train) = records.iter().cloned().partition(|r| {
        held_out_listeners.contains(&r.listener_id) || held_out_systems.contains(&r.system_id)
    });
    Ok(DisjointSplit {
        train,
        validation,
        held_out_listeners,
        held_out_systems,
    })
}

/// Moves `round(fraction * n)` uniformly chosen records into a validation set.
pub fn build_random_validation(
    records: &[SignalRecord],
    fraction: f64,
    seed: u64,
) -> Result<RandomSplit> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "validation fraction {fraction} must lie strictly between 0 and 1"
        )));
    }
    let n_val = (fraction * records.len() as f64).round() as usize;
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut in_val = vec![false; records.len()];
    for &i in &order[..n_val] {
        in_val[i] = true;
    }
    let mut split = RandomSplit::default();
    for (record, val) in records.iter().zip(in_val) {
        if val {
            split.validation.push(record.clone());
        } else {
            split.train.push(record.clone());
        }
    }
    Ok(split)
}

/// All partitions used for one challenge split.
#[derive(Debug, Clone, Default)]
pub struct DatasetSplit {
    pub train: Vec<SignalRecord>,
    pub disjoint_validation: Vec<SignalRecord>,
    pub random_validation: Vec<SignalRecord>,
    pub evaluation: Vec<SignalRecord>,
    pub held_out_listeners: BTreeSet<String>,
    pub held_out_systems: BTreeSet<String>,
}

impl DatasetSplit {
    /// Builds the partitions for `split_id`: two listeners and two systems
    /// held out for disjoint validation, then 10% of what remains held out at
    /// random. With `final_run` the disjoint set is merged back into training
    /// before the random draw.
    pub fn build(
        train_records: &[SignalRecord],
        eval_records: &[SignalRecord],
        split_id: u8,
        seed: u64,
        final_run: bool,
    ) -> Result<Self> {
        let pool: Vec<SignalRecord> = train_records
            .iter()
            .filter(|r| r.split_id == split_id)
            .cloned()
            .collect();
        let evaluation: Vec<SignalRecord> = eval_records
            .iter()
            .filter(|r| r.split_id == split_id)
            .cloned()
            .collect();
        if pool.is_empty() {
            return Err(Error::Split(format!("no training records for split {split_id}")));
        }
        let disjoint = build_disjoint_validation(&pool, 2, 2, seed)?;
        let (remaining, disjoint_validation) = if final_run {
            (pool, Vec::new())
        } else {
            (disjoint.train, disjoint.validation)
        };
        let random = build_random_validation(&remaining, 0.1, seed.wrapping_add(1))?;
        Ok(DatasetSplit {
            train: random.train,
            disjoint_validation,
            random_validation: random.validation,
            evaluation,
            held_out_listeners: disjoint.held_out_listeners,
            held_out_systems: disjoint.held_out_systems,
        })
    }
}
