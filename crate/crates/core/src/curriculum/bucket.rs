use crate::curriculum::DifficultyRecord;
use crate::error::{Error, Result};

/// Records with buckets assigned, sorted by `(difficulty, id)`, plus the
/// `(min, max)` difficulty of each bucket.
#[derive(Debug, Clone, PartialEq)]
pub struct Bucketing {
    pub records: Vec<DifficultyRecord>,
    pub boundaries: Vec<(f64, f64)>,
}

/// Equal-count quantile buckets; bucket 0 is easiest and sizes differ by at
/// most one (earlier buckets take the remainder).
pub fn bucketize(records: &[DifficultyRecord], k: usize) -> Result<Bucketing> {
    if k == 0 {
        return Err(Error::config("buckets", "need at least one bucket"));
    }
    if k > records.len() {
        return Err(Error::config("buckets", format!("{k} buckets for {} records", records.len())));
    }
    let mut sorted = records.to_vec();
    sorted.sort_by(|a, b| a.difficulty.total_cmp(&b.difficulty).then_with(|| a.id.cmp(&b.id)));

    let (base, extra) = (sorted.len() / k, sorted.len() % k);
    let mut boundaries = Vec::with_capacity(k);
    let mut start = 0;
    for bucket in 0..k {
        let size = base + usize::from(bucket < extra);
        let group = &mut sorted[start..start + size];
        for r in group.iter_mut() {
            r.bucket = Some(bucket);
        }
        boundaries.push((group[0].difficulty, group[size - 1].difficulty));
        start += size;
    }
    Ok(Bucketing { records: sorted, boundaries })
}

/// Mirrors bucket indices (`b -> k-1-b`) so a cumulative schedule runs
/// hardest-first.
pub fn reverse_buckets(records: &[DifficultyRecord], k: usize) -> Vec<DifficultyRecord> {
    records
        .iter()
        .cloned()
        .map(|mut r| {
            r.bucket = r.bucket.map(|b| k - 1 - b);
            r
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(id: &str, difficulty: f64) -> DifficultyRecord {
        DifficultyRecord { id: id.into(), fold: 0, predictions: vec![], num_correct: 0, difficulty, bucket: None }
    }

    fn buckets_of(b: &Bucketing) -> Vec<(String, usize)> {
        b.records.iter().map(|r| (r.id.clone(), r.bucket.unwrap())).collect()
    }

    #[test]
    fn six_into_three() {
        let recs: Vec<_> =
            [1.0, 0.5, 0.0, 0.75, 0.25, 0.0].iter().enumerate().map(|(i, &d)| rec(&format!("r{i}"), d)).collect();
        let b = bucketize(&recs, 3).unwrap();
        assert_eq!(
            buckets_of(&b),
            [("r2", 0), ("r5", 0), ("r4", 1), ("r1", 1), ("r3", 2), ("r0", 2)].map(|(i, k)| (i.to_owned(), k))
        );
        assert_eq!(b.boundaries, vec![(0.0, 0.0), (0.25, 0.5), (0.75, 1.0)]);
    }

    #[test]
    fn single_bucket() {
        let recs = vec![rec("a", 0.3), rec("b", 0.1)];
        let b = bucketize(&recs, 1).unwrap();
        assert!(b.records.iter().all(|r| r.bucket == Some(0)));
    }

    #[test]
    fn ties_split_by_id() {
        let recs = vec![rec("c", 0.5), rec("a", 0.5), rec("b", 0.5)];
        let b = bucketize(&recs, 2).unwrap();
        assert_eq!(buckets_of(&b), [("a", 0), ("b", 0), ("c", 1)].map(|(i, k)| (i.to_owned(), k)));
    }

    #[test]
    fn too_many_buckets() {
        assert!(matches!(bucketize(&[rec("a", 0.0)], 2), Err(Error::Config { .. })));
    }

    #[test]
    fn reversal() {
        let b = bucketize(&[rec("a", 0.0), rec("b", 0.5), rec("c", 1.0)], 3).unwrap();
        let rev = reverse_buckets(&b.records, 3);
        assert_eq!(rev.iter().map(|r| r.bucket.unwrap()).collect::<Vec<_>>(), [2, 1, 0]);
    }

    proptest! {
        #[test]
        fn monotone_and_balanced(
            correct in proptest::collection::vec(0usize..=4, 1..80),
            k in 1usize..6,
        ) {
            prop_assume!(k <= correct.len());
            let recs: Vec<_> = correct
                .iter()
                .enumerate()
                .map(|(i, &c)| rec(&format!("id{i:03}"), 1.0 - c as f64 / 4.0))
                .collect();
            let b = bucketize(&recs, k).unwrap();
            let mut sizes = vec![0usize; k];
            let mut lo = vec![f64::INFINITY; k];
            let mut hi = vec![f64::NEG_INFINITY; k];
            for r in &b.records {
                let bk = r.bucket.unwrap();
                sizes[bk] += 1;
                lo[bk] = lo[bk].min(r.difficulty);
                hi[bk] = hi[bk].max(r.difficulty);
            }
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            for i in 1..k {
                prop_assert!(hi[i - 1] <= lo[i]);
            }
        }
    }
}
