use proptest::prelude::*;
use psosvm::data::{normalize, stratified_split_indices, Dataset, SplitSpec};

fn dataset(rows: Vec<Vec<f64>>, positives: usize) -> Dataset<f64> {
    let labels: Vec<i8> = (0..rows.len())
        .map(|i| if i < positives { 1 } else { -1 })
        .collect();
    Dataset::from_rows(rows, &labels).unwrap()
}

fn rows(n: usize, q: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1e3f64..1e3, q), n)
}

proptest! {
    #[test]
    fn split_is_stratified_partition(
        (n, pos, data) in (8usize..120).prop_flat_map(|n| (Just(n), 2..n - 1, rows(n, 2))),
        train_fraction in 0.67f64..0.9,
        seed in any::<u64>(),
    ) {
        let ds = dataset(data, pos);
        let (train, test) = stratified_split_indices(&ds, &SplitSpec::new(train_fraction, seed)).unwrap();
        prop_assert_eq!(train.len() + test.len(), n);
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());

        let global = pos as f64 / n as f64;
        for side in [&train, &test] {
            let p = side.iter().filter(|&&i| i < pos).count() as f64;
            prop_assert!((p - global * side.len() as f64).abs() <= 1.0 + 1e-9);
        }

        let again = stratified_split_indices(&ds, &SplitSpec::new(train_fraction, seed)).unwrap();
        prop_assert_eq!((train, test), again);
    }

    #[test]
    fn normalization_is_idempotent_and_bounded(
        (data, pos) in (2usize..40, 1usize..5)
            .prop_flat_map(|(n, q)| (rows(n, q), 1..n))
    ) {
        let ds = dataset(data, pos);
        let once = normalize(&ds);
        for s in once.samples() {
            prop_assert!(s.features.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
        prop_assert_eq!(normalize(&once), once);
    }
}

#[test]
fn seeds_change_the_split() {
    let data: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64]).collect();
    let ds = dataset(data, 12);
    let splits: Vec<_> = (0..10)
        .map(|s| stratified_split_indices(&ds, &SplitSpec::new(0.75, s)).unwrap())
        .collect();
    assert!(splits.iter().any(|s| *s != splits[0]));
}

#[test]
fn fraction_outside_band_needs_override() {
    let data: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
    let ds = dataset(data, 10);
    assert!(stratified_split_indices(&ds, &SplitSpec::new(0.5, 0)).is_err());
    let (train, _) =
        stratified_split_indices(&ds, &SplitSpec::new(0.5, 0).allow_any_fraction()).unwrap();
    assert_eq!(train.len(), 10);
}
