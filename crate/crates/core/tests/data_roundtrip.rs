use dea_core::{validate_dataset, Dataset, DmuRecord, RawTable};
use proptest::prelude::*;

fn dataset_strategy() -> impl Strategy<Value = Dataset> {
    (1usize..4, 1usize..4, 1usize..10).prop_flat_map(|(m, n, s)| {
        prop::collection::vec(
            (
                prop::collection::vec(1e-3f64..1e6, m),
                prop::collection::vec(1e-3f64..1e6, n),
            ),
            s,
        )
        .prop_map(move |rows| {
            let records = rows
                .into_iter()
                .enumerate()
                .map(|(k, (inputs, outputs))| DmuRecord {
                    id: format!("DMU-{k}"),
                    inputs,
                    outputs,
                })
                .collect();
            Dataset::new(
                (0..m).map(|j| format!("in{j}")).collect(),
                (0..n).map(|i| format!("out{i}")).collect(),
                records,
            )
            .unwrap()
        })
    })
}

proptest! {
    #[test]
    fn csv_round_trip_is_exact(ds in dataset_strategy()) {
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let raw = RawTable::from_csv(buf.as_slice()).unwrap();
        let back = validate_dataset(&raw, &ds.roles()).unwrap();
        prop_assert_eq!(back, ds);
    }
}
