use bhess::io::{read_field, read_manifest, read_trace_csv, write_field, write_manifest, write_trace_csv, TraceRow};
use bhess_core::{Field, ScalarKind};
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    any::<f64>().prop_filter("finite", |v| v.is_finite())
}

fn row() -> impl Strategy<Value = TraceRow> {
    (
        0usize..10_000,
        finite(),
        finite(),
        proptest::option::of(finite()),
        proptest::option::of(finite()),
        0usize..100,
        proptest::option::of(0.0f64..1e6),
    )
        .prop_map(|(iter, f, grad_norm, alpha, beta, restart, seconds)| TraceRow {
            iter,
            f,
            grad_norm,
            alpha,
            beta,
            restart,
            seconds,
        })
}

proptest! {
    #[test]
    fn trace_csv_round_trips_exactly(rows in proptest::collection::vec(row(), 0..20)) {
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &rows, &["comment".into()]).unwrap();
        prop_assert_eq!(read_trace_csv(&buf[..]).unwrap(), rows);
    }
}

#[test]
fn field_blob_round_trips_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.bin");
    let real = Field::from_vec(&[3, 2], vec![1.5, -0.0, f64::MAX, 1e-310, 2.0, 3.0]).unwrap();
    write_field(&path, &real).unwrap();
    assert_eq!(read_field(&path).unwrap(), real);
    let complex = Field::zeros(&[2, 2], ScalarKind::Complex).unwrap();
    write_field(&path, &complex).unwrap();
    assert_eq!(read_field(&path).unwrap(), complex);
    std::fs::write(&path, b"short").unwrap();
    assert!(read_field(&path).is_err());
}

#[test]
fn manifest_keeps_order_and_rejects_bad_keys() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.txt");
    let entries = vec![("n".to_owned(), "32".to_owned()), ("solvers".to_owned(), "bh-cg,cg-fr".to_owned())];
    write_manifest(&path, &entries).unwrap();
    assert_eq!(read_manifest(&path).unwrap(), entries);
    assert!(write_manifest(&path, &[("a=b".into(), "c".into())]).is_err());
}
