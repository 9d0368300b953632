use capillary_harness::table::{Cell, Table};
use capillary_harness::{parse_config, parse_list, read_profile_csv};
use proptest::prelude::*;

proptest! {
    #[test]
    fn list_round_trips(values in proptest::collection::vec(-1e300f64..1e300, 1..20)) {
        let text: Vec<String> = values.iter().map(|v| format!("{v:e}")).collect();
        prop_assert_eq!(parse_list(&text.join(" , ")).unwrap(), values);
    }

    #[test]
    fn list_parser_never_panics(s in "\\PC*") {
        if let Ok(v) = parse_list(&s) {
            prop_assert!(!v.is_empty() && v.iter().all(|x| x.is_finite()));
        }
    }

    #[test]
    fn config_parser_never_panics(s in "\\PC*") {
        let _ = parse_config(&s);
    }

    #[test]
    fn profile_csv_round_trips(rows in proptest::collection::vec((-1e6f64..1e6, 0.0f64..3.0), 1..50)) {
        let mut t = Table::new(&["coordinate", "density"]);
        for (x, r) in &rows {
            t.push(vec![Cell::Num(*x), Cell::Num(*r)]);
        }
        let (x, r) = read_profile_csv(&t.to_csv()[..]).unwrap();
        prop_assert_eq!(x, rows.iter().map(|p| p.0).collect::<Vec<_>>());
        prop_assert_eq!(r, rows.iter().map(|p| p.1).collect::<Vec<_>>());
    }

    #[test]
    fn profile_reader_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..200)) {
        let _ = read_profile_csv(&bytes[..]);
    }
}
