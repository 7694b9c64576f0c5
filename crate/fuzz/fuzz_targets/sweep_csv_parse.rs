#![no_main]

use libfuzzer_sys::fuzz_target;
use pcrlab::harness::{read_csv, table};

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = read_csv(data) {
        let mut out = Vec::new();
        table::write_csv(&rows, &mut out).unwrap();
        let back = read_csv(out.as_slice()).expect("re-read");
        assert_eq!(back.len(), rows.len());
    }
});
