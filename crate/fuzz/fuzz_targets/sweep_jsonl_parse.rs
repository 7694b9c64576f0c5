#![no_main]

use libfuzzer_sys::fuzz_target;
use pcrlab::harness::{read_jsonl, table};

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = read_jsonl(data) {
        let mut out = Vec::new();
        table::write_jsonl(&rows, &mut out).unwrap();
        let back = read_jsonl(out.as_slice()).expect("re-read");
        assert_eq!(back.len(), rows.len());
    }
});
