#![no_main]

use fl_offload::harness::{read_records, read_sweep, write_records};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(records) = read_records(data) {
        let mut buf = Vec::new();
        write_records(&mut buf, &records).expect("records serialize");
        assert_eq!(
            read_records(buf.as_slice())
                .expect("written CSV parses")
                .len(),
            records.len()
        );
    }
    let _ = read_sweep(data);
});
