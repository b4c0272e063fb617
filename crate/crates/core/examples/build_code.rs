//! Regenerates the shipped parity-check matrix:
//!
//! ```text
//! cargo run --release -p flash-dtl --example build_code -- crates/core/data/ldpc_4544_4096.alist
//! ```

use flash_dtl::ecc::{construct_code, degree_counts, write_alist, DegreeProfile, Encoder};

fn main() {
    let path = std::env::args().nth(1).unwrap_or_else(|| "ldpc_4544_4096.alist".into());
    let h = construct_code(&DegreeProfile::flash_4544(), 4544).expect("construction succeeds");
    let k = Encoder::new(&h).expect("full rank").k();
    std::fs::write(&path, write_alist(&h)).expect("write alist");
    println!("wrote {path}: n = {}, m = {}, k = {k}, degrees {:?}", h.n(), h.m(), degree_counts(&h));
}
