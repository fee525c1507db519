//! Regenerates the bundled (288, 144) parity-check matrix.
//!
//! cargo run --example gen_peg > data/ldpc_288_144.alist

use turboce::ldpc::{alist, peg};

fn main() {
    let (seed, h) = peg::construct_full_rank(288, 144, 3, 0, 1000).expect("no full-rank seed");
    eprintln!("seed {seed}, girth {}", peg::girth(&h));
    print!("{}", alist::write(&h));
}
