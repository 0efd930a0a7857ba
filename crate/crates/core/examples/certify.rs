//! Exact verification of the closed-form order-36 solution in Q(ζ40).

use multiunit::cyclotomic::{build_constants, verify_block_v, verify_constellations};

fn main() {
    let k = build_constants();
    println!("a = {}", k.a);
    println!("b = {}", k.b);
    for r in verify_constellations(&k) {
        println!("{}", r.line());
    }
    println!("V V^† = I: {}", verify_block_v(&k));
    println!("a ≈ {:.15}, b ≈ {:.15}", k.a.embed().re, k.b.embed().re);
}
