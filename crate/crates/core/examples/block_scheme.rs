//! The block permutation family: which calibration positions get scored,
//! the smallest usable alpha and the exact coverage under exchangeability.

use funcband::conformal::{exact_iid_coverage, BlockScheme};

fn main() -> funcband::Result<()> {
    for (l, b) in [(5, 1), (5, 3), (7, 2), (23, 3), (39, 1)] {
        let s = BlockScheme::new(l, b)?;
        println!(
            "l={l:<3} b={b}  |D|={:<3} D={:?}  min alpha={:.4}  coverage at alpha=0.25: {:.4}",
            s.n_perms(),
            s.d_set(),
            s.min_alpha(),
            exact_iid_coverage(l, b, 0.25)?
        );
    }
    let s = BlockScheme::new(5, 3)?;
    for i in 1..=s.n_perms() {
        println!("pi_{i} = {:?}", s.permutation(i));
    }
    match BlockScheme::new(6, 4) {
        Err(e) => println!("l=6, b=4 rejected: {e}"),
        Ok(_) => unreachable!("7 is not a multiple of 4"),
    }
    Ok(())
}
