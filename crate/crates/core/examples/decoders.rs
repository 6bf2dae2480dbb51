//! Scores one triplet and its reverse under each decoder: DistMult is
//! symmetric by construction, TransE and HolE are not.

use ndarray::array;
use stancegraph::autoenc::{raw_score, DecoderKind};
use stancegraph::optim::logistic;

fn main() {
    let a = array![0.3, -1.2, 0.8, 0.5];
    let b = array![-0.4, 0.9, 0.1, 1.1];
    let r = array![1.0, 0.5, -0.7, 0.2];
    for kind in DecoderKind::ALL {
        let fwd = raw_score(kind, 1.0, a.view(), r.view(), b.view());
        let back = raw_score(kind, 1.0, b.view(), r.view(), a.view());
        println!(
            "{kind:>8}: s(a,r,b)={:.4}  s(b,r,a)={:.4}  symmetric={}",
            logistic(fwd),
            logistic(back),
            fwd == back
        );
    }
}
