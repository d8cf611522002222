use radrec::field::{simulate_field, GammaParams, VariogramSpec};
use radrec::kernel::cosine_kernel;
use radrec::oversample::{oversample, NoiseModel};
use radrec::rng::{RngSpec, StreamPurpose};
use radrec::synthesis::reconstruct;
use std::time::Instant;

fn main() {
    let v6 = VariogramSpec::new(6.0).unwrap();
    let g = GammaParams::new(16.0 / 9.0, 0.75).unwrap();
    let noise = NoiseModel::new(0.5f64.sqrt()).unwrap();
    for (n, h) in [(12usize, 1usize), (24, 1), (24, 2), (40, 2), (20, 3)] {
        let k = cosine_kernel(h).unwrap();
        let t0 = Instant::now();
        let f = simulate_field(n, n, v6, g, RngSpec::new(1, StreamPurpose::Field, 0)).unwrap();
        let t_sim = t0.elapsed();
        let obs = oversample(&f, &k, noise, RngSpec::new(1, StreamPurpose::Noise, 0)).unwrap();
        let t1 = Instant::now();
        let _r = reconstruct(&obs, &k).unwrap();
        let t_rec = t1.elapsed();
        println!("{n}x{n} h={h}: sim {:?}  recon {:?}", t_sim, t_rec);
    }
    // Repeat reconstruction to get a steadier number.
    let k = cosine_kernel(2).unwrap();
    let f = simulate_field(40, 40, v6, g, RngSpec::new(2, StreamPurpose::Field, 0)).unwrap();
    let obs = oversample(&f, &k, noise, RngSpec::new(2, StreamPurpose::Noise, 0)).unwrap();
    let t= Instant::now();
    for _ in 0..5 { let _ = reconstruct(&obs, &k).unwrap(); }
    println!("40x40 h=2 recon avg over 5: {:?}", t.elapsed() / 5);
}
