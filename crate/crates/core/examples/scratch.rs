use flagmeas_core::grassmann::RngStream;
use flagmeas_core::verify::check_rank_basis;
use std::time::Instant;

fn main() {
    let stream = RngStream::new(0xF1A6);
    let configs: [(usize, usize, usize, bool); 5] = [
        (3, 1, 1, true),
        (4, 1, 1, false),
        (5, 2, 2, false),
        (5, 1, 2, false),
        (6, 2, 3, false),
    ];
    let t_all = Instant::now();
    for (i, (n, k, p, exc)) in configs.iter().enumerate() {
        let t0 = Instant::now();
        let r = check_rank_basis(*n, *k, *p, 12, 1 << 17, stream.substream(i as u64), *exc).unwrap();
        let s1 = r.observed[0];
        let ratios: Vec<String> = r.observed.iter().map(|x| format!("{:.5}", x / s1)).collect();
        println!(
            "({n},{k},{p},exc={exc}): passed={} ratios={ratios:?} samples={:.2e} in {:.1}s",
            r.passed,
            r.samples as f64,
            t0.elapsed().as_secs_f64()
        );
    }
    println!("total {:.1}s", t_all.elapsed().as_secs_f64());
}
