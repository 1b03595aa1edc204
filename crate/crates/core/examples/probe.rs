use ospchain_core::fusion::y_plateau_k1;
use ospchain_core::tba::{solve_tba, TbaConfig};

fn main() {
    for beta in [0.5, 2.0] {
        let cfg = TbaConfig { m_max: 18, ..TbaConfig::default() };
        let sol = solve_tba(&cfg, beta, -1.0).unwrap();
        println!("beta={beta}:");
        let mut prev = f64::NAN;
        for m in 1..=18usize {
            let y0 = sol.y[m - 1].samples[sol.y[m - 1].len() / 2].re;
            let dev = (y0 / y_plateau_k1(m)).ln();
            println!("  m={m}: dev(0) = {dev:+.6e}  ratio {:.4}", dev / prev);
            prev = dev;
        }
    }
}
