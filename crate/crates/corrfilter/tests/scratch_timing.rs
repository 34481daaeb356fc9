use std::time::Instant;

use corrfilter::correlation::{pearson, to_distance, WeightScheme};
use corrfilter::dbht::dbht;
use corrfilter::filtergraph::pmfg;
use corrfilter::kmedoids::{kmedoids, PamConfig};
use corrfilter::synth::{generate, NoiseKind, SynthSpec};
use corrfilter::DistanceMatrix;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn random_dist(n: usize, seed: u64) -> DistanceMatrix {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut values = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let d = rng.gen_range(0.1..2.0);
            values[[i, j]] = d;
            values[[j, i]] = d;
        }
    }
    DistanceMatrix::from_values(values).unwrap()
}

#[test]
fn timing_probe() {
    let d = random_dist(342, 1);
    let t = Instant::now();
    let g = pmfg(&d).unwrap();
    println!("pmfg N=342: {:?}, edges {}", t.elapsed(), g.pairs().len());

    let spec = SynthSpec {
        n_assets: 100,
        n_obs: 2000,
        n_sectors: 10,
        market_loading: (0.9, 1.1),
        sector_loading: (0.3, 0.5),
        idio_vol: 1.0,
        noise: NoiseKind::Gaussian,
        rng_seed: 7,
    };
    let out = generate(&spec);
    let t = Instant::now();
    let corr = pearson(&out.panel, WeightScheme::Uniform).unwrap();
    let dist = to_distance(&corr).unwrap();
    println!("pearson N=100 T=2000: {:?}", t.elapsed());
    let t = Instant::now();
    let r = dbht(&dist, &corr).unwrap();
    println!("dbht N=100: {:?}, n_cl {}", t.elapsed(), r.n_cl);

    let t = Instant::now();
    for k in 2..=100 {
        let _ = kmedoids(&dist, &PamConfig::new(k, 0));
    }
    println!("kmedoids sweep N=100 k=2..=100 restarts=10: {:?}", t.elapsed());

    let t = Instant::now();
    let sub = out.panel.window(0, 500);
    let c2 = pearson(&sub, WeightScheme::Uniform).unwrap();
    let d2 = to_distance(&c2).unwrap();
    let r2 = dbht(&d2, &c2).unwrap();
    println!("window pipeline N=100 L=500: {:?}, n_cl {}", t.elapsed(), r2.n_cl);
}
