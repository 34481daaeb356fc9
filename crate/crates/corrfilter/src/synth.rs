//! Synthetic return panels with planted market and sector structure.
//!
//! Each ticker follows r_i(t) = beta_i M(t) + gamma_i F_{s(i)}(t) +
//! eps_i(t) with independent unit-variance Gaussian factors and seeded
//! noise, so clustering and detrending code can be validated against a
//! known ground truth. Noise streams are per-ticker, derived from the
//! master seed, which keeps the panel reproducible ticker by ticker.

use chrono::{Datelike, NaiveDate, Weekday};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::Serialize;

use crate::ingest::{ReturnsPanel, Taxonomy};

/// Idiosyncratic noise law; Student-t is scaled to the requested
/// volatility when df > 2 (otherwise the raw variate is scaled as-is,
/// its variance being undefined).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum NoiseKind {
    Gaussian,
    StudentT { df: f64 },
}

/// Generator parameters; loadings are drawn uniformly per ticker from
/// the given closed ranges.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SynthSpec {
    pub n_assets: usize,
    pub n_obs: usize,
    pub n_sectors: usize,
    pub market_loading: (f64, f64),
    pub sector_loading: (f64, f64),
    pub idio_vol: f64,
    pub noise: NoiseKind,
    pub rng_seed: u64,
}

impl SynthSpec {
    fn validate(&self) {
        assert!(self.n_assets >= 1, "need at least one ticker");
        assert!(self.n_obs >= 1, "need at least one observation");
        assert!(
            (1..=self.n_assets).contains(&self.n_sectors),
            "sector count must lie in 1..=n_assets"
        );
        assert!(self.idio_vol > 0.0, "idiosyncratic volatility must be positive");
        assert!(
            self.market_loading.0 <= self.market_loading.1
                && self.sector_loading.0 <= self.sector_loading.1,
            "loading ranges must be ordered"
        );
        if let NoiseKind::StudentT { df } = self.noise {
            assert!(df > 0.0, "Student-t df must be positive");
        }
    }
}

/// Generated panel plus the planted ground truth.
#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub panel: ReturnsPanel,
    pub taxonomy: Taxonomy,
    /// beta_i, one per ticker.
    pub market_loadings: Vec<f64>,
    /// gamma_i, one per ticker.
    pub sector_loadings: Vec<f64>,
    /// Sector id per ticker (round-robin `i % n_sectors`).
    pub sector_of: Vec<usize>,
}

impl SynthOutput {
    /// Partition of tickers by planted sector.
    pub fn planted_partition(&self) -> crate::linkage::Partition {
        crate::linkage::Partition::canonicalize(&self.sector_of).expect("nonempty panel")
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// `count` consecutive weekdays starting at `start` (itself included
/// when it is a weekday).
pub fn weekday_dates(start: NaiveDate, count: usize) -> Vec<NaiveDate> {
    let mut dates = Vec::with_capacity(count);
    let mut d = start;
    while dates.len() < count {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            dates.push(d);
        }
        d = d.succ_opt().expect("date range stays in bounds");
    }
    dates
}

fn uniform_in(rng: &mut ChaCha20Rng, range: (f64, f64)) -> f64 {
    if range.0 == range.1 {
        range.0
    } else {
        rng.gen_range(range.0..=range.1)
    }
}

/// Generates the panel and its planted taxonomy.
///
/// The master seed drives loadings and the common factors; ticker `i`'s
/// noise comes from an independent stream seeded by mixing `i` into the
/// master seed. Deterministic for a fixed spec.
pub fn generate(spec: &SynthSpec) -> SynthOutput {
    spec.validate();
    let n = spec.n_assets;
    let t_obs = spec.n_obs;

    let mut master = ChaCha20Rng::seed_from_u64(spec.rng_seed);
    let market_loadings: Vec<f64> =
        (0..n).map(|_| uniform_in(&mut master, spec.market_loading)).collect();
    let sector_loadings: Vec<f64> =
        (0..n).map(|_| uniform_in(&mut master, spec.sector_loading)).collect();
    let market: Vec<f64> = (0..t_obs).map(|_| master.sample(StandardNormal)).collect();
    let mut sector_factors = Array2::<f64>::zeros((spec.n_sectors, t_obs));
    for s in 0..spec.n_sectors {
        for t in 0..t_obs {
            sector_factors[[s, t]] = master.sample::<f64, _>(StandardNormal);
        }
    }

    let noise_scale = match spec.noise {
        NoiseKind::Gaussian => spec.idio_vol,
        NoiseKind::StudentT { df } if df > 2.0 => spec.idio_vol * ((df - 2.0) / df).sqrt(),
        NoiseKind::StudentT { .. } => spec.idio_vol,
    };

    let sector_of: Vec<usize> = (0..n).map(|i| i % spec.n_sectors).collect();
    let mut returns = Array2::<f64>::zeros((n, t_obs));
    for i in 0..n {
        let mut noise_rng =
            ChaCha20Rng::seed_from_u64(splitmix64(spec.rng_seed ^ (i as u64).wrapping_mul(0xa076_1d64_78bd_642f)));
        let s = sector_of[i];
        for t in 0..t_obs {
            let eps: f64 = match spec.noise {
                NoiseKind::Gaussian => noise_rng.sample(StandardNormal),
                NoiseKind::StudentT { df } => {
                    StudentT::new(df).expect("df validated").sample(&mut noise_rng)
                }
            };
            returns[[i, t]] = market_loadings[i] * market[t]
                + sector_loadings[i] * sector_factors[[s, t]]
                + noise_scale * eps;
        }
    }

    let tickers: Vec<String> = (0..n).map(|i| format!("T{i:04}")).collect();
    let dates = weekday_dates(
        NaiveDate::from_ymd_opt(2000, 1, 3).expect("fixed epoch"),
        t_obs,
    );
    let taxonomy = Taxonomy::from_rows(tickers.iter().enumerate().map(|(i, t)| {
        (
            t.clone(),
            format!("SEC{:02}", sector_of[i]),
            format!("IND{:02}", sector_of[i] / 2),
        )
    }))
    .expect("generated labels are well-formed");

    SynthOutput {
        panel: ReturnsPanel {
            tickers,
            dates,
            returns,
        },
        taxonomy,
        market_loadings,
        sector_loadings,
        sector_of,
    }
}

/// Writes the panel as the wide price CSV the ingest side reads:
/// `date,<ticker>,...` with prices compounded from 100 at a lead-in
/// date. Shortest-repr float formatting makes the round trip exact.
pub fn write_price_csv<W: std::io::Write>(panel: &ReturnsPanel, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["date".to_string()];
    header.extend(panel.tickers.iter().cloned());
    w.write_record(&header)?;

    let first = panel.dates.first().expect("nonempty panel");
    let mut lead = first.pred_opt().expect("date range stays in bounds");
    while matches!(lead.weekday(), Weekday::Sat | Weekday::Sun) {
        lead = lead.pred_opt().expect("date range stays in bounds");
    }

    let n = panel.n_assets();
    let mut prices = vec![100.0f64; n];
    let mut record = vec![lead.format("%Y-%m-%d").to_string()];
    record.extend(prices.iter().map(|p| p.to_string()));
    w.write_record(&record)?;

    for (t, date) in panel.dates.iter().enumerate() {
        let mut record = vec![date.format("%Y-%m-%d").to_string()];
        for (i, price) in prices.iter_mut().enumerate() {
            *price *= panel.returns[[i, t]].exp();
            record.push(price.to_string());
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the `ticker,supersector,industry` CSV the ingest side reads.
pub fn write_taxonomy_csv<W: std::io::Write>(
    tax: &Taxonomy,
    tickers: &[String],
    out: W,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["ticker", "supersector", "industry"])?;
    for t in tickers {
        let (sector, industry) = tax.get(t).expect("ticker classified");
        w.write_record([t.as_str(), sector, industry])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlation::{mean_offdiagonal, pearson, to_distance, WeightScheme};
    use crate::dbht::dbht;
    use crate::ingest::{detrend_market_mode, log_returns, read_prices, read_taxonomy, CsvLayout};
    use crate::metrics::adjusted_rand;

    fn base_spec() -> SynthSpec {
        SynthSpec {
            n_assets: 30,
            n_obs: 400,
            n_sectors: 5,
            market_loading: (0.0, 0.0),
            sector_loading: (0.0, 0.0),
            idio_vol: 1.0,
            noise: NoiseKind::Gaussian,
            rng_seed: 11,
        }
    }

    #[test]
    fn seeded_generation_is_deterministic() {
        let spec = base_spec();
        let a = generate(&spec);
        let b = generate(&spec);
        assert_eq!(a.panel.returns, b.panel.returns);
        assert_eq!(a.market_loadings, b.market_loadings);
        let c = generate(&SynthSpec { rng_seed: 12, ..spec });
        assert_ne!(a.panel.returns, c.panel.returns);
    }

    #[test]
    fn round_robin_sectors_and_labels() {
        let out = generate(&SynthSpec {
            n_assets: 7,
            n_sectors: 3,
            n_obs: 5,
            ..base_spec()
        });
        assert_eq!(out.sector_of, vec![0, 1, 2, 0, 1, 2, 0]);
        assert_eq!(out.taxonomy.get("T0003"), Some(("SEC00", "IND00")));
        assert_eq!(out.taxonomy.get("T0005"), Some(("SEC02", "IND01")));
        assert_eq!(out.planted_partition().labels(), &[0, 1, 2, 0, 1, 2, 0]);
    }

    #[test]
    fn dates_are_weekdays_from_the_epoch() {
        let out = generate(&SynthSpec { n_obs: 7, ..base_spec() });
        assert_eq!(out.panel.dates[0], NaiveDate::from_ymd_opt(2000, 1, 3).unwrap());
        // 2000-01-08/09 fall on a weekend and must be skipped.
        assert_eq!(out.panel.dates[5], NaiveDate::from_ymd_opt(2000, 1, 10).unwrap());
        for d in &out.panel.dates {
            assert!(!matches!(d.weekday(), Weekday::Sat | Weekday::Sun));
        }
    }

    #[test]
    fn pure_noise_panels_are_uncorrelated() {
        let out = generate(&SynthSpec {
            n_assets: 100,
            n_obs: 2000,
            rng_seed: 5,
            ..base_spec()
        });
        let corr = pearson(&out.panel, WeightScheme::Uniform).unwrap();
        assert!(mean_offdiagonal(&corr).abs() < 0.02);
    }

    #[test]
    fn sector_structure_is_recovered_by_dbht() {
        let out = generate(&SynthSpec {
            n_assets: 45,
            n_obs: 3000,
            n_sectors: 5,
            sector_loading: (0.8, 1.2),
            rng_seed: 21,
            ..base_spec()
        });
        let corr = pearson(&out.panel, WeightScheme::Uniform).unwrap();
        let dist = to_distance(&corr).unwrap();
        let result = dbht(&dist, &corr).unwrap();
        let ari = adjusted_rand(&result.partition, &out.planted_partition()).unwrap();
        assert!(ari >= 0.9, "ARI {ari} with n_cl {}", result.n_cl);
    }

    #[test]
    fn detrending_strips_a_strong_market_mode() {
        let out = generate(&SynthSpec {
            n_assets: 60,
            n_obs: 1500,
            market_loading: (0.8, 1.2),
            sector_loading: (0.3, 0.5),
            rng_seed: 33,
            ..base_spec()
        });
        let raw = pearson(&out.panel, WeightScheme::Uniform).unwrap();
        let (residual, fit) = detrend_market_mode(&out.panel).unwrap();
        let detrended = pearson(&residual, WeightScheme::Uniform).unwrap();
        let before = mean_offdiagonal(&raw);
        let after = mean_offdiagonal(&detrended);
        assert!(fit.beta.iter().all(|b| *b > 0.0));
        assert!(
            after <= 0.6 * before,
            "mean correlation only moved {before} -> {after}"
        );
    }

    #[test]
    fn same_sector_correlation_estimates_converge() {
        // Population values from the drawn loadings; the empirical gap
        // must approach them as the window grows.
        let mut errs = Vec::new();
        for &t_obs in &[500usize, 2000, 8000] {
            let out = generate(&SynthSpec {
                n_assets: 20,
                n_obs: t_obs,
                n_sectors: 4,
                sector_loading: (0.6, 0.9),
                rng_seed: 77,
                ..base_spec()
            });
            let corr = pearson(&out.panel, WeightScheme::Uniform).unwrap();
            let mut err_max = 0.0f64;
            for i in 0..20 {
                for j in (i + 1)..20 {
                    let expected = if out.sector_of[i] == out.sector_of[j] {
                        let gi = out.sector_loadings[i];
                        let gj = out.sector_loadings[j];
                        gi * gj
                            / ((gi * gi + 1.0).sqrt() * (gj * gj + 1.0).sqrt())
                    } else {
                        0.0
                    };
                    err_max = err_max.max((corr.values[[i, j]] - expected).abs());
                }
            }
            errs.push(err_max);
        }
        assert!(errs[2] < errs[0], "errors did not shrink: {errs:?}");
        assert!(errs[2] < 0.05, "largest error at T=8000: {}", errs[2]);
    }

    #[test]
    fn same_sector_pairs_correlate_more_strongly() {
        let out = generate(&SynthSpec {
            n_assets: 24,
            n_obs: 4000,
            n_sectors: 4,
            sector_loading: (0.7, 1.0),
            rng_seed: 13,
            ..base_spec()
        });
        let corr = pearson(&out.panel, WeightScheme::Uniform).unwrap();
        let (mut same_sum, mut same_n, mut cross_sum, mut cross_n) = (0.0, 0u32, 0.0, 0u32);
        for i in 0..24 {
            for j in (i + 1)..24 {
                if out.sector_of[i] == out.sector_of[j] {
                    same_sum += corr.values[[i, j]];
                    same_n += 1;
                } else {
                    cross_sum += corr.values[[i, j]];
                    cross_n += 1;
                }
            }
        }
        assert!(same_sum / same_n as f64 > cross_sum / cross_n as f64 + 0.2);
    }

    #[test]
    fn student_t_noise_is_scaled_and_seeded() {
        let spec = SynthSpec {
            noise: NoiseKind::StudentT { df: 5.0 },
            n_obs: 4000,
            ..base_spec()
        };
        let a = generate(&spec);
        let b = generate(&spec);
        assert_eq!(a.panel.returns, b.panel.returns);
        // Unit target volatility: sample variance should sit near 1.
        let row = a.panel.returns.row(0);
        let mean = row.iter().sum::<f64>() / row.len() as f64;
        let var =
            row.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (row.len() - 1) as f64;
        assert!((var - 1.0).abs() < 0.25, "variance {var}");
    }

    #[test]
    fn csv_round_trip_reproduces_the_panel() {
        let out = generate(&SynthSpec {
            n_assets: 8,
            n_obs: 50,
            n_sectors: 3,
            sector_loading: (0.4, 0.6),
            market_loading: (0.2, 0.4),
            rng_seed: 3,
            ..base_spec()
        });

        let mut price_csv = Vec::new();
        write_price_csv(&out.panel, &mut price_csv).unwrap();
        let mut tax_csv = Vec::new();
        write_taxonomy_csv(&out.taxonomy, &out.panel.tickers, &mut tax_csv).unwrap();

        let panel = read_prices(&price_csv[..], CsvLayout::Wide).unwrap();
        let returns = log_returns(&panel).unwrap();
        assert_eq!(returns.tickers, out.panel.tickers);
        assert_eq!(returns.dates, out.panel.dates);
        let mut worst = 0.0f64;
        for i in 0..8 {
            for t in 0..50 {
                worst = worst.max((returns.returns[[i, t]] - out.panel.returns[[i, t]]).abs());
            }
        }
        assert!(worst < 1e-12, "round-trip drift {worst}");

        let tax = read_taxonomy(&tax_csv[..]).unwrap();
        assert_eq!(tax.supersectors(), out.taxonomy.supersectors());
        assert_eq!(tax.get("T0004"), out.taxonomy.get("T0004"));
    }

    #[test]
    #[should_panic(expected = "volatility")]
    fn zero_volatility_is_rejected() {
        generate(&SynthSpec { idio_vol: 0.0, ..base_spec() });
    }
}
