//! Row-major sample batches, per-row random streams and CSV output.
//!
//! Row `r` of a batch generated with seed `s` always draws from
//! `ChaCha8Rng::seed_from_u64(s)` switched to stream `r`. Output is therefore
//! identical for any thread count.

use std::fmt::Write as _;
use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Independent random stream number `stream` derived from `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `n` observations of a `d`-variate copula, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    n: usize,
    d: usize,
    data: Vec<f64>,
    seed: u64,
}

impl SampleBatch {
    pub fn from_data(n: usize, d: usize, data: Vec<f64>, seed: u64) -> Result<Self> {
        if d == 0 || data.len() != n * d {
            return Err(Error::InvalidInput(format!(
                "batch of {n} rows and {d} columns cannot hold {} values",
                data.len()
            )));
        }
        Ok(SampleBatch { n, d, data, seed })
    }

    /// Generates `n` rows, each filled by `fill` from its own stream.
    pub fn generate<F>(n: usize, d: usize, seed: u64, threads: usize, fill: F) -> Result<Self>
    where
        F: Fn(&mut ChaCha8Rng, &mut [f64]) -> Result<()> + Sync,
    {
        if d == 0 {
            return Err(Error::InvalidInput("dimension must be at least one".into()));
        }
        let mut data = vec![0.0; n * d];
        let run = |(row, out): (usize, &mut [f64])| {
            let mut rng = stream_rng(seed, row as u64);
            fill(&mut rng, out)
        };
        if threads <= 1 {
            data.chunks_mut(d).enumerate().try_for_each(run)?;
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
            pool.install(|| data.par_chunks_mut(d).enumerate().try_for_each(run))?;
        }
        Ok(SampleBatch { n, d, data, seed })
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.d)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.iter_rows().map(|r| r[j]).collect()
    }

    /// Writes the header `u1,…,ud` and one line per row.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let header: Vec<String> = (1..=self.d).map(|j| format!("u{j}")).collect();
        writeln!(out, "{}", header.join(","))?;
        let mut line = String::new();
        for row in self.iter_rows() {
            line.clear();
            for (j, &x) in row.iter().enumerate() {
                if j > 0 {
                    line.push(',');
                }
                line.push_str(&format_decimal17(x));
            }
            line.push('\n');
            out.write_all(line.as_bytes())?;
        }
        out.flush()
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }

    /// Parses CSV produced by [`SampleBatch::write_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::InvalidInput("empty CSV".into()))?;
        let d = header.split(',').count();
        let mut data = Vec::new();
        let mut n = 0;
        for (k, line) in lines.enumerate() {
            let before = data.len();
            for field in line.split(',') {
                let x: f64 = field
                    .parse()
                    .map_err(|e| Error::InvalidInput(format!("row {}: {e}", k + 1)))?;
                data.push(x);
            }
            if data.len() - before != d {
                return Err(Error::InvalidInput(format!("row {} has the wrong number of fields", k + 1)));
            }
            n += 1;
        }
        SampleBatch::from_data(n, d, data, 0)
    }
}

/// Plain decimal notation with 17 significant digits, enough to round-trip
/// any `f64`.
pub fn format_decimal17(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0.0000000000000000".to_string();
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let mut s = String::with_capacity(digits.len() + 8);
    s.push_str(sign);
    if exp < 0 {
        s.push_str("0.");
        for _ in 0..(-exp - 1) {
            s.push('0');
        }
        s.push_str(&digits);
    } else {
        let int_len = exp as usize + 1;
        if int_len >= digits.len() {
            s.push_str(&digits);
            for _ in digits.len()..int_len {
                s.push('0');
            }
        } else {
            let _ = write!(s, "{}.{}", &digits[..int_len], &digits[int_len..]);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn decimal_formatting_round_trips() {
        assert_eq!(format_decimal17(0.5), "0.50000000000000000");
        assert_eq!(format_decimal17(1.0), "1.0000000000000000");
        assert_eq!(format_decimal17(0.0), "0.0000000000000000");
        assert_eq!(format_decimal17(1.25e-3), "0.0012500000000000000");
        assert_eq!(format_decimal17(-2.5), "-2.5000000000000000");
        assert_eq!(format_decimal17(1e20), "100000000000000000000");
        let mut rng = stream_rng(1, 0);
        for _ in 0..10_000 {
            let x: f64 = rng.random::<f64>() * 10f64.powi(rng.random_range(-30..3));
            let s = format_decimal17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
            assert!(!s.contains('e'));
        }
    }

    #[test]
    fn generation_is_thread_independent() {
        let fill = |rng: &mut ChaCha8Rng, out: &mut [f64]| {
            for v in out.iter_mut() {
                *v = rng.random();
            }
            Ok(())
        };
        let a = SampleBatch::generate(257, 3, 42, 1, fill).unwrap();
        let b = SampleBatch::generate(257, 3, 42, 4, fill).unwrap();
        assert_eq!(a, b);
        let c = SampleBatch::generate(257, 3, 43, 1, fill).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn csv_round_trip() {
        let batch = SampleBatch::from_data(2, 2, vec![0.1, 0.2, 1.0 / 3.0, 0.999], 0).unwrap();
        let text = batch.to_csv_string();
        assert!(text.starts_with("u1,u2\n"));
        assert_eq!(text.lines().count(), 3);
        let back = SampleBatch::from_csv(&text).unwrap();
        assert_eq!(back.data(), batch.data());
    }
}
