//! Plain-text channel container.
//!
//! ```text
//! hbf-channel 1
//! seed 42            (or `seed none`)
//! spacing 5.0000000000000000e-1
//! users 2
//! n_rx 4
//! n_tx 64
//! user 0 path_loss <f> clusters <Nc> rays_per_cluster <Nray> stored_rays <n>
//! <N_R lines, each N_T interleaved `re im` pairs, row-major>
//! ray <cluster> <gain re> <gain im> <aod> <aoa>      (n lines)
//! user 1 ...
//! ```
//!
//! Every float is written with 17 significant digits so a round trip through
//! `f64` is exact.

use super::{ChannelRealization, Ray, UserChannel};
use crate::error::{Error, Result};
use crate::scalar::{cplx, Real};
use nalgebra::DMatrix;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

const MAGIC: &str = "hbf-channel 1";

fn f(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_channel<T: Real, W: Write>(ch: &ChannelRealization<T>, mut out: W) -> Result<()> {
    writeln!(out, "{MAGIC}")?;
    match ch.seed {
        Some(s) => writeln!(out, "seed {s}")?,
        None => writeln!(out, "seed none")?,
    }
    writeln!(out, "spacing {}", f(ch.spacing_wavelengths.to_f64_lossy()))?;
    writeln!(out, "users {}", ch.n_users())?;
    writeln!(out, "n_rx {}", ch.n_rx())?;
    writeln!(out, "n_tx {}", ch.n_tx())?;
    for (k, u) in ch.users.iter().enumerate() {
        writeln!(
            out,
            "user {k} path_loss {} clusters {} rays_per_cluster {} stored_rays {}",
            f(u.path_loss.to_f64_lossy()),
            u.n_clusters,
            u.n_rays,
            u.rays.len()
        )?;
        for r in 0..u.matrix.nrows() {
            let row: Vec<String> = (0..u.matrix.ncols())
                .flat_map(|c| {
                    let z = u.matrix[(r, c)];
                    [f(z.re.to_f64_lossy()), f(z.im.to_f64_lossy())]
                })
                .collect();
            writeln!(out, "{}", row.join(" "))?;
        }
        for ray in &u.rays {
            writeln!(
                out,
                "ray {} {} {} {} {}",
                ray.cluster,
                f(ray.gain.re.to_f64_lossy()),
                f(ray.gain.im.to_f64_lossy()),
                f(ray.aod.to_f64_lossy()),
                f(ray.aoa.to_f64_lossy())
            )?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_channel_file<T: Real>(ch: &ChannelRealization<T>, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    write_channel(ch, BufWriter::new(file))
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn next(&mut self) -> Result<String> {
        self.line += 1;
        match self.inner.next() {
            Some(l) => Ok(l?),
            None => Err(self.err("unexpected end of file")),
        }
    }

    fn err(&self, reason: impl Into<String>) -> Error {
        Error::ChannelFormat { line: self.line, reason: reason.into() }
    }

    fn keyed(&mut self, key: &str) -> Result<String> {
        let l = self.next()?;
        let mut it = l.splitn(2, ' ');
        if it.next() != Some(key) {
            return Err(self.err(format!("expected `{key}`")));
        }
        it.next().map(|v| v.trim().to_string()).ok_or_else(|| self.err(format!("`{key}` has no value")))
    }

    fn parse<V: std::str::FromStr>(&self, s: &str, what: &str) -> Result<V> {
        s.parse().map_err(|_| self.err(format!("cannot parse {what} from `{s}`")))
    }
}

pub fn read_channel<T: Real, R: BufRead>(input: R) -> Result<ChannelRealization<T>> {
    let mut lines = Lines { inner: input.lines(), line: 0 };
    if lines.next()?.trim() != MAGIC {
        return Err(lines.err(format!("missing `{MAGIC}` header")));
    }
    let seed = match lines.keyed("seed")?.as_str() {
        "none" => None,
        s => Some(lines.parse::<u64>(s, "seed")?),
    };
    let spacing_s = lines.keyed("spacing")?;
    let spacing: f64 = lines.parse(&spacing_s, "spacing")?;
    let users_s = lines.keyed("users")?;
    let n_users: usize = lines.parse(&users_s, "user count")?;
    let nr_s = lines.keyed("n_rx")?;
    let n_rx: usize = lines.parse(&nr_s, "n_rx")?;
    let nt_s = lines.keyed("n_tx")?;
    let n_tx: usize = lines.parse(&nt_s, "n_tx")?;
    if n_users == 0 || n_rx == 0 || n_tx == 0 {
        return Err(lines.err("dimensions must be positive"));
    }

    let mut users = Vec::with_capacity(n_users);
    for k in 0..n_users {
        let header = lines.next()?;
        let tok: Vec<&str> = header.split_whitespace().collect();
        let layout = ["user", "", "path_loss", "", "clusters", "", "rays_per_cluster", "", "stored_rays", ""];
        if tok.len() != layout.len() || layout.iter().zip(&tok).any(|(want, got)| !want.is_empty() && want != got) {
            return Err(lines.err("malformed user header"));
        }
        let idx: usize = lines.parse(tok[1], "user index")?;
        if idx != k {
            return Err(lines.err(format!("expected user {k}, found {idx}")));
        }
        let path_loss: f64 = lines.parse(tok[3], "path loss")?;
        let n_clusters: usize = lines.parse(tok[5], "cluster count")?;
        let n_rays: usize = lines.parse(tok[7], "rays per cluster")?;
        let stored: usize = lines.parse(tok[9], "stored ray count")?;

        let mut matrix = DMatrix::from_element(n_rx, n_tx, cplx(T::zero(), T::zero()));
        for r in 0..n_rx {
            let row = lines.next()?;
            let vals: Vec<f64> =
                row.split_whitespace().map(|s| lines.parse::<f64>(s, "matrix entry")).collect::<Result<_>>()?;
            if vals.len() != 2 * n_tx {
                return Err(lines.err(format!("expected {} values, found {}", 2 * n_tx, vals.len())));
            }
            for c in 0..n_tx {
                matrix[(r, c)] = cplx(T::lit(vals[2 * c]), T::lit(vals[2 * c + 1]));
            }
        }
        let mut rays = Vec::with_capacity(stored);
        for _ in 0..stored {
            let l = lines.next()?;
            let tok: Vec<&str> = l.split_whitespace().collect();
            if tok.len() != 6 || tok[0] != "ray" {
                return Err(lines.err("malformed ray record"));
            }
            let cluster: usize = lines.parse(tok[1], "cluster index")?;
            let v: Vec<f64> = tok[2..].iter().map(|s| lines.parse::<f64>(s, "ray value")).collect::<Result<_>>()?;
            rays.push(Ray { cluster, gain: cplx(T::lit(v[0]), T::lit(v[1])), aod: T::lit(v[2]), aoa: T::lit(v[3]) });
        }
        users.push(UserChannel { matrix, path_loss: T::lit(path_loss), n_clusters, n_rays, rays });
    }
    Ok(ChannelRealization { seed, spacing_wavelengths: T::lit(spacing), users })
}

pub fn read_channel_file<T: Real>(path: &Path) -> Result<ChannelRealization<T>> {
    let file = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_channel(BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{generate_channel, ClusterChannelParams};
    use crate::config::SystemConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample() -> ChannelRealization<f64> {
        let cfg = SystemConfig { n_tx: 8, n_rf: 4, n_users: 2, ..Default::default() };
        let params = vec![ClusterChannelParams { n_clusters: 2, n_rays: 3, ..Default::default() }; 2];
        let mut ch = generate_channel(&cfg, &params, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        ch.seed = Some(11);
        ch
    }

    #[test]
    fn round_trip_is_exact() {
        let ch = sample();
        let mut buf = Vec::new();
        write_channel(&ch, &mut buf).unwrap();
        let back: ChannelRealization<f64> = read_channel(buf.as_slice()).unwrap();
        assert_eq!(back, ch);
        assert!(back.reconstruction_error() <= 1e-12);

        let mut again = Vec::new();
        write_channel(&back, &mut again).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn truncated_file_reports_line() {
        let ch = sample();
        let mut buf = Vec::new();
        write_channel(&ch, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let cut: String = text.lines().take(9).map(|l| format!("{l}\n")).collect();
        match read_channel::<f64, _>(cut.as_bytes()) {
            Err(Error::ChannelFormat { line, .. }) => assert_eq!(line, 10),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_header_rejected() {
        let r = read_channel::<f64, _>("not a channel\n".as_bytes());
        assert!(matches!(r, Err(Error::ChannelFormat { line: 1, .. })));
    }
}
