//! Plain-text artifact formats: statistics, truth, edge lists, reports,
//! diagnostics, raw draws and simulation manifests.
//!
//! Floats are written in shortest round-trip form, so every file read back
//! reproduces the values that were written.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::diagnostics::{DiagnosticsReport, Ess};
use crate::error::{GcarError, Result};
use crate::inference::{CaseReport, InclusionReport};
use crate::model::Variant;
use crate::sampler::SampleStore;
use crate::simgen::SimOutput;

fn parse_err(path: &str, line: usize, msg: impl Into<String>) -> GcarError {
    GcarError::Parse {
        path: path.to_string(),
        line,
        msg: msg.into(),
    }
}

fn csv_err(path: &str, e: csv::Error) -> GcarError {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => GcarError::Io(io),
        other => parse_err(path, line, format!("{other:?}")),
    }
}

fn parse_f64(path: &str, line: usize, s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| parse_err(path, line, format!("`{s}` is not a number")))
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(r)
}

fn expect_header(path: &str, rdr: &mut csv::Reader<impl Read>, want: &[&str]) -> Result<()> {
    let h = rdr.headers().map_err(|e| csv_err(path, e))?;
    let got: Vec<&str> = h.iter().collect();
    if got != want {
        return Err(parse_err(
            path,
            1,
            format!("expected header `{}`, found `{}`", want.join(","), got.join(",")),
        ));
    }
    Ok(())
}

fn check_unique(path: &str, ids: &[String]) -> Result<()> {
    let mut seen = std::collections::HashSet::with_capacity(ids.len());
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(parse_err(path, 0, format!("duplicate id `{id}`")));
        }
    }
    Ok(())
}

/// Test statistics as `id,y` with header.
pub fn read_statistics_from<R: Read>(r: R, path: &str) -> Result<(Vec<String>, Vec<f64>)> {
    let mut rdr = reader(r);
    expect_header(path, &mut rdr, &["id", "y"])?;
    let (mut ids, mut y) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let v = parse_f64(path, line, &rec[1])?;
        if !v.is_finite() {
            return Err(parse_err(path, line, "statistic is not finite"));
        }
        ids.push(rec[0].to_string());
        y.push(v);
    }
    if ids.is_empty() {
        return Err(parse_err(path, 1, "no statistics"));
    }
    check_unique(path, &ids)?;
    Ok((ids, y))
}

pub fn read_statistics(path: &Path) -> Result<(Vec<String>, Vec<f64>)> {
    read_statistics_from(File::open(path)?, &path.display().to_string())
}

pub fn write_statistics<W: Write>(w: W, ids: &[String], y: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(w);
    writeln!(w, "id,y")?;
    for (id, v) in ids.iter().zip(y) {
        writeln!(w, "{id},{v}")?;
    }
    w.flush()?;
    Ok(())
}

/// Truth labels as `id,truth`; 1/0 or true/false.
pub fn read_truth_from<R: Read>(r: R, path: &str) -> Result<(Vec<String>, Vec<bool>)> {
    let mut rdr = reader(r);
    expect_header(path, &mut rdr, &["id", "truth"])?;
    let (mut ids, mut t) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let v = match rec[1].to_ascii_lowercase().as_str() {
            "1" | "true" => true,
            "0" | "false" => false,
            other => return Err(parse_err(path, line, format!("`{other}` is not a truth label"))),
        };
        ids.push(rec[0].to_string());
        t.push(v);
    }
    check_unique(path, &ids)?;
    Ok((ids, t))
}

pub fn read_truth(path: &Path) -> Result<(Vec<String>, Vec<bool>)> {
    read_truth_from(File::open(path)?, &path.display().to_string())
}

pub fn write_truth<W: Write>(w: W, ids: &[String], truth: &[bool]) -> Result<()> {
    let mut w = BufWriter::new(w);
    writeln!(w, "id,truth")?;
    for (id, &t) in ids.iter().zip(truth) {
        writeln!(w, "{id},{}", t as u8)?;
    }
    w.flush()?;
    Ok(())
}

/// Edge list: `<id_i>\t<id_j>[\t<weight>]` per line, `#` comments and blank
/// lines ignored, weight defaulting to 1.
pub fn read_edges_from<R: Read>(r: R, path: &str) -> Result<Vec<(String, String, f64)>> {
    let mut out = Vec::new();
    for (k, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        let t = line.trim_end_matches(['\r', '\n']);
        if t.trim().is_empty() || t.trim_start().starts_with('#') {
            continue;
        }
        let f: Vec<&str> = t.split('\t').collect();
        let w = match f.len() {
            2 => 1.0,
            3 => parse_f64(path, k + 1, f[2])?,
            n => return Err(parse_err(path, k + 1, format!("expected 2 or 3 tab-separated fields, found {n}"))),
        };
        out.push((f[0].trim().to_string(), f[1].trim().to_string(), w));
    }
    Ok(out)
}

pub fn read_edges(path: &Path) -> Result<Vec<(String, String, f64)>> {
    read_edges_from(File::open(path)?, &path.display().to_string())
}

pub fn write_edges<W: Write>(w: W, ids: &[String], edges: &[(usize, usize, f64)]) -> Result<()> {
    let mut w = BufWriter::new(w);
    for &(i, j, wt) in edges {
        writeln!(w, "{}\t{}\t{wt}", ids[i], ids[j])?;
    }
    w.flush()?;
    Ok(())
}

const REPORT_HEADER: [&str; 7] = ["id", "p_incl", "mu_mean", "mu_sd", "ci_low", "ci_high", "selected"];

/// Per-case report CSV. Run settings go in leading `# key=value` lines.
pub fn write_report<W: Write>(w: W, r: &InclusionReport) -> Result<()> {
    let mut w = BufWriter::new(w);
    writeln!(w, "# variant={}", r.variant.as_str())?;
    writeln!(w, "# threshold={}", r.threshold)?;
    writeln!(w, "# alpha={}", r.alpha)?;
    writeln!(w, "# d={}", r.d)?;
    writeln!(w, "# seed={}", r.seed)?;
    writeln!(w, "{}", REPORT_HEADER.join(","))?;
    for c in &r.cases {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            c.id, c.p_incl, c.mu_mean, c.mu_sd, c.ci_low, c.ci_high, c.selected as u8
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_report_from<R: Read>(r: R, path: &str) -> Result<InclusionReport> {
    let mut text = String::new();
    BufReader::new(r).read_to_string(&mut text)?;
    let mut settings = std::collections::HashMap::new();
    for (k, line) in text.lines().enumerate() {
        let Some(rest) = line.strip_prefix('#') else { break };
        let (key, val) = rest
            .split_once('=')
            .ok_or_else(|| parse_err(path, k + 1, "expected `# key=value`"))?;
        settings.insert(key.trim().to_string(), (k + 1, val.trim().to_string()));
    }
    let get = |key: &str| -> Result<(usize, String)> {
        settings
            .get(key)
            .cloned()
            .ok_or_else(|| parse_err(path, 1, format!("missing `# {key}=` line")))
    };
    let (l, v) = get("variant")?;
    let variant: Variant = v.parse().map_err(|_| parse_err(path, l, format!("unknown variant `{v}`")))?;
    let (l, v) = get("threshold")?;
    let threshold = parse_f64(path, l, &v)?;
    let (l, v) = get("alpha")?;
    let alpha = parse_f64(path, l, &v)?;
    let (l, v) = get("d")?;
    let d = parse_f64(path, l, &v)?;
    let (l, v) = get("seed")?;
    let seed = v.parse::<u64>().map_err(|_| parse_err(path, l, "bad seed"))?;

    let mut rdr = reader(text.as_bytes());
    expect_header(path, &mut rdr, &REPORT_HEADER)?;
    let mut cases = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let num = |i: usize| parse_f64(path, line, &rec[i]);
        cases.push(CaseReport {
            id: rec[0].to_string(),
            p_incl: num(1)?,
            mu_mean: num(2)?,
            mu_sd: num(3)?,
            ci_low: num(4)?,
            ci_high: num(5)?,
            selected: match &rec[6] {
                "1" => true,
                "0" => false,
                s => return Err(parse_err(path, line, format!("bad selected flag `{s}`"))),
            },
        });
    }
    Ok(InclusionReport {
        cases,
        threshold,
        variant,
        alpha,
        d,
        seed,
    })
}

pub fn read_report(path: &Path) -> Result<InclusionReport> {
    read_report_from(File::open(path)?, &path.display().to_string())
}

/// Diagnostics as `metric,target,value` rows.
pub fn write_diagnostics<W: Write>(w: W, r: &DiagnosticsReport) -> Result<()> {
    let mut w = BufWriter::new(w);
    writeln!(w, "metric,target,value")?;
    for (m, t, v) in r.rows() {
        writeln!(w, "{m},{t},{v}")?;
    }
    w.flush()?;
    Ok(())
}

/// Posterior-predictive Moran's I replicates as `rep,moran_i`.
pub fn write_moran_ppd<W: Write>(w: W, draws: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(w);
    writeln!(w, "rep,moran_i")?;
    for (k, v) in draws.iter().enumerate() {
        writeln!(w, "{k},{v}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_moran_ppd_from<R: Read>(r: R, path: &str) -> Result<Vec<f64>> {
    let mut rdr = reader(r);
    expect_header(path, &mut rdr, &["rep", "moran_i"])?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        out.push(parse_f64(path, line, &rec[1])?);
    }
    Ok(out)
}

/// Rebuilds a diagnostics report from its rows; the replicate vector of the
/// posterior-predictive check lives in its own file and is passed in.
pub fn read_diagnostics_from<R: Read>(r: R, path: &str, moran_ppd: Vec<f64>) -> Result<DiagnosticsReport> {
    let mut rdr = reader(r);
    expect_header(path, &mut rdr, &["metric", "target", "value"])?;
    let mut rep = DiagnosticsReport {
        moran_observed: None,
        moran_ppd,
        moran_ppd_pvalue: None,
        psrf: Vec::new(),
        ess: Vec::new(),
        waic: f64::NAN,
        rmspe: f64::NAN,
    };
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let v = parse_f64(path, line, &rec[2])?;
        let target = rec[1].to_string();
        match &rec[0] {
            "waic" => rep.waic = v,
            "rmspe" => rep.rmspe = v,
            "moran_observed" => rep.moran_observed = Some(v),
            "moran_ppd_pvalue" => rep.moran_ppd_pvalue = Some(v),
            "moran_ppd_mean" => {}
            "psrf" => rep.psrf.push((target, v)),
            "ess" => rep.ess.push((
                target,
                Ess {
                    value: v,
                    superefficient: false,
                },
            )),
            "ess_superefficient" => {
                if let Some(e) = rep.ess.iter_mut().find(|(t, _)| *t == target) {
                    e.1.superefficient = v != 0.0;
                }
            }
            m => return Err(parse_err(path, line, format!("unknown metric `{m}`"))),
        }
    }
    Ok(rep)
}

/// Long-format retained draws of one chain: `iter,param,value` where iter is
/// the retained-draw index. μ and γ appear for every case when full draws
/// were kept, otherwise μ for the tracked cases only.
pub fn write_raw_draws<W: Write>(w: W, store: &SampleStore, chain: usize, ids: &[String]) -> Result<()> {
    let c = store
        .chains
        .get(chain)
        .ok_or_else(|| GcarError::InvalidParameter(format!("no chain {chain}")))?;
    let n = store.n_cases;
    let mut w = BufWriter::new(w);
    writeln!(w, "iter,param,value")?;
    for i in 0..c.len() {
        writeln!(w, "{i},sigma2,{}", c.sigma2[i])?;
        match store.variant {
            Variant::Gcar => {
                writeln!(w, "{i},eta,{}", c.eta[i])?;
                writeln!(w, "{i},rho,{}", c.rho[i])?;
            }
            Variant::SbIndependence => writeln!(w, "{i},tau2,{}", c.eta[i] * c.sigma2[i])?,
        }
        writeln!(w, "{i},p,{}", c.p[i])?;
        if let (Some(mu), Some(gamma)) = (&c.mu, &c.gamma) {
            for j in 0..n {
                writeln!(w, "{i},mu[{}],{}", ids[j], mu[i * n + j])?;
            }
            for j in 0..n {
                writeln!(w, "{i},gamma[{}],{}", ids[j], gamma[i * n + j] as u8)?;
            }
        } else {
            for (j, tr) in &c.tracked {
                writeln!(w, "{i},mu[{}],{}", ids[*j], tr[i])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Simulation manifest as `key,value` rows: scenario, seed, then the
/// scenario's parameters and bookkeeping.
pub fn write_manifest<W: Write>(w: W, sim: &SimOutput) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let io = |e: csv::Error| csv_err("manifest", e);
    wr.write_record(["key", "value"]).map_err(io)?;
    wr.write_record(["scenario", sim.scenario.as_str()]).map_err(io)?;
    wr.write_record(["seed", &sim.seed.to_string()]).map_err(io)?;
    for (k, v) in &sim.meta {
        wr.write_record([k, v]).map_err(io)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_manifest_from<R: Read>(r: R, path: &str) -> Result<Vec<(String, String)>> {
    let mut rdr = reader(r);
    expect_header(path, &mut rdr, &["key", "value"])?;
    rdr.records()
        .map(|rec| {
            let rec = rec.map_err(|e| csv_err(path, e))?;
            Ok((rec[0].to_string(), rec[1].to_string()))
        })
        .collect()
}
