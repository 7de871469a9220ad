//! Summaries of kriging weights against distance, and predicted curves.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context};
use sparse_fkrige::io::{fmt_real, parse_real};

use super::{create_out_dir, existing_file};
use crate::args::ReportArgs;
use crate::config::Common;
use crate::failure::usage;
use crate::svg::Figure;

/// Columns that identify which prediction a weight belongs to.
const GROUP_COLUMNS: [&str; 4] = ["replicate", "n", "range", "target"];

struct WeightRow {
    group: String,
    distance: f64,
    lambda: f64,
}

fn read_weights(path: &Path, column: Option<&str>) -> anyhow::Result<Vec<WeightRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let header = rdr.headers()?.clone();
    let find = |name: &str| header.iter().position(|h| h == name);
    let Some(dist_col) = find("distance") else {
        bail!("{}: no `distance` column", path.display());
    };
    let lambda_col = match column {
        Some(c) => find(c).with_context(|| format!("{}: no `{c}` column", path.display()))?,
        None => find("lambda")
            .or_else(|| find("lambda_sofk"))
            .with_context(|| format!("{}: no `lambda` or `lambda_sofk` column", path.display()))?,
    };
    let group_cols: Vec<usize> = GROUP_COLUMNS.iter().filter_map(|c| find(c)).collect();
    let mut rows = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let what = format!("{} row {}", path.display(), k + 1);
        let group = group_cols
            .iter()
            .map(|&c| rec.get(c).unwrap_or_default())
            .collect::<Vec<_>>()
            .join("|");
        rows.push(WeightRow {
            group,
            distance: parse_real(rec.get(dist_col).unwrap_or_default(), &what)?,
            lambda: parse_real(rec.get(lambda_col).unwrap_or_default(), &what)?,
        });
    }
    Ok(rows)
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

struct DistanceBin {
    lo: f64,
    hi: f64,
    lambdas: Vec<f64>,
}

impl DistanceBin {
    fn zeros(&self) -> usize {
        self.lambdas.iter().filter(|&&l| l == 0.0).count()
    }

    fn zero_fraction(&self) -> f64 {
        if self.lambdas.is_empty() {
            f64::NAN
        } else {
            self.zeros() as f64 / self.lambdas.len() as f64
        }
    }
}

/// Equal-width bins over the observed distance range; a single distinct
/// distance gives a single bin.
fn distance_bins(rows: &[WeightRow], n_bins: usize) -> Vec<DistanceBin> {
    let lo = rows.iter().map(|r| r.distance).fold(f64::INFINITY, f64::min);
    let hi = rows.iter().map(|r| r.distance).fold(f64::NEG_INFINITY, f64::max);
    let n_bins = if hi > lo { n_bins } else { 1 };
    let width = (hi - lo) / n_bins as f64;
    let mut bins: Vec<DistanceBin> = (0..n_bins)
        .map(|b| DistanceBin {
            lo: lo + width * b as f64,
            hi: if b + 1 == n_bins {
                hi
            } else {
                lo + width * (b + 1) as f64
            },
            lambdas: Vec::new(),
        })
        .collect();
    for r in rows {
        let b = if width > 0.0 {
            (((r.distance - lo) / width) as usize).min(n_bins - 1)
        } else {
            0
        };
        bins[b].lambdas.push(r.lambda);
    }
    for b in &mut bins {
        b.lambdas.sort_by(f64::total_cmp);
    }
    bins
}

/// Weights at neighbour rank `k` (1 = nearest) across all groups.
fn rank_table(rows: &[WeightRow]) -> Vec<Vec<f64>> {
    let mut groups: Vec<Vec<(f64, f64)>> = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    for r in rows {
        let g = *index.entry(r.group.as_str()).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push((r.distance, r.lambda));
    }
    let mut ranks: Vec<Vec<f64>> = Vec::new();
    for mut g in groups {
        g.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (k, (_, l)) in g.into_iter().enumerate() {
            if ranks.len() <= k {
                ranks.push(Vec::new());
            }
            ranks[k].push(l);
        }
    }
    ranks
}

fn write(out: &Path, name: &str, text: &str) -> anyhow::Result<()> {
    let path = out.join(name);
    std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn file_stem(label: &str) -> String {
    label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

pub fn run(args: &ReportArgs, common: &Common) -> anyhow::Result<()> {
    let weights = existing_file(args.weights.as_ref(), "weights")?;
    let curves = match &args.curves {
        Some(_) => Some(existing_file(args.curves.as_ref(), "curves")?),
        None => None,
    };
    let n_bins = args.bins.unwrap_or(10);
    if n_bins == 0 {
        return usage("--bins must be at least 1");
    }
    let svg = args.svg.unwrap_or(false);
    let rows = read_weights(&weights, args.column.as_deref())?;
    if rows.is_empty() {
        return usage(format!("{} has no weight rows", weights.display()));
    }
    create_out_dir(&common.out)?;
    let out = &common.out;

    let bins = distance_bins(&rows, n_bins);
    let mut quant = String::from("bin,lo,hi,count,min,q25,median,q75,max\n");
    let mut zeros = String::from("bin,lo,hi,count,zeros,nonzeros,zero_fraction\n");
    for (b, bin) in bins.iter().enumerate() {
        let n = bin.lambdas.len();
        let _ = write!(quant, "{b},{},{},{n}", fmt_real(bin.lo), fmt_real(bin.hi));
        if n == 0 {
            quant.push_str(",,,,,\n");
        } else {
            for p in [0.0, 0.25, 0.5, 0.75, 1.0] {
                let _ = write!(quant, ",{}", fmt_real(quantile(&bin.lambdas, p)));
            }
            quant.push('\n');
        }
        let z = bin.zeros();
        let frac = if n == 0 {
            String::new()
        } else {
            fmt_real(bin.zero_fraction())
        };
        let _ = writeln!(
            zeros,
            "{b},{},{},{n},{z},{},{frac}",
            fmt_real(bin.lo),
            fmt_real(bin.hi),
            n - z
        );
    }
    write(out, "weight_quantiles.csv", &quant)?;
    write(out, "zero_fraction.csv", &zeros)?;

    let ranks = rank_table(&rows);
    let mut rank_csv = String::from("rank,count,zeros,zero_fraction,median\n");
    for (k, ls) in ranks.iter().enumerate() {
        let z = ls.iter().filter(|&&l| l == 0.0).count();
        let mut sorted = ls.clone();
        sorted.sort_by(f64::total_cmp);
        let _ = writeln!(
            rank_csv,
            "{},{},{z},{},{}",
            k + 1,
            ls.len(),
            fmt_real(z as f64 / ls.len() as f64),
            fmt_real(quantile(&sorted, 0.5))
        );
    }
    write(out, "rank_zero_fraction.csv", &rank_csv)?;

    if svg {
        write(out, "weights_box.svg", &box_plot(&bins))?;
        write(out, "zero_fraction.svg", &zero_histogram(&bins))?;
    }
    if let Some(path) = curves {
        for (label, pts) in read_curves(&path)? {
            let stem = file_stem(&label);
            let mut text = String::from("t,predicted,observed\n");
            for (t, p, o) in &pts {
                let o = o.map(fmt_real).unwrap_or_default();
                let _ = writeln!(text, "{},{},{o}", fmt_real(*t), fmt_real(*p));
            }
            write(out, &format!("curve_{stem}.csv"), &text)?;
            if svg {
                write(out, &format!("curve_{stem}.svg"), &curve_plot(&label, &pts))?;
            }
        }
    }
    Ok(())
}

type CurvePoints = Vec<(f64, f64, Option<f64>)>;

/// Reads `target,t,predicted,observed`; an empty `observed` is allowed.
fn read_curves(path: &Path) -> anyhow::Result<Vec<(String, CurvePoints)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != ["target", "t", "predicted", "observed"] {
        bail!("{}: expected header `target,t,predicted,observed`", path.display());
    }
    let mut out: Vec<(String, CurvePoints)> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let what = format!("{} row {}", path.display(), k + 1);
        let label = rec.get(0).unwrap_or_default().to_string();
        let t = parse_real(rec.get(1).unwrap_or_default(), &what)?;
        let p = parse_real(rec.get(2).unwrap_or_default(), &what)?;
        let o = match rec.get(3).unwrap_or_default() {
            "" => None,
            s => Some(parse_real(s, &what)?),
        };
        let g = *index.entry(label.clone()).or_insert_with(|| {
            out.push((label, Vec::new()));
            out.len() - 1
        });
        out[g].1.push((t, p, o));
    }
    Ok(out)
}

fn box_plot(bins: &[DistanceBin]) -> String {
    let all: Vec<f64> = bins.iter().flat_map(|b| b.lambdas.iter().copied()).collect();
    let ymin = all.iter().copied().fold(f64::INFINITY, f64::min).min(0.0);
    let ymax = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let xmin = bins.first().map_or(0.0, |b| b.lo);
    let xmax = bins.last().map_or(1.0, |b| b.hi);
    let mut f = Figure::new("Weights by distance", "distance", "weight", (xmin, xmax), (ymin, ymax));
    for b in bins.iter().filter(|b| !b.lambdas.is_empty()) {
        let s = &b.lambdas;
        let w = b.hi - b.lo;
        let (l, r, mid) = (b.lo + 0.2 * w, b.hi - 0.2 * w, 0.5 * (b.lo + b.hi));
        f.line((mid, quantile(s, 0.0)), (mid, quantile(s, 1.0)), "black");
        f.rect((l, quantile(s, 0.25)), (r, quantile(s, 0.75)), "#9ecae1");
        f.line((l, quantile(s, 0.5)), (r, quantile(s, 0.5)), "#08519c");
    }
    f.render()
}

fn zero_histogram(bins: &[DistanceBin]) -> String {
    let xmin = bins.first().map_or(0.0, |b| b.lo);
    let xmax = bins.last().map_or(1.0, |b| b.hi);
    let mut f = Figure::new(
        "Share of zero weights by distance",
        "distance",
        "zero fraction",
        (xmin, xmax),
        (0.0, 1.0),
    );
    for b in bins.iter().filter(|b| !b.lambdas.is_empty()) {
        f.rect((b.lo, 0.0), (b.hi, b.zero_fraction()), "#fdae6b");
    }
    f.render()
}

fn curve_plot(label: &str, pts: &CurvePoints) -> String {
    let ts = pts.iter().map(|p| p.0);
    let ys = pts.iter().flat_map(|p| [Some(p.1), p.2]).flatten();
    let (t0, t1) = ts.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), t| (a.min(t), b.max(t)));
    let (y0, y1) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y)));
    let mut f = Figure::new(&format!("Prediction at {label}"), "t", "value", (t0, t1), (y0, y1));
    let observed: Vec<(f64, f64)> = pts.iter().filter_map(|p| p.2.map(|o| (p.0, o))).collect();
    if !observed.is_empty() {
        f.polyline(&observed, "black");
        f.legend(1, "observed", "black");
    }
    f.polyline(&pts.iter().map(|p| (p.0, p.1)).collect::<Vec<_>>(), "#d62728");
    f.legend(0, "predicted", "#d62728");
    f.render()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(group: &str, distance: f64, lambda: f64) -> WeightRow {
        WeightRow {
            group: group.into(),
            distance,
            lambda,
        }
    }

    #[test]
    fn quantiles_interpolate() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&s, 0.0), 1.0);
        assert_eq!(quantile(&s, 0.5), 2.5);
        assert_eq!(quantile(&s, 1.0), 4.0);
        assert_eq!(quantile(&[7.0], 0.25), 7.0);
    }

    #[test]
    fn single_site_gives_one_bin() {
        let bins = distance_bins(&[row("a", 0.3, 1.0)], 10);
        assert_eq!(bins.len(), 1);
        assert_eq!(bins[0].lambdas, vec![1.0]);
    }

    #[test]
    fn all_nonzero_weights_have_zero_fraction_zero() {
        let rows: Vec<WeightRow> = (0..20).map(|k| row("a", k as f64, 0.05)).collect();
        let bins = distance_bins(&rows, 4);
        assert!(bins.iter().all(|b| b.zero_fraction() == 0.0));
        assert_eq!(bins.iter().map(|b| b.lambdas.len()).sum::<usize>(), 20);
        // the largest distance lands in the last bin
        assert_eq!(bins[3].lambdas.len(), 5);
    }

    #[test]
    fn ranks_are_per_group() {
        let rows = vec![
            row("a", 2.0, 0.0),
            row("a", 1.0, 0.7),
            row("b", 0.5, 0.4),
            row("b", 3.0, 0.0),
            row("b", 1.0, 0.6),
        ];
        let ranks = rank_table(&rows);
        assert_eq!(ranks, vec![vec![0.7, 0.4], vec![0.0, 0.6], vec![0.0]]);
    }

    #[test]
    fn file_stems_are_safe() {
        assert_eq!(file_stem("The Pas"), "The_Pas");
        assert_eq!(file_stem("a/b..c"), "a_b__c");
    }
}
