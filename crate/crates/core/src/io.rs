//! CSV files for domains, fields, sets, bands, samples and designs.
//!
//! Every file has a header row. Point columns come first: one column per axis
//! named after it, or a single `label` column for discrete domains. Floats are
//! written in Rust's shortest round-trip form, so reading a file back gives
//! bit-identical values.

use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use crate::domain::{Band, Domain, Field, FunctionalSample, IndexSet, Point};
use crate::error::{Error, Result};
use crate::inversion::ExcursionCs;
use crate::regression::DesignMatrix;
use crate::scb::MaxStatDistribution;

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

fn point_header(domain: &Domain) -> Vec<String> {
    domain.axis_names().to_vec()
}

fn point_cells(p: &Point) -> Vec<String> {
    match p {
        Point::Coords(c) => c.iter().map(|v| v.to_string()).collect(),
        Point::Label(l) => vec![l.clone()],
    }
}

/// Rows of `point columns..., extra columns...`.
fn write_point_table<W: Write>(
    w: W,
    domain: &Domain,
    extra_header: &[&str],
    mut extra: impl FnMut(usize) -> Vec<String>,
) -> Result<()> {
    let mut out = writer(w);
    let mut header = point_header(domain);
    header.extend(extra_header.iter().map(|s| s.to_string()));
    out.write_record(&header)?;
    for (i, p) in domain.points().iter().enumerate() {
        let mut row = point_cells(p);
        row.extend(extra(i));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_field<W: Write>(w: W, field: &Field) -> Result<()> {
    let v = field.values();
    write_point_table(w, field.domain(), &["value"], |i| vec![v[i].to_string()])
}

pub fn write_index_set<W: Write>(w: W, set: &IndexSet) -> Result<()> {
    let m = set.members();
    write_point_table(w, set.domain(), &["member"], |i| vec![u8::from(m[i]).to_string()])
}

/// `points..., estimate, sd, lower, upper`.
pub fn write_band<W: Write>(w: W, band: &Band, estimate: &Field, sd: &Field) -> Result<()> {
    if !band.lower().shares_domain(estimate) || !estimate.shares_domain(sd) {
        return Err(Error::DomainMismatch);
    }
    let (e, s, l, u) = (estimate.values(), sd.values(), band.lower().values(), band.upper().values());
    write_point_table(w, band.domain(), &["estimate", "sd", "lower", "upper"], |i| {
        vec![e[i].to_string(), s[i].to_string(), l[i].to_string(), u[i].to_string()]
    })
}

/// `points..., inner, estimate, outer` as 0/1 memberships.
pub fn write_confidence_sets<W: Write>(w: W, cs_inner: &IndexSet, estimate: &IndexSet, cs_outer: &IndexSet) -> Result<()> {
    if !crate::domain::same_domain(cs_inner.domain(), estimate.domain())
        || !crate::domain::same_domain(estimate.domain(), cs_outer.domain())
    {
        return Err(Error::DomainMismatch);
    }
    let (a, b, c) = (cs_inner.members(), estimate.members(), cs_outer.members());
    write_point_table(w, cs_inner.domain(), &["inner", "estimate", "outer"], |i| {
        vec![u8::from(a[i]).to_string(), u8::from(b[i]).to_string(), u8::from(c[i]).to_string()]
    })
}

/// Excursion confidence sets together with the plug-in estimate set.
pub fn write_excursion_cs<W: Write>(w: W, cs: &ExcursionCs, estimate: &IndexSet) -> Result<()> {
    write_confidence_sets(w, &cs.inner, estimate, &cs.outer)
}

/// One column `max_stat`, sorted ascending.
pub fn write_max_stat<W: Write>(w: W, dist: &MaxStatDistribution) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["max_stat"])?;
    for v in dist.values() {
        out.write_record([v.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// One row per point: `points..., y_0, ..., y_{n-1}`.
pub fn write_sample<W: Write>(w: W, sample: &FunctionalSample) -> Result<()> {
    let n = sample.n();
    let m = sample.domain().len();
    let header: Vec<String> = (0..n).map(|i| format!("y_{i}")).collect();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let values = sample.values();
    write_point_table(w, sample.domain(), &header_refs, |s| (0..n).map(|i| values[i * m + s].to_string()).collect())
}

/// Design columns, plus a trailing `response` column when `y` is given.
pub fn write_design<W: Write>(w: W, x: &DesignMatrix, y: Option<(&str, &[f64])>) -> Result<()> {
    let mut out = writer(w);
    let mut header: Vec<String> = x.labels().to_vec();
    if let Some((name, _)) = y {
        header.push(name.to_string());
    }
    out.write_record(&header)?;
    for i in 0..x.rows() {
        let mut row: Vec<String> = x.row(i).iter().map(|v| v.to_string()).collect();
        if let Some((_, y)) = y {
            row.push(y[i].to_string());
        }
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// Points only, one column per axis (or `label`).
pub fn write_points<W: Write>(w: W, domain: &Domain) -> Result<()> {
    write_point_table(w, domain, &[], |_| Vec::new())
}

/// Create `path` and hand a buffered writer to `f`.
pub fn to_file(path: &Path, f: impl FnOnce(&mut std::io::BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut w = std::io::BufWriter::new(File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

/// A parsed CSV: header and numeric-or-text cells, with file context for errors.
struct Table {
    path: String,
    header: Vec<String>,
    rows: Vec<csv::StringRecord>,
}

impl Table {
    fn read(path: &Path) -> Result<Self> {
        let name = path.display().to_string();
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_path(path).map_err(|e| Error::Parse {
            path: name.clone(),
            line: 0,
            message: e.to_string(),
        })?;
        let header = rdr
            .headers()
            .map_err(|e| Error::Parse { path: name.clone(), line: 1, message: e.to_string() })?
            .iter()
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for (i, r) in rdr.records().enumerate() {
            rows.push(r.map_err(|e| Error::Parse { path: name.clone(), line: i as u64 + 2, message: e.to_string() })?);
        }
        if rows.is_empty() {
            return Err(Error::Parse { path: name, line: 1, message: "no data rows".into() });
        }
        Ok(Self { path: name, header, rows })
    }

    fn err(&self, row: usize, message: String) -> Error {
        Error::Parse { path: self.path.clone(), line: row as u64 + 2, message }
    }

    fn num(&self, row: usize, col: usize) -> Result<f64> {
        let cell = self.rows[row].get(col).unwrap_or("");
        let v: f64 = cell
            .trim()
            .parse()
            .map_err(|_| self.err(row, format!("column {:?}: {cell:?} is not a number", self.header[col])))?;
        if !v.is_finite() {
            return Err(self.err(row, format!("column {:?}: non-finite value", self.header[col])));
        }
        Ok(v)
    }

    fn column(&self, col: usize) -> Result<Vec<f64>> {
        (0..self.rows.len()).map(|r| self.num(r, col)).collect()
    }

    /// Index of the first of the `names` trailing columns, checking they are last and in order.
    fn trailing(&self, names: &[&str]) -> Result<usize> {
        let k = self.header.len();
        let start = k.checked_sub(names.len()).filter(|&s| s > 0);
        match start {
            Some(s) if self.header[s..].iter().zip(names).all(|(h, n)| h == n) => Ok(s),
            _ => Err(Error::Parse {
                path: self.path.clone(),
                line: 1,
                message: format!("expected point columns followed by {}", names.join(", ")),
            }),
        }
    }

    /// Domain from the first `k` columns.
    fn domain(&self, k: usize) -> Result<Arc<Domain>> {
        let wrap = |e: Error| Error::Parse { path: self.path.clone(), line: 1, message: e.to_string() };
        if k == 1 && self.header[0] == "label" {
            let labels: Vec<String> = self.rows.iter().map(|r| r.get(0).unwrap_or("").to_string()).collect();
            return Domain::labeled(labels).map(Arc::new).map_err(wrap);
        }
        let mut coords = Vec::with_capacity(self.rows.len());
        for r in 0..self.rows.len() {
            coords.push((0..k).map(|c| self.num(r, c)).collect::<Result<Vec<f64>>>()?);
        }
        Domain::from_coords(self.header[..k].to_vec(), coords).map(Arc::new).map_err(wrap)
    }
}

pub fn read_field(path: &Path) -> Result<Field> {
    let t = Table::read(path)?;
    let k = t.trailing(&["value"])?;
    Field::new(t.domain(k)?, t.column(k)?)
}

/// A band file with the estimate and standard error it was built from.
#[derive(Debug, Clone)]
pub struct BandFile {
    pub band: Band,
    pub estimate: Field,
    pub sd: Field,
}

pub fn read_band(path: &Path, alpha: f64) -> Result<BandFile> {
    let t = Table::read(path)?;
    let k = t.trailing(&["estimate", "sd", "lower", "upper"])?;
    let d = t.domain(k)?;
    let lower = Field::new(d.clone(), t.column(k + 2)?)?;
    let upper = Field::new(d.clone(), t.column(k + 3)?)?;
    if let Some(r) = (0..t.rows.len()).find(|&r| lower.values()[r] > upper.values()[r]) {
        return Err(Error::InvalidBand(format!("{}: lower > upper at line {}", t.path, r + 2)));
    }
    Ok(BandFile {
        band: Band::new(lower, upper, alpha)?,
        estimate: Field::new(d.clone(), t.column(k)?)?,
        sd: Field::new(d, t.column(k + 1)?)?,
    })
}

/// Sample written by [`write_sample`]: point columns then `y_0, y_1, ...`.
pub fn read_sample(path: &Path) -> Result<FunctionalSample> {
    let t = Table::read(path)?;
    let k = t.header.iter().position(|h| h.starts_with("y_")).filter(|&k| k > 0).ok_or_else(|| Error::Parse {
        path: t.path.clone(),
        line: 1,
        message: "expected point columns followed by y_0, y_1, ...".into(),
    })?;
    let n = t.header.len() - k;
    let d = t.domain(k)?;
    let m = d.len();
    let mut values = vec![0.0; n * m];
    for s in 0..m {
        for i in 0..n {
            values[i * m + s] = t.num(s, k + i)?;
        }
    }
    FunctionalSample::new(d, n, values)
}

/// All-numeric design file. With `response`, that column is split off as `y`.
pub fn read_design(path: &Path, response: Option<&str>) -> Result<(DesignMatrix, Option<Vec<f64>>)> {
    let t = Table::read(path)?;
    let resp = match response {
        Some(name) => Some(t.header.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            path: t.path.clone(),
            line: 1,
            message: format!("no response column {name:?}"),
        })?),
        None => None,
    };
    let cols: Vec<usize> = (0..t.header.len()).filter(|&c| Some(c) != resp).collect();
    let mut data = Vec::with_capacity(t.rows.len() * cols.len());
    for r in 0..t.rows.len() {
        for &c in &cols {
            data.push(t.num(r, c)?);
        }
    }
    let labels = cols.iter().map(|&c| t.header[c].clone()).collect();
    let x = DesignMatrix::new(t.rows.len(), cols.len(), data, labels)?;
    let y = resp.map(|c| t.column(c)).transpose()?;
    Ok((x, y))
}

/// Points file written by [`write_points`].
pub fn read_points(path: &Path) -> Result<Arc<Domain>> {
    let t = Table::read(path)?;
    t.domain(t.header.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inversion::band_from_vecs;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!("invset-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn band_round_trip_is_exact() {
        let d = Arc::new(Domain::from_coords(vec!["s".into()], vec![vec![0.1], vec![0.2], vec![1.0 / 3.0]]).unwrap());
        let est = Field::new(d.clone(), vec![0.1 + 0.2, -1e-300, 2.5]).unwrap();
        let sd = Field::new(d.clone(), vec![0.25, 1.0, std::f64::consts::PI]).unwrap();
        let band = band_from_vecs(d, vec![0.0, -2.0, 1.0], vec![0.6, 2.0, 4.0], 0.05).unwrap();
        let p = tmp("band.csv");
        to_file(&p, |w| write_band(w, &band, &est, &sd)).unwrap();
        let back = read_band(&p, 0.05).unwrap();
        assert_eq!(back.estimate.values(), est.values());
        assert_eq!(back.sd.values(), sd.values());
        assert_eq!(back.band.lower().values(), band.lower().values());
        assert_eq!(back.band.domain().points(), band.domain().points());
    }

    #[test]
    fn field_csv_layout() {
        let d = Arc::new(Domain::labeled(["b0", "b1"]).unwrap());
        let f = Field::new(d, vec![1.5, -2.0]).unwrap();
        let mut buf = Vec::new();
        write_field(&mut buf, &f).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "label,value\nb0,1.5\nb1,-2\n");
    }

    #[test]
    fn malformed_band_is_rejected() {
        let p = tmp("bad_band.csv");
        std::fs::write(&p, "s,estimate,sd,lower,upper\n0,1,1,2,0\n").unwrap();
        assert!(matches!(read_band(&p, 0.05), Err(Error::InvalidBand(_))));
        std::fs::write(&p, "s,estimate,sd,lower,upper\n0,1,x,0,2\n").unwrap();
        match read_band(&p, 0.05) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sample_and_design_round_trip() {
        let d = Arc::new(Domain::from_coords(vec!["s".into()], vec![vec![0.0], vec![1.0]]).unwrap());
        let s = FunctionalSample::new(d, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let p = tmp("sample.csv");
        to_file(&p, |w| write_sample(w, &s)).unwrap();
        let back = read_sample(&p).unwrap();
        assert_eq!(back.values(), s.values());
        assert_eq!(back.n(), 3);

        let x = DesignMatrix::from_rows(&[vec![1.0, 0.5], vec![1.0, -0.5], vec![1.0, 2.0]], vec!["a".into(), "b".into()])
            .unwrap();
        let y = [0.0, 1.0, 1.0];
        let p = tmp("train.csv");
        to_file(&p, |w| write_design(w, &x, Some(("y", &y)))).unwrap();
        let (x2, y2) = read_design(&p, Some("y")).unwrap();
        assert_eq!(x2.data(), x.data());
        assert_eq!(y2.unwrap(), y);
    }
}
