//! CSV formats: points (`x0,...,x{d-1}[,label]`), headerless matrices,
//! labels (`node_index,label`) and phases (`node_index,phase,amplitude_re,amplitude_im`).

use std::io::{Read, Write};

use nalgebra::{Complex, DMatrix};

use crate::error::{QtcError, Result};
use crate::graph::PointSet;

/// Scientific notation with 17 significant digits; round-trips every `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| QtcError::Input(format!("line {line}: cannot parse '{field}' as a number")))?;
    if !v.is_finite() {
        return Err(QtcError::Input(format!("line {line}: non-finite value '{field}'")));
    }
    Ok(v)
}

pub fn read_points<R: Read>(reader: R) -> Result<PointSet> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    let has_label = header.iter().next_back() == Some("label");
    let d = header.len() - usize::from(has_label);
    for (k, name) in header.iter().take(d).enumerate() {
        if name != format!("x{k}") {
            return Err(QtcError::Input(format!("expected column x{k}, found '{name}'")));
        }
    }
    let mut rows = Vec::new();
    let mut truth = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = n + 2;
        let row = (0..d)
            .map(|k| parse_f64(&rec[k], line))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
        if has_label {
            let l = rec[d]
                .trim()
                .parse()
                .map_err(|_| QtcError::Input(format!("line {line}: bad label '{}'", &rec[d])))?;
            truth.push(l);
        }
    }
    PointSet::from_rows(&rows, has_label.then_some(truth))
}

pub fn write_points<W: Write>(writer: W, points: &PointSet) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (0..points.dim()).map(|k| format!("x{k}")).collect();
    if points.truth().is_some() {
        header.push("label".into());
    }
    w.write_record(&header)?;
    for i in 0..points.len() {
        let mut rec: Vec<String> = points.row(i).into_iter().map(fmt_f64).collect();
        if let Some(t) = points.truth() {
            rec.push(t[i].to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a square headerless numeric grid.
pub fn read_matrix<R: Read>(reader: R) -> Result<DMatrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec?;
        rows.push(rec.iter().map(|f| parse_f64(f, n + 1)).collect::<Result<_>>()?);
    }
    let m = rows.len();
    if m == 0 || rows.iter().any(|r| r.len() != m) {
        return Err(QtcError::Input("matrix CSV must be square and nonempty".into()));
    }
    Ok(DMatrix::from_fn(m, m, |i, j| rows[i][j]))
}

pub fn write_matrix<W: Write>(writer: W, m: &DMatrix<f64>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    for i in 0..m.nrows() {
        w.write_record(m.row(i).iter().map(|&x| fmt_f64(x)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_labels<W: Write>(writer: W, labels: &[usize]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["node_index", "label"])?;
    for (i, l) in labels.iter().enumerate() {
        w.write_record([i.to_string(), l.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_labels<R: Read>(reader: R) -> Result<Vec<usize>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for rec in rdr.deserialize::<(usize, usize)>() {
        let (i, l) = rec?;
        if i != out.len() {
            return Err(QtcError::Input(format!("labels must be listed in node order, got node {i}")));
        }
        out.push(l);
    }
    Ok(out)
}

pub fn write_phases<W: Write>(writer: W, phases: &[f64], amplitudes: &[Complex<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["node_index", "phase", "amplitude_re", "amplitude_im"])?;
    for (i, (p, a)) in phases.iter().zip(amplitudes).enumerate() {
        w.write_record([i.to_string(), fmt_f64(*p), fmt_f64(a.re), fmt_f64(a.im)])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_round_trip_bit_exact() {
        let p = PointSet::from_rows(
            &[vec![0.1, -1.0 / 3.0], vec![1e-300, std::f64::consts::PI]],
            Some(vec![0, 1]),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_points(&mut buf, &p).unwrap();
        assert_eq!(read_points(buf.as_slice()).unwrap(), p);
    }

    #[test]
    fn points_without_labels() {
        let p = read_points("x0,x1\n0,0\n3,4\n".as_bytes()).unwrap();
        assert!(p.truth().is_none());
        assert_eq!(p.row(1), vec![3.0, 4.0]);
        assert!(read_points("x0,y\n0,0\n3,4\n".as_bytes()).is_err());
        assert!(read_points("x0\n0\nnan\n".as_bytes()).is_err());
    }

    #[test]
    fn matrix_round_trip() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.25, 0.25, 1.0]);
        let mut buf = Vec::new();
        write_matrix(&mut buf, &m).unwrap();
        assert_eq!(read_matrix(buf.as_slice()).unwrap(), m);
        assert!(read_matrix("1,2\n3\n".as_bytes()).is_err());
    }

    #[test]
    fn labels_round_trip() {
        let mut buf = Vec::new();
        write_labels(&mut buf, &[2, 0, 1]).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "node_index,label\n0,2\n1,0\n2,1\n");
        assert_eq!(read_labels(buf.as_slice()).unwrap(), vec![2, 0, 1]);
    }
}
