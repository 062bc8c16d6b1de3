//! CSV tables and SVG frames.
//!
//! Every CSV has a header row; numbers are written with `{:.16e}` (17
//! significant digits), so a parse gives back the same `f64`.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use charmer_core::config::{Configuration, Piece};
use charmer_core::curve::Curve;
use charmer_core::solver::{LiftResult, Su11LiftResult};
use nalgebra::DVector;

use crate::error::CliResult;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, x) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write!(out, "{}", number(*x)).unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn parse(text: &str) -> Option<Table> {
        let mut lines = text.lines();
        let header = lines.next()?.split(',').map(str::to_string).collect();
        let rows = lines
            .filter(|l| !l.is_empty())
            .map(|l| l.split(',').map(|x| x.parse().ok()).collect::<Option<Vec<f64>>>())
            .collect::<Option<_>>()?;
        Some(Table { header, rows })
    }
}

pub fn number(x: f64) -> String {
    format!("{x:.16e}")
}

fn indexed(prefix: &str, d: usize) -> impl Iterator<Item = String> + '_ {
    (1..=d).map(move |i| format!("{prefix}_{i}"))
}

/// `t, gamma_1..gamma_d, defect` followed by the group chart: `v_1, v_2,
/// theta` in the plane (double-cover chart), `v_1..v_d` otherwise.
pub fn trajectory_header(d: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend(indexed("gamma", d));
    h.push("defect".into());
    h.extend(indexed("v", d));
    if d == 2 {
        h.push("theta".into());
    }
    h
}

/// `t, gamma_1..gamma_d, defect, p_1..p_d, q_1..q_d` for two-valued lifts.
pub fn bivalued_header(d: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend(indexed("gamma", d));
    h.push("defect".into());
    h.extend(indexed("p", d));
    h.extend(indexed("q", d));
    h
}

pub fn trajectory_row(t: f64, gamma: &DVector<f64>, defect: f64, v: &DVector<f64>, theta: Option<f64>) -> Vec<f64> {
    let mut row = vec![t];
    row.extend(gamma.iter());
    row.push(defect);
    row.extend(v.iter());
    row.extend(theta);
    row
}

/// Appends the recorded points of a Lorentz-model lift, with `t` shifted by
/// `offset`. The first point is skipped when `skip_first` is set (it repeats
/// the end of a previous segment).
pub fn append_lift(table: &mut Table, lift: &LiftResult, curve: &dyn Curve, offset: f64, skip_first: bool) {
    for i in usize::from(skip_first)..lift.times.len() {
        let t = lift.times[i];
        let (v, _) = lift.group_path[i].chart_coordinates();
        table.push(trajectory_row(offset + t, &curve.eval(t), lift.defects[i], &v, None));
    }
}

pub fn append_su11_lift(table: &mut Table, lift: &Su11LiftResult, curve: &dyn Curve, offset: f64, skip_first: bool) {
    let charts = lift.charts();
    for i in usize::from(skip_first)..lift.lift.times.len() {
        let t = lift.lift.times[i];
        let (v, theta) = &charts[i];
        table.push(trajectory_row(offset + t, &curve.eval(t), lift.lift.defects[i], v, Some(*theta)));
    }
}

/// `s, x_1..x_d`: constant pieces as two rows (both ends), sampled pieces at
/// their nodes.
pub fn configuration_table(z: &Configuration) -> Table {
    let mut header = vec!["s".to_string()];
    header.extend(indexed("x", z.dim()));
    let mut table = Table::new(header);
    for (i, piece) in z.pieces().iter().enumerate() {
        let (a, b) = z.partition().bounds(i);
        match piece {
            Piece::Constant(p) => {
                for s in [a, b] {
                    table.push(std::iter::once(s).chain(p.coords().iter().copied()).collect());
                }
            }
            Piece::Sampled(sp) => {
                for (s, p) in sp.nodes().iter().zip(sp.values()) {
                    table.push(std::iter::once(*s).chain(p.coords().iter().copied()).collect());
                }
            }
        }
    }
    table
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

/// One SVG frame: admissible ball (dashed), target curve (grey), snake
/// polyline (black) and snout marker (red). Higher dimensions are projected
/// on the first two coordinates.
pub fn frame_svg(z: &Configuration, target: &[DVector<f64>], ball_radius: f64, points: usize) -> CliResult<String> {
    let snake = z.integrate_snake(points.max(2))?;
    let l = z.length();
    let size = 480.0;
    let scale = size / (2.2 * l);
    let px = |p: &DVector<f64>| (size / 2.0 + scale * p[0], size / 2.0 - scale * p[1]);
    let path = |pts: &mut dyn Iterator<Item = &DVector<f64>>| {
        let mut s = String::new();
        for p in pts {
            let (x, y) = px(p);
            write!(s, "{x:.3},{y:.3} ").unwrap();
        }
        s.trim_end().to_string()
    };
    let mut svg = String::new();
    writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#).unwrap();
    writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    if ball_radius > 0.0 {
        writeln!(
            svg,
            r##"<circle class="ball" cx="{c}" cy="{c}" r="{r:.3}" fill="none" stroke="#bbb" stroke-dasharray="4 4"/>"##,
            c = size / 2.0,
            r = scale * ball_radius
        )
        .unwrap();
    }
    writeln!(
        svg,
        r##"<polyline class="target" points="{}" fill="none" stroke="#888" stroke-width="1"/>"##,
        path(&mut target.iter())
    )
    .unwrap();
    writeln!(
        svg,
        r#"<polyline class="snake" points="{}" fill="none" stroke="black" stroke-width="2"/>"#,
        path(&mut snake.samples.iter().map(|(_, p)| p))
    )
    .unwrap();
    let (sx, sy) = px(snake.snout());
    writeln!(svg, r#"<circle class="snout" cx="{sx:.3}" cy="{sy:.3}" r="4" fill="red"/>"#).unwrap();
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// `n` points of `curve` on `[0, 1]`.
pub fn sample_curve(curve: &dyn Curve, n: usize) -> Vec<DVector<f64>> {
    (0..n).map(|i| curve.eval(i as f64 / (n - 1).max(1) as f64)).collect()
}
