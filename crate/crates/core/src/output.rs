//! CSV artifacts: time series, benchmark rows.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so a
//! deterministic run produces byte-identical files.

use std::io::Write;

use crate::building::{BuildingModel, SimulationResult, Snapshot};
use crate::dimensionless::{to_relative_humidity, unscale_fields};
use crate::error::Result;

pub const TIMESERIES_HEADER: [&str; 10] = [
    "t_star",
    "entity",
    "kind",
    "node_or_zone",
    "x_star",
    "u",
    "v",
    "T_K",
    "P_v_Pa",
    "phi",
];

pub const BENCH_HEADER: [&str; 4] = ["scheme", "wall_clock_s", "mean_subiters", "max_subiters"];

/// Which rows of each snapshot to write.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rows {
    /// Every wall node and every zone.
    All,
    /// Wall surfaces and zones.
    Surfaces,
}

/// Streams the time series of a run; `zone_names` label the zones in order.
pub struct TimeSeriesWriter<W: Write> {
    csv: csv::Writer<W>,
    rows: Rows,
}

impl<W: Write> TimeSeriesWriter<W> {
    pub fn new(out: W, rows: Rows) -> Result<Self> {
        let mut csv = csv::Writer::from_writer(out);
        csv.write_record(TIMESERIES_HEADER)?;
        Ok(TimeSeriesWriter { csv, rows })
    }

    pub fn snapshot(
        &mut self,
        model: &BuildingModel,
        zone_names: &[String],
        s: &Snapshot,
    ) -> Result<()> {
        let r = &model.reference;
        let t = s.t_star.to_string();
        for (w, (u, v)) in model.walls.iter().zip(&s.walls) {
            let n = u.len();
            let nodes: Vec<usize> = match self.rows {
                Rows::All => (0..n).collect(),
                Rows::Surfaces => vec![0, n - 1],
            };
            for j in nodes {
                let (temp, p_v) = unscale_fields(u[j], v[j], r);
                self.csv.write_record([
                    t.as_str(),
                    &w.name,
                    "wall",
                    &j.to_string(),
                    &w.grid.position(j).to_string(),
                    &u[j].to_string(),
                    &v[j].to_string(),
                    &temp.to_string(),
                    &p_v.to_string(),
                    &to_relative_humidity(v[j], u[j], r).to_string(),
                ])?;
            }
        }
        for (z, state) in s.zones.iter().enumerate() {
            let (temp, p_v) = unscale_fields(state.u_a, state.v_a, r);
            let name = zone_names
                .get(z)
                .cloned()
                .unwrap_or_else(|| format!("zone{z}"));
            self.csv.write_record([
                t.as_str(),
                &name,
                "zone",
                &z.to_string(),
                "",
                &state.u_a.to_string(),
                &state.v_a.to_string(),
                &temp.to_string(),
                &p_v.to_string(),
                &to_relative_humidity(state.v_a, state.u_a, r).to_string(),
            ])?;
        }
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.csv.flush()?;
        Ok(())
    }
}

/// Writes every snapshot of a finished run.
pub fn write_timeseries<W: Write>(
    out: W,
    model: &BuildingModel,
    zone_names: &[String],
    result: &SimulationResult,
    rows: Rows,
) -> Result<()> {
    let mut w = TimeSeriesWriter::new(out, rows)?;
    for s in &result.snapshots {
        w.snapshot(model, zone_names, s)?;
    }
    w.flush()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub scheme: String,
    pub wall_clock_s: f64,
    pub mean_subiters: f64,
    pub max_subiters: usize,
}

impl BenchRow {
    pub fn of(result: &SimulationResult) -> Self {
        BenchRow {
            scheme: result.scheme.name().to_string(),
            wall_clock_s: result.wall_clock,
            mean_subiters: result.mean_subiterations(),
            max_subiters: result.max_subiterations(),
        }
    }
}

pub fn write_bench<W: Write>(out: W, rows: &[BenchRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(BENCH_HEADER)?;
    for r in rows {
        w.write_record([
            r.scheme.clone(),
            r.wall_clock_s.to_string(),
            r.mean_subiters.to_string(),
            r.max_subiters.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::building::run;
    use crate::scenario::{Overrides, Scenario};

    #[test]
    fn header_and_rows() {
        let s = Scenario::bundled("one_zone_linear").unwrap();
        let m = s
            .build(&Overrides {
                horizon: Some(0.01),
                ..Default::default()
            })
            .unwrap();
        let r = run(&m, 0.005).unwrap();
        let mut buf = Vec::new();
        write_timeseries(&mut buf, &m, &["room".into()], &r, Rows::Surfaces).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t_star,entity,kind,node_or_zone,x_star,u,v,T_K,P_v_Pa,phi"
        );
        // 3 records × (4 walls × 2 surfaces + 1 zone).
        assert_eq!(lines.clone().count(), 3 * 9);
        let first = lines.next().unwrap();
        assert!(first.starts_with("0,north,wall,0,0,1,1,293.15,"), "{first}");
        assert!(text.lines().any(|l| l.starts_with("0.01,room,zone,0,,")));
    }

    #[test]
    fn bench_header() {
        let mut buf = Vec::new();
        write_bench(
            &mut buf,
            &[BenchRow {
                scheme: "df".into(),
                wall_clock_s: 1.5,
                mean_subiters: 0.0,
                max_subiters: 3,
            }],
        )
        .unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "scheme,wall_clock_s,mean_subiters,max_subiters\ndf,1.5,0,3\n"
        );
    }
}
