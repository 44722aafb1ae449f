//! CSV writers and the λ list syntax.

use std::io;

use chansense::sim::{EpisodeTrace, SweepRow};
use chansense::ScenarioConfig;

/// `start:step:stop` (both ends included) or `a,b,c`. Values are rounded to
/// 12 decimals so that `0:0.1:1` yields exactly 0.3 rather than 0.30000000000000004.
pub fn parse_lambdas(s: &str) -> Result<Vec<f64>, String> {
    let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}"));
    let round = |x: f64| (x * 1e12).round() / 1e12;
    let values = match s.split(':').collect::<Vec<_>>()[..] {
        [start, step, stop] => {
            let (start, step, stop) = (num(start)?, num(step)?, num(stop)?);
            if !(step > 0.0) || stop < start {
                return Err(format!("`{s}`: need step > 0 and stop >= start"));
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            let mut v: Vec<f64> = (0..=n).map(|i| round(start + i as f64 * step)).collect();
            if (v[n] - stop).abs() > 1e-9 {
                v.push(round(stop));
            }
            v
        }
        [single] => single.split(',').map(num).collect::<Result<Vec<_>, _>>()?,
        _ => {
            return Err(format!(
                "`{s}`: expected start:step:stop or a comma-separated list"
            ))
        }
    };
    if let Some(bad) = values.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        return Err(format!("lambda {bad} outside [0, 1]"));
    }
    Ok(values)
}

/// Writes the sweep table. A trailing `status` column appears only when some
/// cell failed.
pub fn write_sweep_csv<W: io::Write>(
    out: W,
    rows: &[SweepRow],
    sensors: &[String],
) -> io::Result<()> {
    let with_status = rows.iter().any(|r| r.status.is_some());
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let mut header: Vec<String> = [
        "lambda",
        "mode",
        "mse",
        "err_prob",
        "energy",
        "reward_lb",
        "reward_ub",
        "se_mse",
        "se_energy",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(sensors.iter().map(|s| format!("usage_{s}")));
    if with_status {
        header.push("status".into());
    }
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.lambda.to_string(), r.mode.clone()];
        rec.extend(
            [
                r.mse,
                r.err_prob,
                r.energy,
                r.reward_lb,
                r.reward_ub,
                r.se_mse,
                r.se_energy,
            ]
            .iter()
            .chain(&r.usage)
            .map(f64::to_string),
        );
        if with_status {
            rec.push(r.status.clone().unwrap_or_else(|| "ok".into()));
        }
        w.write_record(&rec)?;
    }
    w.flush()
}

pub(crate) fn write_trace_header<W: io::Write>(
    w: &mut csv::Writer<W>,
    config: &ScenarioConfig,
) -> io::Result<()> {
    let mut header: Vec<String> = [
        "episode",
        "slot",
        "state",
        "action",
        "map_estimate",
        "correct",
        "delta",
        "energy",
        "degenerate",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(config.states.iter().map(|s| format!("belief_{s}")));
    Ok(w.write_record(&header)?)
}

/// Appends one episode to a trace CSV (one row per slot, burn-in included).
pub fn write_trace_csv<W: io::Write>(
    w: &mut csv::Writer<W>,
    episode: usize,
    trace: &EpisodeTrace,
) -> io::Result<()> {
    for (k, r) in trace.records.iter().enumerate() {
        let mut rec = vec![
            episode.to_string(),
            k.to_string(),
            r.state.to_string(),
            r.action.to_string(),
            r.map_estimate.to_string(),
            r.correct.to_string(),
            r.delta.to_string(),
            r.energy.to_string(),
            r.degenerate.to_string(),
        ];
        rec.extend(r.belief.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    Ok(())
}
