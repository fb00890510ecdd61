//! CSV and text serialization of traces, certificates and bounds.

use std::io::Write;

use arq_core::{BoundReport, Certificate, IterationKind, IterationRecord};

use crate::verify::{OrderCheck, OrderStatus};

pub const TRACE_COLUMNS: [&str; 12] = [
    "k",
    "kind",
    "j_k",
    "sigma",
    "rho",
    "step_norm",
    "delta_min_start",
    "delta_min_end",
    "acc_max",
    "f_bar",
    "value_evals_cum",
    "deriv_evals_cum",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn min(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

/// One row per iteration; `f_bar` is the inexact value at the point the
/// iteration leaves behind, empty when no value was computed.
pub fn write_trace_csv<W: Write>(mut w: W, trace: &[IterationRecord]) -> std::io::Result<()> {
    writeln!(w, "{}", TRACE_COLUMNS.join(","))?;
    for r in trace {
        let f_bar = match r.kind {
            Some(IterationKind::Successful) => r.f_bar_after,
            Some(IterationKind::Unsuccessful) => r.f_bar_before,
            _ => None,
        };
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.k,
            r.kind.map(|k| k.as_str()).unwrap_or(""),
            opt(r.j_k),
            r.sigma,
            opt(r.rho),
            opt(r.step_norm),
            min(&r.delta_start),
            min(&r.delta_end),
            r.accuracy.iter().copied().fold(0.0, f64::max),
            opt(f_bar),
            r.value_evals_cum,
            r.derivative_evals_cum,
        )?;
    }
    Ok(())
}

pub fn certificate_block(cert: &Certificate, checks: &[OrderCheck]) -> String {
    let list = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(",");
    let mut out = String::new();
    out.push_str(&format!("x_eps = {}\n", list(&cert.x_eps)));
    out.push_str(&format!("delta_eps = {}\n", list(&cert.delta_eps)));
    for ev in &cert.measured {
        out.push_str(&format!(
            "order{}.phi_bar = {:e}\norder{}.threshold = {:e}\n",
            ev.j, ev.phi_bar, ev.j, ev.threshold
        ));
    }
    for c in checks {
        let status = match c.status {
            OrderStatus::Verified => "true",
            OrderStatus::Violated => "false",
            OrderStatus::Unsupported => "unsupported",
        };
        out.push_str(&format!("order{}.phi_exact = {}\n", c.j, opt(c.phi.map(|v| format!("{v:e}")))));
        out.push_str(&format!("order{}.verified = {status}\n", c.j));
    }
    out
}

pub fn bounds_block(report: &BoundReport) -> String {
    report
        .to_key_values()
        .into_iter()
        .map(|(k, v)| format!("{k} = {v}\n"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use arq_core::problems::Quadratic;
    use arq_core::{solve, NoiseModel, SolverConfig};
    use std::sync::Arc;

    #[test]
    fn one_row_per_iteration_plus_header() {
        let prob = Arc::new(Quadratic::isotropic(2));
        let r = solve(prob, NoiseModel::exact(), SolverConfig::new(2, 1, vec![1e-3])).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &r.trace).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), r.trace.len() + 1);
        assert_eq!(lines[0], TRACE_COLUMNS.join(","));
        for l in &lines {
            assert_eq!(l.split(',').count(), 12);
        }
        // terminating row has an empty kind
        assert_eq!(lines.last().unwrap().split(',').nth(1), Some(""));
    }
}
