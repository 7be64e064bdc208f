//! Text, NDJSON and CSV renderers.

use std::io::{self, Write};

use crate::record::{OracleRecord, OutputRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

/// CSV header for bound records: query fields, bound fields, then metadata.
pub const BOUND_HEADER: [&str; 27] = [
    "command",
    "n",
    "a",
    "d",
    "regime",
    "lower",
    "upper",
    "lower_2dp",
    "upper_2dp",
    "upper_weak",
    "upper_weak2",
    "lower_ground",
    "lower_bessel",
    "lower_fourier",
    "method_of_best_lower",
    "exact",
    "log2_lower_over_n",
    "log2_upper_over_n",
    "lambda_star",
    "p_star",
    "sigma_star",
    "quad_tol",
    "max_tol",
    "execution",
    "warnings",
    "error",
    "wall_time_s",
];

pub const ORACLE_HEADER: [&str; 12] = [
    "command",
    "mode",
    "n",
    "a",
    "d",
    "check",
    "value",
    "reference",
    "rel_err",
    "tolerance",
    "passed",
    "wall_time_s",
];

fn num(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn lower_name<T: serde::Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        _ => String::new(),
    }
}

fn bound_row(r: &OutputRecord) -> Vec<String> {
    vec![
        r.command.clone(),
        r.n.to_string(),
        r.a.to_string(),
        r.d.to_string(),
        r.regime.as_ref().map(lower_name).unwrap_or_default(),
        num(r.lower),
        num(r.upper),
        num(r.lower_2dp),
        num(r.upper_2dp),
        num(r.upper_weak),
        num(r.upper_weak2),
        num(r.lower_ground),
        num(r.lower_bessel),
        num(r.lower_fourier),
        r.method_of_best_lower
            .as_ref()
            .map(lower_name)
            .unwrap_or_default(),
        r.exact.map(|b| b.to_string()).unwrap_or_default(),
        num(r.log2_lower_over_n),
        num(r.log2_upper_over_n),
        num(r.lambda_star),
        num(r.p_star),
        num(r.sigma_star),
        r.settings.quad_tol.to_string(),
        r.settings.max_tol.to_string(),
        lower_name(&r.settings.execution),
        r.warnings.join("; "),
        r.error
            .as_ref()
            .map(|e| e.message.clone())
            .unwrap_or_default(),
        num(r.wall_time_s),
    ]
}

/// Streams bound records, flushing one record at a time.
pub struct BoundWriter<W: Write> {
    format: Format,
    csv: Option<csv::Writer<W>>,
    out: Option<W>,
    text_header: bool,
    wrote_text_header: bool,
}

impl<W: Write> BoundWriter<W> {
    /// `tabular` selects the compact one-line text form used by sweeps.
    pub fn new(format: Format, out: W, tabular: bool) -> io::Result<Self> {
        let mut w = BoundWriter {
            format,
            csv: None,
            out: None,
            text_header: tabular,
            wrote_text_header: false,
        };
        match format {
            Format::Csv => {
                let mut c = csv::Writer::from_writer(out);
                c.write_record(BOUND_HEADER)?;
                c.flush()?;
                w.csv = Some(c);
            }
            _ => w.out = Some(out),
        }
        Ok(w)
    }

    /// Header-only output for empty sweeps in text mode.
    pub fn finish(&mut self) -> io::Result<()> {
        if self.format == Format::Text && self.text_header && !self.wrote_text_header {
            self.write_sweep_header()?;
        }
        Ok(())
    }

    fn write_sweep_header(&mut self) -> io::Result<()> {
        let out = self.out.as_mut().expect("text writer");
        writeln!(
            out,
            "{:>8} {:>14} {:>14} {:>12} {:>12}  method",
            "n", "lower", "upper", "log2(lo)/n", "log2(up)/n"
        )?;
        self.wrote_text_header = true;
        Ok(())
    }

    pub fn write(&mut self, r: &OutputRecord) -> io::Result<()> {
        match self.format {
            Format::Csv => {
                let c = self.csv.as_mut().expect("csv writer");
                c.write_record(bound_row(r))?;
                c.flush()?;
            }
            Format::Json => {
                let out = self.out.as_mut().expect("json writer");
                serde_json::to_writer(&mut *out, r).map_err(io::Error::other)?;
                writeln!(out)?;
            }
            Format::Text if self.text_header => {
                if !self.wrote_text_header {
                    self.write_sweep_header()?;
                }
                let out = self.out.as_mut().expect("text writer");
                write_sweep_line(out, r)?;
            }
            Format::Text => {
                let out = self.out.as_mut().expect("text writer");
                write_bound_text(out, r)?;
            }
        }
        Ok(())
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.10}")).unwrap_or_else(|| "-".into())
}

fn write_sweep_line<W: Write>(out: &mut W, r: &OutputRecord) -> io::Result<()> {
    if let Some(e) = &r.error {
        return writeln!(out, "{:>8} error ({}): {}", r.n, e.kind, e.message);
    }
    let lo = |x: Option<f64>| x.map(|v| format!("{v:.6}")).unwrap_or_else(|| "-".into());
    writeln!(
        out,
        "{:>8} {:>14.6e} {:>14.6e} {:>12} {:>12}  {}",
        r.n,
        r.lower.unwrap_or(f64::NAN),
        r.upper.unwrap_or(f64::NAN),
        lo(r.log2_lower_over_n),
        lo(r.log2_upper_over_n),
        r.method_of_best_lower
            .as_ref()
            .map(lower_name)
            .unwrap_or_default(),
    )
}

/// Human-readable bracket for one query.
pub fn write_bound_text<W: Write>(out: &mut W, r: &OutputRecord) -> io::Result<()> {
    if r.command == "table" {
        return write_table_line(out, r);
    }
    write!(out, "K(n={}, a={}, d={})", r.n, r.a, r.d)?;
    if let Some(e) = &r.error {
        return writeln!(out, ": error ({}): {}", e.kind, e.message);
    }
    let regime = r.regime.as_ref().map(lower_name).unwrap_or_default();
    writeln!(out, ", {regime} regime")?;
    if r.exact == Some(true) {
        writeln!(
            out,
            "  K = {:.15} (exact, sharp)",
            r.upper.unwrap_or(f64::NAN)
        )?;
    } else {
        writeln!(
            out,
            "  {:.10} <= K <= {:.10}  (best lower: {})",
            r.lower.unwrap_or(f64::NAN),
            r.upper.unwrap_or(f64::NAN),
            r.method_of_best_lower
                .as_ref()
                .map(lower_name)
                .unwrap_or_default()
        )?;
    }
    writeln!(out, "  upper         {}", opt(r.upper))?;
    writeln!(out, "  upper (weak)  {}", opt(r.upper_weak))?;
    if r.upper_weak2.is_some() {
        writeln!(out, "  upper (weak2) {}", opt(r.upper_weak2))?;
    }
    writeln!(out, "  lower ground  {}", opt(r.lower_ground))?;
    writeln!(out, "  lower bessel  {}", opt(r.lower_bessel))?;
    writeln!(out, "  lower fourier {}", opt(r.lower_fourier))?;
    if let Some(l) = r.lambda_star {
        writeln!(out, "  lambda*       {l:.10}")?;
    }
    if let (Some(p), Some(s)) = (r.p_star, r.sigma_star) {
        writeln!(out, "  p*, sigma*    {p:.10}, {s:.10}")?;
    }
    if let (Some(l), Some(u)) = (r.log2_lower_over_n, r.log2_upper_over_n) {
        writeln!(out, "  log2(K)/n in  [{l:.6}, {u:.6}]")?;
    }
    for w in &r.warnings {
        writeln!(out, "  warning: {w}")?;
    }
    if let Some(t) = r.wall_time_s {
        writeln!(out, "  wall time     {t:.3} s")?;
    }
    Ok(())
}

fn write_table_line<W: Write>(out: &mut W, r: &OutputRecord) -> io::Result<()> {
    write!(out, "(d,a,n) = ({},{},{})  ", r.d, r.a, r.n)?;
    if let Some(e) = &r.error {
        return writeln!(out, "error ({}): {}", e.kind, e.message);
    }
    if r.exact == Some(true) {
        write!(out, "K = {:.6}", r.upper.unwrap_or(f64::NAN))?;
    } else {
        write!(
            out,
            "{:.2} < K < {:.2}",
            r.lower_2dp.unwrap_or(f64::NAN),
            r.upper_2dp.unwrap_or(f64::NAN)
        )?;
    }
    if let Some(t) = r.wall_time_s {
        write!(out, "  ({t:.3} s)")?;
    }
    writeln!(out)
}

fn oracle_rows(r: &OracleRecord) -> Vec<Vec<String>> {
    let head = |check: &str| {
        vec![
            r.command.clone(),
            lower_name(&r.mode),
            r.n.to_string(),
            r.a.to_string(),
            r.d.to_string(),
            check.to_string(),
        ]
    };
    let time = num(r.wall_time_s);
    let mut rows = Vec::new();
    for c in &r.checks {
        let mut row = head(&c.name);
        row.extend([
            c.value.to_string(),
            c.reference.to_string(),
            c.rel_err.to_string(),
            c.tolerance.to_string(),
            c.passed.to_string(),
            time.clone(),
        ]);
        rows.push(row);
    }
    if let Some(s) = &r.search {
        let mut row = head("search best ratio <= upper");
        row.extend([
            s.best_ratio.to_string(),
            num(r.upper),
            String::new(),
            String::new(),
            r.passed.to_string(),
            time.clone(),
        ]);
        rows.push(row);
    }
    if let Some(e) = &r.error {
        let mut row = head(&format!("error: {}", e.message));
        row.extend([
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            "false".into(),
            time,
        ]);
        rows.push(row);
    }
    rows
}

pub fn write_oracle<W: Write>(format: Format, mut out: W, r: &OracleRecord) -> io::Result<()> {
    match format {
        Format::Json => {
            serde_json::to_writer(&mut out, r).map_err(io::Error::other)?;
            writeln!(out)
        }
        Format::Csv => {
            let mut c = csv::Writer::from_writer(out);
            c.write_record(ORACLE_HEADER)?;
            for row in oracle_rows(r) {
                c.write_record(row)?;
            }
            c.flush()
        }
        Format::Text => write_oracle_text(&mut out, r),
    }
}

fn write_oracle_text<W: Write>(out: &mut W, r: &OracleRecord) -> io::Result<()> {
    write!(
        out,
        "oracle {} for K(n={}, a={}, d={})",
        lower_name(&r.mode),
        r.n,
        r.a,
        r.d
    )?;
    if let Some(g) = &r.grid {
        write!(out, " on grid L={} N={}", g.half_width, g.points)?;
    }
    writeln!(out)?;
    for w in &r.warnings {
        writeln!(out, "  warning: {w}")?;
    }
    if let Some(e) = &r.error {
        writeln!(out, "  error ({}): {}", e.kind, e.message)?;
    }
    for c in &r.checks {
        writeln!(
            out,
            "  [{}] {:<28} value {:<14.8} ref {:<14.8} rel {:.2e} (tol {:.0e})",
            if c.passed { "pass" } else { "FAIL" },
            c.name,
            c.value,
            c.reference,
            c.rel_err,
            c.tolerance
        )?;
    }
    if let Some(s) = &r.search {
        writeln!(out, "  best ratio      {:.8}", s.best_ratio)?;
        if let Some(b) = s.bessel_ratio {
            writeln!(out, "  bessel witness  {b:.8}")?;
        }
        writeln!(out, "  upper bound     {}", opt(r.upper))?;
        writeln!(
            out,
            "  evaluations     {} ({} accepted)",
            s.evaluations, s.accepted_steps
        )?;
    }
    writeln!(out, "  {}", if r.passed { "PASS" } else { "FAIL" })?;
    if let Some(t) = r.wall_time_s {
        writeln!(out, "  wall time {t:.3} s")?;
    }
    Ok(())
}
