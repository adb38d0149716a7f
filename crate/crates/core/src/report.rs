//! Result tables: one [`RunRecord`] per solve and one [`CompareRecord`] per
//! instance and `alpha` in a bound comparison.
//!
//! Run table columns: `instance,n,alpha,formulation,status,ub,lb,lb_root,cpu_s,nodes,cuts,hubs`.
//! Compare table columns: `instance,n,alpha,sk,hlpma,cfp,fzp,cfs,fzs,improvement_pct`
//! followed by one `ok` / `FAIL` / empty flag per relation in [`RELATION_COLUMNS`].

use crate::bnc::MipResult;
use crate::error::{Error, Result};
use crate::formulations::FormulationKind;
use crate::instance::Instance;
use crate::oracle;
use std::io::{Read, Write};

pub const RUN_HEADER: [&str; 12] = [
    "instance",
    "n",
    "alpha",
    "formulation",
    "status",
    "ub",
    "lb",
    "lb_root",
    "cpu_s",
    "nodes",
    "cuts",
    "hubs",
];

/// Flag columns of the compare table, in the order of [`oracle::RELATIONS`].
pub const RELATION_COLUMNS: [&str; 5] = [
    "fzp_eq_hlpma",
    "fzs_eq_fzp",
    "cfs_eq_cfp",
    "cfp_le_hlpma",
    "sk_le_hlpma",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub instance: String,
    pub n: usize,
    pub alpha: f64,
    pub formulation: String,
    pub status: String,
    pub ub: f64,
    pub lb: f64,
    pub lb_root: f64,
    pub cpu_s: f64,
    pub nodes: usize,
    pub cuts: usize,
    /// 1-based.
    pub hubs: Vec<usize>,
}

impl RunRecord {
    pub fn from_result(instance: &str, inst: &Instance, kind: FormulationKind, res: &MipResult) -> Self {
        RunRecord {
            instance: instance.to_string(),
            n: inst.n(),
            alpha: inst.alpha,
            formulation: kind.to_string(),
            status: res.status.to_string(),
            ub: res.upper_bound,
            lb: res.lower_bound,
            lb_root: res.root_bound,
            cpu_s: res.wall_seconds,
            nodes: res.nodes,
            cuts: res.cuts,
            hubs: res.hubs.clone(),
        }
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.instance.clone(),
            self.n.to_string(),
            self.alpha.to_string(),
            self.formulation.clone(),
            self.status.clone(),
            self.ub.to_string(),
            self.lb.to_string(),
            self.lb_root.to_string(),
            format!("{:.3}", self.cpu_s),
            self.nodes.to_string(),
            self.cuts.to_string(),
            format_hubs(&self.hubs),
        ]
    }
}

/// `[2, 3]`.
pub fn format_hubs(hubs: &[usize]) -> String {
    format!("{hubs:?}")
}

fn parse_hubs(s: &str) -> Option<Vec<usize>> {
    let inner = s.trim().strip_prefix('[')?.strip_suffix(']')?;
    if inner.trim().is_empty() {
        return Some(Vec::new());
    }
    inner.split(',').map(|t| t.trim().parse().ok()).collect()
}

pub fn write_runs<W: Write>(records: &[RunRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RUN_HEADER)?;
    for r in records {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a run table written by [`write_runs`].
pub fn read_runs<R: Read>(input: R) -> Result<Vec<RunRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    if rd.headers()?.iter().ne(RUN_HEADER) {
        return Err(Error::parse(1, "unexpected run table header"));
    }
    let mut out = Vec::new();
    for (k, rec) in rd.records().enumerate() {
        let rec = rec?;
        let line = k + 2;
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .parse()
                .map_err(|_| Error::parse(line, format!("bad number in column {}", RUN_HEADER[i])))
        };
        let int = |i: usize| -> Result<usize> {
            rec[i]
                .parse()
                .map_err(|_| Error::parse(line, format!("bad integer in column {}", RUN_HEADER[i])))
        };
        out.push(RunRecord {
            instance: rec[0].to_string(),
            n: int(1)?,
            alpha: num(2)?,
            formulation: rec[3].to_string(),
            status: rec[4].to_string(),
            ub: num(5)?,
            lb: num(6)?,
            lb_root: num(7)?,
            cpu_s: num(8)?,
            nodes: int(9)?,
            cuts: int(10)?,
            hubs: parse_hubs(&rec[11]).ok_or_else(|| Error::parse(line, "bad hub list"))?,
        });
    }
    Ok(out)
}

/// Bounds of one instance at one `alpha`; absent formulations are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareRecord {
    pub instance: String,
    pub n: usize,
    pub alpha: f64,
    /// In [`FormulationKind::ALL`] order.
    pub bounds: [Option<f64>; 6],
}

impl CompareRecord {
    fn bound(&self, kind: FormulationKind) -> Option<f64> {
        let k = FormulationKind::ALL.iter().position(|&x| x == kind).expect("listed");
        self.bounds[k]
    }

    /// `100 (FZ_S - CF_S) / CF_S` when both roots are present.
    pub fn improvement_pct(&self) -> Option<f64> {
        Some(oracle::improvement_pct(
            self.bound(FormulationKind::CfS)?,
            self.bound(FormulationKind::FzS)?,
        ))
    }

    /// One flag per relation: `Some(true)` holds, `Some(false)` fails, `None`
    /// when a side is missing.
    pub fn relation_flags(&self, tol: f64) -> [Option<bool>; 5] {
        let mut out = [None; 5];
        for (k, &(a, b)) in oracle::RELATION_SIDES.iter().enumerate() {
            if let (Some(x), Some(y)) = (self.bound(a), self.bound(b)) {
                out[k] = Some(oracle::relation_holds(k, x, y, tol));
            }
        }
        out
    }
}

pub fn write_compare<W: Write>(records: &[CompareRecord], tol: f64, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["instance", "n", "alpha"];
    header.extend(FormulationKind::ALL.iter().map(|k| k.cli_name()));
    header.push("improvement_pct");
    header.extend(RELATION_COLUMNS);
    w.write_record(&header)?;
    let opt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
    for r in records {
        let mut row = vec![r.instance.clone(), r.n.to_string(), r.alpha.to_string()];
        row.extend(r.bounds.iter().map(|&b| opt(b)));
        row.push(r.improvement_pct().map_or(String::new(), |v| format!("{v:.6}")));
        row.extend(r.relation_flags(tol).iter().map(|f| match f {
            Some(true) => "ok".to_string(),
            Some(false) => "FAIL".to_string(),
            None => String::new(),
        }));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
