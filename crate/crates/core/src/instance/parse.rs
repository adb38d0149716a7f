//! Readers and writers for the canonical HLI format and the CAB / AP style raw
//! matrices.

use super::{Commodity, Instance};
use crate::error::{Error, Result};
use std::fmt::Write as _;

fn parse_num(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| Error::parse(line, format!("expected a number, found `{tok}`")))
}

fn parse_index(tok: &str, line: usize, n: usize) -> Result<usize> {
    let v = tok
        .parse::<usize>()
        .map_err(|_| Error::parse(line, format!("expected a node index, found `{tok}`")))?;
    if v == 0 || v > n {
        return Err(Error::parse(line, format!("node {v} outside 1..={n}")));
    }
    Ok(v - 1)
}

/// Parses the line-oriented HLI format. Blank lines and lines starting with `#`
/// are skipped; reported line numbers are physical lines of `text`.
pub fn parse_canonical(text: &str) -> Result<Instance> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| Error::parse(0, format!("unexpected end of input, expected {what}")))
    };

    let (ln, l) = next("header")?;
    let toks: Vec<&str> = l.split_whitespace().collect();
    if toks != ["HLI", "1"] {
        return Err(Error::parse(ln, "expected header `HLI 1`"));
    }

    let (ln, l) = next("`n <int>`")?;
    let toks: Vec<&str> = l.split_whitespace().collect();
    let n = match toks.as_slice() {
        ["n", v] => v
            .parse::<usize>()
            .map_err(|_| Error::parse(ln, format!("invalid node count `{v}`")))?,
        _ => return Err(Error::parse(ln, "expected `n <int>`")),
    };

    let (ln, l) = next("factors")?;
    let toks: Vec<&str> = l.split_whitespace().collect();
    let (alpha, gamma, theta) = match toks.as_slice() {
        ["alpha", a, "gamma", g, "theta", t] => {
            (parse_num(a, ln)?, parse_num(g, ln)?, parse_num(t, ln)?)
        }
        _ => return Err(Error::parse(ln, "expected `alpha <a> gamma <g> theta <t>`")),
    };

    let (ln, l) = next("setup costs")?;
    let mut toks = l.split_whitespace();
    if toks.next() != Some("setup") {
        return Err(Error::parse(ln, "expected `setup` followed by n values"));
    }
    let setup = toks.map(|t| parse_num(t, ln)).collect::<Result<Vec<_>>>()?;
    if setup.len() != n {
        return Err(Error::parse(ln, format!("expected {n} values")));
    }

    let mut cost = Vec::with_capacity(n);
    for _ in 0..n {
        let (ln, l) = next("cost row")?;
        let row = l
            .split_whitespace()
            .map(|t| parse_num(t, ln))
            .collect::<Result<Vec<_>>>()?;
        if row.len() != n {
            return Err(Error::parse(ln, format!("expected {n} values")));
        }
        if let Some(v) = row.iter().find(|v| **v < 0.0) {
            return Err(Error::parse(ln, format!("negative cost {v}")));
        }
        cost.push(row);
    }

    let (ln, l) = next("`commodities <m>`")?;
    let toks: Vec<&str> = l.split_whitespace().collect();
    let m = match toks.as_slice() {
        ["commodities", v] => v
            .parse::<usize>()
            .map_err(|_| Error::parse(ln, format!("invalid commodity count `{v}`")))?,
        _ => return Err(Error::parse(ln, "expected `commodities <m>`")),
    };
    let mut commodities = Vec::with_capacity(m);
    for _ in 0..m {
        let (ln, l) = next("commodity line")?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(Error::parse(ln, "expected 3 values"));
        }
        let origin = parse_index(toks[0], ln, n)?;
        let dest = parse_index(toks[1], ln, n)?;
        let demand = parse_num(toks[2], ln)?;
        if demand < 0.0 {
            return Err(Error::parse(ln, format!("negative demand {demand}")));
        }
        commodities.push(Commodity {
            origin,
            dest,
            demand,
        });
    }
    if let Some((ln, _)) = lines.next() {
        return Err(Error::parse(ln, "unexpected trailing content"));
    }
    Instance::new(cost, setup, commodities, alpha, gamma, theta)
}

/// Writes the HLI format. Numbers use the shortest representation that parses
/// back to the same `f64`, so [`parse_canonical`] reproduces the instance exactly.
pub fn to_canonical(inst: &Instance) -> String {
    let n = inst.n();
    let mut s = String::new();
    let join = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let _ = writeln!(s, "HLI 1");
    let _ = writeln!(s, "n {n}");
    let _ = writeln!(
        s,
        "alpha {} gamma {} theta {}",
        inst.alpha, inst.gamma, inst.theta
    );
    let _ = writeln!(s, "setup {}", join(inst.setup()));
    for i in 0..n {
        let _ = writeln!(s, "{}", join(inst.cost_row(i)));
    }
    let _ = writeln!(s, "commodities {}", inst.num_commodities());
    for k in inst.commodities() {
        let _ = writeln!(s, "{} {} {}", k.origin + 1, k.dest + 1, k.demand);
    }
    s
}

/// Whitespace-separated numeric token stream with positional error messages.
struct Tokens<'a> {
    iter: std::iter::Enumerate<std::str::SplitWhitespace<'a>>,
}

impl<'a> Tokens<'a> {
    fn new(raw: &'a str) -> Self {
        Tokens {
            iter: raw.split_whitespace().enumerate(),
        }
    }

    fn num(&mut self, what: &str) -> Result<f64> {
        match self.iter.next() {
            Some((k, t)) => t.parse::<f64>().map_err(|_| {
                Error::parse(k + 1, format!("non-numeric token `{t}` in {what}"))
            }),
            None => Err(Error::InvalidInstance(format!(
                "raw data ended early while reading {what}"
            ))),
        }
    }

    fn matrix(&mut self, size: usize, what: &str) -> Result<Vec<Vec<f64>>> {
        (0..size)
            .map(|_| (0..size).map(|_| self.num(what)).collect())
            .collect()
    }
}

fn header_size(tok: &mut Tokens, n: usize) -> Result<usize> {
    let total = tok.num("header")?;
    if total < 0.0 || total.fract() != 0.0 {
        return Err(Error::parse(1, format!("invalid node count {total}")));
    }
    let total = total as usize;
    if n > total {
        return Err(Error::InvalidInstance(format!(
            "requested {n} nodes but the data holds only {total}"
        )));
    }
    Ok(total)
}

fn prefix_setup(setup: &[f64], n: usize) -> Result<Vec<f64>> {
    if setup.len() < n {
        return Err(Error::InvalidInstance(format!(
            "need {n} setup costs, got {}",
            setup.len()
        )));
    }
    Ok(setup[..n].to_vec())
}

fn all_pairs(flow: &[Vec<f64>], n: usize) -> Vec<Commodity> {
    let mut out = Vec::with_capacity(n * n.saturating_sub(1));
    for o in 0..n {
        for d in 0..n {
            if o != d {
                out.push(Commodity {
                    origin: o,
                    dest: d,
                    demand: flow[o][d],
                });
            }
        }
    }
    out
}

/// Loads the first `n` nodes of a CAB-style file: a node count, then the full
/// flow matrix, then the full cost matrix (both row-major). Every ordered pair
/// of distinct nodes becomes a commodity. `setup` needs at least `n` entries;
/// the first `n` are used.
pub fn load_cab(
    raw: &str,
    n: usize,
    alpha: f64,
    gamma: f64,
    theta: f64,
    setup: &[f64],
) -> Result<Instance> {
    let mut tok = Tokens::new(raw);
    let total = header_size(&mut tok, n)?;
    let flow = tok.matrix(total, "flow matrix")?;
    let cost = tok.matrix(total, "cost matrix")?;
    let cost = cost.into_iter().take(n).map(|row| row[..n].to_vec()).collect();
    Instance::new(
        cost,
        prefix_setup(setup, n)?,
        all_pairs(&flow, n),
        alpha,
        gamma,
        theta,
    )
}

/// Loads the first `n` nodes of an AP-style file: a node count, coordinate
/// pairs, then the (possibly asymmetric) flow matrix. Costs are Euclidean
/// distances between the coordinates.
pub fn load_ap(
    raw: &str,
    n: usize,
    alpha: f64,
    gamma: f64,
    theta: f64,
    setup: &[f64],
) -> Result<Instance> {
    let mut tok = Tokens::new(raw);
    let total = header_size(&mut tok, n)?;
    let coords = (0..total)
        .map(|_| Ok((tok.num("coordinates")?, tok.num("coordinates")?)))
        .collect::<Result<Vec<_>>>()?;
    let flow = tok.matrix(total, "flow matrix")?;
    let cost = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let (dx, dy) = (coords[i].0 - coords[j].0, coords[i].1 - coords[j].1);
                    dx.hypot(dy)
                })
                .collect()
        })
        .collect();
    Instance::new(
        cost,
        prefix_setup(setup, n)?,
        all_pairs(&flow, n),
        alpha,
        gamma,
        theta,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TWO: &str = "HLI 1\nn 2\nalpha 0.5 gamma 1 theta 1\nsetup 1 1\n0 5\n5 0\ncommodities 1\n1 2 1\n";

    const TOY4: &str = "HLI 1
n 4
alpha 0.5 gamma 1 theta 1
setup 10 1 1 10
0 1 2 3
1 0 1 2
2 1 0 1
3 2 1 0
commodities 2
1 4 1
2 3 1
";

    #[test]
    fn smallest_legal_instance() {
        let inst = parse_canonical(TWO).unwrap();
        assert_eq!(inst.n(), 2);
        assert_eq!(inst.num_commodities(), 1);
        assert_eq!(inst.c(0, 1), 5.0);
    }

    #[test]
    fn short_row_reports_line() {
        let bad = TWO.replace("setup 1 1", "setup 1");
        let err = parse_canonical(&bad).unwrap_err();
        assert_eq!(err.to_string(), "row 4: expected 2 values");
        let bad = TWO.replace("0 5\n", "0\n");
        let err = parse_canonical(&bad).unwrap_err();
        assert_eq!(err.to_string(), "row 5: expected 2 values");
    }

    #[test]
    fn malformed_header_and_negative_values() {
        assert!(parse_canonical(&TWO.replace("HLI 1", "HLX 1")).is_err());
        let err = parse_canonical(&TWO.replace("1 2 1\n", "1 2 -1\n")).unwrap_err();
        assert!(err.to_string().starts_with("row 8:"));
        let err = parse_canonical(&TWO.replace("0 5\n", "0 -5\n")).unwrap_err();
        assert!(err.to_string().starts_with("row 5:"));
    }

    #[test]
    fn toy4_file_echoes_fields() {
        let inst = parse_canonical(TOY4).unwrap();
        assert_eq!(inst, Instance::toy4());
        assert_eq!(to_canonical(&inst), TOY4);
    }

    #[test]
    fn self_costs_zeroed_on_load() {
        let inst = parse_canonical(&TWO.replace("0 5\n5 0", "4 5\n5 9")).unwrap();
        assert_eq!(inst.c(0, 0), 0.0);
        assert_eq!(inst.c(1, 1), 0.0);
    }

    fn cab_text(size: usize, flow: &[Vec<f64>], cost: &[Vec<f64>]) -> String {
        let mut s = format!("{size}\n");
        for m in [flow, cost] {
            for row in m {
                s.push_str(
                    &row.iter()
                        .map(|v| v.to_string())
                        .collect::<Vec<_>>()
                        .join(" "),
                );
                s.push('\n');
            }
        }
        s
    }

    fn synthetic(size: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let flow = (0..size)
            .map(|i| (0..size).map(|j| ((i * 7 + j * 3) % 11) as f64).collect())
            .collect();
        let cost = (0..size)
            .map(|i| (0..size).map(|j| (i as f64 - j as f64).abs() * 1.5).collect())
            .collect();
        (flow, cost)
    }

    #[test]
    fn cab_prefix_counts_commodities() {
        let (flow, cost) = synthetic(5);
        let raw = cab_text(5, &flow, &cost);
        let inst = load_cab(&raw, 3, 0.5, 1.0, 1.0, &[1.0; 5]).unwrap();
        assert_eq!(inst.num_commodities(), 6);
        let full = load_cab(&raw, 5, 0.5, 1.0, 1.0, &[1.0; 5]).unwrap();
        assert_eq!(full.num_commodities(), 20);
        assert!(load_cab(&raw, 6, 0.5, 1.0, 1.0, &[1.0; 6]).is_err());
        assert!(load_cab(&raw.replace("1.5", "x"), 3, 0.5, 1.0, 1.0, &[1.0; 5]).is_err());
    }

    #[test]
    fn cab_prefix_20_of_25_matches_slices() {
        let (flow, cost) = synthetic(25);
        let raw = cab_text(25, &flow, &cost);
        let inst = load_cab(&raw, 20, 0.2, 1.0, 1.0, &[2.0; 25]).unwrap();
        for i in 0..20 {
            for j in 0..20 {
                assert_eq!(inst.c(i, j), cost[i][j]);
            }
        }
        for k in inst.commodities() {
            assert_eq!(k.demand, flow[k.origin][k.dest]);
        }
        // restriction of the full load equals the prefix load
        let full = load_cab(&raw, 25, 0.2, 1.0, 1.0, &[2.0; 25]).unwrap();
        let restricted: Vec<_> = full
            .commodities()
            .iter()
            .filter(|k| k.origin < 20 && k.dest < 20)
            .copied()
            .collect();
        assert_eq!(restricted, inst.commodities());
    }

    #[test]
    fn ap_three_four_five() {
        let raw = "2\n0 0\n3 4\n0 2\n7 0\n";
        let inst = load_ap(raw, 2, 0.5, 1.0, 1.0, &[1.0, 1.0]).unwrap();
        assert_eq!(inst.c(0, 1), 5.0);
        assert_eq!(inst.c(1, 0), 5.0);
        assert_eq!(inst.commodities()[0].demand, 2.0);
        assert_eq!(inst.commodities()[1].demand, 7.0);
    }

    #[test]
    fn ap_coincident_points_warn() {
        let raw = "2\n1 1\n1 1\n0 1\n1 0\n";
        let inst = load_ap(raw, 2, 0.5, 1.0, 1.0, &[1.0, 1.0]).unwrap();
        assert_eq!(inst.c(0, 1), 0.0);
        let rep = inst.validate();
        assert!(rep.is_ok());
        assert!(rep.warnings.iter().any(|w| w.contains("zero cost")));
    }

    #[test]
    fn ap_distances_match_independent_recomputation() {
        let pts: [(f64, f64); 4] = [(0.5, 7.25), (3.0, -1.0), (10.0, 2.0), (-4.0, 4.0)];
        let mut raw = String::from("4\n");
        for (x, y) in pts {
            raw.push_str(&format!("{x} {y}\n"));
        }
        for i in 0..4 {
            raw.push_str(&format!("{} {} {} {}\n", i, i + 1, i + 2, i + 3));
        }
        let inst = load_ap(&raw, 4, 0.5, 1.0, 1.0, &[0.0; 4]).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let d = ((pts[i].0 - pts[j].0).powi(2) + (pts[i].1 - pts[j].1).powi(2)).sqrt();
                assert!((inst.c(i, j) - d).abs() < 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn canonical_round_trip(
            n in 2usize..6,
            seed in any::<u64>(),
            alpha in 0.0f64..1.0,
        ) {
            let cfg = super::super::GeneratorConfig { n, seed, alpha, ..Default::default() };
            let inst = super::super::generate_random(&cfg);
            let text = to_canonical(&inst);
            let back = parse_canonical(&text).unwrap();
            prop_assert_eq!(back, inst);
        }
    }
}
