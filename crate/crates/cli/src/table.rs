//! Flat CSV tables, one per command.

use toric_lg::report::{Cplx, Num, Report};

fn num(x: Num) -> String {
    x.text().trim_matches('"').to_string()
}

fn push_c(row: &mut Vec<String>, c: &Cplx) {
    row.push(num(c.0));
    row.push(num(c.1));
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

pub fn rows(r: &Report) -> (Vec<String>, Vec<Vec<String>>) {
    match r.command.as_str() {
        "info" => info(r),
        "potential" => potential(r),
        "critical" => critical(r),
        "residue" => residue(r),
        "z-trace" => z_trace(r),
        "qsr" => qsr(r),
        "c1check" => c1(r),
        _ => verdicts(r),
    }
}

fn info(r: &Report) -> (Vec<String>, Vec<Vec<String>>) {
    let header = strings(&["facet", "normal", "lambda"]);
    let rows = r
        .info
        .iter()
        .flat_map(|i| i.facets.iter().enumerate())
        .map(|(j, f)| {
            let normal: Vec<String> = f.normal.iter().map(|k| k.to_string()).collect();
            vec![(j + 1).to_string(), normal.join(" "), f.lambda.clone()]
        })
        .collect();
    (header, rows)
}

fn potential(r: &Report) -> (Vec<String>, Vec<Vec<String>>) {
    let header = strings(&["monomial", "exponents", "coefficient", "valuation"]);
    let rows = r
        .potential
        .iter()
        .flatten()
        .map(|t| {
            let k: Vec<String> = t.exponents.iter().map(|e| e.to_string()).collect();
            vec![t.monomial.clone(), k.join(" "), t.coefficient.clone(), t.valuation.clone()]
        })
        .collect();
    (header, rows)
}

fn critical(r: &Report) -> (Vec<String>, Vec<Vec<String>>) {
    let points = r.critical_points.as_deref().unwrap_or(&[]);
    let n = points.first().map_or(0, |p| p.valuation.len());
    let mut header = strings(&["point", "t", "interior", "nondegenerate", "multiplicity", "valuation"]);
    for i in 1..=n {
        header.push(format!("y{i}_re"));
        header.push(format!("y{i}_im"));
    }
    header.extend(strings(&["value_re", "value_im", "hess_det_re", "hess_det_im", "residual"]));
    let mut rows = Vec::new();
    for p in points {
        for s in &p.samples {
            let mut row = vec![
                p.index.to_string(),
                num(s.t),
                p.interior.to_string(),
                p.nondegenerate.to_string(),
                p.multiplicity.to_string(),
                p.valuation.join(" "),
            ];
            for y in &s.y {
                push_c(&mut row, y);
            }
            push_c(&mut row, &s.crit_value);
            push_c(&mut row, &s.hess_det);
            row.push(num(s.residual));
            rows.push(row);
        }
    }
    (header, rows)
}

fn residue(r: &Report) -> (Vec<String>, Vec<Vec<String>>) {
    let header = strings(&["point", "t", "simplified_re", "simplified_im", "z_based_re", "z_based_im", "agree"]);
    let rows = r
        .pairings
        .iter()
        .flatten()
        .map(|p| {
            let mut row = vec![p.point.to_string(), num(p.t)];
            push_c(&mut row, &p.simplified);
            push_c(&mut row, &p.z_based);
            row.push(p.agree.to_string());
            row
        })
        .collect();
    (header, rows)
}

fn z_trace(r: &Report) -> (Vec<String>, Vec<Vec<String>>) {
    let header = strings(&[
        "point",
        "t",
        "z_re",
        "z_im",
        "closed_form_re",
        "closed_form_im",
        "hess_det_re",
        "hess_det_im",
    ]);
    let rows = r
        .z_traces
        .iter()
        .flatten()
        .map(|z| {
            let mut row = vec![z.point.to_string(), num(z.t)];
            push_c(&mut row, &z.z);
            push_c(&mut row, &z.closed_form);
            push_c(&mut row, &z.hess_det);
            row
        })
        .collect();
    (header, rows)
}

fn qsr(r: &Report) -> (Vec<String>, Vec<Vec<String>>) {
    let header = strings(&["kind", "relation"]);
    let mut rows = Vec::new();
    if let Some(q) = &r.qh_check {
        for s in &q.qsr_relations {
            rows.push(vec!["qsr".into(), s.clone()]);
        }
        for s in &q.linear_relations {
            rows.push(vec!["linear".into(), s.clone()]);
        }
    }
    (header, rows)
}

fn c1(r: &Report) -> (Vec<String>, Vec<Vec<String>>) {
    let header = strings(&["t", "index", "eigenvalue_re", "eigenvalue_im", "critical_value_re", "critical_value_im"]);
    let mut rows = Vec::new();
    for c in r.qh_check.iter().flat_map(|q| &q.c1) {
        for (i, (e, v)) in c.eigenvalues_qh.iter().zip(&c.critical_values).enumerate() {
            let mut row = vec![num(c.t), i.to_string()];
            push_c(&mut row, e);
            push_c(&mut row, v);
            rows.push(row);
        }
    }
    (header, rows)
}

fn verdicts(r: &Report) -> (Vec<String>, Vec<Vec<String>>) {
    let header = strings(&["name", "pass", "residual", "tolerance", "comparison"]);
    let rows = r
        .verdicts
        .iter()
        .map(|v| {
            vec![
                v.name.clone(),
                v.pass.to_string(),
                num(v.residual),
                num(v.tolerance),
                format!("{:?}", v.comparison).to_lowercase(),
            ]
        })
        .collect();
    (header, rows)
}
