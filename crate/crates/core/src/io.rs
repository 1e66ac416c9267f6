//! CSV formats for lattices and fields. Ideals are written as `a+b`
//! (`-` for the empty ideal) and values with the shortest round-trip
//! representation, so write → read → write is byte-identical.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::integrability::GaugeSystem;
use crate::lattice::{Diamond, LatticeSlice};
use crate::poset::{Elem, Ideal, Poset};
use crate::valuation::{DiamondField, EdgeField, NodeField};

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn records(text: &str, header: &[&str]) -> Result<Vec<(usize, csv::StringRecord)>> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let got: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if got != header {
        return Err(Error::Parse {
            line: 1,
            msg: format!("expected header `{}`, got `{}`", header.join(","), got.join(",")),
        });
    }
    r.records()
        .enumerate()
        .map(|(k, rec)| Ok((k + 2, rec?)))
        .collect()
}

fn at_line<T>(line: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Parse { .. } => e,
        other => Error::Parse {
            line,
            msg: other.to_string(),
        },
    })
}

fn number(line: usize, s: &str) -> Result<f64> {
    s.parse::<f64>().map_err(|_| Error::Parse {
        line,
        msg: format!("`{s}` is not a number"),
    })
}

fn ideal(p: &Poset, line: usize, s: &str) -> Result<Ideal> {
    at_line(line, p.parse_ideal(s))
}

fn elem(p: &Poset, line: usize, s: &str) -> Result<Elem> {
    at_line(line, p.elem(s))
}

/// `index,ideal,depth`.
pub fn write_nodes(l: &LatticeSlice) -> Result<String> {
    let p = l.poset();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["index", "ideal", "depth"])?;
    for (k, &i) in l.nodes().iter().enumerate() {
        w.write_record([k.to_string(), p.render(i), l.node_depth(i).to_string()])?;
    }
    finish(w)
}

/// `from,add,to`.
pub fn write_edges(l: &LatticeSlice) -> Result<String> {
    let p = l.poset();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["from", "add", "to"])?;
    for e in l.edges() {
        w.write_record([p.render(l.nodes()[e.from]), p.id(e.elem).to_string(), p.render(l.nodes()[e.to])])?;
    }
    finish(w)
}

/// `ideal,add,value`.
pub fn write_edge_field(g: &EdgeField, l: &LatticeSlice) -> Result<String> {
    let p = l.poset();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["ideal", "add", "value"])?;
    for (i, a, v) in g.iter() {
        w.write_record([p.render(i), p.id(a).to_string(), v.to_string()])?;
    }
    finish(w)
}

pub fn read_edge_field(text: &str, l: &LatticeSlice) -> Result<EdgeField> {
    let p = l.poset();
    let mut values = HashMap::new();
    for (line, rec) in records(text, &["ideal", "add", "value"])? {
        let key = (ideal(p, line, &rec[0])?, elem(p, line, &rec[1])?);
        if values.insert(key, number(line, &rec[2])?).is_some() {
            return Err(Error::Parse {
                line,
                msg: "duplicate edge".into(),
            });
        }
    }
    EdgeField::from_values(l, values)
}

/// `ideal,u,v,value`.
pub fn write_diamond_field(k: &DiamondField, l: &LatticeSlice) -> Result<String> {
    let p = l.poset();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["ideal", "u", "v", "value"])?;
    for (d, v) in k.iter() {
        w.write_record([p.render(d.base), p.id(d.u).to_string(), p.id(d.v).to_string(), v.to_string()])?;
    }
    finish(w)
}

pub fn read_diamond_field(text: &str, l: &LatticeSlice) -> Result<DiamondField> {
    let p = l.poset();
    let mut values = HashMap::new();
    for (line, rec) in records(text, &["ideal", "u", "v", "value"])? {
        let (a, b) = (elem(p, line, &rec[1])?, elem(p, line, &rec[2])?);
        if a >= b {
            return Err(Error::Parse {
                line,
                msg: "diamond elements must be listed in tau order".into(),
            });
        }
        let d = Diamond::new(ideal(p, line, &rec[0])?, a, b);
        if values.insert(d, number(line, &rec[3])?).is_some() {
            return Err(Error::Parse {
                line,
                msg: "duplicate diamond".into(),
            });
        }
    }
    DiamondField::from_values(l, values)
}

/// `ideal,<column>` for potentials and Möbius coefficients.
pub fn write_node_field(f: &NodeField, l: &LatticeSlice, column: &str) -> Result<String> {
    let p = l.poset();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["ideal", column])?;
    for (i, v) in f.iter() {
        w.write_record([p.render(i), v.to_string()])?;
    }
    finish(w)
}

pub fn read_node_field(text: &str, l: &LatticeSlice, column: &str) -> Result<NodeField> {
    let p = l.poset();
    let mut values = HashMap::new();
    for (line, rec) in records(text, &["ideal", column])? {
        values.insert(ideal(p, line, &rec[0])?, number(line, &rec[1])?);
    }
    NodeField::from_values(l, values)
}

/// `ideal,alpha` over the non-base nodes.
pub fn write_gauge(alpha: &GaugeSystem, l: &LatticeSlice) -> Result<String> {
    let p = l.poset();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["ideal", "alpha"])?;
    for (i, v) in alpha.iter() {
        w.write_record([p.render(i), v.to_string()])?;
    }
    finish(w)
}

pub fn read_gauge(text: &str, l: &LatticeSlice) -> Result<GaugeSystem> {
    let p = l.poset();
    let mut values = HashMap::new();
    for (line, rec) in records(text, &["ideal", "alpha"])? {
        values.insert(ideal(p, line, &rec[0])?, number(line, &rec[1])?);
    }
    GaugeSystem::from_values(l, values)
}
