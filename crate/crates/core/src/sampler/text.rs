//! Line-oriented text serialization of observed and reduced data.
//!
//! Every record is one comma-separated line starting with a tag:
//!
//! ```text
//! design,link              | design,jump,<d>
//! sample,<k>,<n0>,<n>      (reduced data appends ,<truncated 0|1>)
//! unit,<k>,<position>,<node>,<J>,<H>     (observed data, position from 1)
//! member,<k>,<node>                      (reduced data)
//! jumpsum,<t>,<value>                    (reduced data, t from 1)
//! degree,<node>,<out-degree>
//! edge,<i>,<j>
//! ```
//!
//! Blank lines and lines starting with `#` are ignored.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use super::{Design, ObservedData, OrderedSample, ReducedData};
use crate::error::{Error, Result};
use crate::netpop::NodeId;

fn write_design<W: Write>(out: &mut W, design: Design) -> Result<()> {
    match design {
        Design::LinkTracing => writeln!(out, "design,link")?,
        Design::RandomJumps { d } => writeln!(out, "design,jump,{d}")?,
    }
    Ok(())
}

fn write_tail<W: Write>(
    out: &mut W,
    degrees: &BTreeMap<NodeId, u32>,
    edges: &BTreeSet<(NodeId, NodeId)>,
) -> Result<()> {
    for (u, w) in degrees {
        writeln!(out, "degree,{u},{w}")?;
    }
    for (i, j) in edges {
        writeln!(out, "edge,{i},{j}")?;
    }
    Ok(())
}

pub fn write_observed<W: Write>(d0: &ObservedData, mut out: W) -> Result<()> {
    writeln!(out, "# observed link-tracing data")?;
    write_design(&mut out, d0.design)?;
    for (k, s) in d0.samples.iter().enumerate() {
        writeln!(out, "sample,{k},{},{}", s.n0, s.target)?;
        for (t, u) in s.units.iter().enumerate() {
            writeln!(out, "unit,{k},{},{u},{},{}", t + 1, s.jump_flags[t] as u8, s.forced_flags[t] as u8)?;
        }
    }
    write_tail(&mut out, &d0.degrees, &d0.edges)
}

pub fn write_reduced<W: Write>(dr: &ReducedData, mut out: W) -> Result<()> {
    writeln!(out, "# reduced link-tracing data")?;
    write_design(&mut out, dr.design)?;
    for k in 0..dr.k() {
        writeln!(out, "sample,{k},{},{},{}", dr.initial_sizes[k], dr.final_sizes[k], dr.truncated[k] as u8)?;
        for u in &dr.members[k] {
            writeln!(out, "member,{k},{u}")?;
        }
    }
    if let Some(sum) = &dr.jump_sum {
        for (t, v) in sum.iter().enumerate() {
            writeln!(out, "jumpsum,{},{v}", t + 1)?;
        }
    }
    write_tail(&mut out, &dr.degrees, &dr.edges)
}

struct Line<'a> {
    no: usize,
    fields: Vec<&'a str>,
}

impl Line<'_> {
    fn expect_len(&self, n: usize) -> Result<()> {
        if self.fields.len() == n {
            Ok(())
        } else {
            Err(Error::parse(
                self.no,
                format!("`{}` record needs {} fields, got {}", self.fields[0], n, self.fields.len()),
            ))
        }
    }

    fn num<T: std::str::FromStr>(&self, i: usize) -> Result<T> {
        self.fields[i].parse().map_err(|_| Error::parse(self.no, format!("bad number `{}`", self.fields[i])))
    }

    fn flag(&self, i: usize) -> Result<bool> {
        match self.fields[i] {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(Error::parse(self.no, format!("expected 0 or 1, got `{other}`"))),
        }
    }

    fn node(&self, i: usize) -> Result<NodeId> {
        self.num::<u32>(i).map(NodeId)
    }
}

#[derive(Default)]
struct Common {
    design: Option<Design>,
    degrees: BTreeMap<NodeId, u32>,
    edges: BTreeSet<(NodeId, NodeId)>,
}

impl Common {
    /// Handles the records shared by both formats; returns false for others.
    fn accept(&mut self, line: &Line<'_>) -> Result<bool> {
        match line.fields[0] {
            "design" => {
                self.design = Some(match line.fields.get(1).copied() {
                    Some("link") => {
                        line.expect_len(2)?;
                        Design::LinkTracing
                    }
                    Some("jump") => {
                        line.expect_len(3)?;
                        Design::RandomJumps { d: line.num(2)? }
                    }
                    _ => return Err(Error::parse(line.no, "design must be `link` or `jump,<d>`")),
                });
            }
            "degree" => {
                line.expect_len(3)?;
                self.degrees.insert(line.node(1)?, line.num(2)?);
            }
            "edge" => {
                line.expect_len(3)?;
                let (a, b) = (line.node(1)?, line.node(2)?);
                if a == b {
                    return Err(Error::parse(line.no, format!("self-tie on {a}")));
                }
                self.edges.insert((a.min(b), a.max(b)));
            }
            _ => return Ok(false),
        }
        Ok(true)
    }

    fn design(&self) -> Result<Design> {
        self.design.ok_or_else(|| Error::parse(0, "missing `design` record"))
    }
}

fn for_each_line<R: BufRead>(source: R, mut f: impl FnMut(Line<'_>) -> Result<()>) -> Result<()> {
    for (idx, raw) in source.lines().enumerate() {
        let raw = raw?;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields = trimmed.split(',').map(str::trim).collect();
        f(Line { no: idx + 1, fields })?;
    }
    Ok(())
}

fn sample_slot<T: Default>(slots: &mut Vec<Option<T>>, k: usize) -> &mut Option<T> {
    if slots.len() <= k {
        slots.resize_with(k + 1, || None);
    }
    &mut slots[k]
}

pub fn read_observed<R: BufRead>(source: R) -> Result<ObservedData> {
    let mut common = Common::default();
    let mut headers: Vec<Option<(usize, usize)>> = Vec::new();
    let mut units: BTreeMap<(usize, usize), (NodeId, bool, bool, usize)> = BTreeMap::new();
    for_each_line(source, |line| {
        if common.accept(&line)? {
            return Ok(());
        }
        match line.fields[0] {
            "sample" => {
                line.expect_len(4)?;
                let k: usize = line.num(1)?;
                let slot = sample_slot(&mut headers, k);
                if slot.is_some() {
                    return Err(Error::parse(line.no, format!("sample {k} declared twice")));
                }
                *slot = Some((line.num(2)?, line.num(3)?));
            }
            "unit" => {
                line.expect_len(6)?;
                let key = (line.num(1)?, line.num(2)?);
                let rec = (line.node(3)?, line.flag(4)?, line.flag(5)?, line.no);
                if units.insert(key, rec).is_some() {
                    return Err(Error::parse(line.no, format!("duplicate position {}", key.1)));
                }
            }
            other => return Err(Error::parse(line.no, format!("unknown record `{other}`"))),
        }
        Ok(())
    })?;
    let design = common.design()?;
    let mut samples = Vec::with_capacity(headers.len());
    for (k, header) in headers.iter().enumerate() {
        let (n0, target) = header.ok_or_else(|| Error::parse(0, format!("sample {k} missing")))?;
        let mut s = OrderedSample::traced(Vec::new(), n0, target);
        for (&(kk, pos), &(u, j, h, no)) in units.range((k, 0)..(k + 1, 0)) {
            debug_assert_eq!(kk, k);
            if pos != s.units.len() + 1 {
                return Err(Error::parse(no, format!("sample {k}: position {pos} out of sequence")));
            }
            s.units.push(u);
            s.jump_flags.push(j);
            s.forced_flags.push(h);
        }
        s.truncated = s.units.len() < target;
        samples.push(s);
    }
    if let Some((&(k, _), &(_, _, _, no))) = units.range((headers.len(), 0)..).next() {
        return Err(Error::parse(no, format!("unit for undeclared sample {k}")));
    }
    let d0 = ObservedData { design, samples, degrees: common.degrees, edges: common.edges };
    d0.check()?;
    Ok(d0)
}

pub fn read_reduced<R: BufRead>(source: R) -> Result<ReducedData> {
    let mut common = Common::default();
    let mut headers: Vec<Option<(usize, usize, bool)>> = Vec::new();
    let mut members: BTreeMap<usize, Vec<NodeId>> = BTreeMap::new();
    let mut jump_sum: BTreeMap<usize, u32> = BTreeMap::new();
    for_each_line(source, |line| {
        if common.accept(&line)? {
            return Ok(());
        }
        match line.fields[0] {
            "sample" => {
                line.expect_len(5)?;
                let k: usize = line.num(1)?;
                *sample_slot(&mut headers, k) = Some((line.num(2)?, line.num(3)?, line.flag(4)?));
            }
            "member" => {
                line.expect_len(3)?;
                members.entry(line.num(1)?).or_default().push(line.node(2)?);
            }
            "jumpsum" => {
                line.expect_len(3)?;
                jump_sum.insert(line.num(1)?, line.num(2)?);
            }
            other => return Err(Error::parse(line.no, format!("unknown record `{other}`"))),
        }
        Ok(())
    })?;
    let design = common.design()?;
    let k = headers.len();
    let mut dr = ReducedData {
        design,
        members: Vec::with_capacity(k),
        initial_sizes: Vec::with_capacity(k),
        final_sizes: Vec::with_capacity(k),
        truncated: Vec::with_capacity(k),
        degrees: common.degrees,
        edges: common.edges,
        jump_sum: None,
    };
    for (idx, header) in headers.into_iter().enumerate() {
        let (n0, n, trunc) = header.ok_or_else(|| Error::parse(0, format!("sample {idx} missing")))?;
        let mut m = members.remove(&idx).unwrap_or_default();
        m.sort_unstable();
        dr.members.push(m);
        dr.initial_sizes.push(n0);
        dr.final_sizes.push(n);
        dr.truncated.push(trunc);
    }
    if design.has_jumps() {
        let len = dr.final_sizes.iter().copied().max().unwrap_or(0);
        dr.jump_sum = Some((1..=len).map(|t| jump_sum.get(&t).copied().unwrap_or(0)).collect());
    }
    Ok(dr)
}
