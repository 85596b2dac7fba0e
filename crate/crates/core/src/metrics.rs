//! Precision metrics over a finished graph: points-to cardinality, thrown-object
//! cardinality and exception-catcher links.
//!
//! Averages are taken over addresses after unioning their value sets across all
//! node stores, and only over addresses with a non-empty population; an empty
//! population is reported as "n/a".

use crate::domain::{AAddr, AValue, Policy};
use crate::dsg::{analyze, AnalysisError, Budget, Dsg};
use crate::syntax::{Instr, Label, LabeledProgram};
use crate::values::Addr;
use num_rational::Ratio;
use serde::{Serialize, Serializer};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// A rational mean, absent when the population is empty.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Average(pub Option<Ratio<u64>>);

impl Average {
    pub fn of(sizes: impl IntoIterator<Item = usize>) -> Average {
        let (sum, n) = sizes.into_iter().fold((0u64, 0u64), |(s, n), x| (s + x as u64, n + 1));
        Average((n > 0).then(|| Ratio::new(sum, n)))
    }

    pub fn as_f64(&self) -> Option<f64> {
        self.0.map(|r| *r.numer() as f64 / *r.denom() as f64)
    }
}

impl fmt::Display for Average {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.as_f64() {
            Some(x) => write!(f, "{x:.3}"),
            None => write!(f, "n/a"),
        }
    }
}

impl Serialize for Average {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.as_f64().serialize(s)
    }
}

/// Value sets per address, unioned over every node store.
pub fn points_to(dsg: &Dsg) -> BTreeMap<AAddr, BTreeSet<AValue>> {
    let mut out: BTreeMap<AAddr, BTreeSet<AValue>> = BTreeMap::new();
    for store in dsg.stores.values() {
        for (a, vs) in store.iter() {
            out.entry(a.clone()).or_default().extend(vs.iter().cloned());
        }
    }
    out
}

/// Classes of values consumed by some throw node.
pub fn exception_classes(dsg: &Dsg, lp: &LabeledProgram) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for (q, store) in &dsg.stores {
        if let Instr::Throw(v) = &lp.stmt(q.label).instr {
            out.extend(store.values(&Addr::Var(v.clone(), q.fp.clone())).map(|d| d.class.clone()));
        }
    }
    out
}

fn cardinality(dsg: &Dsg, lp: &LabeledProgram, exceptional: bool) -> Average {
    let exc = exception_classes(dsg, lp);
    Average::of(
        points_to(dsg)
            .values()
            .map(|vs| vs.iter().filter(|d| exc.contains(&d.class) == exceptional).count())
            .filter(|&n| n > 0),
    )
}

pub fn var_points_to(dsg: &Dsg, lp: &LabeledProgram) -> Average {
    cardinality(dsg, lp, false)
}

pub fn throws(dsg: &Dsg, lp: &LabeledProgram) -> Average {
    cardinality(dsg, lp, true)
}

/// An exception-catcher link: a throw statement, the statement through which the
/// exception left the handler's activation, and the handler head.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct EcLink {
    pub throw: Label,
    pub via: Label,
    pub handler: Label,
}

impl fmt::Display for EcLink {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {} via {}", self.throw, self.handler, self.via)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EcLinks {
    pub links: BTreeSet<EcLink>,
    /// Links per throw statement that has at least one link.
    pub average: Average,
}

pub fn ec_links(dsg: &Dsg) -> EcLinks {
    let links: BTreeSet<EcLink> =
        dsg.catches.iter().map(|c| EcLink { throw: c.throw.label, via: c.via, handler: c.handler.label }).collect();
    let throws: BTreeSet<Label> = links.iter().map(|l| l.throw).collect();
    let average = Average((!throws.is_empty()).then(|| Ratio::new(links.len() as u64, throws.len() as u64)));
    EcLinks { links, average }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsReport {
    pub policy: String,
    pub var_points_to: Average,
    pub throws: Average,
    pub ec_links: EcLinks,
    pub nodes: usize,
    pub edges: usize,
    pub methods: usize,
}

pub fn report(dsg: &Dsg, lp: &LabeledProgram) -> MetricsReport {
    let methods: BTreeSet<_> = dsg.nodes.iter().map(|q| &lp.stmt(q.label).method).collect();
    MetricsReport {
        policy: dsg.policy.to_string(),
        var_points_to: var_points_to(dsg, lp),
        throws: throws(dsg, lp),
        ec_links: ec_links(dsg),
        nodes: dsg.nodes.len(),
        edges: dsg.edges.len(),
        methods: methods.len(),
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "policy        {}", self.policy)?;
        writeln!(f, "nodes         {}", self.nodes)?;
        writeln!(f, "edges         {}", self.edges)?;
        writeln!(f, "methods       {}", self.methods)?;
        writeln!(f, "VarPointsTo   {}", self.var_points_to)?;
        writeln!(f, "Throws        {}", self.throws)?;
        writeln!(f, "E-C links     {} (avg {} per throw)", self.ec_links.links.len(), self.ec_links.average)?;
        for l in &self.ec_links.links {
            writeln!(f, "  {l}")?;
        }
        Ok(())
    }
}

/// Side-by-side comparison. Size ratios are A/B, precision ratios B/A, so values
/// above 1 favour A in both directions for cardinalities.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub a: MetricsReport,
    pub b: MetricsReport,
    pub ratios: BTreeMap<&'static str, Average>,
}

fn ratio(num: Average, den: Average) -> Average {
    match (num.0, den.0) {
        (Some(n), Some(d)) if *d.numer() != 0 => Average(Some(n / d)),
        _ => Average(None),
    }
}

fn count(n: usize) -> Average {
    Average(Some(Ratio::from_integer(n as u64)))
}

pub fn compare_reports(a: MetricsReport, b: MetricsReport) -> Comparison {
    let mut ratios = BTreeMap::new();
    ratios.insert("nodes", ratio(count(a.nodes), count(b.nodes)));
    ratios.insert("edges", ratio(count(a.edges), count(b.edges)));
    ratios.insert("methods", ratio(count(a.methods), count(b.methods)));
    ratios.insert("var_points_to", ratio(b.var_points_to, a.var_points_to));
    ratios.insert("throws", ratio(b.throws, a.throws));
    ratios.insert("ec_links", ratio(count(b.ec_links.links.len()), count(a.ec_links.links.len())));
    Comparison { a, b, ratios }
}

/// Which side of a comparison ran out of budget.
#[derive(Debug, thiserror::Error)]
#[error("analysis {side} failed: {err}")]
pub struct CompareError {
    pub side: char,
    pub err: AnalysisError,
}

pub fn compare(lp: &LabeledProgram, a: &Policy, b: &Policy, budget: &Budget) -> Result<Comparison, CompareError> {
    let da = analyze(lp, a, budget).map_err(|err| CompareError { side: 'A', err })?;
    let db = analyze(lp, b, budget).map_err(|err| CompareError { side: 'B', err })?;
    Ok(compare_reports(report(&da, lp), report(&db, lp)))
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "== A ==\n{}", self.a)?;
        writeln!(f, "== B ==\n{}", self.b)?;
        writeln!(f, "== ratios (sizes A/B, precision B/A) ==")?;
        for (k, v) in &self.ratios {
            writeln!(f, "{k:<14}{v}")?;
        }
        Ok(())
    }
}
