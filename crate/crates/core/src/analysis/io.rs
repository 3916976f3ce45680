//! Headered CSV writers for analysis outputs.

use super::{EmbeddingResult, PartitionReport, Transducer};
use crate::error::Result;
use std::io::Write;

pub fn write_embeddings<W: Write>(results: &[EmbeddingResult], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["step", "agent_id", "x", "y"])?;
    for r in results {
        for (id, p) in r.agent_ids.iter().zip(&r.points) {
            w.write_record([r.step.to_string(), id.to_string(), p[0].to_string(), p[1].to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_inertia_curve<W: Write>(curve: &[(usize, f64)], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["k", "inertia"])?;
    for (k, v) in curve {
        w.write_record([k.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_assignments<W: Write>(report: &PartitionReport, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["agent_id", "partition"])?;
    for (id, a) in report.agent_ids.iter().zip(&report.assignments) {
        w.write_record([id.to_string(), a.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_profiles<W: Write>(report: &PartitionReport, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for p in &report.profiles {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per bin, labelled by step and unit.
pub fn write_transducers<W: Write>(rows: &[(usize, usize, Transducer)], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["step", "unit", "lower", "upper", "n", "mean", "sem", "mic", "spearman"])?;
    for (step, unit, t) in rows {
        let mic = t.mic.map(|m| m.to_string()).unwrap_or_default();
        for b in &t.bins {
            w.write_record([
                step.to_string(),
                unit.to_string(),
                b.lower.to_string(),
                b.upper.to_string(),
                b.n.to_string(),
                b.mean.to_string(),
                b.sem.to_string(),
                mic.clone(),
                t.spearman.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Cumulative explained-variance fractions per step.
pub fn write_pca<W: Write>(rows: &[(usize, Vec<f64>)], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["step", "components", "cumulative_explained"])?;
    for (step, cum) in rows {
        for (c, v) in cum.iter().enumerate() {
            w.write_record([step.to_string(), (c + 1).to_string(), v.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}
