//! Delimited record format for sequences:
//! `agent_id,object_id,t,absence,session_time,active_time,session_activity[,latent_v]`.

use super::{Dataset, InteractionSequence, TelemetrySession};
use crate::error::{Error, Result};
use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

const BASE_HEADER: [&str; 7] = [
    "agent_id",
    "object_id",
    "t",
    "absence",
    "session_time",
    "active_time",
    "session_activity",
];

pub fn write_sequences<W: Write>(data: &Dataset, writer: W) -> Result<()> {
    let with_latent = !data.sequences.is_empty()
        && data.sequences.iter().all(|s| s.latent_trace.is_some());
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = BASE_HEADER.to_vec();
    if with_latent {
        header.push("latent_v");
    }
    w.write_record(&header)?;
    for seq in &data.sequences {
        let object = &data.objects[seq.object_id];
        for (t, s) in seq.sessions.iter().enumerate() {
            let mut row = vec![
                seq.agent_id.to_string(),
                object.clone(),
                (t + 1).to_string(),
                s.absence.to_string(),
                s.session_time.to_string(),
                s.active_time.to_string(),
                s.session_activity.to_string(),
            ];
            if with_latent {
                row.push(seq.latent_trace.as_ref().unwrap()[t].to_string());
            }
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Parse sequences; object ids are assigned ordinally by first appearance.
pub fn read_sequences<R: Read>(reader: R) -> Result<Dataset> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers()?.clone();
    let cols: Vec<&str> = header.iter().collect();
    let with_latent = match cols.len() {
        7 => false,
        8 if cols[7] == "latent_v" => true,
        _ => return Err(Error::Data(format!("unexpected header: {}", cols.join(",")))),
    };
    if cols[..7] != BASE_HEADER {
        return Err(Error::Data(format!("unexpected header: {}", cols.join(","))));
    }

    struct Partial {
        object_id: usize,
        rows: Vec<(usize, TelemetrySession, f64)>,
    }
    let mut objects: Vec<String> = Vec::new();
    let mut object_ids: HashMap<String, usize> = HashMap::new();
    let mut order: Vec<u64> = Vec::new();
    let mut partial: HashMap<u64, Partial> = HashMap::new();

    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let bad = |what: &str| Error::Data(format!("row {}: bad {what}", line + 2));
        let agent: u64 = field(0).parse().map_err(|_| bad("agent_id"))?;
        let obj_name = field(1).to_string();
        let next_id = objects.len();
        let obj = *object_ids.entry(obj_name.clone()).or_insert_with(|| {
            objects.push(obj_name);
            next_id
        });
        let t: usize = field(2).parse().map_err(|_| bad("t"))?;
        let num = |i: usize, what: &str| field(i).parse::<f64>().map_err(|_| bad(what));
        let session = TelemetrySession::new(
            num(3, "absence")?,
            num(4, "session_time")?,
            num(5, "active_time")?,
            field(6).parse().map_err(|_| bad("session_activity"))?,
            obj,
        )
        .map_err(|e| Error::Data(format!("row {}: {e}", line + 2)))?;
        let latent = if with_latent { num(7, "latent_v")? } else { f64::NAN };
        let entry = partial.entry(agent).or_insert_with(|| {
            order.push(agent);
            Partial {
                object_id: obj,
                rows: Vec::new(),
            }
        });
        if entry.object_id != obj {
            return Err(Error::Data(format!("agent {agent} appears with two objects")));
        }
        entry.rows.push((t, session, latent));
    }

    let mut sequences = Vec::with_capacity(order.len());
    for agent in order {
        let mut p = partial.remove(&agent).unwrap();
        p.rows.sort_by_key(|r| r.0);
        for (i, r) in p.rows.iter().enumerate() {
            if r.0 != i + 1 {
                return Err(Error::Data(format!(
                    "agent {agent}: timestep indices must run 1..T without gaps"
                )));
            }
        }
        let latent = with_latent.then(|| p.rows.iter().map(|r| r.2).collect());
        let sessions = p.rows.into_iter().map(|r| r.1).collect();
        sequences.push(
            InteractionSequence::new(agent, p.object_id, sessions, latent)
                .map_err(|e| Error::Data(e.to_string()))?,
        );
    }
    Dataset::new(objects, sequences)
}

pub fn save_sequences(data: &Dataset, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_sequences(data, std::io::BufWriter::new(f))
}

pub fn load_sequences(path: &Path) -> Result<Dataset> {
    let f = std::fs::File::open(path)?;
    read_sequences(std::io::BufReader::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Dataset {
        let mk = |agent: u64, obj: usize, n: usize, latent: bool| {
            let sessions: Vec<_> = (0..n)
                .map(|i| {
                    TelemetrySession::new(i as f64 * 1.5, 20.0 + i as f64, 55.5, 3 + i as u32, obj)
                        .unwrap()
                })
                .collect();
            let trace = latent.then(|| (0..n).map(|i| 0.1 * i as f64 + 1.0 / 3.0).collect());
            InteractionSequence::new(agent, obj, sessions, trace).unwrap()
        };
        Dataset::new(
            vec!["hmg".into(), "lis".into()],
            vec![mk(7, 0, 3, true), mk(2, 1, 2, true), mk(9, 0, 4, true)],
        )
        .unwrap()
    }

    #[test]
    fn round_trip_preserves_everything() {
        let d = sample();
        let mut buf = Vec::new();
        write_sequences(&d, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "agent_id,object_id,t,absence,session_time,active_time,session_activity,latent_v\n"
        ));
        let back = read_sequences(buf.as_slice()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn objects_numbered_by_first_appearance() {
        let text = "agent_id,object_id,t,absence,session_time,active_time,session_activity\n\
                    1,zeta,1,0,10,50,3\n1,zeta,2,5,10,50,3\n2,alpha,1,0,1,1,1\n2,alpha,2,1,1,1,1\n";
        let d = read_sequences(text.as_bytes()).unwrap();
        assert_eq!(d.objects, vec!["zeta".to_string(), "alpha".to_string()]);
        assert_eq!(d.sequences[1].object_id, 1);
        assert!(d.sequences[0].latent_trace.is_none());
    }

    #[test]
    fn rejects_bad_rows() {
        let missing_header = "1,a,1,0,1,1,1\n";
        assert!(read_sequences(missing_header.as_bytes()).is_err());
        let too_short = "agent_id,object_id,t,absence,session_time,active_time,session_activity\n1,a,1,0,1,1,1\n";
        assert!(read_sequences(too_short.as_bytes()).is_err());
        let bad_active = "agent_id,object_id,t,absence,session_time,active_time,session_activity\n1,a,1,0,1,130,1\n1,a,2,0,1,1,1\n";
        assert!(read_sequences(bad_active.as_bytes()).is_err());
    }
}
