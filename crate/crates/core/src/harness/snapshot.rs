use num_complex::Complex64;
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::decoder::DecodedPacket;
use crate::error::{arg, Error, Result};
use crate::model::{wrap_phase, ChannelMatrix, ModelConfig};

/// One channel measurement of one tag read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRecord {
    pub epc: String,
    pub timestamp_s: f64,
    pub antenna_id: usize,
    pub carrier_hz: f64,
    /// Channel angle in (-pi, pi].
    pub phase_rad: f64,
    /// `20 log10 |h|`.
    pub rssi_db: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub re: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
}

impl SnapshotRecord {
    pub fn value(&self) -> Complex64 {
        match (self.re, self.im) {
            (Some(re), Some(im)) => Complex64::new(re, im),
            _ => Complex64::from_polar(10f64.powf(self.rssi_db / 20.0), self.phase_rad),
        }
    }
}

/// Per-channel entry of a decoded packet record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacketChannel {
    pub antenna: usize,
    pub carrier_hz: f64,
    pub re: f64,
    pub im: f64,
    pub snr_db: f64,
}

/// One decoded packet, as emitted by `chordsim decode`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacketRecord {
    pub epc: String,
    pub t0: f64,
    pub alpha0: f64,
    pub channels: Vec<PacketChannel>,
    pub crc_ok: bool,
}

impl PacketRecord {
    /// Valid entries of `ch`; antenna ids are taken from `antenna_ids`.
    pub fn from_channel(epc: &str, t0: f64, alpha0: f64, crc_ok: bool, ch: &ChannelMatrix, antenna_ids: &[usize]) -> Self {
        let mut channels = Vec::new();
        for (k, id) in antenna_ids.iter().enumerate().take(ch.num_antennas()) {
            for l in 0..ch.num_carriers() {
                if ch.valid[k][l] {
                    channels.push(PacketChannel {
                        antenna: *id,
                        carrier_hz: ch.carriers_hz[l],
                        re: ch.h[k][l].re,
                        im: ch.h[k][l].im,
                        snr_db: ch.quality_db[k][l],
                    });
                }
            }
        }
        Self { epc: epc.to_string(), t0, alpha0, channels, crc_ok }
    }

    pub fn from_decoded(p: &DecodedPacket, antenna_ids: &[usize]) -> Self {
        Self::from_channel(&p.epc_hex(), p.sync.t0_hat_s, p.sync.alpha0_hat_hz, p.crc_ok, &p.channel, antenna_ids)
    }

    pub fn to_snapshots(&self) -> Vec<SnapshotRecord> {
        self.channels
            .iter()
            .map(|c| {
                let h = Complex64::new(c.re, c.im);
                SnapshotRecord {
                    epc: self.epc.clone(),
                    timestamp_s: self.t0,
                    antenna_id: c.antenna,
                    carrier_hz: c.carrier_hz,
                    phase_rad: wrap_phase(h.arg()),
                    rssi_db: 20.0 * h.norm().log10(),
                    re: Some(c.re),
                    im: Some(c.im),
                    snr_db: Some(c.snr_db),
                }
            })
            .collect()
    }
}

fn carrier_index(model: &ModelConfig, f: f64) -> Option<usize> {
    model.plan.carriers_hz.iter().position(|c| (c - f).abs() <= 1.0)
}

/// Full-size channel for `model` from snapshot records of one read.
/// Missing entries are left invalid; the count of them is returned.
pub fn channel_from_snapshots(records: &[SnapshotRecord], model: &ModelConfig) -> Result<(ChannelMatrix, usize)> {
    let (nk, nl) = (model.geometry.num_antennas(), model.plan.num_carriers());
    let zero = Complex64::new(0.0, 0.0);
    let mut ch = ChannelMatrix::new(vec![vec![zero; nl]; nk], model.plan.carriers_hz.clone(), model.geometry.clone())?;
    for row in &mut ch.valid {
        row.iter_mut().for_each(|v| *v = false);
    }
    for r in records {
        if r.antenna_id >= nk {
            return arg(format!("antenna {} outside the array", r.antenna_id));
        }
        let Some(l) = carrier_index(model, r.carrier_hz) else {
            return arg(format!("carrier {} Hz not in the plan", r.carrier_hz));
        };
        ch.h[r.antenna_id][l] = r.value();
        ch.valid[r.antenna_id][l] = true;
        if let Some(s) = r.snr_db {
            ch.quality_db[r.antenna_id][l] = s;
        }
    }
    let masked = ch.valid.iter().flatten().filter(|v| !**v).count();
    ch.validate()?;
    Ok((ch, masked))
}

/// Records of one EPC within one timestamp window, as a channel matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotGroup {
    pub epc: String,
    pub timestamp_s: f64,
    pub channel: ChannelMatrix,
    /// Number of (antenna, carrier) entries without a record.
    pub masked: usize,
}

/// Group records by EPC, then split each EPC's reads wherever a record
/// falls more than `window_s` after the first record of its group.
pub fn group_snapshots(records: &[SnapshotRecord], model: &ModelConfig, window_s: f64) -> Result<Vec<SnapshotGroup>> {
    if !(window_s >= 0.0) {
        return arg("window must be non-negative");
    }
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&a, &b| {
        records[a].epc.cmp(&records[b].epc).then(records[a].timestamp_s.total_cmp(&records[b].timestamp_s)).then(a.cmp(&b))
    });
    let mut groups = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let head = &records[order[i]];
        let mut j = i;
        while j < order.len()
            && records[order[j]].epc == head.epc
            && records[order[j]].timestamp_s - head.timestamp_s <= window_s
        {
            j += 1;
        }
        let members: Vec<SnapshotRecord> = order[i..j].iter().map(|&o| records[o].clone()).collect();
        let (channel, masked) = channel_from_snapshots(&members, model)?;
        groups.push(SnapshotGroup { epc: head.epc.clone(), timestamp_s: head.timestamp_s, channel, masked });
        i = j;
    }
    Ok(groups)
}

fn check_snapshot(r: &SnapshotRecord) -> std::result::Result<(), String> {
    if !(r.phase_rad > -std::f64::consts::PI && r.phase_rad <= std::f64::consts::PI) {
        return Err(format!("phase {} outside (-pi, pi]", r.phase_rad));
    }
    if !(r.carrier_hz > 0.0 && r.timestamp_s.is_finite() && r.rssi_db.is_finite()) {
        return Err("non-finite or non-positive field".into());
    }
    Ok(())
}

/// Parse JSON lines; blank lines are skipped.
pub fn parse_jsonl<T: DeserializeOwned>(text: &str) -> Result<Vec<T>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::Parse { line: i + 1, message: e.to_string() }))
        .collect()
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for it in items {
        serde_json::to_writer(&mut w, it)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn parse_snapshots(text: &str) -> Result<Vec<SnapshotRecord>> {
    let records: Vec<SnapshotRecord> = parse_jsonl(text)?;
    let lines: Vec<usize> =
        text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()).map(|(i, _)| i + 1).collect();
    for (r, line) in records.iter().zip(lines) {
        check_snapshot(r).map_err(|message| Error::Parse { line, message })?;
    }
    Ok(records)
}

pub fn import_snapshots(path: &Path) -> Result<Vec<SnapshotRecord>> {
    parse_snapshots(&fs::read_to_string(path)?)
}

pub fn export_snapshots(path: &Path, records: &[SnapshotRecord]) -> Result<()> {
    write_jsonl(path, records)
}

pub fn import_packets(path: &Path) -> Result<Vec<PacketRecord>> {
    parse_jsonl(&fs::read_to_string(path)?)
}

pub fn export_packets(path: &Path, packets: &[PacketRecord]) -> Result<()> {
    write_jsonl(path, packets)
}
