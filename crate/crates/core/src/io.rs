//! WFDB header/signal/annotation readers and a plain CSV fallback.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synth::{BeatTruth, TruthFile, WaveTruth};
use crate::types::{TimeSeriesRecord, Wave};

const DEFAULT_GAIN: f64 = 200.0;

/// Per-signal line of a WFDB header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    pub file_name: String,
    pub format: u16,
    pub gain: f64,
    pub baseline: i32,
    pub units: String,
    pub lead: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WfdbHeader {
    pub record_name: String,
    pub n_signals: usize,
    pub fs: f64,
    /// Samples per signal; zero when the header omits it.
    pub n_samples: usize,
    pub signals: Vec<SignalSpec>,
}

impl WfdbHeader {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let record_line = lines.next().ok_or_else(|| Error::Parse("empty header".into()))?;
        let mut fields = record_line.split_whitespace();
        let record_name = fields.next().unwrap_or_default().to_string();
        if record_name.contains('/') {
            return Err(Error::Unsupported(format!("multi-segment record `{record_name}`")));
        }
        let n_signals: usize = fields
            .next()
            .ok_or_else(|| Error::Parse("missing signal count".into()))?
            .parse()
            .map_err(|_| Error::Parse(format!("bad signal count in `{record_line}`")))?;
        if n_signals == 0 {
            return Err(Error::Parse("record declares no signals".into()));
        }
        let fs = match fields.next() {
            // "360/360" (counter frequency) and "360(0)" (base counter) suffixes
            Some(f) => f
                .split(['/', '('])
                .next()
                .unwrap_or_default()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad sampling frequency `{f}`")))?,
            None => 250.0,
        };
        if !(fs > 0.0 && fs.is_finite()) {
            return Err(Error::Parse(format!("sampling frequency must be positive, got {fs}")));
        }
        let n_samples = match fields.next() {
            Some(n) => n
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad sample count `{n}`")))?,
            None => 0,
        };

        let mut signals = Vec::with_capacity(n_signals);
        for i in 0..n_signals {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing signal line {i}")))?;
            signals.push(parse_signal_line(line, i)?);
        }
        Ok(Self {
            record_name,
            n_signals,
            fs,
            n_samples,
            signals,
        })
    }
}

fn parse_signal_line(line: &str, index: usize) -> Result<SignalSpec> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() < 2 {
        return Err(Error::Parse(format!("signal line `{line}` lacks a format")));
    }
    let format_field = fields[1];
    let digits: String = format_field.chars().take_while(|c| c.is_ascii_digit()).collect();
    let format: u16 = digits
        .parse()
        .map_err(|_| Error::Parse(format!("bad format field `{format_field}`")))?;
    if format != 212 && format != 16 {
        return Err(Error::Unsupported(format!("signal format {format}")));
    }
    if digits.len() != format_field.len() {
        // skew (x), byte offset (+) and samples-per-frame (:) modifiers
        return Err(Error::Unsupported(format!("format modifiers in `{format_field}`")));
    }

    let mut gain = DEFAULT_GAIN;
    let mut baseline: Option<i32> = None;
    let mut units = "mV".to_string();
    if let Some(g) = fields.get(2) {
        let (num_part, unit_part) = match g.split_once('/') {
            Some((a, b)) => (a, Some(b)),
            None => (*g, None),
        };
        let (gain_str, base_str) = match num_part.split_once('(') {
            Some((a, b)) => (a, Some(b.trim_end_matches(')'))),
            None => (num_part, None),
        };
        let parsed: f64 = gain_str.parse().map_err(|_| Error::Parse(format!("bad gain `{g}`")))?;
        if parsed != 0.0 {
            gain = parsed;
        }
        if let Some(b) = base_str {
            baseline = Some(b.parse().map_err(|_| Error::Parse(format!("bad baseline `{g}`")))?);
        }
        if let Some(u) = unit_part {
            units = u.to_string();
        }
    }
    if gain <= 0.0 || !gain.is_finite() {
        return Err(Error::Parse(format!("gain must be positive in `{line}`")));
    }
    // ADC zero stands in for the baseline when none is given.
    let adc_zero: Option<i32> = fields.get(4).and_then(|z| z.parse().ok());
    let lead = if fields.len() > 8 {
        fields[8..].join(" ")
    } else {
        format!("sig{index}")
    };
    Ok(SignalSpec {
        file_name: fields[0].to_string(),
        format,
        gain,
        baseline: baseline.or(adc_zero).unwrap_or(0),
        units,
        lead,
    })
}

/// Unpacks format-212 bytes into 12-bit two's-complement samples.
///
/// Every three bytes hold two samples; a trailing pair of bytes holds the
/// last sample of an odd-length sequence. `count` samples are returned.
pub fn decode_212(bytes: &[u8], count: usize) -> Result<Vec<i16>> {
    let needed = (count * 3).div_ceil(2);
    if bytes.len() < needed {
        return Err(Error::Truncated(format!(
            "format 212 needs {needed} bytes for {count} samples, got {}",
            bytes.len()
        )));
    }
    let mut out = Vec::with_capacity(count);
    for chunk in bytes[..needed].chunks(3) {
        let s1 = u16::from(chunk[0]) | (u16::from(chunk[1] & 0x0F) << 8);
        out.push(sign_extend_12(s1));
        if out.len() == count {
            break;
        }
        let s2 = (u16::from(chunk[1] & 0xF0) << 4) | u16::from(chunk[2]);
        out.push(sign_extend_12(s2));
    }
    Ok(out)
}

fn sign_extend_12(v: u16) -> i16 {
    ((v << 4) as i16) >> 4
}

/// Packs 12-bit samples into format 212. Values outside [-2048, 2047] are
/// rejected.
pub fn encode_212(samples: &[i16]) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity((samples.len() * 3).div_ceil(2));
    for pair in samples.chunks(2) {
        for &s in pair {
            if !(-2048..=2047).contains(&s) {
                return Err(Error::InvalidInput(format!("{s} does not fit in 12 bits")));
            }
        }
        let a = (pair[0] as u16) & 0x0FFF;
        out.push((a & 0xFF) as u8);
        match pair.get(1) {
            Some(&b) => {
                let b = (b as u16) & 0x0FFF;
                out.push((((a >> 8) & 0x0F) | ((b >> 4) & 0xF0)) as u8);
                out.push((b & 0xFF) as u8);
            }
            None => out.push(((a >> 8) & 0x0F) as u8),
        }
    }
    Ok(out)
}

pub fn decode_16(bytes: &[u8], count: usize) -> Result<Vec<i16>> {
    if bytes.len() < count * 2 {
        return Err(Error::Truncated(format!(
            "format 16 needs {} bytes for {count} samples, got {}",
            count * 2,
            bytes.len()
        )));
    }
    Ok(bytes[..count * 2]
        .chunks_exact(2)
        .map(|c| i16::from_le_bytes([c[0], c[1]]))
        .collect())
}

/// Reads one lead of a WFDB record.
///
/// `signal_bytes` is the content of the signal file that holds `lead_index`;
/// every signal sharing that file name is interleaved frame by frame.
pub fn read_wfdb_record(header_text: &str, signal_bytes: &[u8], lead_index: usize) -> Result<TimeSeriesRecord> {
    let header = WfdbHeader::parse(header_text)?;
    let spec = header.signals.get(lead_index).ok_or_else(|| {
        Error::InvalidInput(format!(
            "lead {lead_index} requested but record has {} signals",
            header.n_signals
        ))
    })?;
    let group: Vec<usize> = header
        .signals
        .iter()
        .enumerate()
        .filter(|(_, s)| s.file_name == spec.file_name)
        .map(|(i, _)| i)
        .collect();
    if group.iter().any(|&i| header.signals[i].format != spec.format) {
        return Err(Error::Unsupported(format!(
            "mixed formats in signal file `{}`",
            spec.file_name
        )));
    }
    let per_frame = group.len();
    let column = group.iter().position(|&i| i == lead_index).unwrap_or(0);
    let n_samples = if header.n_samples > 0 {
        header.n_samples
    } else {
        match spec.format {
            212 => signal_bytes.len() * 2 / 3 / per_frame,
            _ => signal_bytes.len() / 2 / per_frame,
        }
    };
    let total = n_samples * per_frame;
    let raw = match spec.format {
        212 => decode_212(signal_bytes, total)?,
        16 => decode_16(signal_bytes, total)?,
        f => return Err(Error::Unsupported(format!("signal format {f}"))),
    };
    let samples: Vec<f64> = raw
        .iter()
        .skip(column)
        .step_by(per_frame)
        .map(|&adc| (f64::from(adc) - f64::from(spec.baseline)) / spec.gain)
        .collect();
    TimeSeriesRecord::new(samples, header.fs, header.record_name.clone(), spec.lead.clone())
}

/// Annotation pseudo-codes of the MIT format.
pub mod code {
    pub const NORMAL: u8 = 1;
    pub const PWAVE: u8 = 24;
    pub const TWAVE: u8 = 27;
    pub const WFON: u8 = 39;
    pub const WFOFF: u8 = 40;
    pub const SKIP: u8 = 59;
    pub const NUM: u8 = 60;
    pub const SUB: u8 = 61;
    pub const CHN: u8 = 62;
    pub const AUX: u8 = 63;

    /// Beat annotation codes (the WFDB `isqrs` set).
    pub fn is_beat(c: u8) -> bool {
        matches!(c, 1..=13 | 25 | 30 | 34 | 35 | 38)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WfdbAnnotation {
    pub sample_index: u64,
    pub type_code: u8,
    pub subtype: i8,
    pub chan: u8,
    pub num: i8,
    pub aux: Option<String>,
}

impl WfdbAnnotation {
    pub fn new(sample_index: u64, type_code: u8) -> Self {
        Self {
            sample_index,
            type_code,
            subtype: 0,
            chan: 0,
            num: 0,
            aux: None,
        }
    }
}

/// Decodes an MIT-format annotation stream.
pub fn read_wfdb_annotations(bytes: &[u8]) -> Result<Vec<WfdbAnnotation>> {
    if !bytes.len().is_multiple_of(2) {
        return Err(Error::Truncated("annotation stream has odd length".into()));
    }
    let word = |pos: usize| -> Result<u16> {
        bytes
            .get(pos..pos + 2)
            .map(|b| u16::from_le_bytes([b[0], b[1]]))
            .ok_or_else(|| Error::Truncated(format!("annotation stream ends at byte {pos}")))
    };
    let mut out: Vec<WfdbAnnotation> = Vec::new();
    let mut time: i64 = 0;
    let mut pos = 0;
    while pos < bytes.len() {
        let w = word(pos)?;
        pos += 2;
        if w == 0 {
            break;
        }
        let kind = (w >> 10) as u8;
        let field = i64::from(w & 0x3FF);
        match kind {
            code::SKIP => {
                let hi = word(pos)?;
                let lo = word(pos + 2)?;
                pos += 4;
                let jump = ((u32::from(hi) << 16) | u32::from(lo)) as i32;
                time += i64::from(jump);
                if time < 0 {
                    return Err(Error::Parse(format!("negative annotation time {time}")));
                }
            }
            code::NUM | code::SUB | code::CHN => {
                // 10-bit field, sign-extended for num/subtype
                let signed = (((field as u16) << 6) as i16 >> 6) as i8;
                if let Some(last) = out.last_mut() {
                    match kind {
                        code::NUM => last.num = signed,
                        code::SUB => last.subtype = signed,
                        _ => last.chan = field as u8,
                    }
                }
            }
            code::AUX => {
                let len = field as usize;
                let padded = len + (len & 1);
                let data = bytes
                    .get(pos..pos + padded)
                    .ok_or_else(|| Error::Truncated("aux string runs past end of stream".into()))?;
                pos += padded;
                if let Some(last) = out.last_mut() {
                    let text = String::from_utf8_lossy(&data[..len]);
                    last.aux = Some(text.trim_end_matches('\0').to_string());
                }
            }
            _ => {
                time += field;
                out.push(WfdbAnnotation::new(time as u64, kind));
            }
        }
    }
    Ok(out)
}

/// Encodes annotations in MIT format, splitting gaps above 1023 samples
/// with SKIP words. Annotations must be sorted by sample index.
pub fn encode_annotations(annotations: &[WfdbAnnotation]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let push = |w: u16, out: &mut Vec<u8>| out.extend_from_slice(&w.to_le_bytes());
    let mut time: u64 = 0;
    for a in annotations {
        if a.type_code == 0 || a.type_code > 49 {
            return Err(Error::InvalidInput(format!(
                "annotation type {} is not encodable",
                a.type_code
            )));
        }
        if a.sample_index < time {
            return Err(Error::InvalidInput("annotations are not sorted".into()));
        }
        let mut delta = a.sample_index - time;
        if delta > 1023 {
            let jump = i32::try_from(delta).map_err(|_| Error::InvalidInput(format!("gap {delta} too large")))?;
            push(u16::from(code::SKIP) << 10, &mut out);
            push((jump as u32 >> 16) as u16, &mut out);
            push((jump as u32 & 0xFFFF) as u16, &mut out);
            delta = 0;
        }
        push((u16::from(a.type_code) << 10) | delta as u16, &mut out);
        time = a.sample_index;
        if a.subtype != 0 {
            push((u16::from(code::SUB) << 10) | (a.subtype as u16 & 0x3FF), &mut out);
        }
        if a.chan != 0 {
            push((u16::from(code::CHN) << 10) | u16::from(a.chan), &mut out);
        }
        if a.num != 0 {
            push((u16::from(code::NUM) << 10) | (a.num as u16 & 0x3FF), &mut out);
        }
        if let Some(aux) = &a.aux {
            let b = aux.as_bytes();
            if b.len() > 255 {
                return Err(Error::InvalidInput("aux string longer than 255 bytes".into()));
            }
            push((u16::from(code::AUX) << 10) | b.len() as u16, &mut out);
            out.extend_from_slice(b);
            if b.len() % 2 == 1 {
                out.push(0);
            }
        }
    }
    push(0, &mut out);
    Ok(out)
}

/// Parses a single-column CSV (or `index,value` pairs) into a record.
pub fn read_csv_record(text: &str, fs: f64, record_id: &str) -> Result<TimeSeriesRecord> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut samples = Vec::new();
    for (line, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::Parse(format!("line {}: {e}", line + 1)))?;
        let field = match row.len() {
            1 => &row[0],
            2 => &row[1],
            n => {
                return Err(Error::Parse(format!(
                    "line {}: expected 1 or 2 fields, got {n}",
                    line + 1
                )))
            }
        };
        if field.is_empty() && row.len() == 1 {
            continue;
        }
        let v: f64 = field
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: `{field}` is not a number", line + 1)))?;
        samples.push(v);
    }
    if samples.is_empty() {
        return Err(Error::Parse("CSV contains no samples".into()));
    }
    TimeSeriesRecord::new(samples, fs, record_id, "csv")
}

/// Writes `index,value` lines using shortest round-trip float formatting.
pub fn write_csv_record(record: &TimeSeriesRecord) -> String {
    let mut out = String::with_capacity(record.len() * 12);
    for (i, v) in record.samples.iter().enumerate() {
        let _ = writeln!(out, "{i},{v}");
    }
    out
}

/// Which annotation codes mark wave peaks and boundaries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnotationMap {
    pub p_peak: u8,
    pub t_peak: u8,
    pub onset: u8,
    pub offset: u8,
}

impl Default for AnnotationMap {
    fn default() -> Self {
        Self {
            p_peak: code::PWAVE,
            t_peak: code::TWAVE,
            onset: code::WFON,
            offset: code::WFOFF,
        }
    }
}

/// Builds per-beat truth from a waveform annotation stream.
///
/// A P peak is attached to the first beat after it, a T peak to the last
/// beat before it. Boundaries come from an onset code directly before the
/// peak and an offset code directly after it; missing ones collapse onto the
/// peak.
pub fn annotations_to_truth(
    annotations: &[WfdbAnnotation],
    fs: f64,
    record_id: &str,
    map: &AnnotationMap,
) -> Result<TruthFile> {
    let mut sorted = annotations.to_vec();
    sorted.sort_by_key(|a| a.sample_index);
    let mut beats: Vec<BeatTruth> = sorted
        .iter()
        .filter(|a| code::is_beat(a.type_code))
        .map(|a| BeatTruth {
            r: a.sample_index as usize,
            p: None,
            t: None,
        })
        .collect();
    beats.dedup_by_key(|b| b.r);
    for (i, a) in sorted.iter().enumerate() {
        let wave = if a.type_code == map.p_peak {
            Wave::P
        } else if a.type_code == map.t_peak {
            Wave::T
        } else {
            continue;
        };
        let peak = a.sample_index as usize;
        let on = match i.checked_sub(1).map(|j| &sorted[j]) {
            Some(b) if b.type_code == map.onset => b.sample_index as usize,
            _ => peak,
        };
        let off = match sorted.get(i + 1) {
            Some(b) if b.type_code == map.offset => b.sample_index as usize,
            _ => peak,
        };
        let truth = Some(WaveTruth { on, peak, off });
        match wave {
            Wave::P => {
                if let Some(b) = beats.iter_mut().find(|b| b.r > peak) {
                    b.p = truth;
                }
            }
            Wave::T => {
                if let Some(b) = beats.iter_mut().rev().find(|b| b.r < peak) {
                    if b.t.is_none() {
                        b.t = truth;
                    }
                }
            }
        }
    }
    if !(fs > 0.0) {
        return Err(Error::InvalidInput(format!("sampling rate {fs} must be positive")));
    }
    Ok(TruthFile {
        record_id: record_id.to_string(),
        fs,
        beats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER_212: &str = "rec 1 250 2\nrec.dat 212 1(0)/mV 12 0 0 0 0 II\n";

    #[test]
    fn format_212_known_bytes() {
        let r = read_wfdb_record(HEADER_212, &[0xE8, 0x03, 0x00], 0).unwrap();
        assert_eq!(r.samples, vec![1000.0, 0.0]);
        assert_eq!(r.fs, 250.0);
        assert_eq!(r.lead, "II");
        let r = read_wfdb_record(HEADER_212, &[0xFF, 0x0F, 0x00], 0).unwrap();
        assert_eq!(r.samples, vec![-1.0, 0.0]);
    }

    #[test]
    fn physical_units() {
        let header = "x 1 360 2\nx.dat 212 200(1024)/mV 11 1024 0 0 0 MLII\n";
        let bytes = encode_212(&[1224, 824]).unwrap();
        let r = read_wfdb_record(header, &bytes, 0).unwrap();
        assert_eq!(r.samples, vec![1.0, -1.0]);
    }

    #[test]
    fn interleaved_two_signals() {
        let header = "x 2 360 3\nx.dat 16 1/mV 16 0 0 0 0 A\nx.dat 16 2/mV 16 0 0 0 0 B\n";
        let raw: Vec<i16> = vec![1, 10, 2, 20, 3, 30];
        let bytes: Vec<u8> = raw.iter().flat_map(|v| v.to_le_bytes()).collect();
        assert_eq!(
            read_wfdb_record(header, &bytes, 0).unwrap().samples,
            vec![1.0, 2.0, 3.0]
        );
        assert_eq!(
            read_wfdb_record(header, &bytes, 1).unwrap().samples,
            vec![5.0, 10.0, 15.0]
        );
        assert!(read_wfdb_record(header, &bytes, 2).is_err());
    }

    #[test]
    fn header_errors() {
        assert!(WfdbHeader::parse("").is_err());
        assert!(WfdbHeader::parse("x 1 360 10\nx.dat 80 200 11 0 0 0 0 I\n").is_err());
        assert!(WfdbHeader::parse("x 2 360 10\nx.dat 212 200\n").is_err());
        assert!(WfdbHeader::parse("x/2 1 360 10\n").is_err());
        assert!(WfdbHeader::parse("x 1 360 10\nx.dat 212 -5/mV\n").is_err());
    }

    #[test]
    fn header_defaults_and_counter_frequency() {
        let h = WfdbHeader::parse("# comment\n100 1 360/360 650000\n100.dat 212\n").unwrap();
        assert_eq!(h.fs, 360.0);
        assert_eq!(h.signals[0].gain, 200.0);
        assert_eq!(h.signals[0].baseline, 0);
        assert_eq!(h.signals[0].lead, "sig0");
    }

    #[test]
    fn truncated_signal() {
        let err = read_wfdb_record("r 1 250 4\nr.dat 212 1\n", &[0, 0, 0], 0).unwrap_err();
        assert!(matches!(err, Error::Truncated(_)));
    }

    #[test]
    fn annotation_examples() {
        let a = read_wfdb_annotations(&[0x64, 0x04, 0x00, 0x00]).unwrap();
        assert_eq!(a, vec![WfdbAnnotation::new(100, 1)]);
        assert!(read_wfdb_annotations(&[0x00, 0x00]).unwrap().is_empty());
        assert!(read_wfdb_annotations(&[0x00]).is_err());
        // SKIP without its payload
        assert!(read_wfdb_annotations(&[0x00, 0xEC, 0x00]).is_err());
        assert!(read_wfdb_annotations(&[0x00, 0xEC, 0x00, 0x00]).is_err());
    }

    #[test]
    fn negative_skip_is_rejected() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&(59u16 << 10).to_le_bytes());
        bytes.extend_from_slice(&0xFFFFu16.to_le_bytes());
        bytes.extend_from_slice(&0xFFF0u16.to_le_bytes());
        bytes.extend_from_slice(&[0, 0]);
        assert!(matches!(read_wfdb_annotations(&bytes), Err(Error::Parse(_))));
    }

    #[test]
    fn aux_and_attributes_attach_to_previous() {
        let mut a = WfdbAnnotation::new(5000, code::PWAVE);
        a.aux = Some("(AFIB".into());
        a.subtype = -3;
        a.chan = 1;
        a.num = 2;
        let b = WfdbAnnotation::new(5001, code::NORMAL);
        let bytes = encode_annotations(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(read_wfdb_annotations(&bytes).unwrap(), vec![a, b]);
    }

    #[test]
    fn csv_examples() {
        let r = read_csv_record("0.0\n1.0\n0.0", 250.0, "c").unwrap();
        assert_eq!(r.samples, vec![0.0, 1.0, 0.0]);
        assert!(read_csv_record("a,b", 250.0, "c").is_err());
        assert!(read_csv_record("", 250.0, "c").is_err());
        let r = read_csv_record("0,1.5\n1,-2\n", 250.0, "c").unwrap();
        assert_eq!(r.samples, vec![1.5, -2.0]);
    }

    #[test]
    fn truth_from_waveform_annotations() {
        let a = |t: u64, c: u8| WfdbAnnotation::new(t, c);
        let anns = vec![
            a(80, code::WFON),
            a(100, code::PWAVE),
            a(120, code::WFOFF),
            a(200, code::NORMAL),
            a(300, code::WFON),
            a(350, code::TWAVE),
            a(400, code::WFOFF),
            a(480, code::PWAVE),
            a(560, code::NORMAL),
        ];
        let t = annotations_to_truth(&anns, 250.0, "q", &AnnotationMap::default()).unwrap();
        assert_eq!(t.r_peaks(), vec![200, 560]);
        assert_eq!(
            t.beats[0].p,
            Some(WaveTruth {
                on: 80,
                peak: 100,
                off: 120
            })
        );
        assert_eq!(
            t.beats[0].t,
            Some(WaveTruth {
                on: 300,
                peak: 350,
                off: 400
            })
        );
        assert_eq!(
            t.beats[1].p,
            Some(WaveTruth {
                on: 480,
                peak: 480,
                off: 480
            })
        );
        assert_eq!(t.beats[1].t, None);
    }
}
