//! On-disk dataset format: a JSON manifest plus a flat little-endian f64
//! payload ordered `[window][channel V,P,Q][sample]`.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::signalgen::{Dataset, DatasetManifest, HierLabel, PayloadLayout, Window, NUM_CHANNELS};

fn payload_path(manifest_path: &Path) -> PathBuf {
    manifest_path.with_extension("bin")
}

pub fn encode_payload(windows: &[Window]) -> Vec<u8> {
    let mut out = Vec::with_capacity(windows.iter().map(|w| 8 * NUM_CHANNELS * w.len()).sum());
    for w in windows {
        for ch in w.channels() {
            for x in ch {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
    }
    out
}

/// Writes `<path>` (manifest) and `<path stem>.bin` (payload).
pub fn write_dataset(ds: &Dataset, manifest_path: &Path) -> Result<()> {
    let payload = payload_path(manifest_path);
    let mut manifest = ds.manifest.clone();
    manifest.payload_file = payload
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::Input(format!("bad payload path {}", payload.display())))?
        .to_string();
    let bytes = encode_payload(&ds.windows);
    if bytes.len() != manifest.layout.bytes {
        return Err(Error::Shape { expected: manifest.layout.bytes, got: bytes.len() });
    }
    fs::write(&payload, bytes)?;
    fs::write(manifest_path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

pub fn read_dataset(manifest_path: &Path) -> Result<Dataset> {
    let manifest: DatasetManifest = serde_json::from_str(&fs::read_to_string(manifest_path)?)?;
    let payload = if manifest.payload_file.is_empty() {
        payload_path(manifest_path)
    } else {
        manifest_path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(&manifest.payload_file)
    };
    let bytes = fs::read(payload)?;
    let windows = decode_payload(&manifest, &bytes)?;
    Ok(Dataset { windows, manifest })
}

pub fn decode_payload(manifest: &DatasetManifest, bytes: &[u8]) -> Result<Vec<Window>> {
    let PayloadLayout { window_len, num_windows, .. } = manifest.layout;
    let expected = 8 * NUM_CHANNELS * window_len * num_windows;
    if bytes.len() != expected {
        return Err(Error::Shape { expected, got: bytes.len() });
    }
    if manifest.labels.len() != num_windows || manifest.seeds.len() != num_windows {
        return Err(Error::Input("manifest label/seed count does not match payload".into()));
    }
    let dt = manifest.config.dt();
    let mut values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8 bytes")));
    let mut windows = Vec::with_capacity(num_windows);
    for i in 0..num_windows {
        let mut take = || -> Vec<f64> { values.by_ref().take(window_len).collect() };
        let (v, p, q) = (take(), take(), take());
        windows.push(Window {
            v,
            p,
            q,
            dt,
            label: HierLabel::from_flat(manifest.labels[i])?,
            seed: manifest.seeds[i],
        });
    }
    Ok(windows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signalgen::{generate_dataset, GridConfig};

    #[test]
    fn dataset_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.json");
        let ds = generate_dataset(&GridConfig::default(), 50, 5).unwrap();
        write_dataset(&ds, &path).unwrap();
        let back = read_dataset(&path).unwrap();
        assert_eq!(back.windows, ds.windows);
        assert_eq!(back.manifest.payload_file, "ds.bin");
        let raw = std::fs::read(dir.path().join("ds.bin")).unwrap();
        assert_eq!(raw.len(), 50 * 3 * 400 * 8);
        // First value is window 0, channel V, sample 0.
        assert_eq!(f64::from_le_bytes(raw[..8].try_into().unwrap()), ds.windows[0].v[0]);
        // Window 0 channel P starts after 400 V samples.
        assert_eq!(f64::from_le_bytes(raw[3200..3208].try_into().unwrap()), ds.windows[0].p[0]);
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let ds = generate_dataset(&GridConfig::default(), 25, 5).unwrap();
        let bytes = encode_payload(&ds.windows);
        assert!(decode_payload(&ds.manifest, &bytes[..bytes.len() - 8]).is_err());
    }
}
