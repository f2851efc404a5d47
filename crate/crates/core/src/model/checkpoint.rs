//! Model checkpoints: a text header describing the architecture and any
//! caller metadata, then the parameters as little-endian 64-bit floats in
//! layer order (each layer's weights, then its bias).

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::conv::ConvLayer;
use crate::model::net::ConvNet;

const MAGIC: &str = "SFRNET1";
const META_PREFIX: &str = "meta.";
const PARAMS_MARK: &str = "PARAMS";

fn check_meta(meta: &BTreeMap<String, String>) -> Result<()> {
    for (key, value) in meta {
        if key.is_empty() || key.contains('=') || key.contains('\n') {
            return Err(Error::InvalidArgument(format!(
                "metadata key {key:?} may not be empty or contain '=' or newlines"
            )));
        }
        if value.contains('\n') {
            return Err(Error::InvalidArgument(format!(
                "metadata value for {key:?} may not contain newlines"
            )));
        }
    }
    Ok(())
}

/// Serialize the network plus caller metadata (config, normalizer file
/// name, anything worth pinning next to the parameters).
pub fn checkpoint_bytes(net: &ConvNet, meta: &BTreeMap<String, String>) -> Result<Vec<u8>> {
    check_meta(meta)?;
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push('\n');
    out.push_str(&format!("layers={}\n", net.layers().len()));
    for (i, layer) in net.layers().iter().enumerate() {
        out.push_str(&format!(
            "layer{i}={},{},{}\n",
            layer.in_channels(),
            layer.out_channels(),
            layer.kernel()
        ));
    }
    for (key, value) in meta {
        out.push_str(&format!("{META_PREFIX}{key}={value}\n"));
    }
    out.push_str(PARAMS_MARK);
    out.push('\n');
    let mut bytes = out.into_bytes();
    for layer in net.layers() {
        for &w in layer.weights() {
            bytes.extend_from_slice(&w.to_le_bytes());
        }
        for &b in layer.bias() {
            bytes.extend_from_slice(&b.to_le_bytes());
        }
    }
    Ok(bytes)
}

pub fn write_checkpoint(
    net: &ConvNet,
    meta: &BTreeMap<String, String>,
    path: &Path,
) -> Result<()> {
    std::fs::write(path, checkpoint_bytes(net, meta)?)?;
    Ok(())
}

fn take_line<'a>(bytes: &'a [u8], offset: &mut usize) -> Result<&'a str> {
    let rest = &bytes[*offset..];
    let end = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::BadHeader("checkpoint header ends mid-line".into()))?;
    let line = std::str::from_utf8(&rest[..end])
        .map_err(|_| Error::BadHeader("checkpoint header is not UTF-8".into()))?;
    *offset += end + 1;
    Ok(line)
}

fn parse_dim(s: &str, what: &str) -> Result<usize> {
    s.parse::<usize>()
        .map_err(|_| Error::BadHeader(format!("bad {what} {s:?}")))
}

pub fn checkpoint_from_bytes(bytes: &[u8]) -> Result<(ConvNet, BTreeMap<String, String>)> {
    let mut offset = 0;
    if take_line(bytes, &mut offset)? != MAGIC {
        return Err(Error::BadMagic);
    }
    let layers_line = take_line(bytes, &mut offset)?;
    let count_text = layers_line
        .strip_prefix("layers=")
        .ok_or_else(|| Error::BadHeader(format!("expected layers=N, got {layers_line:?}")))?;
    let layer_count = parse_dim(count_text, "layer count")?;
    if layer_count == 0 {
        return Err(Error::BadHeader("checkpoint declares zero layers".into()));
    }

    let mut dims = Vec::with_capacity(layer_count);
    for i in 0..layer_count {
        let line = take_line(bytes, &mut offset)?;
        let spec = line
            .strip_prefix(&format!("layer{i}="))
            .ok_or_else(|| Error::BadHeader(format!("expected layer{i}=…, got {line:?}")))?;
        let parts: Vec<&str> = spec.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::BadHeader(format!(
                "layer{i} needs in,out,kernel — got {spec:?}"
            )));
        }
        dims.push((
            parse_dim(parts[0], "input channel count")?,
            parse_dim(parts[1], "output channel count")?,
            parse_dim(parts[2], "kernel size")?,
        ));
    }

    let mut meta = BTreeMap::new();
    loop {
        let line = take_line(bytes, &mut offset)?;
        if line == PARAMS_MARK {
            break;
        }
        let entry = line.strip_prefix(META_PREFIX).ok_or_else(|| {
            Error::BadHeader(format!("unexpected header line {line:?}"))
        })?;
        let (key, value) = entry
            .split_once('=')
            .ok_or_else(|| Error::BadHeader(format!("metadata line {line:?} has no '='")))?;
        if meta.insert(key.to_string(), value.to_string()).is_some() {
            return Err(Error::BadHeader(format!("duplicate metadata key {key:?}")));
        }
    }

    let mut expected = 0usize;
    for &(ic, oc, k) in &dims {
        let weights = ic
            .checked_mul(oc)
            .and_then(|n| n.checked_mul(k))
            .and_then(|n| n.checked_mul(k))
            .ok_or_else(|| Error::BadHeader("layer size overflows".into()))?;
        expected = expected
            .checked_add(weights)
            .and_then(|n| n.checked_add(oc))
            .ok_or_else(|| Error::BadHeader("parameter count overflows".into()))?;
    }
    let payload = &bytes[offset..];
    let expected_bytes = expected
        .checked_mul(8)
        .ok_or_else(|| Error::BadHeader("parameter count overflows".into()))?;
    if payload.len() < expected_bytes {
        return Err(Error::TruncatedPayload {
            expected: expected_bytes as u64,
            found: payload.len() as u64,
        });
    }
    if payload.len() > expected_bytes {
        return Err(Error::TrailingData {
            extra: (payload.len() - expected_bytes) as u64,
        });
    }

    let mut cursor = payload.chunks_exact(8);
    let mut read = |n: usize| -> Vec<f64> {
        (0..n)
            .map(|_| f64::from_le_bytes(cursor.next().expect("sized above").try_into().unwrap()))
            .collect()
    };
    let mut layers = Vec::with_capacity(layer_count);
    for &(ic, oc, k) in &dims {
        let weights = read(ic * oc * k * k);
        let bias = read(oc);
        layers.push(ConvLayer::with_params(ic, oc, k, weights, bias)?);
    }
    Ok((ConvNet::from_layers(layers)?, meta))
}

pub fn read_checkpoint(path: &Path) -> Result<(ConvNet, BTreeMap<String, String>)> {
    checkpoint_from_bytes(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{ChannelKind, SampleStack, ScalarField};
    use crate::model::net::NetShape;

    fn net() -> ConvNet {
        ConvNet::init(
            NetShape {
                input_channels: 2,
                layers: 3,
                features: 4,
                kernel: 3,
            },
            11,
        )
        .unwrap()
    }

    fn meta() -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("recipe".to_string(), "voronoi,dt_sensor".to_string());
        m.insert("note".to_string(), "lr=0.001 batch=8".to_string());
        m
    }

    #[test]
    fn round_trip_is_exact() {
        let original = net();
        let bytes = checkpoint_bytes(&original, &meta()).unwrap();
        let (reloaded, m) = checkpoint_from_bytes(&bytes).unwrap();
        assert_eq!(reloaded, original);
        assert_eq!(m, meta());
    }

    #[test]
    fn reloaded_net_predicts_identically() {
        let original = net();
        let fields: Vec<ScalarField> = (0..2)
            .map(|c| ScalarField::from_fn(6, 7, |r, col| ((r * 7 + col + c) as f64).sin()).unwrap())
            .collect();
        let stack = SampleStack::new(
            fields,
            vec![ChannelKind::Voronoi, ChannelKind::DtSensor],
            ScalarField::zeros(6, 7).unwrap(),
            vec![1; 42],
        )
        .unwrap();
        let bytes = checkpoint_bytes(&original, &BTreeMap::new()).unwrap();
        let (reloaded, _) = checkpoint_from_bytes(&bytes).unwrap();
        let a = original.forward_field(&stack).unwrap();
        let b = reloaded.forward_field(&stack).unwrap();
        assert!(a
            .values()
            .iter()
            .zip(b.values())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn header_is_human_readable() {
        let bytes = checkpoint_bytes(&net(), &meta()).unwrap();
        let text = std::str::from_utf8(&bytes[..90]).unwrap();
        assert!(text.starts_with("SFRNET1\nlayers=3\nlayer0=2,4,3\nlayer1=4,4,3\nlayer2=4,1,3\n"));
    }

    #[test]
    fn corrupt_inputs_are_rejected() {
        let good = checkpoint_bytes(&net(), &meta()).unwrap();

        let mut wrong_magic = good.clone();
        wrong_magic[0] = b'X';
        assert!(matches!(
            checkpoint_from_bytes(&wrong_magic),
            Err(Error::BadMagic)
        ));

        assert!(matches!(
            checkpoint_from_bytes(&good[..good.len() - 8]),
            Err(Error::TruncatedPayload { .. })
        ));

        let mut trailing = good.clone();
        trailing.extend_from_slice(&[0; 8]);
        assert!(matches!(
            checkpoint_from_bytes(&trailing),
            Err(Error::TrailingData { extra: 8 })
        ));

        // Header cut off before the payload marker.
        assert!(checkpoint_from_bytes(&good[..40]).is_err());

        let mut nan_payload = good.clone();
        let tail = nan_payload.len() - 8;
        nan_payload[tail..].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(matches!(
            checkpoint_from_bytes(&nan_payload),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn bad_metadata_is_rejected_on_write() {
        let mut m = BTreeMap::new();
        m.insert("a=b".to_string(), "x".to_string());
        assert!(checkpoint_bytes(&net(), &m).is_err());
        let mut m = BTreeMap::new();
        m.insert("ok".to_string(), "line\nbreak".to_string());
        assert!(checkpoint_bytes(&net(), &m).is_err());
        let mut m = BTreeMap::new();
        m.insert(String::new(), "x".to_string());
        assert!(checkpoint_bytes(&net(), &m).is_err());
    }

    #[test]
    fn values_may_contain_equals_signs() {
        let bytes = checkpoint_bytes(&net(), &meta()).unwrap();
        let (_, m) = checkpoint_from_bytes(&bytes).unwrap();
        assert_eq!(m["note"], "lr=0.001 batch=8");
    }

    #[test]
    fn files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let original = net();
        write_checkpoint(&original, &meta(), &path).unwrap();
        let (reloaded, m) = read_checkpoint(&path).unwrap();
        assert_eq!(reloaded, original);
        assert_eq!(m["recipe"], "voronoi,dt_sensor");
    }
}
